"""Prompting, answering and answer checking for instantiation and trigger queries."""

from .client import (
    API_KEY_ENV,
    ChatClient,
    FixtureMissing,
    HttpChatClient,
    LlmConfig,
    LlmError,
    LlmSession,
    RecordingClient,
    ReplayClient,
    ScriptedClient,
    Transcript,
    TranscriptEntry,
    TransportFailure,
    TruncatedResponse,
    complete,
    load_fixtures,
    make_client,
    save_fixtures,
)
from .prompts import (
    HistoryEntry,
    Prompt,
    QuantifierSite,
    build_instantiation_prompt,
    build_trigger_prompt,
    candidate_patterns,
    history_digest,
    instantiation_schema,
    prompt_hash,
    quantifier_sites,
)
from .response import (
    ArityMismatch,
    CandidateError,
    CandidateInstantiation,
    CandidateParseError,
    MalformedResponse,
    NonConcreteBody,
    SortMismatch,
    UnknownFunction,
    candidate_json,
    find_json,
    parse_response,
    parse_trigger_response,
    validate_candidate,
)
