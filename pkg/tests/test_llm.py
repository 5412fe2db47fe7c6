import json
import socket
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import jsonschema
import pytest

from helpers import answer

from aquaforte.instantiate import Instantiation
from aquaforte.llm import (
    ArityMismatch,
    CandidateInstantiation,
    CandidateParseError,
    FixtureMissing,
    HistoryEntry,
    HttpChatClient,
    LlmConfig,
    LlmError,
    LlmSession,
    MalformedResponse,
    NonConcreteBody,
    RecordingClient,
    ReplayClient,
    SortMismatch,
    Transcript,
    TransportFailure,
    UnknownFunction,
    build_instantiation_prompt,
    build_trigger_prompt,
    complete,
    history_digest,
    load_fixtures,
    parse_response,
    parse_trigger_response,
    prompt_hash,
    validate_candidate,
)
from aquaforte.preprocess import separate_components
from aquaforte.smtlib import Env, parse_script, print_term
from aquaforte.smtlib.terms import REAL, real_lit

F_SCRIPT = "(declare-fun f (Real) Real)(assert (forall ((x Real)) (= (f (* 2 x)) (* 2 x))))"


def component(text):
    return separate_components(parse_script(text))[0]


# prompts


def test_prompt_contains_constraint():
    p = build_instantiation_prompt(component(F_SCRIPT))
    assert "(forall ((x Real)) (= (f (* 2 x)) (* 2 x)))" in p.data
    assert p.render().startswith("[aquaforte-prompt/1 instantiate]")


def test_history_digest_echoes_refuted():
    zero = Instantiation("f", (("x", REAL),), real_lit(0), REAL)
    p = build_instantiation_prompt(component(F_SCRIPT), [HistoryEntry((zero,), "refuted")])
    assert "(define-fun f ((x Real)) Real 0.0) → refuted" in p.history_digest
    assert "## Previous attempts" in p.render()


def test_history_digest_filters_functions_and_hints_timeouts():
    f = Instantiation("f", (("x0", REAL),), real_lit(1), REAL)
    g = Instantiation("g", (("x0", REAL),), real_lit(2), REAL)
    text = history_digest([HistoryEntry((f, g), "timeout")], {"g"})
    assert "(define-fun g" in text and "(define-fun f" not in text
    assert "avoid expensive forms" in text
    assert history_digest([]) == ""


def test_two_function_schema_requires_both():
    comp = component("(declare-fun f (Real) Real)(declare-fun g (Real) Real)(assert (forall ((x Real)) (= (f x) (g x))))")
    rendered = build_instantiation_prompt(comp).render()
    lines = rendered.splitlines()
    schema = json.loads(lines[lines.index("JSON schema:") + 1])
    jsonschema.validate(json.loads(answer({"f": "x0", "g": "x0"})), schema)
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(json.loads(answer({"f": "x0"})), schema)
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(json.loads(answer({"f": "x0", "g": "x0", "h": "x0"})), schema)


def test_prompt_needs_functions():
    comps = separate_components(parse_script("(assert (> 1.0 0.0))"))
    with pytest.raises(ValueError):
        build_instantiation_prompt(comps[0])


def test_prompt_hash_stable_and_sensitive():
    p = build_instantiation_prompt(component(F_SCRIPT))
    assert prompt_hash(p) == prompt_hash(build_instantiation_prompt(component(F_SCRIPT)))
    assert prompt_hash(p) != prompt_hash(p.with_feedback("try again"))


def test_trigger_prompt_candidates():
    s = parse_script("(declare-fun P (Real) Bool)(declare-fun f (Real) Real)"
                     "(assert (forall ((x Real)) (and (P (f x)) (> (f x) 0))))")
    p = build_trigger_prompt(s.assertions)
    assert p.kind == "triggers" and "(f x)" in p.data


def test_trigger_prompt_multi_variable():
    s = parse_script("(declare-fun f (Real) Real)(assert (forall ((x Real) (y Real)) (= (f (+ x y)) (+ (f x) (f y)))))")
    p = build_trigger_prompt(s.assertions)
    assert "x" in p.data and "y" in p.data
    assert "every bound variable" in p.render() or "all bound variables" in p.render()


def test_trigger_prompt_requires_quantifier():
    with pytest.raises(ValueError):
        build_trigger_prompt(parse_script("(declare-const a Real)(assert (> a 0.0))").assertions)


# responses

RAW = ('Here you go: {"f": {"params":[["x","Real"]], "body":"x", '
       '"reasoning":"identity satisfies scaling", "confidence":0.95}}')


def test_parse_response_with_prose():
    cands = parse_response(RAW)
    assert len(cands) == 1
    c = cands[0]
    assert (c.function, c.body_text, c.confidence) == ("f", "x", 0.95)
    assert c.params == (("x", "Real"),)


def test_parse_response_empty_list():
    assert parse_response("[]") == []


def test_parse_response_no_json():
    with pytest.raises(MalformedResponse):
        parse_response("I cannot solve this.")


def test_parse_response_list_form_and_wrapped():
    lst = '[{"function": "f", "params": [["y", "Real"]], "body": "y"}]'
    wrapped = '{"definitions": {"f": {"body": "(* 2.0 x0)"}}}'
    assert parse_response(lst)[0].function == "f"
    w = parse_response(wrapped)[0]
    assert w.params is None and w.confidence == 0.5


def test_parse_response_clamps_confidence():
    c = parse_response('{"f": {"body": "x0", "confidence": 7}}')[0]
    assert c.confidence == 1.0


def test_parse_trigger_response():
    got = parse_trigger_response('{"Q0": ["(f x)", ["(f x)", "(f y)"]], "Q9": ["(g x)"]}', ["Q0"])
    assert got == {"Q0": [["(f x)"], ["(f x)", "(f y)"]]}


ENV = Env.from_script(parse_script("(declare-fun f (Real) Real)(declare-fun g (Real) Real)(declare-const c Real)"))


def test_validate_identity():
    inst = validate_candidate(CandidateInstantiation("f", (("x", "Real"),), "x"), ENV)
    assert inst.define_fun() == "(define-fun f ((x Real)) Real x)"


def test_validate_default_params():
    inst = validate_candidate(CandidateInstantiation("f", None, "(* 2 x0)"), ENV)
    assert inst.params == (("x0", REAL),)


def test_validate_sort_mismatch():
    with pytest.raises(SortMismatch):
        validate_candidate(CandidateInstantiation("f", (("x", "Real"),), "(and x true)"), ENV)


def test_validate_non_concrete():
    with pytest.raises(NonConcreteBody):
        validate_candidate(CandidateInstantiation("f", (("x", "Real"),), "(g x)"), ENV)
    with pytest.raises(NonConcreteBody):
        validate_candidate(CandidateInstantiation("f", (("x", "Real"),), "(+ x c)"), ENV)


def test_validate_other_errors():
    with pytest.raises(UnknownFunction):
        validate_candidate(CandidateInstantiation("h", None, "1.0"), ENV)
    with pytest.raises(ArityMismatch):
        validate_candidate(CandidateInstantiation("f", (("x", "Real"), ("y", "Real")), "x"), ENV)
    with pytest.raises(CandidateParseError):
        validate_candidate(CandidateInstantiation("f", (("x", "Real"),), "(+ x"), ENV)


def test_validate_int_literal_body_becomes_real():
    inst = validate_candidate(CandidateInstantiation("f", (("x", "Real"),), "3"), ENV)
    assert print_term(inst.body) == "3.0"


# clients

PROMPT = build_instantiation_prompt(component(F_SCRIPT))


def test_replay_hit(tmp_path, monkeypatch):
    def no_network(*a, **k):
        raise AssertionError("network used in replay mode")

    monkeypatch.setattr(socket, "create_connection", no_network)
    monkeypatch.setattr(socket.socket, "connect", no_network)
    path = tmp_path / "fx.json"
    path.write_text(json.dumps({prompt_hash(PROMPT): "R"}))
    assert complete(PROMPT, LlmConfig(replay_path=str(path))) == "R"


def test_replay_miss_names_hash(tmp_path):
    path = tmp_path / "fx.json"
    path.write_text("{}")
    with pytest.raises(FixtureMissing) as err:
        complete(PROMPT, LlmConfig(replay_path=str(path)))
    assert prompt_hash(PROMPT) in str(err.value)


def test_config_modes():
    with pytest.raises(ValueError):
        LlmConfig(base_url="http://x", replay_path="f.json")
    with pytest.raises(ValueError):
        LlmConfig(record_path="f.json")
    assert LlmConfig().mode == "none"
    assert LlmConfig(base_url="http://x", record_path="r.json").mode == "record"


class _Stub:
    """Local OpenAI-style endpoint; ``script`` lists (status, finish_reason) per call."""

    def __init__(self, script, text="stub answer"):
        self.script = list(script)
        self.text = text
        self.requests = []
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
                stub.requests.append((self.path, dict(self.headers), body))
                status, reason = stub.script.pop(0) if stub.script else (200, "stop")
                payload = {"choices": [{"message": {"content": stub.text}, "finish_reason": reason}]}
                data = json.dumps(payload).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *a):
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.server.server_address[1]}/v1"
        threading.Thread(target=self.server.serve_forever, daemon=True).start()

    def close(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def stub():
    servers = []

    def make(script=(), text="stub answer"):
        s = _Stub(script, text)
        servers.append(s)
        return s

    yield make
    for s in servers:
        s.close()


def test_live_call_records_transcript(stub, tmp_path, monkeypatch):
    monkeypatch.setenv("AQUAFORTE_API_KEY", "secret")
    s = stub()
    tpath = tmp_path / "t.jsonl"
    transcript = Transcript(str(tpath))
    text = complete(PROMPT, LlmConfig(base_url=s.url, model="m1"), transcript)
    assert text == "stub answer"
    path, headers, body = s.requests[0]
    assert path == "/v1/chat/completions"
    assert headers["Authorization"] == "Bearer secret"
    assert body["model"] == "m1" and body["temperature"] == 0.01
    assert body["messages"] == [{"role": "user", "content": PROMPT.render()}]
    rec = json.loads(tpath.read_text().splitlines()[0])
    assert rec["response"] == "stub answer" and rec["prompt_sha256"] == prompt_hash(PROMPT)


def test_live_retries_then_succeeds(stub):
    s = stub([(429, "stop"), (503, "stop"), (200, "length"), (200, "stop")])
    sleeps = []
    client = HttpChatClient(LlmConfig(base_url=s.url, max_retries=3, backoff=0.5), sleep=sleeps.append)
    assert client.complete(PROMPT) == "stub answer"
    assert sleeps == [0.5, 1.0, 2.0]
    assert len(s.requests) == 4


def test_live_gives_up(stub):
    s = stub([(500, "stop")] * 5)
    client = HttpChatClient(LlmConfig(base_url=s.url, max_retries=2, backoff=0.0), sleep=lambda _: None)
    with pytest.raises(TransportFailure):
        client.complete(PROMPT)
    assert len(s.requests) == 3


def test_live_client_error_not_retried(stub):
    s = stub([(400, "stop")])
    client = HttpChatClient(LlmConfig(base_url=s.url, max_retries=3), sleep=lambda _: None)
    with pytest.raises(TransportFailure):
        client.complete(PROMPT)
    assert len(s.requests) == 1


def test_connection_refused_is_transport_failure():
    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    client = HttpChatClient(LlmConfig(base_url=f"http://127.0.0.1:{port}", max_retries=1), sleep=lambda _: None)
    with pytest.raises(LlmError):
        client.complete(PROMPT)


def test_record_then_replay(stub, tmp_path):
    s = stub(text="recorded")
    fx = tmp_path / "fx.json"
    rec = RecordingClient(HttpChatClient(LlmConfig(base_url=s.url)), str(fx))
    LlmSession(rec).ask(PROMPT)
    assert load_fixtures(str(fx)) == {prompt_hash(PROMPT): "recorded"}
    assert ReplayClient(path=str(fx)).complete(PROMPT) == "recorded"


def test_transcript_tags(tmp_path):
    tpath = tmp_path / "t.jsonl"
    session = LlmSession(ReplayClient({prompt_hash(PROMPT): "x"}), Transcript(str(tpath)))
    _, idx = session.ask(PROMPT)
    session.transcript.tag(idx, "refuted")
    lines = [json.loads(line) for line in tpath.read_text().splitlines()]
    assert lines[-1] == {"tag": 0, "outcome": "refuted"}
    assert session.transcript.entries[0].outcome == "refuted"
