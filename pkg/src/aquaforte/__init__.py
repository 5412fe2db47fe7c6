"""LLM-guided instantiation of uninterpreted functions for quantified SMT problems."""

__version__ = "0.1.0"
