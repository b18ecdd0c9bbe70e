"""Black-box context-free grammar inference from seed programs and a membership oracle."""

from importlib import import_module

# resolved on first use so that the acceptor entry point stays cheap to start
_EXPORTS = {
    "CharClass": "grammar", "Grammar": "grammar", "NonTerminal": "grammar", "Terminal": "grammar",
    "parse_grammar": "grammar", "serialize": "grammar",
    "OracleClient": "oracle",
    "InferenceConfig": "pipeline", "InferenceResult": "pipeline", "infer_grammar": "pipeline",
}

__all__ = list(_EXPORTS)
__version__ = "0.1.0"


def __getattr__(name):
    if name in _EXPORTS:
        return getattr(import_module(f".{_EXPORTS[name]}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
