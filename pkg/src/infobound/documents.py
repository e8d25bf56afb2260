"""JSON documents for chains and feedback models.

Structural problems (bad JSON, wrong types, ragged matrices, conflicting
keys) raise :class:`ParseError`; well-formed documents whose numbers break a
probabilistic invariant raise :class:`DocumentValidationError`. Both carry a
list of ``{"path": <JSON pointer>, "message": ...}`` diagnostics.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import jsonschema
import numpy as np

from .errors import InfoboundError, ShapeError, ValidationError
from .fluctuation import FeedbackModel, bayesian_reverse
from .info_core import CondMatrix, ProbVec
from .markov_chain import MarkovChain3

__all__ = [
    "DocumentError",
    "ParseError",
    "DocumentValidationError",
    "load_json",
    "chain_from_document",
    "chain_to_document",
    "model_from_document",
    "model_to_document",
    "schema",
]


class DocumentError(InfoboundError):
    def __init__(self, diagnostics: list[dict]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(f"{d['path'] or '/'}: {d['message']}" for d in diagnostics))


class ParseError(DocumentError):
    """Malformed input document."""


class DocumentValidationError(DocumentError):
    """Well-formed document whose values break an invariant."""


def _pointer(parts) -> str:
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in parts)


@lru_cache(maxsize=None)
def schema(name: str) -> dict:
    """Bundled JSON schema, ``name`` in {"chain", "model"}."""
    text = resources.files("infobound").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError([{"path": "", "message": f"cannot read {path}: {exc.strerror}"}]) from exc
    except json.JSONDecodeError as exc:
        raise ParseError([{"path": "", "message": f"invalid JSON at line {exc.lineno}: {exc.msg}"}]) from exc


def _check_schema(doc, name: str) -> None:
    validator = jsonschema.Draft202012Validator(schema(name))
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        raise ParseError([{"path": _pointer(e.absolute_path), "message": e.message} for e in errors])


def _matrix(rows, path: str) -> np.ndarray:
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        for i, r in enumerate(rows):
            if len(r) != len(rows[0]):
                raise ParseError([{"path": f"{path}/{i}",
                                   "message": f"row has {len(r)} entries, row 0 has {len(rows[0])}"}])
    return np.array(rows, dtype=float)


def _build(path: str, factory, value):
    try:
        return factory(value)
    except (ValidationError, ShapeError) as exc:
        raise DocumentValidationError([{"path": path, "message": str(exc)}]) from exc


def chain_from_document(doc) -> MarkovChain3:
    _check_schema(doc, "chain")
    a = _build("/p_x2_given_k", CondMatrix, _matrix(doc["p_x2_given_k"], "/p_x2_given_k"))
    b = _build("/p_k_given_x1", CondMatrix, _matrix(doc["p_k_given_x1"], "/p_k_given_x1"))
    c = _build("/p_x1", ProbVec, np.array(doc["p_x1"], dtype=float))
    if a.n_in != b.n_out:
        raise DocumentValidationError([{"path": "/p_k_given_x1", "message":
                                        f"has {b.n_out} rows but p_x2_given_k has {a.n_in} columns"}])
    if b.n_in != len(c):
        raise DocumentValidationError([{"path": "/p_x1", "message":
                                        f"has length {len(c)} but p_k_given_x1 has {b.n_in} columns"}])
    return MarkovChain3(a, b, c)


def chain_to_document(chain: MarkovChain3) -> dict:
    return {
        "p_x2_given_k": chain.p_x2_given_k.entries.tolist(),
        "p_k_given_x1": chain.p_k_given_x1.entries.tolist(),
        "p_x1": chain.p_x1.probs.tolist(),
    }


def model_from_document(doc) -> FeedbackModel:
    """Build a :class:`FeedbackModel`; may raise :class:`InfiniteSigmaError`."""
    _check_schema(doc, "model")
    explicit = "reverse" in doc
    bayes = doc.get("bayesian_reverse", not explicit)
    if explicit and bayes:
        raise ParseError([{"path": "/bayesian_reverse",
                           "message": "bayesian_reverse cannot be combined with reverse/p1_ref"}])
    if not explicit and not bayes:
        raise ParseError([{"path": "", "message": "give reverse and p1_ref, or set bayesian_reverse"}])

    p0 = _build("/p0", ProbVec, np.array(doc["p0"], dtype=float))
    meas = _build("/meas", CondMatrix, _matrix(doc["meas"], "/meas"))
    if meas.n_in != len(p0):
        raise DocumentValidationError([{"path": "/meas", "message":
                                        f"has {meas.n_in} columns but p0 has length {len(p0)}"}])
    if len(doc["feedback"]) != meas.n_out:
        raise DocumentValidationError([{"path": "/feedback", "message":
                                        f"has {len(doc['feedback'])} channels for {meas.n_out} outcomes"}])
    feedback = tuple(_build(f"/feedback/{k}", CondMatrix, _matrix(m, f"/feedback/{k}"))
                     for k, m in enumerate(doc["feedback"]))
    if explicit:
        reverse = tuple(_build(f"/reverse/{k}", CondMatrix, _matrix(m, f"/reverse/{k}"))
                        for k, m in enumerate(doc["reverse"]))
        refs = tuple(_build(f"/p1_ref/{k}", ProbVec, np.array(v, dtype=float))
                     for k, v in enumerate(doc["p1_ref"]))
    else:
        reverse, refs = bayesian_reverse(p0, feedback)
    try:
        return FeedbackModel(p0, meas, feedback, reverse, refs,
                             allow_infinite_sigma=doc.get("allow_infinite_sigma", False))
    except ShapeError as exc:
        raise DocumentValidationError([{"path": "", "message": str(exc)}]) from exc


def model_to_document(model: FeedbackModel) -> dict:
    doc = {
        "p0": model.p0.probs.tolist(),
        "meas": model.meas.entries.tolist(),
        "feedback": [f.entries.tolist() for f in model.feedback],
        "reverse": [r.entries.tolist() for r in model.reverse],
        "p1_ref": [q.probs.tolist() for q in model.p1_ref],
        "bayesian_reverse": False,
    }
    if model.allow_infinite_sigma:
        doc["allow_infinite_sigma"] = True
    return doc
