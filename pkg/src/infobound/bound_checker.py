"""Evaluate the claimed bounds 0 <= I_QC <= H({p_k}) and the mutual-information
bound 0 <= H(x1:k) <= H(k) on concrete chains."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import RegressionError
from .info_core import conditional_entropy, iqc_classical, mutual_information, shannon_entropy
from .markov_chain import MarkovChain3, example1, example2, joint, marginal_k

__all__ = [
    "VERDICT_TOLERANCE",
    "FOOTNOTE_TOLERANCE",
    "BoundReport",
    "FootnoteReport",
    "check_su_bounds",
    "check_footnote",
    "verify_paper_examples",
]

# violations smaller than this are reported as "holds"
VERDICT_TOLERANCE = 1e-9
FOOTNOTE_TOLERANCE = 1e-9
_EXAMPLE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class BoundReport:
    iqc: float
    h_x1: float
    h_x2_given_k: float
    h_k: float
    mutual_x1_k: float
    lower_violation: float
    upper_violation: float
    verdict: str

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class FootnoteReport:
    mutual_x1_k: float
    h_k: float
    holds: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _verdict(lower: float, upper: float) -> str:
    lo, up = lower > VERDICT_TOLERANCE, upper > VERDICT_TOLERANCE
    if lo and up:
        return "violates_both"
    if lo:
        return "violates_lower"
    if up:
        return "violates_upper"
    return "holds"


def _mutual_x1_k(chain: MarkovChain3) -> float:
    return mutual_information(joint(chain).marginal("kx1"))


def check_su_bounds(chain: MarkovChain3) -> BoundReport:
    pk = marginal_k(chain)
    iqc = iqc_classical(chain)
    h_k = shannon_entropy(pk)
    lower = max(0.0, -iqc)
    upper = max(0.0, iqc - h_k)
    return BoundReport(
        iqc=iqc,
        h_x1=shannon_entropy(chain.p_x1),
        h_x2_given_k=conditional_entropy(chain.p_x2_given_k, pk),
        h_k=h_k,
        mutual_x1_k=_mutual_x1_k(chain),
        lower_violation=lower,
        upper_violation=upper,
        verdict=_verdict(lower, upper),
    )


def check_footnote(chain: MarkovChain3) -> FootnoteReport:
    mi = _mutual_x1_k(chain)
    h_k = shannon_entropy(marginal_k(chain))
    holds = -FOOTNOTE_TOLERANCE <= mi <= h_k + FOOTNOTE_TOLERANCE
    return FootnoteReport(mutual_x1_k=mi, h_k=h_k, holds=bool(holds))


def _expect(cond: bool, what: str) -> None:
    if not cond:
        raise RegressionError(what)


def verify_paper_examples() -> tuple[BoundReport, BoundReport]:
    """Recompute both counterexamples and assert their reference values.

    Raises :class:`RegressionError` naming the first assertion that fails.
    """
    ln2 = math.log(2.0)
    r1 = check_su_bounds(example1())
    _expect(abs(r1.iqc + ln2) <= _EXAMPLE_TOLERANCE, f"example1.iqc = {r1.iqc!r}, expected -ln 2")
    _expect(abs(r1.h_x1) <= _EXAMPLE_TOLERANCE, f"example1.h_x1 = {r1.h_x1!r}, expected 0")
    _expect(abs(r1.h_x2_given_k - ln2) <= _EXAMPLE_TOLERANCE,
            f"example1.h_x2_given_k = {r1.h_x2_given_k!r}, expected ln 2")
    _expect(r1.verdict == "violates_lower", f"example1.verdict = {r1.verdict!r}, expected violates_lower")

    r2 = check_su_bounds(example2())
    _expect(abs(r2.iqc - ln2) <= _EXAMPLE_TOLERANCE, f"example2.iqc = {r2.iqc!r}, expected ln 2")
    _expect(abs(r2.h_k) <= _EXAMPLE_TOLERANCE, f"example2.h_k = {r2.h_k!r}, expected 0")
    _expect(abs(r2.h_x2_given_k) <= _EXAMPLE_TOLERANCE,
            f"example2.h_x2_given_k = {r2.h_x2_given_k!r}, expected 0")
    _expect(r2.verdict == "violates_upper", f"example2.verdict = {r2.verdict!r}, expected violates_upper")
    return r1, r2
