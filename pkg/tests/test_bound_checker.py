import math

import numpy as np
import pytest

from infobound.bound_checker import (VERDICT_TOLERANCE, _verdict, check_footnote, check_su_bounds,
                                     verify_paper_examples)
from infobound.info_core import iqc_classical
from infobound.markov_chain import MarkovChain3, example1, example2, random_chain

LN2 = math.log(2)


def test_example1_violates_lower():
    r = check_su_bounds(example1())
    assert r.verdict == "violates_lower"
    assert r.lower_violation == pytest.approx(LN2, abs=1e-12)
    assert r.upper_violation == 0.0


def test_example2_violates_upper():
    r = check_su_bounds(example2())
    assert r.verdict == "violates_upper"
    assert r.upper_violation == pytest.approx(LN2, abs=1e-12)
    assert r.h_k == 0.0


def test_identity_chain_holds_at_boundary():
    r = check_su_bounds(MarkovChain3(np.eye(2), np.eye(2), [0.5, 0.5]))
    assert r.verdict == "holds"
    assert r.iqc == pytest.approx(r.h_k, abs=1e-15)


@pytest.mark.parametrize("lower, upper, verdict", [
    (0.0, 0.0, "holds"),
    (0.5 * VERDICT_TOLERANCE, 0.0, "holds"),
    (0.0, 0.5 * VERDICT_TOLERANCE, "holds"),
    (2 * VERDICT_TOLERANCE, 0.0, "violates_lower"),
    (0.0, 2 * VERDICT_TOLERANCE, "violates_upper"),
    (1.0, 1.0, "violates_both"),
])
def test_verdict_tolerance(lower, upper, verdict):
    assert _verdict(lower, upper) == verdict


def test_report_invariants(chains):
    for ch in chains:
        r = check_su_bounds(ch)
        assert r.iqc == iqc_classical(ch)
        assert r.iqc == pytest.approx(r.h_x1 - r.h_x2_given_k, abs=1e-12)
        assert r.lower_violation >= 0 and r.upper_violation >= 0
        assert not (r.lower_violation > VERDICT_TOLERANCE and r.upper_violation > VERDICT_TOLERANCE)


def test_footnote_example2():
    f = check_footnote(example2())
    assert (f.mutual_x1_k, f.h_k, f.holds) == (0.0, 0.0, True)


def test_footnote_product_chain(rng):
    col = rng.dirichlet([1, 1, 1])
    ch = MarkovChain3(rng.dirichlet([1, 1], size=3).T, np.column_stack([col, col]), [0.4, 0.6])
    f = check_footnote(ch)
    assert abs(f.mutual_x1_k) <= 1e-12 and f.holds


def test_footnote_random(rng):
    for _ in range(1000):
        assert check_footnote(random_chain(rng, tuple(rng.integers(2, 6, size=3)))).holds


def test_verify_reference_examples():
    r1, r2 = verify_paper_examples()
    assert r1.iqc == -0.6931471805599453
    assert r2.iqc == 0.6931471805599453
    assert r1.h_x1 == 0.0
    assert r2.h_k == 0.0
