import itertools
import math

import numpy as np
import pytest

from infobound.errors import DomainError, InfiniteSigmaError, ShapeError
from infobound.fluctuation import (FeedbackModel, averages, bayesian_reverse, build_zero_sigma_model,
                                   conjecture_gap, i_c, jarzynski_collapsed, jarzynski_exhaustive,
                                   jarzynski_montecarlo, max_abs_sigma, measurement_joint,
                                   random_model, reverse_leak, sigma, trajectories)
from infobound.info_core import mutual_information
from infobound.markov_chain import MarkovChain3, example1, example2, joint, random_chain

LN2 = math.log(2)


def brute_jarzynski(model):
    """Loop over every trajectory with the pointwise definitions."""
    n0, nk, n1 = model.dims
    terms, collapsed = [], []
    for x0, k, x1 in itertools.product(range(n0), range(nk), range(n1)):
        p = model.p0.probs[x0] * model.meas.entries[k, x0] * model.feedback[k].entries[x1, x0]
        if p == 0:
            continue
        terms.append(p * math.exp(-sigma(model, x0, k, x1) - i_c(model, x0, k)))
        p_k = sum(model.p0.probs[y] * model.meas.entries[k, y] for y in range(n0))
        collapsed.append(p_k * model.p1_ref[k].probs[x1] * model.reverse[k].entries[x0, x1])
    return math.fsum(terms), math.fsum(collapsed)


def trivial_model():
    one = np.ones((1, 1))
    return FeedbackModel([1.0], one, (one,), (one,), ([1.0],))


def identity_chain():
    return MarkovChain3(np.eye(2), np.eye(2), [0.5, 0.5])


class TestPointwise:
    def test_bayesian_reverse_zero_sigma(self, rng):
        for _ in range(20):
            m = random_model(rng, *rng.integers(1, 5, size=3), bayesian=True)
            for t in trajectories(m):
                assert abs(sigma(m, t.x0, t.k, t.x1)) <= 1e-12

    def test_trivial(self):
        m = trivial_model()
        assert sigma(m, 0, 0, 0) == 0.0
        assert i_c(m, 0, 0) == 0.0

    def test_i_c_perfect_measurement(self):
        m = build_zero_sigma_model(identity_chain())
        for t in trajectories(m):
            assert t.i_c == pytest.approx(LN2, abs=1e-15)

    def test_i_c_uninformative(self, rng):
        col = rng.dirichlet([1, 1, 1])
        ch = MarkovChain3(rng.dirichlet([1, 1], size=3).T, np.column_stack([col, col]), [0.3, 0.7])
        m = build_zero_sigma_model(ch)
        assert all(abs(t.i_c) <= 1e-15 for t in trajectories(m))

    def test_zero_probability_queries(self):
        m = build_zero_sigma_model(identity_chain())
        with pytest.raises(DomainError):
            i_c(m, 0, 1)
        with pytest.raises(DomainError):
            sigma(m, 0, 1, 0)

    def test_trajectory_probabilities_sum_to_one(self, rng):
        m = random_model(rng, 3, 2, 4)
        assert math.fsum(t.prob for t in trajectories(m)) == pytest.approx(1.0, abs=1e-10)


class TestExhaustive:
    def test_random_models(self, rng):
        for i in range(100):
            m = random_model(rng, *rng.integers(2, 5, size=3), bayesian=bool(i % 2))
            value, collapsed = brute_jarzynski(m)
            assert jarzynski_exhaustive(m) == pytest.approx(value, abs=1e-12)
            assert abs(jarzynski_exhaustive(m) - 1) <= 1e-10
            assert abs(jarzynski_collapsed(m) - 1) <= 1e-10
            assert abs(collapsed - 1) <= 1e-10

    def test_trivial_exact(self):
        assert jarzynski_exhaustive(trivial_model()) == 1.0

    def test_fixture_models(self):
        for ch in (example1(), example2()):
            assert abs(jarzynski_exhaustive(build_zero_sigma_model(ch)) - 1) <= 1e-10

    def test_reverse_mass_outside_support(self):
        # perfect measurement: the Bayesian reverse puts mass on x0 that outcome k never
        # visits, so the sum is 1 minus that leaked mass rather than 1
        m = build_zero_sigma_model(identity_chain())
        assert reverse_leak(m) == pytest.approx(0.5, abs=1e-15)
        assert jarzynski_exhaustive(m) == pytest.approx(1 - reverse_leak(m), abs=1e-15)
        assert brute_jarzynski(m)[0] == pytest.approx(0.5, abs=1e-15)


class TestAverages:
    def test_bayesian_reverse(self, rng):
        for _ in range(20):
            m = random_model(rng, 3, 3, 2, bayesian=True)
            a = averages(m)
            mi = mutual_information(measurement_joint(m))
            assert abs(a.avg_sigma) <= 1e-12
            assert a.avg_sigma_plus_ic == pytest.approx(a.avg_ic, abs=1e-12)
            assert a.avg_ic == pytest.approx(mi, abs=1e-10)

    def test_jensen(self, rng):
        for _ in range(1000):
            m = random_model(rng, *rng.integers(1, 5, size=3))
            a = averages(m)
            assert a.avg_ic >= -1e-12
            assert a.avg_ic == pytest.approx(mutual_information(measurement_joint(m)), abs=1e-10)
            assert a.avg_sigma_plus_ic >= -1e-10
            assert a.avg_sigma_plus_ic >= -math.log(jarzynski_exhaustive(m)) - 1e-9


class TestZeroSigmaModel:
    def test_example1(self):
        ch = example1()
        m = build_zero_sigma_model(ch)
        a = averages(m)
        assert max_abs_sigma(m) <= 1e-10
        assert a.avg_sigma == 0.0
        assert a.avg_sigma_plus_ic == a.avg_ic >= 0
        assert conjecture_gap(m, ch).iqc + a.avg_sigma == pytest.approx(-LN2, abs=1e-10)

    def test_example2(self):
        a = averages(build_zero_sigma_model(example2()))
        assert a.avg_sigma == 0.0 and a.avg_ic == 0.0

    def test_random_chains(self, rng):
        for _ in range(100):
            ch = random_chain(rng, tuple(rng.integers(1, 5, size=3)))
            m = build_zero_sigma_model(ch)
            assert max_abs_sigma(m) <= 1e-10
            assert abs(jarzynski_exhaustive(m) - 1) <= 1e-10
            # model axes (x0, k, x1) are the chain's (x1, k, x2)
            np.testing.assert_allclose(m.forward, joint(ch).probs.transpose(2, 1, 0), rtol=0, atol=1e-12)


class TestConjectureGap:
    def test_example1(self):
        g = conjecture_gap(build_zero_sigma_model(example1()), example1())
        assert g.avg_ic == 0.0
        assert g.iqc == pytest.approx(-LN2, abs=1e-12)
        assert g.gap == pytest.approx(LN2, abs=1e-12)

    def test_example2(self):
        g = conjecture_gap(build_zero_sigma_model(example2()), example2())
        assert g.avg_ic == 0.0
        assert g.gap == pytest.approx(-LN2, abs=1e-12)

    def test_perfect_measurement(self):
        ch = identity_chain()
        g = conjecture_gap(build_zero_sigma_model(ch), ch)
        assert g.avg_ic == pytest.approx(LN2, abs=1e-15)
        assert g.iqc == pytest.approx(LN2, abs=1e-15)
        assert g.gap == pytest.approx(0.0, abs=1e-15)

    def test_shape_mismatch(self, rng):
        with pytest.raises(ShapeError):
            conjecture_gap(build_zero_sigma_model(random_chain(rng, (2, 2, 3))), example1())


class TestMonteCarlo:
    def test_single_sample(self, rng):
        m = random_model(rng, 2, 2, 2)
        allowed = {math.exp(-t.sigma - t.i_c) for t in trajectories(m)}
        r = jarzynski_montecarlo(m, 1, seed=5)
        assert r.estimate in allowed
        assert math.isnan(r.std_error)

    def test_deterministic(self, rng):
        m = random_model(rng, 3, 2, 2)
        a = jarzynski_montecarlo(m, 40_000, seed=11)
        b = jarzynski_montecarlo(m, 40_000, seed=11)
        c = jarzynski_montecarlo(m, 40_000, seed=11, workers=2)
        assert a == b == c
        assert jarzynski_montecarlo(m, 40_000, seed=12) != a

    def test_band(self, rng):
        m = random_model(rng, 2, 2, 2)
        r = jarzynski_montecarlo(m, 100_000, seed=7)
        assert abs(r.estimate - 1) <= 4 * r.std_error

    def test_samples_follow_forward_measure(self, rng):
        m = random_model(rng, 2, 2, 2, bayesian=True)
        # sigma = 0 here, so the sampled values are M(k|x0)^-1 p(k), a function of (x0, k)
        r = jarzynski_montecarlo(m, 200_000, seed=3)
        assert abs(r.estimate - 1) <= 5 * r.std_error

    def test_bad_samples(self, rng):
        with pytest.raises(DomainError):
            jarzynski_montecarlo(random_model(rng, 2, 2, 2), 0, seed=0)


class TestInfiniteSigma:
    def _parts(self):
        p0 = [0.5, 0.5]
        meas = np.full((2, 2), 0.5)
        fb = (np.eye(2), np.eye(2))
        rev = (np.eye(2), np.eye(2))
        refs = ([1.0, 0.0], [0.5, 0.5])  # outcome 0 never reaches x1 = 1 in reverse
        return p0, meas, fb, rev, refs

    def test_rejected_with_trajectory(self):
        p0, meas, fb, rev, refs = self._parts()
        with pytest.raises(InfiniteSigmaError) as err:
            FeedbackModel(p0, meas, fb, rev, refs)
        assert err.value.trajectory == (1, 0, 1)

    def test_allowed(self):
        p0, meas, fb, rev, refs = self._parts()
        m = FeedbackModel(p0, meas, fb, rev, refs, allow_infinite_sigma=True)
        with pytest.warns(RuntimeWarning):
            assert sigma(m, 1, 0, 1) == math.inf
        with pytest.warns(RuntimeWarning):
            value = jarzynski_exhaustive(m)
        # the infinite-sigma path adds exp(-inf) = 0; all reverse mass is still on the support
        assert value == pytest.approx(1.0, abs=1e-15)
        with pytest.raises(InfiniteSigmaError):
            averages(m)


def test_model_shape_errors():
    with pytest.raises(ShapeError):
        FeedbackModel([0.5, 0.5], np.eye(2), (np.eye(2),), (np.eye(2),), ([0.5, 0.5],))
    with pytest.raises(ShapeError):
        FeedbackModel([1.0], np.ones((1, 1)), (np.ones((2, 1)) / 2,), (np.ones((1, 3)),), ([0.5, 0.5],))


def test_bayesian_reverse_unvisited_columns():
    rev, refs = bayesian_reverse([0.5, 0.5], [np.array([[1.0, 1.0], [0.0, 0.0]])])
    np.testing.assert_allclose(rev[0].entries[:, 1], [0.5, 0.5])
    assert refs[0].probs.tolist() == [1.0, 0.0]
