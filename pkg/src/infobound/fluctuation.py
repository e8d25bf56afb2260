"""Discrete measurement-feedback processes and the identity <exp(-sigma - I_c)> = 1.

A trajectory is (x0, k, x1): the initial state x0 ~ p0 is measured with
outcome k ~ M(k|x0), then evolved by the outcome-dependent channel
F_k(x1|x0). Per trajectory

    sigma = ln[p0(x0) F_k(x1|x0)] - ln[p1_ref_k(x1) R_k(x0|x1)]
    I_c   = ln[M(k|x0) / p(k)]

where (R_k, p1_ref_k) is a reverse reference process chosen per outcome.
Summing p(x0, k, x1) exp(-sigma - I_c) over the forward support collapses
term by term to p(k) p1_ref_k(x1) R_k(x0|x1), so the average equals 1 minus
the reverse mass that falls outside the forward support (zero for models
whose measurement kernel has full support).
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InfiniteSigmaError, ShapeError
from .info_core import CondMatrix, ProbVec, iqc_classical
from .markov_chain import MarkovChain3
from .streams import stream

__all__ = [
    "FeedbackModel",
    "Trajectory",
    "MonteCarloResult",
    "Averages",
    "ConjectureGap",
    "bayesian_reverse",
    "sigma",
    "i_c",
    "trajectories",
    "jarzynski_exhaustive",
    "jarzynski_collapsed",
    "reverse_leak",
    "jarzynski_montecarlo",
    "averages",
    "build_zero_sigma_model",
    "conjecture_gap",
    "random_model",
    "max_abs_sigma",
    "measurement_joint",
    "SHARD_SIZE",
]

SHARD_SIZE = 1 << 14


@dataclass(frozen=True)
class FeedbackModel:
    """Measurement-feedback process with a per-outcome reverse reference.

    Shapes: ``p0`` (n0,), ``meas`` (nk, n0), ``feedback[k]`` (n1, n0),
    ``reverse[k]`` (n0, n1), ``p1_ref[k]`` (n1,).
    """

    p0: ProbVec
    meas: CondMatrix
    feedback: tuple
    reverse: tuple
    p1_ref: tuple
    allow_infinite_sigma: bool = False

    def __post_init__(self):
        p0 = self.p0 if isinstance(self.p0, ProbVec) else ProbVec(self.p0)
        meas = self.meas if isinstance(self.meas, CondMatrix) else CondMatrix(self.meas)
        fb = tuple(f if isinstance(f, CondMatrix) else CondMatrix(f) for f in self.feedback)
        rv = tuple(r if isinstance(r, CondMatrix) else CondMatrix(r) for r in self.reverse)
        ref = tuple(q if isinstance(q, ProbVec) else ProbVec(q) for q in self.p1_ref)
        n0, nk = len(p0), meas.n_out
        if meas.n_in != n0:
            raise ShapeError(f"meas has {meas.n_in} columns, p0 has length {n0}")
        if not (len(fb) == len(rv) == len(ref) == nk):
            raise ShapeError(
                f"need {nk} feedback/reverse/p1_ref entries, got {len(fb)}/{len(rv)}/{len(ref)}")
        n1 = fb[0].n_out
        for k in range(nk):
            if fb[k].entries.shape != (n1, n0):
                raise ShapeError(f"feedback[{k}] has shape {fb[k].entries.shape}, expected {(n1, n0)}")
            if rv[k].entries.shape != (n0, n1):
                raise ShapeError(f"reverse[{k}] has shape {rv[k].entries.shape}, expected {(n0, n1)}")
            if len(ref[k]) != n1:
                raise ShapeError(f"p1_ref[{k}] has length {len(ref[k])}, expected {n1}")
        for name, value in (("p0", p0), ("meas", meas), ("feedback", fb), ("reverse", rv), ("p1_ref", ref)):
            object.__setattr__(self, name, value)

        bad = np.argwhere((self.forward > 0) & (self.reverse_weight <= 0))
        if bad.size and not self.allow_infinite_sigma:
            x0, k, x1 = (int(v) for v in bad[0])
            raise InfiniteSigmaError(
                f"trajectory (x0={x0}, k={k}, x1={x1}) has forward probability "
                f"{self.forward[x0, k, x1]:.6g} but zero reverse weight", trajectory=(x0, k, x1))

    @property
    def dims(self) -> tuple[int, int, int]:
        """(n0, nk, n1)."""
        return len(self.p0), self.meas.n_out, self.feedback[0].n_out

    @property
    def feedback_array(self) -> np.ndarray:
        """F[k, x1, x0]."""
        return np.stack([f.entries for f in self.feedback])

    @property
    def reverse_array(self) -> np.ndarray:
        """R[k, x0, x1]."""
        return np.stack([r.entries for r in self.reverse])

    @property
    def p1_ref_array(self) -> np.ndarray:
        return np.stack([q.probs for q in self.p1_ref])

    @property
    def p_k(self) -> np.ndarray:
        return self.meas.entries @ self.p0.probs

    @property
    def forward(self) -> np.ndarray:
        """p(x0, k, x1) = p0(x0) M(k|x0) F_k(x1|x0)."""
        return np.einsum("x,kx,kyx->xky", self.p0.probs, self.meas.entries, self.feedback_array)

    @property
    def reverse_weight(self) -> np.ndarray:
        """p1_ref_k(x1) R_k(x0|x1), indexed [x0, k, x1]."""
        return np.einsum("ky,kxy->xky", self.p1_ref_array, self.reverse_array)


@dataclass(frozen=True)
class Trajectory:
    x0: int
    k: int
    x1: int
    prob: float
    sigma: float
    i_c: float


@dataclass(frozen=True)
class MonteCarloResult:
    estimate: float
    std_error: float  # nan when samples == 1
    samples: int


@dataclass(frozen=True)
class Averages:
    avg_sigma: float
    avg_ic: float
    avg_sigma_plus_ic: float


@dataclass(frozen=True)
class ConjectureGap:
    avg_ic: float
    iqc: float
    gap: float


def bayesian_reverse(p0, feedback) -> tuple[tuple[CondMatrix, ...], tuple[ProbVec, ...]]:
    """Reverse channels R_k(x0|x1) proportional to p0(x0) F_k(x1|x0).

    The reference final distribution is p1_k = F_k p0, which makes sigma
    vanish on every trajectory. Columns with p1_k(x1) = 0 are never visited
    forward and are filled with p0.
    """
    p0 = np.asarray(p0.probs if isinstance(p0, ProbVec) else p0, dtype=float)
    reverse, refs = [], []
    for f in feedback:
        fk = f.entries if isinstance(f, CondMatrix) else np.asarray(f, dtype=float)
        p1 = fk @ p0
        w = (p0[:, None] * fk.T)  # [x0, x1]
        safe = np.where(p1 > 0, p1, 1.0)
        r = np.where(p1[None, :] > 0, w / safe[None, :], p0[:, None])
        reverse.append(CondMatrix(r))
        refs.append(ProbVec(p1))
    return tuple(reverse), tuple(refs)


def _support_mask(model: FeedbackModel) -> np.ndarray:
    return model.forward > 0


def _require_path(model: FeedbackModel, x0: int, k: int, x1: int) -> None:
    n0, nk, n1 = model.dims
    if not (0 <= x0 < n0 and 0 <= k < nk and 0 <= x1 < n1):
        raise DomainError(f"trajectory ({x0}, {k}, {x1}) out of range for dims {model.dims}")
    if model.forward[x0, k, x1] <= 0:
        raise DomainError(f"trajectory (x0={x0}, k={k}, x1={x1}) has zero forward probability")


def sigma(model: FeedbackModel, x0: int, k: int, x1: int) -> float:
    """Entropy production of one trajectory, in nats."""
    _require_path(model, x0, k, x1)
    rev = model.p1_ref[k].probs[x1] * model.reverse[k].entries[x0, x1]
    if rev <= 0:
        if not model.allow_infinite_sigma:
            raise InfiniteSigmaError(
                f"trajectory (x0={x0}, k={k}, x1={x1}) has zero reverse weight", trajectory=(x0, k, x1))
        warnings.warn(f"sigma is infinite on trajectory ({x0}, {k}, {x1})", RuntimeWarning, stacklevel=2)
        return math.inf
    fwd = model.p0.probs[x0] * model.feedback[k].entries[x1, x0]
    return math.log(fwd) - math.log(rev)


def i_c(model: FeedbackModel, x0: int, k: int) -> float:
    """Pointwise measurement information ln[M(k|x0) / p(k)]."""
    n0, nk, _ = model.dims
    if not (0 <= x0 < n0 and 0 <= k < nk):
        raise DomainError(f"(x0={x0}, k={k}) out of range")
    m = model.meas.entries[k, x0]
    if m <= 0:
        raise DomainError(f"outcome k={k} has zero probability given x0={x0}")
    return math.log(m) - math.log(model.p_k[k])


def _tables(model: FeedbackModel):
    """(forward, sigma, i_c, support) as dense [x0, k, x1] arrays; off-support entries are 0."""
    fwd = model.forward
    support = fwd > 0
    rev = model.reverse_weight
    p0, meas, fb = model.p0.probs, model.meas.entries, model.feedback_array
    path = np.einsum("x,kyx->xky", p0, fb)
    sig = np.zeros_like(fwd)
    finite = support & (rev > 0)
    sig[finite] = np.log(path[finite]) - np.log(rev[finite])
    sig[support & ~finite] = np.inf
    ic = np.zeros_like(fwd)
    m_xk = np.broadcast_to(meas.T[:, :, None], fwd.shape)
    pk = np.broadcast_to(model.p_k[None, :, None], fwd.shape)
    ic[support] = np.log(m_xk[support]) - np.log(pk[support])
    return fwd, sig, ic, support


def trajectories(model: FeedbackModel) -> list[Trajectory]:
    """Every trajectory with positive forward probability, in (x0, k, x1) order."""
    fwd, sig, ic, support = _tables(model)
    return [Trajectory(int(a), int(b), int(c), float(fwd[a, b, c]), float(sig[a, b, c]), float(ic[a, b, c]))
            for a, b, c in np.argwhere(support)]


def _check_finite_sigma(sig: np.ndarray, support: np.ndarray, model: FeedbackModel, averaging: bool):
    bad = np.argwhere(support & np.isinf(sig))
    if not bad.size:
        return
    x0, k, x1 = (int(v) for v in bad[0])
    if averaging or not model.allow_infinite_sigma:
        raise InfiniteSigmaError(
            f"sigma is infinite on trajectory (x0={x0}, k={k}, x1={x1})", trajectory=(x0, k, x1))
    warnings.warn(f"{len(bad)} trajectories with infinite sigma contribute exp(-inf) = 0",
                  RuntimeWarning, stacklevel=3)


def jarzynski_exhaustive(model: FeedbackModel) -> float:
    """Exact sum of p(x0, k, x1) exp(-sigma - I_c) over the forward support."""
    fwd, sig, ic, support = _tables(model)
    _check_finite_sigma(sig, support, model, averaging=False)
    terms = fwd[support] * np.exp(-sig[support] - ic[support])
    return math.fsum(terms.tolist())


def jarzynski_collapsed(model: FeedbackModel) -> float:
    """The same sum after the algebraic collapse of each term to p(k) p1_ref_k(x1) R_k(x0|x1)."""
    support = _support_mask(model)
    collapsed = model.p_k[None, :, None] * model.reverse_weight
    return math.fsum(collapsed[support].tolist())


def reverse_leak(model: FeedbackModel) -> float:
    """Reverse-reference mass p(k) p1_ref_k(x1) R_k(x0|x1) outside the forward support.

    ``jarzynski_exhaustive(model) == 1 - reverse_leak(model)``; the leak is
    zero whenever M(k|x0) > 0 for every x0 with p0(x0) > 0 and p(k) > 0.
    """
    support = _support_mask(model)
    collapsed = model.p_k[None, :, None] * model.reverse_weight
    return math.fsum(collapsed[~support].tolist())


def _cdf_columns(m: np.ndarray, axis: int) -> np.ndarray:
    c = np.cumsum(m, axis=axis)
    last = np.take(c, [-1], axis=axis)
    return c / last


def _mc_shard(args):
    index, m, seed, cdf0, cdfm, cdff, weight = args
    rng = stream(seed, index)
    u = rng.random((3, m))
    x0 = (cdf0[None, :] <= u[0][:, None]).sum(axis=1)
    k = (cdfm[:, x0].T <= u[1][:, None]).sum(axis=1)
    x1 = (cdff[k, :, x0] <= u[2][:, None]).sum(axis=1)
    return weight[x0, k, x1]


def jarzynski_montecarlo(model: FeedbackModel, samples: int, seed: int, workers: int = 1) -> MonteCarloResult:
    """Sample mean of exp(-sigma - I_c) over trajectories drawn forward.

    Samples are split into fixed shards of ``SHARD_SIZE``; shard ``i`` uses
    its own counter-based stream, so the estimate depends only on
    ``(model, samples, seed)`` and not on ``workers``.
    """
    if samples < 1:
        raise DomainError("samples must be >= 1")
    fwd, sig, ic, support = _tables(model)
    _check_finite_sigma(sig, support, model, averaging=False)
    weight = np.zeros_like(fwd)
    weight[support] = np.exp(-sig[support] - ic[support])
    cdf0 = _cdf_columns(model.p0.probs, 0)
    cdfm = _cdf_columns(model.meas.entries, 0)
    cdff = _cdf_columns(model.feedback_array, 1)
    sizes = [SHARD_SIZE] * (samples // SHARD_SIZE)
    if samples % SHARD_SIZE:
        sizes.append(samples % SHARD_SIZE)
    tasks = [(i, m, seed, cdf0, cdfm, cdff, weight) for i, m in enumerate(sizes)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            shards = list(pool.map(_mc_shard, tasks))
    else:
        shards = [_mc_shard(t) for t in tasks]
    values = np.concatenate(shards)
    mean = math.fsum(values.tolist()) / samples
    if samples == 1:
        return MonteCarloResult(float(mean), math.nan, 1)
    var = math.fsum(((values - mean) ** 2).tolist()) / (samples - 1)
    return MonteCarloResult(float(mean), math.sqrt(var / samples), samples)


def averages(model: FeedbackModel) -> Averages:
    """Exact forward-measure means of sigma, I_c and their sum."""
    fwd, sig, ic, support = _tables(model)
    _check_finite_sigma(sig, support, model, averaging=True)
    p, s, c = fwd[support], sig[support], ic[support]
    return Averages(
        avg_sigma=math.fsum((p * s).tolist()),
        avg_ic=math.fsum((p * c).tolist()),
        avg_sigma_plus_ic=math.fsum((p * (s + c)).tolist()),
    )


def max_abs_sigma(model: FeedbackModel) -> float:
    _, sig, _, support = _tables(model)
    return float(np.max(np.abs(sig[support])))


def measurement_joint(model: FeedbackModel) -> np.ndarray:
    """p(x0, k)."""
    return model.p0.probs[:, None] * model.meas.entries.T


def build_zero_sigma_model(chain: MarkovChain3) -> FeedbackModel:
    """Feedback model whose (x0, k, x1) statistics reproduce ``chain`` with sigma = 0.

    The chain's x1 becomes the initial state, P(k|x1) the measurement, and
    column k of P(x2|k) the (input-independent) feedback output. The reverse
    reference is the Bayesian reverse, so sigma vanishes on every trajectory.
    """
    n2, nk, n1 = chain.dims
    p0 = chain.p_x1
    feedback = tuple(CondMatrix(np.repeat(chain.p_x2_given_k.entries[:, [k]], n1, axis=1)) for k in range(nk))
    reverse, refs = bayesian_reverse(p0, feedback)
    return FeedbackModel(p0, chain.p_k_given_x1, feedback, reverse, refs)


def conjecture_gap(model: FeedbackModel, chain: MarkovChain3) -> ConjectureGap:
    """<I_c> of the model next to I_QC of the chain, and their difference."""
    n0, nk, n1 = model.dims
    c2, ck, c1 = chain.dims
    if (n0, nk, n1) != (c1, ck, c2):
        raise ShapeError(f"model dims (n0, nk, n1) = {(n0, nk, n1)} do not match chain (n1, nk, n2) = {(c1, ck, c2)}")
    avg_ic = averages(model).avg_ic
    iqc = iqc_classical(chain)
    return ConjectureGap(avg_ic=avg_ic, iqc=iqc, gap=avg_ic - iqc)


def _dirichlet(rng: np.random.Generator, n_out: int, n_in: int) -> np.ndarray:
    e = rng.standard_exponential((n_out, n_in))
    return e / e.sum(axis=0, keepdims=True)


def random_model(rng: np.random.Generator, n0: int, nk: int, n1: int, bayesian: bool = False) -> FeedbackModel:
    """Full-support random model; the reverse reference is random unless ``bayesian``."""
    p0 = ProbVec(_dirichlet(rng, n0, 1)[:, 0])
    meas = CondMatrix(_dirichlet(rng, nk, n0))
    feedback = tuple(CondMatrix(_dirichlet(rng, n1, n0)) for _ in range(nk))
    if bayesian:
        reverse, refs = bayesian_reverse(p0, feedback)
    else:
        reverse = tuple(CondMatrix(_dirichlet(rng, n0, n1)) for _ in range(nk))
        refs = tuple(ProbVec(_dirichlet(rng, n1, 1)[:, 0]) for _ in range(nk))
    return FeedbackModel(p0, meas, feedback, reverse, refs)
