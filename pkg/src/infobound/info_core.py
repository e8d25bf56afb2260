"""Entropy-type quantities in nats for finite distributions and density matrices.

All entropies use the natural logarithm. Terms with zero probability are
dropped explicitly (0 ln 0 = 0) rather than relying on floating point limits.
"""

from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, ShapeError, ValidationError

__all__ = [
    "Tolerances",
    "get_tolerances",
    "tolerance_scale",
    "ProbVec",
    "CondMatrix",
    "DensityMatrix",
    "Ensemble",
    "shannon_entropy",
    "binary_entropy",
    "von_neumann_entropy",
    "conditional_entropy",
    "mutual_information",
    "iqc_quantum",
    "iqc_classical",
]


@dataclass(frozen=True)
class Tolerances:
    prob_eps: float = 1e-12   # entries clamped into [0, 1] within this slack
    sum_tol: float = 1e-9     # |sum - 1| for distributions and columns
    herm_tol: float = 1e-10   # max |rho - rho^H|
    trace_tol: float = 1e-10  # |tr rho - 1|
    eig_tol: float = 1e-10    # eigenvalue slack outside [0, 1]

    def scaled(self, factor: float) -> "Tolerances":
        return Tolerances(*(factor * v for v in (
            self.prob_eps, self.sum_tol, self.herm_tol, self.trace_tol, self.eig_tol)))


_DEFAULT_TOLERANCES = Tolerances()
_tolerances = contextvars.ContextVar("infobound_tolerances", default=_DEFAULT_TOLERANCES)


def get_tolerances() -> Tolerances:
    return _tolerances.get()


@contextlib.contextmanager
def tolerance_scale(factor: float):
    """Loosen (factor > 1) every validation tolerance inside the block.

    Intended for ingesting low-precision external data, e.g. probabilities
    printed with six significant digits::

        with tolerance_scale(1e4):
            chain = chain_from_document(doc)
    """
    if not np.isfinite(factor) or factor <= 0:
        raise DomainError(f"tolerance scale must be positive and finite, got {factor!r}")
    token = _tolerances.set(_DEFAULT_TOLERANCES.scaled(factor))
    try:
        yield _tolerances.get()
    finally:
        _tolerances.reset(token)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def _clamp_unit(values: np.ndarray, what: str) -> np.ndarray:
    tol = get_tolerances()
    if not np.all(np.isfinite(values)):
        raise ValidationError(f"{what} has non-finite entries", invariant="finite")
    if values.size and (values.min() < -tol.prob_eps or values.max() > 1 + tol.prob_eps):
        raise ValidationError(
            f"{what} entries must lie in [0, 1] (found range [{values.min():.3g}, {values.max():.3g}])",
            invariant="entries_in_unit_interval",
        )
    return np.clip(values, 0.0, 1.0)


@dataclass(frozen=True)
class ProbVec:
    """Finite probability distribution; entries clamped to [0, 1], sum 1."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size < 1:
            raise ShapeError(f"ProbVec needs a non-empty 1-d array, got shape {p.shape}")
        p = _clamp_unit(p, "ProbVec")
        total = p.sum()
        if abs(total - 1.0) > get_tolerances().sum_tol:
            raise ValidationError(f"ProbVec sums to {float(total)!r}, not 1", invariant="sums_to_one")
        if abs(total - 1.0) > _DEFAULT_TOLERANCES.sum_tol:
            # admitted only under a loosened tolerance: normalize so derived quantities validate
            p = p / total
        object.__setattr__(self, "probs", _frozen(p))

    def __len__(self) -> int:
        return self.probs.size


@dataclass(frozen=True)
class CondMatrix:
    """Column-stochastic kernel: ``entries[i, j] = P(out=i | in=j)``."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.ndim != 2 or 0 in m.shape:
            raise ShapeError(f"CondMatrix needs a non-empty 2-d array, got shape {m.shape}")
        m = _clamp_unit(m, "CondMatrix")
        sums = m.sum(axis=0)
        bad = np.flatnonzero(np.abs(sums - 1.0) > get_tolerances().sum_tol)
        if bad.size:
            j = int(bad[0])
            raise ValidationError(
                f"CondMatrix column {j} sums to {float(sums[j])!r}, not 1", invariant="columns_sum_to_one")
        if np.any(np.abs(sums - 1.0) > _DEFAULT_TOLERANCES.sum_tol):
            m = m / sums[None, :]
        object.__setattr__(self, "entries", _frozen(m))

    @property
    def n_out(self) -> int:
        return self.entries.shape[0]

    @property
    def n_in(self) -> int:
        return self.entries.shape[1]

    def column(self, j: int) -> ProbVec:
        return ProbVec(self.entries[:, j])

    @classmethod
    def identity(cls, n: int) -> "CondMatrix":
        return cls(np.eye(n))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace matrix.

    The spectrum is computed once at construction and cached in ``eigenvalues``
    after clamping roundoff-level excursions outside [0, 1].
    """

    entries: np.ndarray
    eigenvalues: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        tol = get_tolerances()
        rho = np.asarray(self.entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] == 0:
            raise ShapeError(f"density matrix must be square and non-empty, got shape {rho.shape}")
        if not np.all(np.isfinite(rho)):
            raise ValidationError("density matrix has non-finite entries", invariant="finite")
        asym = np.max(np.abs(rho - rho.conj().T))
        if asym > tol.herm_tol:
            raise ValidationError(f"density matrix is not Hermitian (deviation {asym:.3g})",
                                  invariant="hermitian")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > tol.trace_tol:
            raise ValidationError(f"density matrix has trace {float(tr)!r}, not 1", invariant="unit_trace")
        # symmetrize so the eigensolver sees an exactly Hermitian matrix
        rho = 0.5 * (rho + rho.conj().T)
        lam = np.linalg.eigvalsh(rho)
        if lam.min() < -tol.eig_tol:
            raise ValidationError(f"density matrix has eigenvalue {lam.min():.3g} < 0",
                                  invariant="positive_semidefinite")
        if lam.max() > 1 + tol.eig_tol:
            raise ValidationError(f"density matrix has eigenvalue {lam.max():.3g} > 1",
                                  invariant="eigenvalues_at_most_one")
        object.__setattr__(self, "entries", _frozen(rho))
        object.__setattr__(self, "eigenvalues", _frozen(np.clip(lam, 0.0, 1.0)))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def diagonal(cls, probs: Sequence[float] | np.ndarray, dim: int | None = None) -> "DensityMatrix":
        """diag(probs), zero-padded to ``dim`` when given."""
        p = np.asarray(probs, dtype=float)
        d = p.size if dim is None else dim
        if d < p.size:
            raise ShapeError(f"cannot embed length-{p.size} distribution in dimension {d}")
        padded = np.zeros(d)
        padded[: p.size] = p
        return cls(np.diag(padded).astype(complex))


@dataclass(frozen=True)
class Ensemble:
    """Weighted family of states ({p_k}, {rho_k}) sharing one dimension."""

    weights: ProbVec
    states: tuple

    def __post_init__(self):
        w = self.weights if isinstance(self.weights, ProbVec) else ProbVec(self.weights)
        states = tuple(s if isinstance(s, DensityMatrix) else DensityMatrix(s) for s in self.states)
        if len(w) != len(states):
            raise ShapeError(f"{len(w)} weights but {len(states)} states")
        dims = {s.dim for s in states}
        if len(dims) > 1:
            raise ShapeError(f"ensemble states have mixed dimensions {sorted(dims)}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "states", states)

    @property
    def dim(self) -> int:
        return self.states[0].dim


def _as_probvec(p) -> ProbVec:
    return p if isinstance(p, ProbVec) else ProbVec(p)


def _entropy_of_spectrum(values: np.ndarray) -> float:
    nz = values[values > 0]
    # + 0.0 turns the -0.0 of a deterministic distribution into 0.0
    return float(-np.sum(nz * np.log(nz))) + 0.0


def shannon_entropy(p) -> float:
    """H(p) = -sum p_i ln p_i, in nats."""
    return _entropy_of_spectrum(_as_probvec(p).probs)


def binary_entropy(alpha: float) -> float:
    if not (0.0 <= alpha <= 1.0):
        raise DomainError(f"binary_entropy needs alpha in [0, 1], got {alpha!r}")
    return _entropy_of_spectrum(np.array([alpha, 1.0 - alpha]))


def von_neumann_entropy(rho) -> float:
    """S(rho) = -tr rho ln rho, via the clamped Hermitian spectrum."""
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix(rho)
    return _entropy_of_spectrum(rho.eigenvalues)


def conditional_entropy(cond, weights) -> float:
    """sum_k weights[k] * H(column k of cond)."""
    cond = cond if isinstance(cond, CondMatrix) else CondMatrix(cond)
    w = _as_probvec(weights)
    if len(w) != cond.n_in:
        raise ShapeError(f"{len(w)} weights for a kernel with {cond.n_in} input columns")
    col_h = np.array([_entropy_of_spectrum(cond.entries[:, j]) for j in range(cond.n_in)])
    return float(np.dot(w.probs, col_h))


def mutual_information(joint) -> float:
    """H(A) + H(B) - H(A, B) for a joint table ``joint[a, b]``."""
    p = np.asarray(joint, dtype=float)
    if p.ndim != 2 or 0 in p.shape:
        raise ShapeError(f"joint must be a non-empty 2-d table, got shape {p.shape}")
    p = _clamp_unit(p, "joint")
    total = p.sum()
    if abs(total - 1.0) > get_tolerances().sum_tol:
        raise ValidationError(f"joint sums to {float(total)!r}, not 1", invariant="sums_to_one")
    h_a = _entropy_of_spectrum(p.sum(axis=1))
    h_b = _entropy_of_spectrum(p.sum(axis=0))
    h_ab = _entropy_of_spectrum(p.ravel())
    return h_a + h_b - h_ab


def iqc_quantum(rho1, ens: Ensemble) -> float:
    """S(rho1) - sum_k p_k S(rho_k) for the post-measurement ensemble."""
    if not isinstance(rho1, DensityMatrix):
        rho1 = DensityMatrix(rho1)
    if rho1.dim != ens.dim:
        raise ShapeError(f"rho1 has dimension {rho1.dim}, ensemble states {ens.dim}")
    s_states = np.array([_entropy_of_spectrum(s.eigenvalues) for s in ens.states])
    return _entropy_of_spectrum(rho1.eigenvalues) - float(np.dot(ens.weights.probs, s_states))


def iqc_classical(chain) -> float:
    """H(x1) - H(x2 | k) for a chain x2 <- k <- x1.

    ``chain`` is any object exposing ``p_x2_given_k``, ``p_k_given_x1`` and
    ``p_x1`` (normally a :class:`infobound.markov_chain.MarkovChain3`).
    """
    pk = ProbVec(chain.p_k_given_x1.entries @ chain.p_x1.probs)
    return shannon_entropy(chain.p_x1) - conditional_entropy(chain.p_x2_given_k, pk)
