"""The three-node chain x2 <- k <- x1, its two counterexample fixtures, and
the diagonal density-matrix embedding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .info_core import CondMatrix, DensityMatrix, Ensemble, ProbVec

__all__ = [
    "MarkovChain3",
    "Joint3",
    "joint",
    "marginal_k",
    "marginal_x2",
    "example1",
    "example2",
    "to_ensemble",
    "random_chain",
]


@dataclass(frozen=True)
class MarkovChain3:
    """P(x2, k, x1) = P(x2|k) P(k|x1) P(x1), stored as its three factors."""

    p_x2_given_k: CondMatrix
    p_k_given_x1: CondMatrix
    p_x1: ProbVec

    def __post_init__(self):
        for name, kind in (("p_x2_given_k", CondMatrix), ("p_k_given_x1", CondMatrix), ("p_x1", ProbVec)):
            value = getattr(self, name)
            if not isinstance(value, kind):
                object.__setattr__(self, name, kind(value))
        if self.p_x2_given_k.n_in != self.p_k_given_x1.n_out:
            raise ShapeError(
                f"p_x2_given_k has {self.p_x2_given_k.n_in} columns but "
                f"p_k_given_x1 has {self.p_k_given_x1.n_out} rows")
        if self.p_k_given_x1.n_in != len(self.p_x1):
            raise ShapeError(
                f"p_k_given_x1 has {self.p_k_given_x1.n_in} columns but p_x1 has length {len(self.p_x1)}")

    @property
    def dims(self) -> tuple[int, int, int]:
        """(n2, nk, n1)."""
        return self.p_x2_given_k.n_out, self.p_k_given_x1.n_out, len(self.p_x1)


@dataclass(frozen=True)
class Joint3:
    """Joint table indexed ``probs[x2, k, x1]``."""

    probs: np.ndarray

    def marginal(self, keep: str) -> np.ndarray:
        """Marginal over the named axes, e.g. ``"k"`` or ``"kx1"`` (axis order kept)."""
        axes = {"x2": 0, "k": 1, "x1": 2}
        tokens = [t for t in ("x2", "k", "x1") if t in keep]
        drop = tuple(v for t, v in axes.items() if t not in tokens)
        return self.probs.sum(axis=drop)


def joint(chain: MarkovChain3) -> Joint3:
    p = np.einsum("ak,kx,x->akx", chain.p_x2_given_k.entries, chain.p_k_given_x1.entries,
                  chain.p_x1.probs)
    p.setflags(write=False)
    return Joint3(p)


def marginal_k(chain: MarkovChain3) -> ProbVec:
    return ProbVec(chain.p_k_given_x1.entries @ chain.p_x1.probs)


def marginal_x2(chain: MarkovChain3) -> ProbVec:
    return ProbVec(chain.p_x2_given_k.entries @ marginal_k(chain).probs)


def example1() -> MarkovChain3:
    """Chain with I_QC = -ln 2: uniform x2 kernel, deterministic x1.

    P(k|x1) is not pinned down by the original example; it is filled in as
    uniform here. I_QC does not depend on it because every column of
    P(x2|k) has the same entropy.
    """
    half = [[0.5, 0.5], [0.5, 0.5]]
    return MarkovChain3(CondMatrix(half), CondMatrix(half), ProbVec([1.0, 0.0]))


# P(k|x1) in example1 is a fixture choice, not part of the original example.
EXAMPLE1_FIXTURE_COMPLETED = ("p_k_given_x1",)


def example2() -> MarkovChain3:
    """Chain with I_QC = ln 2 > H(k) = 0: k is always 1."""
    return MarkovChain3(
        CondMatrix(np.eye(2)),
        CondMatrix([[0.0, 0.0], [1.0, 1.0]]),
        ProbVec([0.5, 0.5]),
    )


def to_ensemble(chain: MarkovChain3) -> tuple[DensityMatrix, Ensemble]:
    """Embed the chain as commuting (diagonal) states.

    Returns ``(rho1, ensemble)`` with rho1 = diag(P(x1)) and the ensemble of
    diag(P(x2|k)) weighted by P(k). When n1 != n2 both sides are zero-padded
    to max(n1, n2), which leaves every von Neumann entropy unchanged.
    """
    n2, nk, n1 = chain.dims
    d = max(n1, n2)
    rho1 = DensityMatrix.diagonal(chain.p_x1.probs, d)
    states = tuple(DensityMatrix.diagonal(chain.p_x2_given_k.entries[:, k], d) for k in range(nk))
    return rho1, Ensemble(marginal_k(chain), states)


def _dirichlet_columns(rng: np.random.Generator, n_out: int, n_in: int) -> np.ndarray:
    # flat Dirichlet: normalized unit-exponential draws
    e = rng.standard_exponential((n_out, n_in))
    return e / e.sum(axis=0, keepdims=True)


def random_chain(rng: np.random.Generator, dims: tuple[int, int, int]) -> MarkovChain3:
    """Chain with every column drawn from the flat Dirichlet on its simplex."""
    n2, nk, n1 = dims
    return MarkovChain3(
        CondMatrix(_dirichlet_columns(rng, n2, nk)),
        CondMatrix(_dirichlet_columns(rng, nk, n1)),
        ProbVec(_dirichlet_columns(rng, n1, 1)[:, 0]),
    )
