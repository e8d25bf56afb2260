"""Numerical search for chains that violate the I_QC bounds.

Chains are parameterized by unconstrained logits; every column is a softmax,
so every iterate is a valid chain. Each restart runs Nelder-Mead from an
independent standard-normal start drawn from its own counter-based stream, so
results do not depend on how restarts are scheduled across workers.

``grid_oracle`` enumerates chains on a rational simplex grid and is kept free
of any optimizer code; it serves as the independent check on ``search``.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np
from scipy.optimize import minimize

from .errors import DomainError, ResourceLimitError
from .info_core import CondMatrix, ProbVec, iqc_classical, shannon_entropy
from .markov_chain import MarkovChain3, marginal_k
from .streams import stream

__all__ = [
    "Objective",
    "ChainParams",
    "SearchResult",
    "decode",
    "encode",
    "objective_value",
    "search",
    "grid_oracle",
    "grid_size",
    "simplex_grid",
]

MIN_RESTART_BUDGET = 200
SPREAD_TOLERANCE = 1e-10
MAX_GRID_POINTS = 10**8
MAX_SEARCH_BUDGET = 10**8
MAX_PARAMETERS = 10**4
_GRID_CHUNK = 2**22  # entries of the value matrix evaluated at once


class Objective(str, enum.Enum):
    MINIMIZE_IQC = "minimize_iqc"
    MAXIMIZE_IQC_MINUS_HK = "maximize_iqc_minus_hk"

    @classmethod
    def parse(cls, value) -> "Objective":
        if isinstance(value, cls):
            return value
        aliases = {"iqc-min": cls.MINIMIZE_IQC, "gap-max": cls.MAXIMIZE_IQC_MINUS_HK}
        if value in aliases:
            return aliases[value]
        try:
            return cls(value)
        except ValueError:
            raise DomainError(f"unknown objective {value!r}") from None


@dataclass(frozen=True)
class ChainParams:
    logits_x2k: np.ndarray
    logits_kx1: np.ndarray
    logits_x1: np.ndarray

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.logits_x2k.shape[0], self.logits_kx1.shape[0], self.logits_x1.shape[0]

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.logits_x2k.ravel(), self.logits_kx1.ravel(), self.logits_x1])

    @classmethod
    def unflatten(cls, x: np.ndarray, dims: tuple[int, int, int]) -> "ChainParams":
        n2, nk, n1 = dims
        a, b = n2 * nk, n2 * nk + nk * n1
        return cls(x[:a].reshape(n2, nk), x[a:b].reshape(nk, n1), x[b:])


@dataclass(frozen=True)
class SearchResult:
    best_chain: MarkovChain3
    best_value: float
    objective: Objective
    restarts_run: int
    evaluations: int
    seed: int
    converged: bool


def _softmax_columns(logits: np.ndarray) -> np.ndarray:
    z = np.exp(logits - logits.max(axis=0, keepdims=True))
    return z / z.sum(axis=0, keepdims=True)


def _decode_arrays(p: ChainParams):
    return (_softmax_columns(p.logits_x2k), _softmax_columns(p.logits_kx1),
            _softmax_columns(p.logits_x1[:, None])[:, 0])


def decode(params: ChainParams) -> MarkovChain3:
    for arr in (params.logits_x2k, params.logits_kx1, params.logits_x1):
        if not np.all(np.isfinite(arr)):
            raise DomainError("chain logits must be finite")
    a, b, c = _decode_arrays(params)
    return MarkovChain3(CondMatrix(a), CondMatrix(b), ProbVec(c))


def encode(chain: MarkovChain3, floor: float = 1e-300) -> ChainParams:
    """Log of every column; zero entries map to ``log(floor)``."""
    lg = lambda a: np.log(np.maximum(a, floor))  # noqa: E731
    return ChainParams(lg(chain.p_x2_given_k.entries), lg(chain.p_k_given_x1.entries),
                       lg(chain.p_x1.probs))


def objective_value(chain: MarkovChain3, objective) -> float:
    """Objective framed for minimization (the gap is negated)."""
    objective = Objective.parse(objective)
    iqc = iqc_classical(chain)
    if objective is Objective.MINIMIZE_IQC:
        return iqc
    return -(iqc - shannon_entropy(marginal_k(chain)))


def _h_rows(p: np.ndarray, axis: int) -> np.ndarray:
    """Entropy along ``axis`` with 0 ln 0 = 0."""
    logp = np.log(p, out=np.zeros_like(p), where=p > 0)
    return -(p * logp).sum(axis=axis) + 0.0


def _fast_objective(x: np.ndarray, dims, minimize_iqc: bool) -> float:
    # unvalidated twin of objective_value, for the optimizer's inner loop
    a, b, c = _decode_arrays(ChainParams.unflatten(x, dims))
    pk = b @ c
    iqc = _h_rows(c, 0) - pk @ _h_rows(a, 0)
    if minimize_iqc:
        return float(iqc)
    return float(-(iqc - _h_rows(pk, 0)))


def _run_restart(args):
    index, dims, minimize_iqc, seed, maxfev = args
    n2, nk, n1 = dims
    x0 = stream(seed, index).standard_normal(n2 * nk + nk * n1 + n1)
    res = minimize(
        _fast_objective, x0, args=(dims, minimize_iqc), method="Nelder-Mead",
        options={"maxfev": maxfev, "fatol": SPREAD_TOLERANCE, "xatol": np.inf, "adaptive": False},
    )
    return index, float(res.fun), np.asarray(res.x), int(res.nfev), bool(res.status == 0)


def _check_dims(dims) -> tuple[int, int, int]:
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or min(dims) < 1:
        raise DomainError(f"dims must be three positive integers, got {dims}")
    return dims


def search(dims, objective, restarts: int, seed: int, budget: int, workers: int = 1) -> SearchResult:
    """Multi-start Nelder-Mead over chains of shape ``dims = (n2, nk, n1)``.

    Each restart gets ``max(200, budget // restarts)`` objective evaluations.
    The lowest value wins, ties going to the lowest restart index. With
    ``workers > 1`` restarts run in a process pool; the result is identical
    to the serial run.
    """
    dims = _check_dims(dims)
    objective = Objective.parse(objective)
    if restarts < 1 or budget < 1:
        raise DomainError("restarts and budget must be >= 1")
    n2, nk, n1 = dims
    if n2 * nk + nk * n1 + n1 > MAX_PARAMETERS:
        raise ResourceLimitError(f"dims {dims} exceed {MAX_PARAMETERS} logits; use smaller dims")
    if budget > MAX_SEARCH_BUDGET:
        raise ResourceLimitError(f"budget {budget} exceeds {MAX_SEARCH_BUDGET}")

    per_restart = max(MIN_RESTART_BUDGET, budget // restarts)
    minimize_iqc = objective is Objective.MINIMIZE_IQC
    tasks = [(i, dims, minimize_iqc, seed, per_restart) for i in range(restarts)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_restart, tasks, chunksize=max(1, restarts // (4 * workers))))
    else:
        results = [_run_restart(t) for t in tasks]

    best = min(results, key=lambda r: (r[1], r[0]))
    chain = decode(ChainParams.unflatten(best[2], dims))
    value = objective_value(chain, objective)
    if minimize_iqc and value < -math.log(n2) - 1e-9:
        raise AssertionError(f"I_QC {value} below the floor -ln({n2})")
    return SearchResult(
        best_chain=chain,
        best_value=value,
        objective=objective,
        restarts_run=len(results),
        evaluations=sum(r[3] for r in results),
        seed=seed,
        converged=any(r[4] for r in results),
    )


def simplex_grid(n: int, steps: int) -> np.ndarray:
    """All length-``n`` vectors with entries in {0, 1/steps, ..., 1} summing to 1."""
    if n == 1:
        return np.ones((1, 1))
    rows = []
    # stars and bars: choose n-1 bar positions among steps+n-1 slots
    for bars in combinations(range(steps + n - 1), n - 1):
        edges = (-1,) + bars + (steps + n - 1,)
        rows.append([edges[i + 1] - edges[i] - 1 for i in range(n)])
    return np.array(rows, dtype=float) / steps


def grid_size(dims, steps_per_axis: int) -> int:
    n2, nk, n1 = _check_dims(dims)
    g = lambda n: comb(steps_per_axis + n - 1, n - 1)  # noqa: E731
    return g(n2) ** nk * g(nk) ** n1 * g(n1)


def _product_rows(grid: np.ndarray, n_cols: int, idx: np.ndarray) -> np.ndarray:
    """Rows of the n_cols-fold product of ``grid`` selected by flat ``idx``.

    Returns shape (len(idx), n, n_cols): one matrix per product element.
    """
    digits = np.unravel_index(idx, (grid.shape[0],) * n_cols)
    return np.stack([grid[d] for d in digits], axis=-1)


def grid_oracle(dims, objective, steps_per_axis: int) -> float:
    """Exhaustive minimum of ``objective_value`` over the simplex grid."""
    dims = _check_dims(dims)
    objective = Objective.parse(objective)
    if steps_per_axis < 1:
        raise DomainError("steps_per_axis must be >= 1")
    total = grid_size(dims, steps_per_axis)
    if total > MAX_GRID_POINTS:
        raise ResourceLimitError(
            f"grid has {total} points (> {MAX_GRID_POINTS}); reduce dims or steps_per_axis")
    n2, nk, n1 = dims
    g2, gk, g1 = (simplex_grid(n, steps_per_axis) for n in dims)

    # B: every P(x2|k); only the per-column entropies matter
    n_b = g2.shape[0] ** nk
    h_cols = _h_rows(g2, 1)
    h_b = np.stack([h_cols[d] for d in np.unravel_index(np.arange(n_b), (g2.shape[0],) * nk)], axis=-1)

    # A: every (P(k|x1), P(x1)) pair
    n_kern = gk.shape[0] ** n1
    n_a = n_kern * g1.shape[0]
    h_x1_all = _h_rows(g1, 1)
    gap = objective is Objective.MAXIMIZE_IQC_MINUS_HK
    best = math.inf
    chunk = max(1, _GRID_CHUNK // n_b)
    for start in range(0, n_a, chunk):
        idx = np.arange(start, min(n_a, start + chunk))
        kern_idx, px_idx = np.divmod(idx, g1.shape[0])
        kern = _product_rows(gk, n1, kern_idx)          # (m, nk, n1)
        px1 = g1[px_idx]                                # (m, n1)
        pk = np.einsum("mkx,mx->mk", kern, px1)
        iqc = h_x1_all[px_idx][:, None] - pk @ h_b.T    # (m, n_b)
        vals = -(iqc - _h_rows(pk, 1)[:, None]) if gap else iqc
        best = min(best, float(vals.min()))
    return best
