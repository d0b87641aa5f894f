"""Threshold-guided search for column permutations with cheap window decoding.

Columns are chosen one at a time.  A partial column order survives when at
least ``threshold`` rows of the partially permuted kernel (restricted to the
chosen columns) coincide with some row of K_A restricted to its leading
columns.  If a column step kills every candidate the search restarts with
the threshold lowered by one.  Survivors are ranked by window-decoder cost.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cost import kernel_cost
from .gf2 import arikan_kernel
from .kernelalg import Kernel, hamming_weight_multiset, permute_columns, window_profile

DEFAULT_CAP = 10**6
_CHUNK_ELEMS = 1 << 22


class BeamOverflow(RuntimeError):
    def __init__(self, cap: int, size: int, column: int):
        super().__init__(f"beam overflow: {size} partial candidates at column {column} exceed cap {cap}")
        self.cap = cap
        self.size = size
        self.column = column


@dataclass
class SearchState:
    """Parallel candidate lists: column prefixes, matching rows, metrics."""
    columns: list[tuple[int, ...]] = field(default_factory=lambda: [()])
    row_sets: list[tuple[int, ...]] = field(default_factory=list)
    metrics: list[int] = field(default_factory=list)

    @classmethod
    def initial(cls, l: int) -> "SearchState":
        return cls([()], [tuple(range(l))], [l])

    def __len__(self) -> int:
        return len(self.columns)


@dataclass(frozen=True)
class PermutationCandidate:
    permutation: tuple[int, ...]
    metric: int
    cost: int | None = None


@dataclass(frozen=True)
class SearchResult:
    candidates: list[PermutationCandidate]
    threshold: int
    initial_threshold: int


def initial_threshold(k: Kernel) -> int:
    """Size of the multiset intersection of row weights of K and K_A."""
    hwk = hamming_weight_multiset(k.matrix)
    hwa = hamming_weight_multiset(arikan_kernel(k.l))
    return sum((hwk & hwa).values())


def _arikan_prefix_set(l: int, i: int) -> np.ndarray:
    ka = arikan_kernel(l).to_array()[:, :i]
    return np.unique(ka @ (1 << np.arange(i - 1, -1, -1, dtype=np.int64)))


def calculate_metric(kernel: Kernel, i: int, cand_cols: Sequence[int], kappa: Sequence[int],
                     m: int, rho: Sequence[int], mu: int) -> tuple[tuple[int, ...], tuple[int, ...], int]:
    """One candidate extension, exactly as the reference subroutine does it.

    ``i`` is the 1-based column step (len(kappa) == i - 1), columns and rows
    are 0-based.  Returns (Cel, Rel, Metric).
    """
    col = cand_cols[m]
    if col in kappa:
        raise ValueError(f"column {col} already selected")
    if len(kappa) != i - 1:
        raise ValueError(f"step {i} expects {i - 1} selected columns, got {len(kappa)}")
    cel = tuple(kappa) + (col,)
    k = kernel.array()
    sk = [tuple(k[r, list(cel)]) for r in rho]          # list, with repetitions
    ka = arikan_kernel(kernel.l).to_array()
    ska = {tuple(row[:i]) for row in ka}                # set, no repetitions
    rel = tuple(rho[j] for j in range(mu) if sk[j] in ska)
    return cel, rel, len(rel)


def _expand(k: np.ndarray, cols: np.ndarray, prefix: np.ndarray, rho: np.ndarray,
            allowed: np.ndarray, threshold: int):
    """All one-column extensions of every state that meet the threshold."""
    n, depth = cols.shape
    l = k.shape[0]
    used = np.zeros((n, l), dtype=bool)
    if depth:
        np.put_along_axis(used, cols.astype(np.int64), True, axis=1)
    # new_prefix[s, c, r] = prefix[s, r] * 2 + K[r, c]
    new_prefix = (prefix[:, None, :] << 1) | k.T[None, :, :].astype(np.int64)
    match = np.isin(new_prefix, allowed) & rho[:, None, :]
    metric = match.sum(axis=2)
    ok = (metric >= threshold) & ~used
    s_idx, c_idx = np.nonzero(ok)                       # state-major, column ascending
    new_cols = np.concatenate([cols[s_idx], c_idx[:, None].astype(cols.dtype)], axis=1)
    return new_cols, new_prefix[s_idx, c_idx], match[s_idx, c_idx], metric[s_idx, c_idx]


def search(k: Kernel, threshold: int | None = None, cap: int = DEFAULT_CAP,
           trace: list | None = None) -> SearchResult:
    """Run the column search; ``trace`` (if given) collects a SearchState per step."""
    l = k.l
    karr = k.array().astype(np.int64)
    start = initial_threshold(k) if threshold is None else int(threshold)
    if start < 0:
        raise ValueError("threshold must be non-negative")
    allowed = [None] + [_arikan_prefix_set(l, i) for i in range(1, l + 1)]
    mt = start
    while True:
        cols = np.zeros((1, 0), dtype=np.int16)
        prefix = np.zeros((1, l), dtype=np.int64)
        rho = np.ones((1, l), dtype=bool)
        metric = np.array([l])
        for i in range(1, l + 1):
            step = max(1, _CHUNK_ELEMS // (l * l))
            parts = [
                _expand(karr, cols[a:a + step], prefix[a:a + step], rho[a:a + step], allowed[i], mt)
                for a in range(0, len(cols), step)
            ]
            cols = np.concatenate([p[0] for p in parts])
            if len(cols) == 0:
                break
            if len(cols) > cap:
                raise BeamOverflow(cap, len(cols), i)
            prefix = np.concatenate([p[1] for p in parts])
            rho = np.concatenate([p[2] for p in parts])
            metric = np.concatenate([p[3] for p in parts])
            if trace is not None:
                trace.append((mt, SearchState(
                    [tuple(int(c) for c in row) for row in cols],
                    [tuple(int(r) for r in np.flatnonzero(m)) for m in rho],
                    [int(m) for m in metric],
                )))
        else:
            cands = [PermutationCandidate(tuple(int(c) for c in row), int(m))
                     for row, m in zip(cols, metric)]
            return SearchResult(cands, mt, start)
        if mt == 0:
            # unreachable: at threshold 0 every extension survives
            raise RuntimeError("search exhausted at threshold 0")
        mt -= 1


def find_good_permutations(k: Kernel, m_t: int | None = None, cap: int = DEFAULT_CAP) -> list[PermutationCandidate]:
    return search(k, m_t, cap).candidates


def select_best(k: Kernel, candidates: Sequence[PermutationCandidate],
                empty_window: str = "arikan") -> tuple[PermutationCandidate, Kernel, list[PermutationCandidate]]:
    """Cheapest candidate (ties to the lexicographically smallest permutation).

    Returns (best, permuted kernel, all candidates with costs filled in, ranked).
    """
    if not candidates:
        raise ValueError("no candidates to select from")
    costed = []
    for c in candidates:
        prof = kernel_cost(window_profile(permute_columns(k, c.permutation)), empty_window)
        costed.append(PermutationCandidate(c.permutation, c.metric, prof.total))
    costed.sort(key=lambda c: (c.cost, c.permutation))
    best = costed[0]
    return best, permute_columns(k, best.permutation), costed


def metric_trace(k: Kernel, permutation: Sequence[int]) -> list[int]:
    """Replay the metric along one column order (reference subroutine)."""
    rho = tuple(range(k.l))
    out = []
    for i in range(1, k.l + 1):
        kappa = tuple(permutation[: i - 1])
        _, rho, metric = calculate_metric(k, i, [permutation[i - 1]], kappa, 0, rho, len(rho))
        out.append(metric)
    return out
