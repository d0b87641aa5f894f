"""Approximate operation counts of the LLR-domain window decoder.

A phase that opens new Arikan bits pays for extending every live path
through them (``Lambda``) plus the two maximisations over the path halves.
A phase that opens nothing reuses cached maxima and costs one subtraction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .kernelalg import Kernel, WindowProfile, permute_columns, window_profile

EMPTY_WINDOW_RULES = ("arikan", "window")


def _valuation(i: int) -> int:
    return (i & -i).bit_length() - 1


def arikan_channel_cost(i: int, t: int) -> int:
    """Min-sum operations to produce the LLR of Arikan phase ``i`` of F_2^{(x)t}."""
    if not 0 <= i < (1 << t):
        raise ValueError(f"phase {i} out of range for t={t}")
    if i == 0:
        return (1 << t) - 1
    return (1 << (_valuation(i) + 1)) - 1


def _log2_cost(h: int, t: int) -> int:
    return (arikan_channel_cost(h, t) + 1).bit_length() - 1


def lambda_cost(i: int, h: int, h_prev: int, t: int) -> int:
    return sum(1 << (x + _log2_cost(x, t) - i) for x in range(h_prev + 1, h + 1))


def phase_cost(i: int, h: int, h_prev: int, window_size: int, t: int, empty_window: str = "arikan") -> int:
    """Cost of kernel phase ``i``; ``h_prev`` is -1 for i = 0.

    ``empty_window`` selects how an advancing phase with an empty window is
    charged: ``"arikan"`` uses the plain channel cost C_i, ``"window"`` runs
    it through the general path-extension formula (phase 0 always uses C_0).
    """
    if empty_window not in EMPTY_WINDOW_RULES:
        raise ValueError(f"empty_window must be one of {EMPTY_WINDOW_RULES}")
    if window_size != h - i:
        raise ValueError(f"window size {window_size} inconsistent with h={h}, i={i}")
    if h < h_prev:
        raise ValueError(f"h must be non-decreasing (h={h} < previous {h_prev})")
    if h == h_prev:
        return 1
    if window_size == 0 and (empty_window == "arikan" or i == 0):
        return arikan_channel_cost(i, t)
    return (1 << (window_size + 1)) - 1 + lambda_cost(i, h, h_prev, t)


@dataclass(frozen=True)
class ComplexityProfile:
    per_phase: tuple[int, ...]
    total: int
    l: int
    t: int


def cost_from_columns(h: Sequence[int], window_sizes: Sequence[int], t: int,
                      empty_window: str = "arikan") -> ComplexityProfile:
    """Cost from bare (h_i, |D_i|) columns, e.g. as printed in a table."""
    per = []
    prev = -1
    for i, (hi, d) in enumerate(zip(h, window_sizes)):
        per.append(phase_cost(i, hi, prev, d, t, empty_window))
        prev = hi
    return ComplexityProfile(tuple(per), sum(per), len(per), t)


def kernel_cost(profile: WindowProfile, empty_window: str = "arikan") -> ComplexityProfile:
    return cost_from_columns(profile.h, profile.window_sizes, profile.t, empty_window)


def arikan_lower_bound(t: int) -> int:
    return sum(arikan_channel_cost(i, t) for i in range(1 << t))


@dataclass(frozen=True)
class RankedCandidate:
    permutation: tuple[int, ...]
    cost: int
    profile: ComplexityProfile


def evaluate_candidates(kernel: Kernel, permutations: Iterable[Sequence[int]],
                        empty_window: str = "arikan") -> list[RankedCandidate]:
    """Cost every permuted kernel; sorted by (total cost, permutation)."""
    ranked = []
    for pi in permutations:
        prof = kernel_cost(window_profile(permute_columns(kernel, pi)), empty_window)
        ranked.append(RankedCandidate(tuple(pi), prof.total, prof))
    if not ranked:
        raise ValueError("no candidate permutations to evaluate")
    ranked.sort(key=lambda c: (c.cost, c.permutation))
    return ranked
