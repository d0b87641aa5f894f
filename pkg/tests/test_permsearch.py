from __future__ import annotations

import itertools
import time
from collections import Counter

import pytest

from conftest import random_polarizing_kernel
from lkpolar.cost import arikan_lower_bound, kernel_cost
from lkpolar.gf2 import arikan_kernel, random_invertible
from lkpolar.kernelalg import Kernel, permute_columns, window_profile
from lkpolar.permsearch import (
    BeamOverflow,
    PermutationCandidate,
    SearchState,
    calculate_metric,
    find_good_permutations,
    initial_threshold,
    metric_trace,
    search,
    select_best,
)


def brute_force_search(k: Kernel, start: int):
    """Enumerate all column orders; return (final threshold, sorted survivors)."""
    a = k.array()
    ka = arikan_kernel(k.l).to_array()
    l = k.l
    prefixes = [{tuple(r[:i]) for r in ka} for i in range(l + 1)]
    mins = {}
    for pi in itertools.permutations(range(l)):
        rows = list(range(l))
        low = l
        for i in range(1, l + 1):
            sel = a[:, list(pi[:i])]
            rows = [r for r in rows if tuple(sel[r]) in prefixes[i]]
            low = min(low, len(rows))
        mins[pi] = low
    m = min(start, max(mins.values()))
    return m, sorted(p for p, v in mins.items() if v >= m)


def test_initial_threshold_examples(k4):
    assert initial_threshold(k4) == 3
    assert initial_threshold(Kernel.arikan(16)) == 16
    # odd weights only meet K_A's weights at weight one
    odd = Kernel.from_rows(["1000", "0100", "1110", "1011"])
    assert Counter(odd.matrix.row_weights()) == Counter([1, 1, 3, 3])
    assert initial_threshold(odd) == 1


def test_calculate_metric_examples(k4):
    cel, rel, metric = calculate_metric(k4, 1, [0, 1, 2, 3], (), 0, (0, 1, 2, 3), 4)
    assert cel == (0,)
    assert rel == (0, 1, 3)
    assert metric == 3
    for path in [(0, 1, 3, 2), (0, 3, 1, 2)]:
        assert min(metric_trace(k4, path)) >= 3
    ka = Kernel.arikan(8)
    assert metric_trace(ka, tuple(range(8))) == [8] * 8


def test_calculate_metric_rejects_duplicate(k4):
    with pytest.raises(ValueError):
        calculate_metric(k4, 2, [0], (0,), 0, (0, 1, 2, 3), 4)
    with pytest.raises(ValueError):
        calculate_metric(k4, 3, [1], (0,), 0, (0, 1, 2, 3), 4)


def test_calculate_metric_counts_repeated_rows():
    # two identical kernel rows both count (list with repetitions)
    k = Kernel.from_rows(["1000", "1100", "1010", "1001"])
    _, rel, metric = calculate_metric(k, 2, [1], (0,), 0, (0, 1, 2, 3), 4)
    assert rel == (0, 1, 2, 3) and metric == 4


def test_worked_example(k4):
    t0 = time.perf_counter()
    res = search(k4)
    elapsed = time.perf_counter() - t0
    assert res.threshold == res.initial_threshold == 3
    assert sorted(c.permutation for c in res.candidates) == [(0, 1, 3, 2), (0, 3, 1, 2)]
    assert elapsed < 1.0


def test_search_matches_brute_force_l4(rng):
    for _ in range(40):
        k = Kernel(random_invertible(4, rng))
        start = initial_threshold(k)
        m, expected = brute_force_search(k, start)
        res = search(k)
        assert res.threshold == m
        assert sorted(c.permutation for c in res.candidates) == expected


def test_search_matches_brute_force_l8(rng):
    for _ in range(1):
        k = random_polarizing_kernel(8, rng)
        start = initial_threshold(k)
        m, expected = brute_force_search(k, start)
        res = search(k)
        assert res.threshold == m
        assert sorted(c.permutation for c in res.candidates) == expected


def test_search_with_explicit_threshold(k4):
    res = search(k4, threshold=4)
    # nothing reaches 4, so the search falls back to 3
    assert res.initial_threshold == 4 and res.threshold == 3
    everything = search(k4, threshold=0)
    assert len(everything.candidates) == 24
    with pytest.raises(ValueError):
        search(k4, threshold=-1)


def test_survivor_invariants(rng):
    for _ in range(5):
        k = random_polarizing_kernel(8, rng)
        trace = []
        res = search(k, trace=trace)
        for cand in res.candidates[:200]:
            assert sorted(cand.permutation) == list(range(8))
            assert min(metric_trace(k, cand.permutation)) >= res.threshold
            assert cand.metric == metric_trace(k, cand.permutation)[-1]
        for threshold, state in trace:
            assert isinstance(state, SearchState)
            assert len(state.columns) == len(state.row_sets) == len(state.metrics)
            for cols, m in list(zip(state.columns, state.metrics))[:200]:
                assert len(set(cols)) == len(cols)
                assert threshold <= m <= 8
        assert search(k).candidates == res.candidates


def bit_index_permutations(t: int) -> list[tuple[int, ...]]:
    """Column orders that permute the binary digits of the column index."""
    out = []
    for sigma in itertools.permutations(range(t)):
        out.append(tuple(sum(((c >> sigma[b]) & 1) << b for b in range(t)) for c in range(1 << t)))
    return sorted(out)


@pytest.mark.parametrize("t", [2, 3, 4])
def test_arikan_survivors_are_bit_index_permutations(t):
    ka = Kernel.arikan(1 << t)
    res = search(ka)
    assert res.threshold == 1 << t
    assert sorted(c.permutation for c in res.candidates) == bit_index_permutations(t)
    for c in res.candidates:
        assert c.metric == 1 << t
        # the permuted kernel has exactly the rows of K_A, in some order
        permuted = permute_columns(ka, c.permutation).matrix
        assert sorted(permuted.to_strings()) == sorted(ka.matrix.to_strings())
    best, _, ranked = select_best(ka, res.candidates)
    assert best.permutation == tuple(range(1 << t))
    assert best.cost == arikan_lower_bound(t)
    assert window_profile(permute_columns(ka, best.permutation)).window_sizes == (0,) * (1 << t)
    if t >= 3:
        # reordering rows opens windows, so not every survivor is optimal
        assert ranked[-1].cost > best.cost


def test_beam_overflow():
    with pytest.raises(BeamOverflow) as info:
        search(Kernel.arikan(16), cap=1)
    assert info.value.cap == 1
    assert "cap 1" in str(info.value)


def test_find_good_permutations(k4):
    found = find_good_permutations(k4, 3)
    assert [c.permutation for c in found] == [(0, 1, 3, 2), (0, 3, 1, 2)]


def test_select_best(k4):
    cands = find_good_permutations(k4)
    best, kp, ranked = select_best(k4, cands)
    assert best.permutation == (0, 1, 3, 2)
    assert [c.cost for c in ranked] == [58, 58]
    assert kp == permute_columns(k4, (0, 1, 3, 2))
    one = PermutationCandidate((0, 3, 1, 2), 3)
    assert select_best(k4, [one])[0].permutation == (0, 3, 1, 2)
    with pytest.raises(ValueError):
        select_best(k4, [])


def test_select_best_never_worse_than_identity(rng):
    for _ in range(10):
        k = random_polarizing_kernel(8, rng)
        cands = [PermutationCandidate(tuple(range(8)), 0)]
        cands += [PermutationCandidate(tuple(int(x) for x in rng.permutation(8)), 0) for _ in range(5)]
        best, _, _ = select_best(k, cands)
        assert best.cost <= kernel_cost(window_profile(k)).total
