"""One test per acceptance criterion; each records a PASS/FAIL line in the terminal summary."""

from __future__ import annotations

import time

import numpy as np
import pytest

from conftest import K4_ROWS, random_polarizing_kernel
from published_tables import KNOWN_TABLE_DEFECTS, SIZE16, SIZE16_RULE, SIZE32, SIZE32_RULE
from lkpolar.cost import arikan_lower_bound, cost_from_columns, kernel_cost, phase_cost
from lkpolar.kernelalg import Kernel, permute_columns, to_one_based, window_profile
from lkpolar.permsearch import search
from lkpolar.simlab import (
    ChannelConfig,
    DecoderConfig,
    StopRule,
    monte_carlo_reliability,
    run_fer,
    select_frozen,
)
from lkpolar.windec import (
    KernelProcessor,
    PolarCodeSpec,
    arikan_llr,
    brute_force_phase_llr,
    encode,
    kernel_phase_llrs,
    max_plus_ml,
    path_score_update,
    sc_decode,
    scl_decode,
)

ORACLE_ATOL = 1e-9
SEED = 20240611


def test_criterion_1_worked_example(acceptance):
    k = Kernel.from_rows(K4_ROWS, "K4")
    t0 = time.perf_counter()
    res = search(k)
    elapsed = time.perf_counter() - t0
    found = sorted(to_one_based(c.permutation) for c in res.candidates)
    ok = found == [(1, 2, 4, 3), (1, 4, 2, 3)] and res.threshold == 3 and elapsed < 1.0
    assert acceptance(1, ok, f"survivors={found} M={res.threshold} time={elapsed:.3f}s")


def test_criterion_2_cost_model(acceptance):
    mismatches = []
    defects = []
    for name, col in SIZE16.items():
        for i in range(16):
            h_prev = col["h"][i - 1] if i else -1
            got = phase_cost(i, col["h"][i], h_prev, col["d"][i], 4, SIZE16_RULE)
            if (name, i) in KNOWN_TABLE_DEFECTS:
                printed, implied = KNOWN_TABLE_DEFECTS[(name, i)]
                defects.append(f"{name}[{i}] printed {printed} computed {got}")
                if (col["ac"][i], got) != (printed, implied):
                    mismatches.append((name, i))
            elif got != col["ac"][i]:
                mismatches.append((name, i))
    primed = SIZE32["eNBCH'"]
    d = [h - i for i, h in enumerate(primed["h"])]
    total = cost_from_columns(primed["h"], d, 5, SIZE32_RULE).total
    natural = SIZE32["eNBCH"]
    d = [h - i for i, h in enumerate(natural["h"])]
    per = cost_from_columns(natural["h"], d, 5, SIZE32_RULE).per_phase
    rows_ok = all(per[i] == v for i, v in natural["ac"].items())
    rows_ok &= all(float(f"{per[i]:.1e}") == v for i, v in natural["ac_rounded"].items())
    ok = not mismatches and total == primed["total"] and rows_ok
    detail = f"16-bit mismatches={mismatches} 32-bit total={total} rows={'ok' if rows_ok else 'bad'}"
    if defects:
        detail += f" (known table defects: {'; '.join(defects)})"
    assert acceptance(2, ok, detail)


def test_criterion_3_oracle_equivalence(acceptance):
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    worst = 0.0
    kernels = 0
    for l in (4, 8):
        for _ in range(200):
            k = random_polarizing_kernel(l, rng)
            y = rng.uniform(-10, 10, (20, l))
            d = rng.integers(0, 2, (20, l))
            proc = KernelProcessor(window_profile(k), y)
            for i in range(l):
                s = proc.phase_llr()
                ref = brute_force_phase_llr(k, d[:, :i], y)
                worst = max(worst, float(np.max(np.abs(s - ref))))
                proc.commit(d[:, i])
            kernels += 1
    elapsed = time.perf_counter() - t0
    ok = worst <= ORACLE_ATOL and elapsed < 60.0
    assert acceptance(3, ok, f"kernels={kernels} max|diff|={worst:.2e} time={elapsed:.1f}s")


def test_criterion_4_arikan_degenerate(acceptance):
    k = Kernel.arikan(16)
    prof = window_profile(k)
    psi = kernel_cost(prof).total
    rng = np.random.default_rng(SEED)
    y = rng.normal(0, 3, (50, 16))
    d = rng.integers(0, 2, (50, 16))
    proc = KernelProcessor(prof, y)
    same = True
    for i in range(16):
        same &= bool(np.array_equal(proc.phase_llr(), arikan_llr(y, i, d[:, :i])))
        proc.commit(d[:, i])
    ok = (prof.h == tuple(range(16)) and prof.window_sizes == (0,) * 16
          and psi == 64 == arikan_lower_bound(4) and same)
    assert acceptance(4, ok, f"psi={psi} max|D|={max(prof.window_sizes)} min-sum match={same}")


def test_criterion_5_permutation_equivariance(acceptance):
    rng = np.random.default_rng(SEED)
    bad = 0
    for n in range(50):
        l = (4, 8, 16)[n % 3]
        k = random_polarizing_kernel(l, rng)
        pi = [int(p) for p in rng.permutation(l)]
        y = rng.integers(-8, 9, (8, l)).astype(float)
        a, ua, _ = kernel_phase_llrs(window_profile(k), y)
        b, ub, _ = kernel_phase_llrs(window_profile(permute_columns(k, pi)), y[:, pi])
        bad += not (np.array_equal(a, b) and np.array_equal(ua, ub))
    assert acceptance(5, bad == 0, f"kernels=50 mismatching={bad}")


def test_criterion_6_scl_consistency(acceptance):
    rng = np.random.default_rng(SEED)
    k = random_polarizing_kernel(4, rng)
    spec = PolarCodeSpec(k, 3, frozenset(int(x) for x in rng.choice(64, 32, replace=False)))
    y = rng.normal(0.8, 1.2, (1000, 64))
    list_one = bool(np.array_equal(scl_decode(spec, y, 1), sc_decode(spec, y)))
    ml_bad = []
    for kdim in range(1, 9):
        # a random 16x16 kernel has windows up to 15 bits wide, so keep its lists short
        shapes = ((2, 4), (4, 2), (16, 1)) if kdim <= 2 else ((2, 4), (4, 2))
        for l, n in shapes:
            kern = random_polarizing_kernel(l, rng)
            frozen = frozenset(int(x) for x in rng.choice(16, 16 - kdim, replace=False))
            s = PolarCodeSpec(kern, n, frozen)
            yy = rng.normal(0.2, 1.5, (10 if l == 16 else 30, 16))
            got = path_score_update(0, yy, encode(s, scl_decode(s, yy, 2**kdim))).sum(axis=-1)
            ref = path_score_update(0, yy, encode(s, max_plus_ml(s, yy))).sum(axis=-1)
            if not np.allclose(got, ref, atol=ORACLE_ATOL, rtol=0):
                ml_bad.append((kdim, l))
    ok = list_one and not ml_bad
    assert acceptance(6, ok, f"L=1 vs SC on 1000 frames: {list_one}; ML mismatches={ml_bad}")


def test_criterion_7_fer_sanity(acceptance):
    t0 = time.perf_counter()
    kern = Kernel.arikan(2)
    counts = monte_carlo_reliability(kern, 8, 2.0, 10**5, seed=1)
    spec = PolarCodeSpec(kern, 8, select_frozen(counts, 128))
    stop = StopRule(max_trials=2 * 10**6, target_errors=100)
    sc = [run_fer(spec, DecoderConfig(), ChannelConfig(snr, 0.5, seed=1), stop, batch_size=5000)
          for snr in (2.0, 3.0, 4.0)]
    fers = [r.fer for r in sc]
    decreasing = all(a > b for a, b in zip(fers, fers[1:]))
    enough = all(r.errors >= 100 for r in sc)
    fixed = StopRule(max_trials=10**4, target_errors=0)
    ch = ChannelConfig(2.0, 0.5, seed=2)
    l1 = run_fer(spec, DecoderConfig("scl", 1), ch, fixed, batch_size=2000)
    l8 = run_fer(spec, DecoderConfig("scl", 8), ch, fixed, batch_size=2000)
    elapsed = time.perf_counter() - t0
    ok = decreasing and enough and l8.fer <= l1.fer and elapsed < 600.0
    detail = (f"SC FER {', '.join(f'{r.eb_no_db:g}dB={r.fer:.3e} ({r.errors} err)' for r in sc)}; "
              f"2dB L=8 {l8.fer:.3e} vs L=1 {l1.fer:.3e}; time={elapsed:.0f}s")
    assert acceptance(7, ok, detail)


def test_criterion_8_published_kernels(acceptance):
    acceptance(8, "NOT EVALUATED", "16x16 eNBCH/F/L matrices are not available in this repository")
    pytest.skip("kernel matrices not available")


def test_criterion_9_excluded(acceptance):
    acceptance(9, "EXCLUDED", "subcode FER curves and CSE operation counts are out of scope")
    pytest.skip("excluded by scope")
