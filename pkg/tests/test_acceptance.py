"""Acceptance criteria, one test per criterion.

Each test prints a single PASS/FAIL line; the lines are repeated in a
summary section at the end of the pytest run.  Wall times are reported
next to the budget but not asserted.
"""
import hashlib
import math
import random
import time

import numpy as np
import pytest

from steffkit.basins import P1_PALETTE, BasinSpec, Mode, render_memory, render_plain, write_csv, write_ppm
from steffkit.divdiff import kurchatov_dd, potra_dd
from steffkit.efficiency import efficiency_index, optimal_steps
from steffkit.numkernel import Field, PrecisionContext
from steffkit.problems import cubic_p1, parse_system, scalar_quadratic, sine_chain
from steffkit.solver import Memory, SolverConfig, run, solve
from steffkit.weights import paper_poly, reciprocal

from oracles import central_jacobian, random_smooth_system

ORDER_SETUP = dict(precision=2048, tol="1e-200")


def _fmt(v):
    return f"{float(v):.5f}"


@pytest.fixture(scope="module")
def sine5():
    F = sine_chain(5)
    cache = {}

    def get(memory, m):
        if (memory, m) not in cache:
            cache[(memory, m)] = solve(F, "1.3", m, memory=memory.value, **ORDER_SETUP)
        return cache[(memory, m)]

    return get


def test_criterion_1_order(report, sine5):
    start = time.perf_counter()
    got = {m: sine5(Memory.NONE, m) for m in (1, 2, 3)}
    ok = all(t.converged and abs(float(t.acoc) - 2 * m) <= 0.05 for m, t in got.items())
    detail = ", ".join(f"SW_{m} {_fmt(t.acoc)}" for m, t in got.items())
    assert report("1", ok, f"{detail} (targets 2/4/6 +-0.05; {time.perf_counter() - start:.1f}s of 60s)")


def test_criterion_2_iteration_counts(report):
    start = time.perf_counter()
    F = sine_chain(15)
    limits = {1: 9, 2: 5, 3: 4}
    got = {m: solve(F, "1.3", m, tol="1e-100") for m in limits}
    ok = all(t.converged and t.iterations <= limits[m] for m, t in got.items())
    detail = ", ".join(f"SW_{m} {t.iterations} <= {limits[m]}" for m, t in got.items())
    assert report("2", ok, f"{detail} ({time.perf_counter() - start:.1f}s of 120s)")


MEMORY_TARGETS = [
    (Memory.DIVIDED_DIFFERENCE, 2, 2 + math.sqrt(6), 0.15),
    (Memory.KURCHATOV, 2, 2 + math.sqrt(8), 0.15),
    (Memory.DIVIDED_DIFFERENCE, 3, 3 + math.sqrt(13), 0.2),
    (Memory.KURCHATOV, 3, 3 + math.sqrt(17), 0.2),
]


def _memory_name(memory, m):
    return SolverConfig(m=m, memory=memory).name


def test_criterion_3_memory_orders(report, sine5):
    parts, ok = [], True
    for memory, m, target, band in MEMORY_TARGETS:
        t = sine5(memory, m)
        hit = t.converged and abs(float(t.acoc) - target) <= band
        ok &= hit
        parts.append(f"{_memory_name(memory, m)} {_fmt(t.acoc)} vs {target:.4f}+-{band}")
    assert report("3", ok, "; ".join(parts))


def test_criterion_4_memory_one_step(report, sine5):
    targets = {Memory.DIVIDED_DIFFERENCE: 2.41381, Memory.KURCHATOV: 2.72948}
    parts, ok = [], True
    for memory, target in targets.items():
        t = sine5(memory, 1)
        ok &= t.converged and abs(float(t.acoc) - target) <= 0.1
        parts.append(f"{_memory_name(memory, 1)} {_fmt(t.acoc)} vs {target}+-0.1")
    assert report("4", ok, "; ".join(parts))


def test_criterion_5_divided_differences(report):
    start = time.perf_counter()
    ctx = PrecisionContext(512)
    bound = ctx.mp.ldexp(ctx.mp.mpf(1), -256)
    rng = random.Random(2024)
    worst = ctx.mp.mpf(0)
    for seed in range(100):
        n = 1 + seed % 5
        F = random_smooth_system(n, 1000 + seed)
        x = ctx.vector([rng.uniform(-2, 2) for _ in range(n)])
        y = ctx.vector([rng.uniform(-2, 2) for _ in range(n)])
        rhs = F(x) - F(y)
        rel = (potra_dd(F, x, y) @ (x - y) - rhs).norm_inf() / max(1, rhs.norm_inf())
        worst = max(worst, rel)
    secant_ok = worst <= bound

    c256 = PrecisionContext(256)
    first = []
    for seed in (11, 12, 13):
        F = random_smooth_system(3, seed)
        x = c256.vector([rng.uniform(-1, 1) for _ in range(3)])
        u = c256.vector([rng.uniform(0.5, 1) for _ in range(3)])
        J = central_jacobian(F, x, c256.mp.mpf(10) ** -30)
        errs = [max(abs(v) for v in (potra_dd(F, x, x + u * h) - J).entries) for h in ("1e-3", "5e-4", "2.5e-4")]
        first += [float(a / b) for a, b in zip(errs, errs[1:])]
    second = []
    for src, x0 in (("x1^3 - 2*x1", "0.7"), ("sin(x1)*exp(x1)", "0.3")):
        F = parse_system(src, 1)
        x = c256.vector([x0])
        d = central_jacobian(F, x, c256.mp.mpf(10) ** -30)[0, 0]
        errs = [abs(kurchatov_dd(F, x, x - c256.vector([h]))[0, 0] - d) for h in ("1e-2", "5e-3", "2.5e-3")]
        second += [float(a / b) for a, b in zip(errs, errs[1:])]
    ratios_ok = all(1.7 <= r <= 2.3 for r in first) and all(3.4 <= r <= 4.6 for r in second)
    ok = secant_ok and ratios_ok
    detail = (f"secant worst 2^{float(c256.mp.log(worst, 2)) if worst else float('-inf'):.0f} <= 2^-256; "
              f"first-order ratios {min(first):.3f}..{max(first):.3f}; "
              f"Kurchatov ratios {min(second):.3f}..{max(second):.3f} ({time.perf_counter() - start:.1f}s of 30s)")
    assert report("5", ok, detail)


def _scan_best(n):
    best = 1
    for m in range(2, 2 * n + 3):
        if efficiency_index(m, n) > efficiency_index(best, n):
            best = m
    return best


def test_criterion_6_efficiency(report):
    start = time.perf_counter()
    tiny = PrecisionContext(256).mp.mpf(10) ** -30
    equal_ok = all(abs(efficiency_index(1, n) - efficiency_index(2, n)) <= tiny for n in range(2, 101))
    mismatches = [n for n in range(1, 201) if optimal_steps(n).m_best != _scan_best(n)]
    one = optimal_steps(1)
    ok = equal_ok and not mismatches and one.m_best == 1 and one.index_best == 2
    detail = (f"I1 == I2 for n=2..100: {equal_ok}; scan mismatches {mismatches or 'none'}; "
              f"n=1 index {one.index_best} ({time.perf_counter() - start:.1f}s of 10s)")
    assert report("6", ok, detail)


def test_criterion_7_basins(report):
    start = time.perf_counter()
    F = cubic_p1()
    ctx = PrecisionContext(64, Field.COMPLEX)
    roots = F.known_roots(ctx)
    spec = BasinSpec(palette=P1_PALETTE)
    xs, ys = spec.axes()
    z = xs[None, :] + 1j * ys[:, None]
    near = [np.abs(z - complex(r[0])) < 0.05 for r in roots]
    ok, parts = True, []
    for m in (1, 2, 3):
        conv = {}
        for weight in (paper_poly(), reciprocal()):
            img = render_plain(F, roots, spec, SolverConfig(m=m, weight=weight, precision=ctx), workers=8)
            shares = img.shares()
            ok &= all(mask.any() and (img.root_index[mask] == k).all() for k, mask in enumerate(near))
            ok &= all(shares[k] > 0 for k in range(len(roots)))
            conv[weight.label] = sum(shares[k] for k in range(len(roots)))
        ok &= conv["reciprocal"] >= conv["paper-poly"]
        parts.append(f"SW_{m} converged {conv['reciprocal']:.3f} (1/t) vs {conv['paper-poly']:.3f} (poly)")
    detail = "; ".join(parts) + f"; root neighbourhoods classified ({time.perf_counter() - start:.1f}s of 300s)"
    assert report("7", ok, detail)


def _digest(img, tmp_path):
    write_ppm(img, tmp_path / "img.ppm")
    write_csv(img, tmp_path / "img.csv")
    return hashlib.sha256((tmp_path / "img.ppm").read_bytes() + (tmp_path / "img.csv").read_bytes()).hexdigest()


def test_criterion_8_determinism(report, tmp_path):
    F = cubic_p1()
    ctx = PrecisionContext(64, Field.COMPLEX)
    roots = F.known_roots(ctx)
    cases = [
        ("plain SW_3", render_plain, BasinSpec(palette=P1_PALETTE), SolverConfig(m=3, precision=ctx)),
        ("memory SWK_1", render_memory, BasinSpec(width=200, height=200, mode=Mode.MEMORY),
         SolverConfig(m=1, memory=Memory.KURCHATOV, precision=ctx)),
    ]
    ok, parts = True, []
    for label, render, spec, cfg in cases:
        digests = {_digest(render(F, roots, spec, cfg, workers=w), tmp_path) for w in (1, 1, 8, 8)}
        ok &= len(digests) == 1
        parts.append(f"{label}: {len(digests)} distinct digest(s) over workers 1,1,8,8")
    assert report("8", ok, "; ".join(parts))


def _quadratic_acoc(delta):
    t = run(scalar_quadratic(), "1.3",
            SolverConfig(m=2, delta=delta, precision=PrecisionContext(4096), tol="1e-600"))
    return float(t.acoc) if t.converged and t.acoc is not None else float("nan")


@pytest.mark.xfail(strict=True, reason="as stated, delta = +1/F'(1) does not cancel the leading error term; "
                                       "the vanishing factor is (1 + delta F'(alpha)), checked separately below")
def test_criterion_9_error_structure(report):
    special, generic = _quadratic_acoc("0.5"), _quadratic_acoc("0.1")
    ok = special >= 4.5 and abs(generic - 4) <= 0.05
    assert report("9", ok, f"delta=0.5 ACOC {special:.4f} (needs >= 4.5); delta=0.1 ACOC {generic:.4f} (4+-0.05)")


def test_criterion_9_sign_corrected(report):
    special, generic = _quadratic_acoc("-0.5"), _quadratic_acoc("0.1")
    ok = special >= 4.5 and abs(generic - 4) <= 0.05
    assert report("9 (delta = -1/F')", ok,
                  f"delta=-0.5 ACOC {special:.4f} (>= 4.5); delta=0.1 ACOC {generic:.4f} (4+-0.05)")
