import random

import pytest
from hypothesis import given, strategies as st

from steffkit import numkernel as nk
from steffkit.divdiff import kurchatov_dd, potra_dd, steffensen_dd, steffensen_point
from steffkit.errors import CoincidentComponent, DimensionError
from steffkit.numkernel import PrecisionContext
from steffkit.problems import SystemDef, parse_system, scalar_quadratic

from oracles import central_jacobian, random_smooth_system

R256 = PrecisionContext(256)
R512 = PrecisionContext(512)


def counting(F):
    calls = []

    def func(xs, lib):
        calls.append(1)
        return F.func(xs, lib)

    return SystemDef(F.name, F.n, F.field, func, F.root_fn), calls


def mmax(M):
    return max(abs(v) for v in M.entries)


def test_componentwise_example():
    F = parse_system("x1^2\nx2^2", 2)
    A = potra_dd(F, R256.vector([1, 2]), R256.vector([0, 0]))
    assert A == R256.matrix([[1, 0], [0, 2]])


def test_scalar_difference_quotient():
    F = parse_system("x1^2", 1)
    assert potra_dd(F, R256.vector([3]), R256.vector([1]))[0, 0] == 4


@given(seed=st.integers(0, 10 ** 6), n=st.integers(1, 4))
def test_affine_maps_are_reproduced_exactly(seed, n):
    rng = random.Random(seed)
    A = [[rng.randint(-9, 9) for _ in range(n)] for _ in range(n)]
    b = [rng.randint(-9, 9) for _ in range(n)]
    src = "\n".join(" + ".join(f"({A[i][j]})*x{j + 1}" for j in range(n)) + f" + ({b[i]})" for i in range(n))
    F = parse_system(src, n)
    x = R256.vector([rng.uniform(-5, 5) for _ in range(n)])
    y = R256.vector([rng.uniform(-5, 5) for _ in range(n)])
    D = potra_dd(F, x, y)
    assert mmax(D - R256.matrix(A)) < R256.mp.mpf(10) ** -60


def test_steffensen_examples():
    F = scalar_quadratic()
    assert steffensen_dd(F, R256.vector([2]), 1)[0, 0] == 7
    assert abs(steffensen_dd(F, R256.vector([2]), "0.1")[0, 0] - R256.convert("4.3")) < R256.mp.mpf(10) ** -70
    with pytest.raises(CoincidentComponent):
        steffensen_dd(F, R256.vector([1]), "0.1")


def test_steffensen_matrix_parameter():
    F = parse_system("x1^2-1\nx2^2-1", 2)
    x = R256.vector([2, 3])
    beta = R256.diag(["0.1", "0.1"])
    assert steffensen_point(x, beta, F(x)) == steffensen_point(x, "0.1", F(x))


def test_kurchatov_examples():
    sq = parse_system("x1^2", 1)
    assert kurchatov_dd(sq, R256.vector([3]), R256.vector([1]))[0, 0] == 6
    assert kurchatov_dd(scalar_quadratic(), R256.vector([2]), R256.vector([3]))[0, 0] == 4
    with pytest.raises(CoincidentComponent):
        kurchatov_dd(sq, R256.vector([2]), R256.vector([2]))


def test_coincident_component_reports_index():
    F = parse_system("x1^2\nx2^2\nx1*x2", 3)
    with pytest.raises(CoincidentComponent) as info:
        potra_dd(F, R256.vector([1, 2, 3]), R256.vector([0, 2, 1]))
    assert info.value.index == 1


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        potra_dd(scalar_quadratic(), R256.vector([1, 2]), R256.vector([0, 0]))


def test_secant_identity_on_random_systems():
    rng = random.Random(0)
    bound = R512.mp.ldexp(R512.mp.mpf(1), -256)
    for seed in range(100):
        n = 1 + seed % 5
        F = random_smooth_system(n, seed)
        x = R512.vector([rng.uniform(-2, 2) for _ in range(n)])
        y = R512.vector([rng.uniform(-2, 2) for _ in range(n)])
        D = potra_dd(F, x, y)
        lhs = D @ (x - y)
        rhs = F(x) - F(y)
        scale = max(1, max(abs(v) for v in rhs))
        assert (lhs - rhs).norm_inf() <= bound * scale


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_first_order_consistency(seed):
    rng = random.Random(seed)
    F = random_smooth_system(3, seed)
    x = R256.vector([rng.uniform(-1, 1) for _ in range(3)])
    u = R256.vector([rng.uniform(0.5, 1) for _ in range(3)])
    J = central_jacobian(F, x, R256.mp.mpf(10) ** -30)
    errs = []
    for h in ("1e-3", "5e-4", "2.5e-4"):
        D = potra_dd(F, x, x + u * h)
        errs.append(mmax(D - J))
    for a, b in zip(errs, errs[1:]):
        assert 1.7 <= a / b <= 2.3


@pytest.mark.parametrize("src,x", [("x1^3 - 2*x1", "0.7"), ("sin(x1)*exp(x1)", "0.3"), ("ln(x1+3)", "1.2")])
def test_kurchatov_second_order_on_scalars(src, x):
    F = parse_system(src, 1)
    xv = R256.vector([x])
    deriv = central_jacobian(F, xv, R256.mp.mpf(10) ** -30)[0, 0]
    errs = []
    for h in ("1e-2", "5e-3", "2.5e-3"):
        errs.append(abs(kurchatov_dd(F, xv, xv - R256.vector([h]))[0, 0] - deriv))
    for a, b in zip(errs, errs[1:]):
        assert 3.4 <= a / b <= 4.6


@pytest.mark.parametrize("n", [1, 3, 6])
def test_evaluation_budget(n):
    F, calls = counting(random_smooth_system(n, 7))
    x = R256.full(n, "0.3")
    y = R256.full(n, "0.9")
    potra_dd(F, x, y)
    assert len(calls) * n <= n * n + n
    fy = F(y)
    calls.clear()
    potra_dd(F, x, y, fy=fy, fx=F(x))
    assert len(calls) == 1 + (n - 1)
