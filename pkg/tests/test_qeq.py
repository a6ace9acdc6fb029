import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from graphqeq.errors import InvalidArgument, OracleDomainError, SingularHardness
from graphqeq.qeq import QeqProblem, charging_energy, oracle_solve, solve, solve_segments, solve_vjp


def kkt_solve(e, s, Q):
    """Independent oracle: the dense Lagrange (KKT) system solved by LU."""
    n = len(e)
    K = np.zeros((n + 1, n + 1))
    K[:n, :n] = np.diag(s)
    K[:n, n] = -1.0
    K[n, :n] = 1.0
    rhs = np.concatenate([-np.asarray(e, float), [Q]])
    return np.linalg.solve(K, rhs)[:n]


def convex_problem(rng, n=None, Q=None):
    n = n or int(rng.integers(2, 40))
    Q = int(rng.integers(-3, 4)) if Q is None else Q
    return QeqProblem(rng.normal(0, 2, n), rng.uniform(0.5, 5, n), Q)


problems = st.integers(2, 30).flatmap(
    lambda n: st.tuples(
        arrays(np.float64, n, elements=st.floats(-10, 10)),
        arrays(np.float64, n, elements=st.floats(0.1, 10)),
        st.integers(-3, 3),
    )
)


def test_two_atom_example():
    p = QeqProblem([0.0, 1.0], [1.0, 1.0], 0)
    q = solve(p).charges
    assert np.allclose(q, [0.5, -0.5], atol=1e-12)
    assert np.allclose(q, kkt_solve(p.e, p.s, 0), atol=1e-12)
    assert charging_energy(p, q) == pytest.approx(-0.25, abs=1e-12)


def test_two_atom_cation():
    q = solve(QeqProblem([0.0, 0.0], [1.0, 3.0], 1)).charges
    assert np.allclose(q, [0.75, 0.25], atol=1e-12)


def test_single_atom_collapse():
    for Q in (-2, 0, 1):
        assert solve(QeqProblem([3.7], [0.0], Q)).charges.tolist() == [float(Q)]


@settings(max_examples=200, deadline=None)
@given(problems)
def test_conservation(data):
    e, s, Q = data
    q = solve(QeqProblem(e, s, Q)).charges
    assert abs(q.sum() - Q) <= 1e-9


@settings(max_examples=200, deadline=None)
@given(problems)
def test_matches_kkt_oracle(data):
    e, s, Q = data
    assert np.allclose(solve(QeqProblem(e, s, Q)).charges, kkt_solve(e, s, Q), atol=1e-8)


@settings(max_examples=100, deadline=None)
@given(problems, st.floats(-50, 50))
def test_translation_covariance(data, c):
    e, s, Q = data
    a = solve(QeqProblem(e, s, Q)).charges
    b = solve(QeqProblem(e + c, s, Q)).charges
    assert np.allclose(a, b, atol=1e-9)


@settings(max_examples=100, deadline=None)
@given(problems, st.integers(0, 2**32 - 1))
def test_optimal_on_constraint_plane(data, seed):
    e, s, Q = data
    p = QeqProblem(e, s, Q)
    q = solve(p).charges
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(50, len(e)))
    d -= d.mean(axis=1, keepdims=True)
    base = charging_energy(p, q)
    assert all(charging_energy(p, q + step) >= base - 1e-9 for step in 1e-3 * d)


@settings(max_examples=100, deadline=None)
@given(problems, st.integers(0, 2**32 - 1))
def test_permutation_equivariant(data, seed):
    e, s, Q = data
    order = np.random.default_rng(seed).permutation(len(e))
    a = solve(QeqProblem(e, s, Q)).charges
    b = solve(QeqProblem(e[order], s[order], Q)).charges
    assert np.allclose(b, a[order], atol=1e-12)


def test_oracle_agrees(rng):
    for _ in range(20):
        p = convex_problem(rng)
        assert np.abs(oracle_solve(p) - solve(p).charges).max() <= 1e-6


def test_oracle_tolerance_stable(rng):
    p = convex_problem(rng, n=12)
    a, b = oracle_solve(p, tol=1e-9), oracle_solve(p, tol=1e-12)
    assert np.abs(a - b).max() <= 1e-8


def test_oracle_domain():
    with pytest.raises(OracleDomainError):
        oracle_solve(QeqProblem([0.0, 1.0], [1.0, -1.0], 0))
    with pytest.raises(OracleDomainError):
        oracle_solve(QeqProblem([0.0, 1.0], [1.0, 0.0], 0))


def test_singular_hardness():
    with pytest.raises(SingularHardness) as info:
        solve(QeqProblem([0.0, 1.0, 2.0], [1.0, 1e-12, 1.0], 0))
    assert info.value.atom_index == 1
    with pytest.raises(SingularHardness):
        solve(QeqProblem([0.0, 1.0], [1.0, -1.0], 0))


def test_non_convex_still_solved():
    p = QeqProblem([0.0, 1.0, -1.0], [2.0, -1.0, 3.0], 1)
    q = solve(p).charges
    assert q.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(q, kkt_solve(p.e, p.s, 1))


def test_problem_validation():
    with pytest.raises(InvalidArgument):
        QeqProblem([0.0, 1.0], [1.0], 0)
    with pytest.raises(InvalidArgument):
        QeqProblem([np.nan, 1.0], [1.0, 1.0], 0)
    with pytest.raises(InvalidArgument):
        QeqProblem([], [], 0)


def test_segments_match_single(rng):
    parts = [convex_problem(rng) for _ in range(5)] + [QeqProblem([1.0], [2.0], -1)]
    e = np.concatenate([p.e for p in parts])
    s = np.concatenate([p.s for p in parts])
    bounds = np.cumsum([0] + [len(p) for p in parts])
    segments = list(zip(bounds[:-1], bounds[1:]))
    results = solve_segments(e, s, [p.net_charge for p in parts], segments)
    for p, r in zip(parts, results):
        assert np.array_equal(r.charges, solve(p).charges)


def test_segments_report_global_atom_index():
    with pytest.raises(SingularHardness) as info:
        solve_segments(np.zeros(5), np.array([1, 1, 1, 0, 1.0]), [0, 0], [(0, 2), (2, 5)])
    assert info.value.atom_index == 3


def test_vjp_matches_finite_differences(rng):
    p = convex_problem(rng, n=7, Q=1)
    g = rng.normal(size=7)
    q = solve(p).charges
    ge, gs = solve_vjp(p.e, p.s, q, g)
    h = 1e-6
    for i in range(7):
        for vec, grad in ((p.e, ge), (p.s, gs)):
            plus, minus = vec.copy(), vec.copy()
            plus[i] += h
            minus[i] -= h
            args_p = (plus, p.s) if vec is p.e else (p.e, plus)
            args_m = (minus, p.s) if vec is p.e else (p.e, minus)
            fp = g @ solve(QeqProblem(*args_p, 1)).charges
            fm = g @ solve(QeqProblem(*args_m, 1)).charges
            assert (fp - fm) / (2 * h) == pytest.approx(grad[i], rel=1e-5, abs=1e-8)
