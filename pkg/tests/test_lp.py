import numpy as np
import pytest
from scipy.optimize import linprog

from partlearn.geometry.lp import LPInfeasible, LPUnbounded, l1_distance_to_hull, solve_lp


@pytest.mark.parametrize("seed", range(12))
def test_solve_lp_matches_scipy(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    rows = int(rng.integers(2, 7))
    A = rng.normal(size=(rows, n))
    b = rng.uniform(0.5, 2.0, size=rows)
    c = rng.normal(size=n)
    # box the variables so the instance is bounded
    box_a = np.vstack([np.eye(n), -np.eye(n)])
    box_b = np.full(2 * n, 5.0)
    ref = linprog(c, A_ub=np.vstack([A, box_a]), b_ub=np.concatenate([b, box_b]),
                  bounds=[(None, None)] * n, method="highs")
    val, x = solve_lp(c, A_ub=np.vstack([A, box_a]), b_ub=np.concatenate([b, box_b]))
    assert ref.status == 0
    assert val == pytest.approx(ref.fun, abs=1e-6)


def test_solve_lp_with_equalities():
    # min x + y  s.t. x + y = 1, x, y >= 0
    val, x = solve_lp(np.array([1.0, 1.0]),
                      A_ub=-np.eye(2), b_ub=np.zeros(2),
                      A_eq=np.array([[1.0, 1.0]]), b_eq=np.array([1.0]))
    assert val == pytest.approx(1.0, abs=1e-9)


def test_solve_lp_infeasible():
    with pytest.raises(LPInfeasible):
        solve_lp(np.array([1.0]), A_ub=np.array([[1.0], [-1.0]]), b_ub=np.array([-2.0, 1.0]))


def test_solve_lp_unbounded():
    with pytest.raises(LPUnbounded):
        solve_lp(np.array([-1.0]), A_ub=np.array([[-1.0]]), b_ub=np.array([0.0]))


@pytest.mark.parametrize("seed", range(6))
def test_l1_distance_matches_scipy(seed):
    rng = np.random.default_rng(seed)
    V = rng.random((5, 3))
    x = rng.random(3) * 1.5
    d, w = l1_distance_to_hull(x, V)
    # reference LP via scipy: min sum t, |x - V^T lam| <= t, lam on simplex
    v, m = V.shape
    c = np.concatenate([np.zeros(v), np.ones(m)])
    A_ub = np.zeros((2 * m, v + m))
    A_ub[:m, :v], A_ub[:m, v:] = V.T, -np.eye(m)
    A_ub[m:, :v], A_ub[m:, v:] = -V.T, -np.eye(m)
    b_ub = np.concatenate([x, -x])
    A_eq = np.zeros((1, v + m))
    A_eq[0, :v] = 1.0
    ref = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0], method="highs")
    assert d == pytest.approx(ref.fun, abs=1e-7)
    assert np.abs(x - w).sum() == pytest.approx(d, abs=1e-6)
