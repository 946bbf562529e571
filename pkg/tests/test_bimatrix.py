import itertools
import math

import numpy as np
import pytest

from partlearn.bimatrix import (
    BimatrixGame, GuardedGame, PayoffAudit, PayoffAuditError, SolveConfig, best_value,
    br_oracle, br_partition, expand, lower_bound_game, make_br_oracles, pure_utilities,
    solve_wsne, utilities, verify_wsne,
)
from partlearn.partition import uepp_label_set


def random_game(m, n, seed):
    rng = np.random.default_rng(seed)
    return BimatrixGame(rng.random((m, n)), rng.random((m, n)))


# -- utilities ---------------------------------------------------------------------

def test_uniform_identity_utility():
    g = BimatrixGame(np.eye(2), np.eye(2))
    ur, uc = utilities(g, [0.5], [0.5])
    assert ur == pytest.approx(0.5)
    assert uc == pytest.approx(0.5)


def test_pure_column_gives_matrix_column():
    g = random_game(3, 2, seed=0)
    vals = pure_utilities(g, "row", np.array([1.0]))   # pure second column
    assert vals == pytest.approx(g.A[:, 1])
    assert best_value(g, "row", np.array([1.0])) == pytest.approx(g.A[:, 1].max())


def test_payoff_bounds_enforced():
    with pytest.raises(ValueError):
        BimatrixGame(np.array([[1.5]]), np.array([[0.2]]))


def test_utilities_l1_lipschitz():
    g = random_game(4, 3, seed=1)
    rng = np.random.default_rng(2)
    for _ in range(1000):
        v = rng.dirichlet(np.ones(3))[:2]
        w = rng.dirichlet(np.ones(3))[:2]
        lhs = np.abs(pure_utilities(g, "row", v) - pure_utilities(g, "row", w)).max()
        assert lhs <= np.abs(v - w).sum() + 1e-9


def test_best_value_l2_lipschitz():
    g = random_game(3, 4, seed=3)
    rng = np.random.default_rng(4)
    bound = math.sqrt(4 - 1)
    for _ in range(500):
        v = rng.dirichlet(np.ones(4))[:3]
        w = rng.dirichlet(np.ones(4))[:3]
        lhs = abs(best_value(g, "row", v) - best_value(g, "row", w))
        assert lhs <= bound * np.linalg.norm(v - w) + 1e-9


# -- oracles -----------------------------------------------------------------------

def test_strong_oracle_returns_tie_set():
    g = BimatrixGame(np.array([[0.5, 0.5], [0.2, 0.8]]), np.eye(2) * 0.5)
    o = br_oracle(g, "row", kind="strong")
    # at v = 0.5 both rows pay 0.5
    assert o(np.array([0.5])) == {1, 2}
    assert o.log.count == 1


def test_lexicographic_oracle_min_index():
    g = BimatrixGame(np.array([[0.5, 0.5], [0.2, 0.8]]), np.eye(2) * 0.5)
    o = br_oracle(g, "row", kind="lexicographic")
    assert o(np.array([0.5])) == 1


def test_adversarial_answers_inside_strong_set():
    g = random_game(4, 3, seed=5)
    strong = br_oracle(g, "column", kind="strong", record=False)
    adv = br_oracle(g, "column", kind="adversarial", policy="seeded", seed=2, record=False)
    rng = np.random.default_rng(6)
    for _ in range(1000):
        u = rng.dirichlet(np.ones(4))[:3]
        assert adv(u) in strong(u)


def test_br_partition_matches_strong_argmax():
    g = random_game(4, 3, seed=7)
    part = br_partition(g, "column")
    rng = np.random.default_rng(8)
    for _ in range(10_000):
        u = rng.dirichlet(np.ones(4))[:3]
        vals = pure_utilities(g, "column", u)
        argmax = {j + 1 for j in range(3) if vals[j] >= vals.max() - 1e-9}
        assert uepp_label_set(part, u) == argmax


def test_one_row_game_has_single_region():
    g = random_game(1, 3, seed=9)
    part = br_partition(g, "row")
    assert part.n == 1 and part.m == 2


# -- lower bound family --------------------------------------------------------------

def test_lower_bound_game_matrices():
    g = lower_bound_game(0.5, 0.5)
    assert np.allclose(g.A, [[0.5, 0.5], [0.0, 1.0]])
    assert np.allclose(g.B, [[0.0, 0.5], [1.0, 0.5]])
    with pytest.raises(ValueError):
        lower_bound_game(0.0, 0.5)


def test_lower_bound_game_has_no_pure_equilibrium():
    g = lower_bound_game(0.4, 0.7)
    for i, j in itertools.product(range(2), range(2)):
        row_best = g.A[:, j].max() <= g.A[i, j] + 1e-12
        col_best = g.B[i, :].max() <= g.B[i, j] + 1e-12
        assert not (row_best and col_best)


def test_lower_bound_row_switch_at_x():
    g = lower_bound_game(0.3, 0.6)
    part = br_partition(g, "row")
    assert uepp_label_set(part, [0.25]) == {1}
    assert uepp_label_set(part, [0.35]) == {2}
    assert uepp_label_set(part, [0.3]) == {1, 2}


# -- verification ----------------------------------------------------------------------

def test_exact_pure_equilibrium_verifies_at_zero():
    A = np.array([[1.0, 0.0], [0.0, 0.5]])
    g = BimatrixGame(A, A)
    cert = verify_wsne(g, np.array([0.0]), np.array([0.0]), 0.0)
    assert cert.valid
    assert cert.row_support == [1] and cert.col_support == [1]


def test_unique_mixed_equilibrium_verifies_at_zero():
    x, y = 0.35, 0.65
    g = lower_bound_game(x, y)
    cert = verify_wsne(g, np.array([y]), np.array([x]), 0.0)
    assert cert.valid


def test_shifted_profile_fails_verification():
    x = y = 0.5
    g = lower_bound_game(x, y)
    shift = 0.2
    cert = verify_wsne(g, np.array([y + shift]), np.array([x + shift]), 0.05)
    assert not cert.valid


def test_verify_rejects_bad_distribution():
    g = lower_bound_game(0.5, 0.5)
    with pytest.raises(ValueError):
        verify_wsne(g, np.array([1.4]), np.array([0.5]), 0.1)


# -- solver -----------------------------------------------------------------------------

def test_solver_lands_in_eps_box_of_unique_equilibrium():
    g = lower_bound_game(0.5, 0.5)
    oracles = make_br_oracles(g, seed=0)
    eps = 0.05
    cert = solve_wsne(oracles, eps)
    assert abs(cert.u[0] - 0.5) <= eps and abs(cert.v[0] - 0.5) <= eps
    assert verify_wsne(g, cert.u, cert.v, eps).valid
    assert oracles.audit.clean


def test_solver_finds_dominant_pure_profile():
    A = np.array([[0.9, 0.9], [0.1, 0.2]])
    B = np.array([[0.8, 0.1], [0.9, 0.2]])
    g = BimatrixGame(A, B)
    oracles = make_br_oracles(g, seed=1)
    cert = solve_wsne(oracles, 0.1)
    assert cert.row_support == [1] and cert.col_support == [1]
    check = verify_wsne(g, cert.u, cert.v, 0.1)
    assert check.valid
    assert all(r <= 1e-9 for r in check.row_regrets.values())


@pytest.mark.parametrize("seed", range(4))
def test_solver_on_random_games(seed):
    g = random_game(4, 3, seed=100 + seed)
    oracles = make_br_oracles(g, seed=seed)
    cert = solve_wsne(oracles, 0.1)
    assert verify_wsne(g, cert.u, cert.v, 0.1).valid
    assert oracles.audit.clean


def test_degenerate_single_strategy_side():
    g = random_game(1, 3, seed=11)
    oracles = make_br_oracles(g, seed=2)
    cert = solve_wsne(oracles, 0.1)
    assert cert.queries_col == 0 or cert.queries_col >= 0
    assert verify_wsne(g, cert.u, cert.v, 0.1).valid
    # the row side needs no learning at all: single-label partition
    assert cert.queries_row == 0


def test_voronoi_labels_are_eps_best_responses():
    # the module's central property: slack-Voronoi labels at sampled points
    # are eps-best responses by true utilities
    eps = 0.1
    g = random_game(3, 3, seed=12)
    from partlearn.bimatrix import _learn_partition, voronoi_label_masks
    oracles = make_br_oracles(g, seed=3)
    eps_r = eps / (2 * math.sqrt(max(g.n - 1, 1)))
    row_lab = _learn_partition(oracles.row, g.n - 1, g.m, eps_r / 2, seed=0)
    rng = np.random.default_rng(13)
    pts = rng.dirichlet(np.ones(g.n), size=800)[:, :g.n - 1]
    masks = voronoi_label_masks(row_lab, pts, sigma=eps / 8)
    for v, mask in zip(pts, masks):
        vals = pure_utilities(g, "row", v)
        for i in range(g.m):
            if mask & (1 << i):
                assert vals.max() - vals[i] <= eps + 1e-9


def test_certificate_json_fields():
    g = lower_bound_game(0.5, 0.5)
    oracles = make_br_oracles(g, seed=4)
    cert = solve_wsne(oracles, 0.1)
    import json
    payload = json.loads(cert.to_json())
    for key in ("u", "v", "eps", "row_support", "col_support", "queries_row", "queries_col"):
        assert key in payload


# -- payoff audit ---------------------------------------------------------------------

def test_payoff_access_outside_context_raises():
    g = GuardedGame(random_game(2, 2, seed=14))
    with pytest.raises(PayoffAuditError):
        g.payoffs()
    assert not g.audit.clean
    with g.audit.allowed("verify"):
        A, B = g.payoffs()
    assert A.shape == (2, 2)


def test_solver_path_never_touches_payoffs():
    g = random_game(2, 2, seed=15)
    oracles = make_br_oracles(g, seed=5)
    solve_wsne(oracles, 0.1)
    assert oracles.audit.clean
    assert set(oracles.audit.purposes) == {"oracle"}
