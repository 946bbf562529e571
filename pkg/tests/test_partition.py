import math

import numpy as np
import pytest

from partlearn.geometry import cross_section, distance_to_hull, face_map
from partlearn.geometry.polytope import all_faces
from partlearn.partition import (
    Oracle, QueryBudgetError, UEPP, alpha_critical, critical_coordinates, make_oracle,
    random_uepp, uepp_cells, uepp_label_set,
)


def three_cell_uepp():
    return UEPP(np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]), np.zeros(3))


# -- label sets ----------------------------------------------------------------

def test_label_set_strict_argmax():
    assert uepp_label_set(three_cell_uepp(), [0.8, 0.1]) == {1}


def test_label_set_tie_on_diagonal():
    assert uepp_label_set(three_cell_uepp(), [0.5, 0.5]) == {1, 2}


def test_label_set_duplicate_rows_everywhere():
    u = UEPP(np.array([[0.5, -0.2], [0.5, -0.2]]), np.array([0.1, 0.1]))
    rng = np.random.default_rng(0)
    for _ in range(50):
        y = rng.dirichlet(np.ones(3))[:2]
        assert uepp_label_set(u, y) == {1, 2}


def test_label_set_refuses_outside_points():
    with pytest.raises(ValueError):
        uepp_label_set(three_cell_uepp(), [0.9, 0.9])


# -- oracles --------------------------------------------------------------------

def test_lexicographic_tie_gives_smaller_label():
    o = make_oracle(three_cell_uepp(), kind="lexicographic")
    assert o([0.5, 0.5]) == 1


def test_maxindex_tie_gives_larger_label():
    o = make_oracle(three_cell_uepp(), kind="adversarial", policy="maxindex")
    assert o([0.5, 0.5]) == 2


def test_oracle_answers_are_sound():
    u = random_uepp(2, 4, seed=1)
    o = make_oracle(u, kind="adversarial", policy="seeded", seed=5)
    rng = np.random.default_rng(2)
    for _ in range(1000):
        y = rng.dirichlet(np.ones(3))[:2]
        assert o(y) in uepp_label_set(u, y)
    assert o.log.count == 1000


def test_oracle_budget_error_is_distinct():
    o = make_oracle(three_cell_uepp(), budget=1)
    o([0.2, 0.2])
    with pytest.raises(QueryBudgetError):
        o([0.2, 0.2])
    # geometric refusals stay ValueError
    o2 = make_oracle(three_cell_uepp())
    with pytest.raises(ValueError):
        o2([2.0, 2.0])


def test_oracle_clone_resets_log():
    o = make_oracle(three_cell_uepp(), kind="adversarial", seed=3)
    o([0.1, 0.1])
    c = o.clone()
    assert c.log.count == 0 and o.log.count == 1
    assert c.seed == o.seed and c.policy == o.policy


def test_oracle_transcript_jsonl():
    o = make_oracle(three_cell_uepp())
    o([0.2, 0.1])
    lines = o.log.to_json_lines().splitlines()
    assert len(lines) == 1 and '"label": 1' in lines[0]


def test_repeated_queries_consistent():
    o = make_oracle(three_cell_uepp(), kind="adversarial", policy="seeded", seed=9)
    answers = {o([0.5, 0.5]) for _ in range(10)}
    assert len(answers) == 1


# -- explicit cells ---------------------------------------------------------------

def test_uepp_cells_single_label_is_simplex():
    u = UEPP(np.array([[0.3, -0.1]]), np.array([0.0]))
    gt = uepp_cells(u)
    verts = {tuple(np.round(v, 9)) for v in gt.cells[0][1].vertices}
    assert verts == {(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)}


def test_uepp_cells_1d_crossing_point():
    # rows y and constant 0.4 cross at y = 0.4 (analytic oracle)
    u = UEPP(np.array([[1.0], [0.0]]), np.array([0.0, 0.4]))
    gt = uepp_cells(u)
    cells = dict(gt.cells)
    assert sorted(np.round(cells[1].vertices.ravel(), 9)) == [0.4, 1.0]
    assert sorted(np.round(cells[2].vertices.ravel(), 9)) == [0.0, 0.4]


@pytest.mark.parametrize("seed", range(3))
def test_uepp_cells_agree_with_label_set(seed):
    u = random_uepp(2, 4, seed=seed)
    gt = uepp_cells(u)
    rng = np.random.default_rng(seed + 10)
    pts = rng.dirichlet(np.ones(3), size=2000)[:, :2]
    hulls = {lbl: cell for lbl, cell in gt.cells if not cell.is_empty}
    for y in pts:
        labels = uepp_label_set(u, y)
        member = {lbl for lbl, cell in hulls.items()
                  if distance_to_hull(y, cell)[0] <= 1e-6}
        assert labels <= member
        assert member & labels
    assert gt.n == 4


def test_uepp_cells_cap():
    with pytest.raises(ValueError):
        uepp_cells(random_uepp(5, 2, seed=0))


# -- critical coordinates ----------------------------------------------------------

def test_critical_coordinates_single_cell():
    u = UEPP(np.array([[0.2, 0.1]]), np.array([0.0]))
    coords = critical_coordinates(u, alpha=0.05)
    assert coords[0] == pytest.approx(0.0, abs=1e-6)
    assert coords[-1] == pytest.approx(1.0, abs=1e-6)
    lr = alpha_critical(u, 1, 0.05)
    assert lr is not None and 0.0 <= lr[0] < lr[1] <= 1.0


@pytest.mark.parametrize("seed", range(10))
def test_critical_coordinate_cardinality(seed):
    n = 2 + seed % 3
    u = random_uepp(2, n, seed=seed)
    coords = critical_coordinates(u, alpha=0.02)
    assert len(coords) <= math.comb(n + 2, 2) + 2 * n


def test_cross_sections_nondegenerate_between_criticals():
    u = random_uepp(2, 3, seed=4)
    coords = critical_coordinates(u, alpha=0.02)
    gt = uepp_cells(u)
    for a, b in zip(coords[:-1], coords[1:]):
        x = 0.5 * (a + b)
        if x >= 1.0 - 1e-9:
            continue
        # pairwise relative interiors of section intervals overlap only if equal
        ivs = {}
        for lbl, cell in gt.cells:
            sec = cross_section(cell, x)
            if not sec.is_empty:
                ys = sec.vertices[:, 1]
                ivs[lbl] = (ys.min(), ys.max())
        for i in ivs:
            for j in ivs:
                if i >= j:
                    continue
                lo = max(ivs[i][0], ivs[j][0])
                hi = min(ivs[i][1], ivs[j][1])
                if hi - lo > 1e-6:   # interiors overlap
                    assert abs(ivs[i][0] - ivs[j][0]) <= 1e-6
                    assert abs(ivs[i][1] - ivs[j][1]) <= 1e-6


# -- generator ---------------------------------------------------------------------

def test_random_uepp_deterministic():
    a = random_uepp(3, 4, seed=11)
    b = random_uepp(3, 4, seed=11)
    assert np.array_equal(a.A, b.A) and np.array_equal(a.b, b.b)


def test_random_uepp_duplicate_rows():
    u = random_uepp(2, 4, seed=2, duplicate_rows=1)
    found = any(np.allclose(u.A[i], u.A[j]) and abs(u.b[i] - u.b[j]) < 1e-12
                for i in range(4) for j in range(i + 1, 4))
    assert found


def test_random_uepp_empty_cells():
    u = random_uepp(2, 4, seed=3, empty_cells=1)
    gt = uepp_cells(u)
    assert any(cell.is_empty for _, cell in gt.cells)


def test_random_uepp_covers_simplex():
    u = random_uepp(2, 3, seed=5)
    rng = np.random.default_rng(0)
    pts = rng.dirichlet(np.ones(3), size=10_000)[:, :2]
    for y in pts[:200]:
        assert uepp_label_set(u, y)
    # vectorized coverage of the rest
    vals = pts @ u.A.T + u.b
    assert np.all(np.isfinite(vals))


# -- structure invariants --------------------------------------------------------------

def test_cross_section_structure_is_uepp():
    u = random_uepp(3, 3, seed=6)
    rng = np.random.default_rng(1)
    for x in (0.15, 0.45, 0.8):
        sec = u.section(x)
        for _ in range(300):
            z = rng.dirichlet(np.ones(3))[:2] if u.m - 1 == 2 else rng.random(u.m - 1)
            y = np.concatenate([[x], (1 - x) * z])
            assert uepp_label_set(sec, z) == uepp_label_set(u, y)


def test_face_restriction_structure():
    u = random_uepp(3, 3, seed=7)
    rng = np.random.default_rng(2)
    for face in all_faces(3, 1):
        fmap = face_map(face)
        sub = u.restrict(fmap.inverse)
        for _ in range(100):
            z = rng.random(1)
            y = fmap.inverse(z)
            assert uepp_label_set(sub, z) == uepp_label_set(u, np.clip(y, 0, None))


def test_uepp_json_roundtrip():
    u = random_uepp(2, 3, seed=8)
    u2 = UEPP.from_json(u.to_json())
    assert np.array_equal(u.A, u2.A) and np.array_equal(u.b, u2.b)
