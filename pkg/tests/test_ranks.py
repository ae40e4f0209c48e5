import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy import integrate, stats
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from _naive import adjacency_sets, brute_assignment_cost, naive_eta
from kmac.errors import InvalidConfigError
from kmac.estimators import s2_standard
from kmac.geograph import GraphSpec, build_knn, graph_stats
from kmac.kernels import KernelSpec, kernel_eval
from kmac.ranks import (
    brute_force_assignment,
    chatterjee_xi,
    empirical_ranks,
    eta_hat_rank,
    halton,
    hungarian,
    lattice1d,
    make_grid,
    rank_clt_scaling,
    solve_assignment,
    uniform_moments,
)


def test_halton_hand_values():
    assert_allclose(halton(4, 1).points[:, 0], [1 / 2, 1 / 4, 3 / 4, 1 / 8], rtol=1e-15)
    assert_allclose(halton(2, 2).points, [[1 / 2, 1 / 3], [1 / 4, 2 / 3]], rtol=1e-15)


def test_halton_strictly_inside_unit_cube():
    pts = halton(5000, 7).points
    assert pts.shape == (5000, 7)
    assert np.all(pts > 0) and np.all(pts < 1)


def test_halton_limits():
    assert halton(3, 25).d == 25
    with pytest.raises(InvalidConfigError):
        halton(3, 26)
    with pytest.raises(InvalidConfigError):
        halton(0, 2)


def test_grid_specs():
    assert make_grid("halton", 5, 2).source == "halton"
    assert_allclose(make_grid("lattice1d", 4, 1).points[:, 0], [0.25, 0.5, 0.75, 1.0])
    u1, u2 = make_grid("uniform:seed=7", 10, 3), make_grid("uniform:seed=7", 10, 3)
    assert_array_equal(u1.points, u2.points)
    assert np.all((u1.points >= 0) & (u1.points <= 1))
    assert make_grid(None, 5, 1).source == "lattice1d"
    assert make_grid(None, 5, 3).source == "halton"
    for bad in ("sobol", "uniform", "uniform:rate=3"):
        with pytest.raises(InvalidConfigError):
            make_grid(bad, 5, 2)
    with pytest.raises(InvalidConfigError):
        make_grid("lattice1d", 5, 2)


def test_one_dimensional_ranks_by_sorting():
    x = np.array([[0.9], [0.1], [0.5]])
    assert_allclose(empirical_ranks(x, lattice1d(3))[:, 0], [1, 1 / 3, 2 / 3])


def test_grid_points_give_identity():
    grid = halton(12, 2)
    res = solve_assignment(grid.points.copy(), grid)
    assert_array_equal(res.perm, np.arange(12))
    assert res.cost == 0.0


@pytest.mark.parametrize("method", ["scipy", "hungarian"])
def test_assignment_vs_brute_force(method):
    rng = np.random.default_rng(0)
    for trial in range(50):
        n = 1 + trial % 8
        x = rng.normal(size=(n, 2))
        grid = halton(n, 2)
        res = solve_assignment(x, grid, method=method)
        cost = cdist(x, grid.points, "sqeuclidean")
        assert sorted(res.perm.tolist()) == list(range(n))
        assert res.cost == pytest.approx(brute_assignment_cost(cost), rel=1e-12, abs=1e-14)
        assert res.cost <= np.sum((x - grid.points) ** 2) + 1e-12
        assert res.cost == pytest.approx(np.sum((x - grid.points[res.perm]) ** 2), abs=1e-9)


def test_brute_force_helper():
    cost = np.array([[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]])
    perm, best = brute_force_assignment(cost)
    assert best == 5.0
    assert perm == (1, 0, 2)


def test_hungarian_vs_scipy_on_larger_instances():
    rng = np.random.default_rng(1)
    for n in (20, 57, 120):
        cost = rng.random((n, n))
        rows, cols = linear_sum_assignment(cost)
        ours = hungarian(cost)
        assert cost[np.arange(n), ours].sum() == pytest.approx(cost[rows, cols].sum(), rel=1e-12)


def test_d1_sort_matches_general_solver():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(40, 1))
    grid = lattice1d(40)
    a = solve_assignment(x, grid, method="sort")
    b = solve_assignment(x, grid, method="scipy")
    assert a.cost == pytest.approx(b.cost, rel=1e-12)
    assert_allclose(empirical_ranks(x)[:, 0], stats.rankdata(x[:, 0]) / 40)


def test_assignment_errors():
    x = np.random.default_rng(3).normal(size=(5, 2))
    with pytest.raises(InvalidConfigError):
        solve_assignment(x, halton(4, 2))
    with pytest.raises(InvalidConfigError):
        solve_assignment(x, halton(5, 3))
    bad = x.copy()
    bad[0, 0] = np.nan
    with pytest.raises(InvalidConfigError):
        solve_assignment(bad, halton(5, 2))
    with pytest.raises(InvalidConfigError):
        solve_assignment(x, halton(5, 2), method="auction")
    with pytest.raises(InvalidConfigError):
        solve_assignment(np.zeros((8001, 2)), halton(8001, 2))


def test_rank_multiset_equals_grid():
    rng = np.random.default_rng(4)
    x = rng.standard_cauchy(size=(150, 3))
    grid = halton(150, 3)
    r = empirical_ranks(x, grid)
    key = lambda a: a[np.lexsort(a.T[::-1])]  # noqa: E731
    assert_array_equal(key(r), key(grid.points))


def test_eta_hat_rank_matches_naive_n5():
    x = np.array([[0.3, 1.0], [2.0, -1.0], [0.0, 0.0], [1.5, 1.5], [-0.7, 0.2]])
    y = np.array([[1.0], [0.2], [-0.3], [2.2], [0.9]])
    k = KernelSpec("mincdf")
    gx, gy = halton(5, 2), lattice1d(5)
    est = eta_hat_rank(x, y, k, GraphSpec("knn", k=1), gx, gy)
    rx = gx.points[solve_assignment(x, gx).perm]
    ry = gy.points[solve_assignment(y, gy).perm]
    g = build_knn(rx, 1)
    value, _, _ = naive_eta(lambda a, b: kernel_eval(k, a, b), ry, adjacency_sets(g))
    assert est.kind == "rank"
    assert_allclose(est.value, value, rtol=1e-12)


def test_eta_hat_rank_noiseless_near_one():
    x = np.random.default_rng(5).random((5000, 1))
    est = eta_hat_rank(x, x, KernelSpec("mincdf"), GraphSpec("knn", k=1))
    assert est.value >= 0.95


def test_rank_estimator_invariant_to_monotone_marginal_maps():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(300, 1))
    y = x**3 + rng.normal(size=(300, 1))
    k, spec = KernelSpec("mincdf"), GraphSpec("knn", k=1)
    a = eta_hat_rank(x, y, k, spec).value
    b = eta_hat_rank(np.exp(x), np.arctan(y), k, spec).value
    assert a == b


def test_mincdf_uniform_moments():
    assert uniform_moments(KernelSpec("mincdf"), 1) == (1 / 6, 2 / 15, 1 / 9)
    a = integrate.dblquad(lambda v, u: min(u, v) ** 2, 0, 1, 0, 1)[0]
    b = integrate.quad(lambda u: (u - u * u / 2) ** 2, 0, 1)[0]
    m = integrate.dblquad(lambda v, u: min(u, v), 0, 1, 0, 1)[0]
    assert_allclose((a, b, m * m), (1 / 6, 2 / 15, 1 / 9), rtol=1e-7)


def test_mincdf_moments_vs_qmc():
    # the QMC route must reproduce the closed forms when evaluated directly
    h = halton(200_000, 3).points
    k12 = np.minimum(h[:, 0], h[:, 1])
    k13 = np.minimum(h[:, 0], h[:, 2])
    assert_allclose((np.mean(k12**2), np.mean(k12 * k13), np.mean(k12) ** 2), (1 / 6, 2 / 15, 1 / 9), atol=2e-4)


def test_gaussian_qmc_node_convergence():
    k = KernelSpec("gaussian")
    a = uniform_moments(k, 1, 100_000)
    b = uniform_moments(k, 1, 1_000_000)
    assert_allclose(a, b, atol=1e-4)


def test_rank_scaling_assembly_and_guard():
    x = np.random.default_rng(7).random((50, 1))
    g = build_knn(x, 1)
    sc = rank_clt_scaling(KernelSpec("mincdf"), 1, g)
    g1, g2, g3 = graph_stats(g)
    assert sc.s2 == s2_standard(1 / 6, 2 / 15, 1 / 9, g1, g2, g3, 50)
    with pytest.raises(InvalidConfigError):
        rank_clt_scaling(KernelSpec("gaussian"), 1, g, mc_nodes=5000)
    assert rank_clt_scaling(KernelSpec("gaussian"), 1, g, mc_nodes=5000, allow_small=True).s2 > 0


def test_chatterjee_xi_examples():
    x = np.arange(4.0)
    assert chatterjee_xi(x, x) == pytest.approx(0.4)
    assert chatterjee_xi(x, -x) == pytest.approx(0.4)
    rng = np.random.default_rng(8)
    assert abs(chatterjee_xi(rng.random(5000), rng.random(5000))) < 0.05
    with pytest.raises(InvalidConfigError):
        chatterjee_xi([1.0], [2.0])


def test_rank_and_xi_agree_on_sinusoid():
    rng = np.random.default_rng(9)
    x = rng.uniform(-1, 1, (5000, 1))
    y = np.cos(8 * np.pi * x) + 0.5 * rng.normal(size=(5000, 1))
    est = eta_hat_rank(x, y, KernelSpec("mincdf"), GraphSpec("knn", k=1), lattice1d(5000), lattice1d(5000))
    assert abs(est.value - chatterjee_xi(x, y)) <= 0.05
