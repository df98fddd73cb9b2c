'''Cluster-expansion combinatorics and the truncated series engine.'''

import itertools
import math

import numpy as np
import pytest

from loopgas.cluster import (
    Graph, connected_graphs, descendants_identity_check,
    grid_exponential_moment, kruskal, kruskal_preimage_bracket,
    lexicographic_order, log_Z_via_expansion, riemann_sum_bound_check,
    tree_bound_check, tree_count, tree_sum, trees, trees_with_degrees,
    ursell, _partitions)


# -- enumeration --------------------------------------------------------------

def test_connected_graph_counts():
    # OEIS A001187: 1, 1, 4, 38, 728
    for n, count in [(1, 1), (2, 1), (3, 4), (4, 38), (5, 728)]:
        assert sum(1 for _ in connected_graphs(n)) == count


def test_tree_counts_cayley():
    for n in range(1, 8):
        ts = list(trees(n))
        assert len(ts) == (1 if n == 1 else n ** (n - 2))
        assert len({t.edges for t in ts}) == len(ts)
        assert all(t.is_tree() for t in ts)


def test_tree_count_formula_vs_enumeration():
    for n in range(2, 8):
        seen = {}
        for t in trees(n):
            seen[t.degree_sequence()] = seen.get(t.degree_sequence(), 0) + 1
        for deltas, count in seen.items():
            assert tree_count(deltas) == count
            assert sum(1 for _ in trees_with_degrees(deltas)) == count
    assert tree_count((0,)) == 1
    assert tree_count((1, 2)) == 0      # wrong edge total
    assert tree_count((0, 1, 1)) == 0   # disconnected


def test_descendants_identity():
    for n in range(1, 6):
        assert descendants_identity_check(n)


# -- kruskal ------------------------------------------------------------------

def test_kruskal_returns_spanning_tree():
    for g in connected_graphs(4):
        t = kruskal(g)
        assert t.is_tree()
        assert t.edges <= g.edges


def test_kruskal_fixed_point_on_trees():
    for t in trees(5):
        assert kruskal(t).edges == t.edges


def test_kruskal_bracket_small():
    orders = [lexicographic_order,
              lambda e: (e[1], e[0]),
              lambda e: (-e[0], -e[1])]
    for n in (2, 3, 4):
        for t in trees(n):
            for order in orders:
                m, ok = kruskal_preimage_bracket(t, order)
                assert ok
                assert t.edges <= m.edges


def test_graph_validation():
    with pytest.raises(ValueError):
        Graph(3, frozenset({(2, 1)}))
    with pytest.raises(ValueError):
        kruskal(Graph(3, frozenset({(0, 1)})))


# -- ursell and tree bound ----------------------------------------------------

def _random_zeta(n, rng):
    z = -rng.random((n, n))
    z = np.tril(z, -1)
    z = z + z.T
    return z


def test_ursell_small_closed_forms():
    z = _random_zeta(3, np.random.default_rng(0))
    assert ursell(z[:1, :1]) == 1.0
    assert ursell(z[:2, :2]) == pytest.approx(z[0, 1] / 2.0)
    expected3 = (z[0, 1] * z[0, 2] + z[0, 1] * z[1, 2] + z[0, 2] * z[1, 2]
                 + z[0, 1] * z[0, 2] * z[1, 2]) / 6.0
    assert ursell(z) == pytest.approx(expected3)


def test_ursell_partition_identity():
    # prod_{i<j} (1 + zeta_ij) = sum over partitions prod_B |B|! phi_B
    rng = np.random.default_rng(1)
    for n in (2, 3, 4, 5):
        z = _random_zeta(n, rng)
        lhs = math.prod(1.0 + z[i, j] for i, j in
                        itertools.combinations(range(n), 2))
        rhs = 0.0
        for part in _partitions(range(n)):
            rhs += math.prod(
                math.factorial(len(b)) * ursell(z[np.ix_(b, b)])
                for b in part)
        assert lhs == pytest.approx(rhs, abs=1e-12)


def test_tree_bound_and_resummation_random_instances():
    rng = np.random.default_rng(2)
    for _ in range(500):
        n = int(rng.integers(2, 6))
        V = rng.random((n, n)) * 3.0
        V = np.triu(V, 1)
        V = V + V.T
        z = np.exp(-0.5 * V) - 1.0
        np.fill_diagonal(z, 0.0)
        report = tree_bound_check(z, V_matrix=V)
        assert report["bound_ok"]
        assert report["resummation_ok"], report["resummation_gap"]


def test_tree_bound_rejects_positive_zeta():
    z = np.array([[0.0, 0.5], [0.5, 0.0]])
    with pytest.raises(ValueError):
        tree_bound_check(z)


def test_tree_sum_two_and_three():
    z = _random_zeta(3, np.random.default_rng(3))
    assert tree_sum(z[:2, :2]) == pytest.approx(abs(z[0, 1]) / 2.0)
    expected = (abs(z[0, 1] * z[0, 2]) + abs(z[0, 1] * z[1, 2])
                + abs(z[0, 2] * z[1, 2])) / 6.0
    assert tree_sum(z) == pytest.approx(expected)


# -- bounds -------------------------------------------------------------------

def test_grid_exponential_moment_closed_forms():
    kappa, nu = 1.5, 0.5
    a = math.exp(-kappa * nu)
    # q = 0: nu a/(1-a); q = 1: nu^2 a/(1-a)^2
    assert grid_exponential_moment(kappa, nu, 0) == pytest.approx(
        nu * a / (1 - a), rel=1e-12)
    assert grid_exponential_moment(kappa, nu, 1) == pytest.approx(
        nu ** 2 * a / (1 - a) ** 2, rel=1e-12)


def test_riemann_sum_bound():
    report = riemann_sum_bound_check([0.5, 1.0, 2.0], [0.25, 0.5, 1.0],
                                     [0, 1, 2, 3, 4])
    assert report["C"] < 1.5
    assert all(row["ratio"] <= report["C"] + 1e-15 for row in report["rows"])


# -- series engine ------------------------------------------------------------

def _expansion_spec():
    from loopgas.interactions import InteractionParams
    from loopgas.lattice import PotentialSpec, Torus, periodize_potential
    from loopgas.loop_mc import EnsembleSpec
    from loopgas.paths import LoopIntensity
    torus = Torus(1, 3)
    vL = periodize_potential(PotentialSpec(1, 0, {(0,): 0.05}), 3)
    nu = 0.5
    params = InteractionParams(torus=torus, vL=vL, nu=nu, mode="meanfield",
                               kappa=1.5)
    intensity = LoopIntensity(torus, "ginibre", kappa=1.5, nu=nu)
    return EnsembleSpec(torus, params, intensity, "ginibre")


def test_log_z_expansion_leading_order():
    # zero interaction: X = X0 = loop mass exactly, log Z = 0
    from loopgas.interactions import InteractionParams
    from loopgas.loop_mc import EnsembleSpec
    spec = _expansion_spec()
    free_params = InteractionParams(
        torus=spec.torus, vL=0.0 * spec.params.vL, nu=spec.params.nu,
        lam=0.0, mode="generic", kappa=1.5)
    free = EnsembleSpec(spec.torus, free_params, spec.intensity, "ginibre")
    report = log_Z_via_expansion(free, n_max=2, n_samples=400, seed=1)
    assert report["means"][0] == pytest.approx(spec.intensity.total_mass)
    assert abs(report["means"][1]) <= 3.0 * report["std_errors"][1] + 1e-12
    assert abs(report["log_Z"]) <= 3.0 * report["log_Z_se"] + 1e-12


def test_log_z_expansion_vs_oracle():
    from loopgas.quantum_oracle import grand_partition
    spec = _expansion_spec()
    oracle = math.log(grand_partition(spec.params).Z_rel)
    report = log_Z_via_expansion(spec, n_max=3, n_samples=4000, seed=5,
                                 workers=2)
    slack = 3.0 * report["log_Z_se"] + abs(report["remainder"])
    assert abs(report["log_Z"] - oracle) <= slack
    assert all(e > 100 for e in report["ess"])


def test_expansion_budget_guards():
    from loopgas.cluster import estimate_X
    spec = _expansion_spec()
    with pytest.raises(ValueError):
        estimate_X(spec, [], n_max=5, n_samples=10, seed=0)
    with pytest.raises(ValueError):
        ursell(np.zeros((7, 7)))
