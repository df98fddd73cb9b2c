'''Torus geometry, heat kernels, and potential handling.'''

import numpy as np
import pytest

from loopgas.lattice import (
    HeatKernel, PotentialSpec, Torus, check_positive_type, heat_kernel_infinite,
    laplacian_matrix, periodize_potential)


def test_torus_indexing_roundtrip():
    for d, L in [(1, 3), (2, 4), (3, 2)]:
        torus = Torus(d, L)
        assert torus.n_sites == L ** d
        idx = torus.index_of(torus.coords)
        assert np.array_equal(idx, np.arange(torus.n_sites))


def test_torus_centered_and_min_norm():
    torus = Torus(1, 5)
    assert list(torus.centered(np.array([[0], [1], [2], [3], [4]])).ravel()) == \
        [0, 1, 2, -2, -1]
    assert torus.min_norm(np.array([4])) == 1.0


def test_neighbor_table_is_involutive():
    torus = Torus(2, 4)
    for i in range(torus.n_sites):
        for k in range(2 * torus.d):
            j = torus.neighbor_table[i, k]
            assert i in torus.neighbor_table[j]


def test_diff_table_definition():
    torus = Torus(2, 3)
    rng = np.random.default_rng(0)
    for _ in range(20):
        i, j = rng.integers(torus.n_sites, size=2)
        expected = torus.index_of(torus.coords[i] - torus.coords[j])
        assert torus.diff_table[i, j] == expected


def test_laplacian_rows_sum_to_zero():
    for d, L in [(1, 4), (2, 3), (1, 2), (1, 1)]:
        torus = Torus(d, L)
        mat = laplacian_matrix(torus)
        assert np.allclose(mat.sum(axis=1), 0.0, atol=1e-14)
        assert np.allclose(mat, mat.T)
    # L = 1: no off-site neighbors, Delta = 0
    assert np.allclose(laplacian_matrix(Torus(2, 1)), 0.0)


def test_heat_kernel_range_normalization_semigroup():
    for d, L in [(1, 3), (2, 5)]:
        torus = Torus(d, L)
        hk = HeatKernel(torus)
        for t in (0.1, 1.0, 3.0):
            tab = hk.table(t)
            assert np.all(tab >= -1e-14) and np.all(tab <= 1.0 + 1e-14)
            assert abs(tab.sum() - 1.0) < 1e-12
            # semigroup: psi^{t} * psi^{t} = psi^{2t}
            conv = hk.matrix(t) @ hk.table(t)
            assert np.max(np.abs(conv - hk.table(2 * t))) < 1e-10


def test_heat_kernel_matches_matrix_exponential():
    torus = Torus(1, 4)
    hk = HeatKernel(torus)
    t = 0.7
    import scipy.linalg
    E = scipy.linalg.expm(0.5 * t * laplacian_matrix(torus))
    assert np.max(np.abs(hk.matrix(t) - E)) < 1e-12


def test_infinite_kernel_bessel_vs_quadrature():
    for d, x in [(1, [0]), (1, [2]), (2, [1, 1])]:
        for t in (0.1, 1.0, 3.0):
            b = heat_kernel_infinite(d, t, x, method="bessel")
            q = heat_kernel_infinite(d, t, x, method="quadrature",
                                     tail_tol=1e-8)
            assert abs(b - q) < 1e-8


def test_periodization_identity():
    # psi^{L,t}(x) = sum_k psi^{inf,t}(x + Lk), truncated shifts
    for d, L in [(1, 3), (2, 5)]:
        torus = Torus(d, L)
        hk = HeatKernel(torus)
        for t in (0.1, 1.0, 3.0):
            tab = hk.table(t)
            import itertools
            for site in range(torus.n_sites):
                x = torus.coords[site]
                total = 0.0
                for shift in itertools.product(range(-5, 6), repeat=d):
                    total += heat_kernel_infinite(
                        d, t, x + L * np.array(shift), method="bessel")
                assert abs(tab[site] - total) < 1e-8


def test_potential_spec_symmetrized_and_validated():
    spec = PotentialSpec(d=1, R=0, entries={(1,): 0.25, (0,): 0.5})
    assert spec.entries[(-1,)] == 0.25
    assert spec.l1_norm == pytest.approx(1.0)
    with pytest.raises(ValueError):
        PotentialSpec(d=1, R=0, entries={(0,): -1.0})
    with pytest.raises(ValueError):
        PotentialSpec(d=1, R=1, entries={(0,): 0.5})
    with pytest.raises(ValueError):
        PotentialSpec(d=1, R=2, entries={})


def test_potential_from_json_roundtrip():
    doc = {"d": 2, "R": 1, "entries": [[[1, 0], 0.3], [[0, 1], 0.2]]}
    spec = PotentialSpec.from_json(doc)
    assert spec.entries[(-1, 0)] == 0.3
    with pytest.raises(ValueError):
        PotentialSpec.from_json({"d": 1, "R": 0,
                                 "entries": [[[0], 1.0], [[0], 2.0]]})


def test_periodize_potential_wraps_and_marks_core():
    spec = PotentialSpec(d=1, R=0, entries={(2,): 0.5})
    vL = periodize_potential(spec, 3)
    # sites 2 and -2 = 1 mod 3 both receive mass
    assert vL[1] == 0.5 and vL[2] == 0.5 and vL[0] == 0.0
    hard = PotentialSpec(d=1, R=1, entries={(1,): 0.1})
    vh = periodize_potential(hard, 3)
    assert np.isinf(vh[0]) and vh[1] == 0.1


def test_positive_type_check():
    torus = Torus(1, 5)
    good = np.zeros(5)
    good[0] = 1.0          # delta is of positive type
    ok, _ = check_positive_type(good, torus)
    assert ok
    bad = np.zeros(5)
    bad[1] = bad[4] = 1.0  # pure cosine takes negative Fourier values
    ok, mn = check_positive_type(bad, torus)
    assert not ok and mn < 0
