'''Infinite-mass classical quantities: occupation sums, closed forms,
cross-check particle sums, particle/loop dictionaries.'''

import math

import numpy as np
import pytest

from loopgas.largemass import (
    LmParams, gamma_lm, gamma_lm_matrix, gibbs_potential_lm, occupation_sum,
    particles_to_loops, weighted_particle_view, z_lm, z_lm_particle_sum)
from loopgas.lattice import PotentialSpec, Torus


def _hard(L=3, kappa0=1.0):
    return LmParams(torus=Torus(1, L), potential=PotentialSpec(1, 1, {}),
                    kappa0=kappa0)


def _soft(L=3, kappa0=2.0, v0=0.3):
    return LmParams(torus=Torus(1, L), potential=PotentialSpec(1, 0, {(0,): v0}),
                    kappa0=kappa0, k_max=5, n_max=5)


def test_hard_core_closed_forms():
    # pure hard core, no finite part: sites independent with occupation
    # in {0, 1}: unnormalized Z = (1 + a)^L, relative Z = ((1+a)(1-a))^L
    params = _hard()
    a = math.exp(-1.0)
    res = z_lm(params)
    assert res["unnormalized"] == pytest.approx((1 + a) ** 3, abs=1e-12)
    assert res["relative"] == pytest.approx((1 - a * a) ** 3, abs=1e-12)
    # Gamma_1(x, x) = a/(1 + a), off-diagonal exactly 0
    K = gamma_lm_matrix(params)
    for x in range(3):
        assert K[x, x] == pytest.approx(a / (1 + a), abs=1e-10)
    assert gamma_lm(params, 1, [0], [1]) == 0.0
    assert gibbs_potential_lm(params) == pytest.approx(
        math.log((1 - a * a) ** 3) / 3, abs=1e-12)


def test_soft_core_single_site_closed_form():
    # L = 1, v = v0 delta: Z_un = sum_q a^q e^{-v0 q^2 / 2}
    params = LmParams(torus=Torus(1, 1),
                      potential=PotentialSpec(1, 0, {(0,): 0.4}), kappa0=1.0)
    a = math.exp(-1.0)
    direct = sum(a ** q * math.exp(-0.2 * q * q) for q in range(200))
    res = z_lm(params)
    assert res["unnormalized"] == pytest.approx(direct, abs=1e-10)
    assert res["tail_bound"] < 1e-9


def test_occupation_vs_particle_sum_soft():
    params = _soft()
    occ = z_lm(params)
    part = z_lm_particle_sum(params)
    tol = part["k_tail"] + part["n_tail"] + occ["tail_bound"] + 1e-9
    assert abs(occ["unnormalized"] - part["unnormalized"]) < tol


def test_occupation_vs_particle_sum_hard():
    params = _hard()
    params.n_max = 3    # at most |Lambda| hard-core particles fit
    occ = z_lm(params)
    part = z_lm_particle_sum(params)
    assert occ["unnormalized"] == pytest.approx(part["unnormalized"],
                                                abs=1e-10)


def test_particle_sum_budget_guard():
    params = LmParams(torus=Torus(1, 3),
                      potential=PotentialSpec(1, 0, {(0,): 0.3}),
                      kappa0=1.0, k_max=60, n_max=20)
    with pytest.raises(ValueError):
        z_lm_particle_sum(params)


def test_gamma_lm_soft_direct_sum():
    # Gamma_1(x, x) = sum_k a^k Z(add k at x) / Z by definition
    params = _soft()
    denom, _ = occupation_sum(params)
    a = params.a
    direct = 0.0
    for k in range(1, params.k_max + 1):
        Q = np.zeros(3, dtype=np.int64)
        Q[0] = k
        num, _ = occupation_sum(params, Q_fixed=Q)
        direct += a ** k * num
    assert gamma_lm(params, 1, [0], [0]) == pytest.approx(direct / denom,
                                                          abs=1e-12)
    # no hopping at infinite mass
    assert gamma_lm(params, 1, [0], [2]) == 0.0


def test_gamma_lm_p2_permutation_structure():
    params = _hard()
    # y must be a permutation of x; both permutations of distinct sites
    val_id = gamma_lm(params, 2, [0, 1], [0, 1])
    val_swap = gamma_lm(params, 2, [0, 1], [1, 0])
    assert val_id == pytest.approx(val_swap)
    assert gamma_lm(params, 2, [0, 1], [0, 2]) == 0.0
    # hard core kills doubly-occupied requests
    assert gamma_lm(params, 2, [0, 0], [0, 0]) == 0.0


def test_weighted_particle_view_roundtrip():
    nu = 0.5
    particles = [(2, 0), (1, 2)]
    loops = particles_to_loops(particles, nu)
    assert [w.duration for w in loops] == [1.0, 0.5]
    assert weighted_particle_view(loops, nu) == particles
    from loopgas.paths import Path
    with pytest.raises(ValueError):
        weighted_particle_view([Path(0, 0.7)], nu)
    jumpy = Path(0, 1.0, np.array([0.3]), np.array([1]))
    with pytest.raises(ValueError):
        weighted_particle_view([jumpy], nu)


def test_params_validation():
    with pytest.raises(ValueError):
        LmParams(torus=Torus(1, 3), potential=PotentialSpec(1, 1, {}),
                 kappa0=0.0)
    with pytest.raises(ValueError):
        LmParams(torus=Torus(1, 3), potential=PotentialSpec(2, 0, {}),
                 kappa0=1.0)
