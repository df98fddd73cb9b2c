'''Infinite-mass classical quantities by truncated absolutely-convergent
sums: the relative partition function, the (diagonal-up-to-permutation)
correlation kernels, and the Gibbs potential, for soft (R=0) and
hard-core (R=1) interactions.

The particle sum over (n, occupation numbers k, sites x) collapses to a
sum over site-occupation fields q: [z^m] exp(sum_k e^{-kappa0 k} z^k / k)
= [z^m] (1 - e^{-kappa0} z)^{-1} = e^{-kappa0 m}, so the unnormalized
partition sum equals sum_q prod_x e^{-kappa0 q_x} e^{-E(q)} with
E(q) = (1/2) q^T V q (R=0) or the off-diagonal half sum over occupied
sites with q <= 1 (R=1).  A direct truncated particle sum is kept as an
independent cross-check oracle.
'''

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .interactions import v_lm, v_tilde_table
from .lattice import periodize_potential
from .paths import Path


@dataclass
class LmParams:
    '''Truncated-sum parameters for the infinite-mass quantities.'''
    torus: object
    potential: object        # PotentialSpec
    kappa0: float
    k_max: int = 60
    n_max: int = 20
    tol: float = 1e-10
    vL: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.kappa0 <= 0:
            raise ValueError("kappa0 must be > 0 (need e^{-kappa0} < 1)")
        if self.potential.d != self.torus.d:
            raise ValueError("potential dimension mismatch")
        self.vL = periodize_potential(self.potential, self.torus.L)

    @property
    def R(self):
        return self.potential.R

    @property
    def a(self):
        return math.exp(-self.kappa0)


def _site_cap(params):
    '''Per-site occupation cap with geometric tail below tol (1 for R=1).'''
    if params.R == 1:
        return 1, 0.0
    a, n = params.a, params.torus.n_sites
    cap = 1
    while True:
        # dropped occupation fields, bounded with e^{-E} <= 1
        tail = (1.0 / (1.0 - a)) ** n - ((1.0 - a ** (cap + 1)) / (1.0 - a)) ** n
        if tail < params.tol:
            return cap, tail
        cap += 1
        if cap > 100000:
            raise ArithmeticError("occupation cap not reached within budget")


def _energy_table(params):
    '''Interaction matrix for occupation fields: full table for R=0,
    off-core (diagonal-free) table for R=1.'''
    if params.R == 1:
        vt = v_tilde_table(params.vL, params.torus, params.R)
        mat = vt[params.torus.diff_table]
        np.fill_diagonal(mat, 0.0)
        return mat
    return params.vL[params.torus.diff_table]


def occupation_sum(params, Q_fixed=None):
    '''Unnormalized partition sum over occupation fields on top of an
    optional fixed field Q (the Z^lm(k, x) numerator); returns
    (value, tail bound).'''
    n = params.torus.n_sites
    Q = np.zeros(n, dtype=np.int64) if Q_fixed is None else np.asarray(
        Q_fixed, dtype=np.int64)
    cap, tail = _site_cap(params)
    if params.R == 1 and np.any(Q > 1):
        return 0.0, 0.0
    vmat = _energy_table(params)
    grid = np.array(list(itertools.product(range(cap + 1), repeat=n)),
                    dtype=np.int64)
    if params.R == 1:
        grid = grid[np.all(grid + Q <= 1, axis=1)]
    t = grid + Q
    energy = 0.5 * np.einsum("qs,st,qt->q", t, vmat, t)
    with np.errstate(over="ignore"):
        weights = params.a ** grid.sum(axis=1) * np.exp(-energy)
    return float(np.sum(weights)), tail


def _normalizer_log(params):
    '''log of exp(|Lambda| sum_k e^{-kappa0 k}/k) = -|Lambda| log(1 - a).'''
    return -params.torus.n_sites * math.log(1.0 - params.a)


def z_lm(params):
    '''Relative and unnormalized infinite-mass partition function, with
    the recorded truncation tail.'''
    num, tail = occupation_sum(params)
    log_norm = _normalizer_log(params)
    return {"relative": num * math.exp(-log_norm), "unnormalized": num,
            "log_normalizer": log_norm, "tail_bound": tail}


def z_lm_particle_sum(params):
    '''Independent cross-check: the direct particle sum truncated at
    n <= n_max particles and occupation numbers k_i <= k_max.  The cost
    is (k_max |Lambda|)^{n_max}, so both truncations must stay small;
    the declared tails quantify the truncation error.'''
    torus, a = params.torus, params.a
    k_top = 1 if params.R == 1 else params.k_max
    if (k_top * torus.n_sites) ** params.n_max > 10 ** 7:
        raise ValueError("particle-sum budget exceeded; lower n_max/k_max")
    sites = range(torus.n_sites)
    single = sum(a ** k / k for k in range(1, params.k_max + 1))
    k_tail = a ** (params.k_max + 1) / ((params.k_max + 1) * (1.0 - a))
    mass = torus.n_sites * single
    full_mass = -torus.n_sites * math.log(1.0 - a)
    n_tail = math.exp(full_mass) - sum(
        full_mass ** n / math.factorial(n) for n in range(params.n_max + 1))
    total = 0.0
    for n in range(params.n_max + 1):
        if n == 0:
            total += 1.0
            continue
        term = 0.0
        for ks in itertools.product(range(1, k_top + 1), repeat=n):
            pref = a ** sum(ks) / math.prod(ks)
            for xs in itertools.product(sites, repeat=n):
                V = v_lm(ks, xs, params.vL, torus, params.R)
                if not np.isinf(V):
                    term += pref * math.exp(-V)
        total += term / math.factorial(n)
        if total > 0 and term / math.factorial(n) < params.tol * total and n >= 2:
            break
    return {"unnormalized": total, "relative": total * (1.0 - a) ** torus.n_sites,
            "k_tail": k_tail, "n_tail": n_tail}


def gamma_lm(params, p, xs, ys):
    '''Kernel entry Gamma_p^lm(x, y) = sum over occupation vectors k and
    permutations pi of e^{-kappa0 |k|} delta(pi y - x) Z^lm(k, x)/Z^lm;
    zero unless y is a permutation of x (no hopping at infinite mass).'''
    torus = params.torus
    xs = [int(x) for x in np.atleast_1d(xs)]
    ys = [int(y) for y in np.atleast_1d(ys)]
    if len(xs) != p or len(ys) != p:
        raise ValueError("x and y must have length p")
    perms = [pi for pi in itertools.permutations(range(p))
             if all(ys[pi[i]] == xs[i] for i in range(p))]
    if not perms:
        return 0.0
    denom, _ = occupation_sum(params)
    k_top = 1 if params.R == 1 else params.k_max
    total = 0.0
    for ks in itertools.product(range(1, k_top + 1), repeat=p):
        Q = np.zeros(torus.n_sites, dtype=np.int64)
        for k, x in zip(ks, xs):
            Q[x] += k
        num, _ = occupation_sum(params, Q_fixed=Q)
        total += len(perms) * params.a ** sum(ks) * num
    return total / denom


def gamma_lm_matrix(params, p=1):
    '''Dense p=1 kernel (diagonal); kept in the oracle kernel layout.'''
    if p != 1:
        raise ValueError("dense export implemented for p = 1")
    n = params.torus.n_sites
    K = np.zeros((n, n))
    for x in range(n):
        K[x, x] = gamma_lm(params, 1, [x], [x])
    return K


def gibbs_potential_lm(params):
    '''g^lm = log(relative Z^lm) / |Lambda|.'''
    return math.log(z_lm(params)["relative"]) / params.torus.n_sites


def weighted_particle_view(config, nu):
    '''Constant loops (site x, duration k nu) as weighted particles (k, x).'''
    out = []
    for w in config:
        if not w.is_constant:
            raise ValueError("weighted particle view needs constant loops")
        k = w.duration / nu
        if abs(k - round(k)) > 1e-9 or round(k) < 1:
            raise ValueError(f"duration {w.duration} not in nu N*")
        out.append((int(round(k)), int(w.start)))
    return out


def particles_to_loops(particles, nu):
    '''Inverse of weighted_particle_view.'''
    return [Path(int(x), float(k) * nu) for k, x in particles]
