'''Exact loop-loop interaction functionals for piecewise-constant paths.

All time integrals are evaluated by merging the jump events of the two
paths involved; there is no quadrature error anywhere in this module.
+inf is an absorbing interaction value (hard core), mapped downstream to
Boltzmann weight e^{-inf} = 0; no NaNs are ever produced.
'''

from dataclasses import dataclass, field

import numpy as np


@dataclass
class InteractionParams:
    '''Coupling parameters and the periodized potential table.

    mode: "meanfield" fixes lam = nu^2; "largemass" fixes lam = 1 and
    kappa = kappa0/nu; "generic" takes lam as given.
    '''
    torus: object
    vL: np.ndarray
    nu: float
    lam: float = None
    mode: str = "generic"
    R: int = 0
    kappa: float = None
    kappa0: float = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError("nu must be > 0")
        if self.mode == "meanfield":
            expected = self.nu ** 2
            if self.lam is None:
                self.lam = expected
            elif abs(self.lam - expected) > 1e-12:
                raise ValueError("meanfield mode requires lam = nu^2")
        elif self.mode == "largemass":
            if self.lam is None:
                self.lam = 1.0
            elif self.lam != 1.0:
                raise ValueError("largemass mode requires lam = 1")
            if self.kappa0 is None:
                raise ValueError("largemass mode requires kappa0")
            self.kappa = self.kappa0 / self.nu
        elif self.mode == "generic":
            if self.lam is None:
                raise ValueError("generic mode requires lam")
        else:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.lam < 0:
            raise ValueError("lam must be >= 0")

    def v(self, site_a, site_b):
        return self.vL[self.torus.diff_table[site_a, site_b]]


def v_tilde_table(vL, torus, R):
    '''Helper ṽ = v restricted off the hard core (v * 1{|x|_L >= R}).'''
    out = np.array(vL, dtype=float)
    if R == 1:
        out[torus.min_norm(torus.coords) < 1] = 0.0
    return out


def v_cl_pair(w, wt, vL, torus):
    '''int_0^T int_0^Tt v(w(t) - wt(tt)) dt dtt, exactly.'''
    t0, t1, s = w.segments()
    u0, u1, su = wt.segments()
    lens = t1 - t0
    lenu = u1 - u0
    vmat = vL[torus.diff_table[np.ix_(s, su)]]
    if np.isinf(vmat).any():
        return np.inf
    return float(lens @ vmat @ lenu)


def _window_views(path, nu):
    '''Decompose a grid-duration path into duration-nu windows.

    Returns a list over windows a = 0..T/nu-1 of (bounds, sites): bounds
    is the increasing array of relative times 0 = r_0 < ... < r_m = nu
    and sites[i] the site on [r_i, r_{i+1}).  Constant windows are
    returned as (None, site) for the fast path.
    '''
    n_win = int(round(path.duration / nu))
    if path.is_constant:
        return [(None, path.start)] * n_win
    t0, t1, sites = path.segments()
    views = []
    for a in range(n_win):
        lo, hi = a * nu, (a + 1) * nu
        i = np.searchsorted(t1, lo, side="right")
        j = np.searchsorted(t0, hi, side="left")
        if j - i == 1:
            views.append((None, int(sites[i])))
        else:
            bounds = np.concatenate(([lo], t0[i + 1:j], [hi])) - lo
            views.append((bounds, sites[i:j]))
    return views


def _overlap_value(view_a, view_b, nu, v_of):
    '''int_0^nu v(a(t) - b(t)) dt for two window views.'''
    ba, sa = view_a
    bb, sb = view_b
    if ba is None and bb is None:
        return nu * v_of(sa, sb)
    if ba is None:
        ba, sa = np.array([0.0, nu]), np.array([sa])
    if bb is None:
        bb, sb = np.array([0.0, nu]), np.array([sb])
    cuts = np.union1d(ba, bb)
    ia = np.searchsorted(ba, cuts[:-1], side="right") - 1
    ib = np.searchsorted(bb, cuts[:-1], side="right") - 1
    total = 0.0
    for k in range(len(cuts) - 1):
        val = v_of(int(sa[ia[k]]), int(sb[ib[k]]))
        if np.isinf(val):
            return np.inf
        total += (cuts[k + 1] - cuts[k]) * val
    return total


def _check_grid(path, nu):
    n = path.duration / nu
    if abs(n - round(n)) > 1e-9 or round(n) < 1:
        raise ValueError(f"duration {path.duration} not on the grid nu N*")


def v_ginibre_pair(w, wt, params, skip_diagonal=False):
    '''Grid-window interaction
    (lam/nu^2) nu sum_{s<T} nu sum_{st<Tt} (1/nu) int_0^nu v(w(s+t)-wt(st+t)) dt,
    i.e. (lam/nu) times the sum of exact window-overlap integrals.

    skip_diagonal drops the s = st terms (only meaningful for the self
    pair w is wt; used by the large-mass self interaction).
    '''
    nu, lam = params.nu, params.lam
    _check_grid(w, nu)
    _check_grid(wt, nu)
    if lam == 0.0:
        return 0.0
    v_of = lambda a, b: params.vL[params.torus.diff_table[a, b]]
    va = _window_views(w, nu)
    vb = va if wt is w else _window_views(wt, nu)
    total = 0.0
    for a, wa in enumerate(va):
        for b, wb in enumerate(vb):
            if skip_diagonal and a == b:
                continue
            val = _overlap_value(wa, wb, nu, v_of)
            if np.isinf(val):
                return np.inf
            total += val
    return lam / nu * total


def v_total(config, pair_fn):
    '''V(w_1..w_n) = 1/2 sum_{i,j} pair(w_i, w_j), self terms included.'''
    total = 0.0
    for i, wi in enumerate(config):
        for j, wj in enumerate(config):
            if j < i:
                continue
            val = pair_fn(wi, wj)
            if np.isinf(val):
                return np.inf
            total += val if i == j else 2.0 * val
    return 0.5 * total


def v_total_largemass(config, params):
    '''Large-mass total interaction (lam = 1):
    1/2 sum_{i != j} V(w_i, w_j) + 1/2 sum_i Vtilde(w_i)
    + (v(0)/(2 nu)) |T| 1{R = 0},
    with Vtilde the self window sum excluding the diagonal r = s pairs.
    '''
    if params.mode != "largemass":
        raise ValueError("v_total_largemass requires largemass mode")
    total = 0.0
    for i, wi in enumerate(config):
        tilde = v_ginibre_pair(wi, wi, params, skip_diagonal=True)
        if np.isinf(tilde):
            return np.inf
        total += 0.5 * tilde
        for wj in config[i + 1:]:
            val = v_ginibre_pair(wi, wj, params)
            if np.isinf(val):
                return np.inf
            total += val
    if params.R == 0:
        origin = params.torus.index_of(np.zeros(params.torus.d, dtype=np.int64))
        v0 = params.vL[origin]
        total += v0 / (2.0 * params.nu) * sum(w.duration for w in config)
    return total


def v_lm(kvec, xvec, vL, torus, R):
    '''Infinite-mass interaction of weighted particles (k_i, x_i).

    R=0: 1/2 sum_{i,j} k_i k_j v(x_i - x_j);
    R=1: 1/2 sum_{i!=j} v(x_i - x_j) if k = 1 and sites distinct, else +inf.
    '''
    kvec = np.asarray(kvec, dtype=np.int64)
    xvec = np.asarray(xvec, dtype=np.int64)
    if len(kvec) != len(xvec):
        raise ValueError("|k| and |x| must agree")
    n = len(kvec)
    if n == 0:
        return 0.0
    if np.any(kvec < 1):
        raise ValueError("occupation numbers must be >= 1")
    vmat = vL[torus.diff_table[np.ix_(xvec, xvec)]]
    if R == 1:
        if np.any(kvec != 1):
            return np.inf
        off = vmat[~np.eye(n, dtype=bool)]
        if np.isinf(off).any():
            return np.inf
        return 0.5 * float(off.sum())
    total = float(kvec @ vmat @ kvec)
    return np.inf if np.isinf(total) else 0.5 * total
