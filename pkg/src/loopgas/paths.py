'''Continuous-time simple-random-walk paths, loop intensities, samplers.

Paths are cadlag step functions on a torus: a start site, a duration T,
and a strictly increasing list of (jump time, new site).  The free walk
has generator Delta/2: total jump rate d, exponential holding times,
uniform choice among the 2d signed unit steps.  Steps that wrap onto the
current site (L = 1) are no-ops and are not recorded.
'''

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .lattice import HeatKernel


@dataclass
class Path:
    '''A walk trajectory; closed when end == start.'''
    start: int
    duration: float
    jump_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    jump_sites: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    @property
    def end(self):
        return int(self.jump_sites[-1]) if len(self.jump_sites) else self.start

    @property
    def is_constant(self):
        return len(self.jump_times) == 0

    def position(self, t):
        '''Right-continuous evaluation; post-jump site at a jump time.'''
        if t < 0 or t > self.duration:
            raise ValueError(f"t={t} outside [0, {self.duration}]")
        k = np.searchsorted(self.jump_times, t, side="right")
        return self.start if k == 0 else int(self.jump_sites[k - 1])

    def segments(self):
        '''(start times, end times, sites) of the constant pieces.'''
        t0 = np.concatenate(([0.0], self.jump_times))
        t1 = np.concatenate((self.jump_times, [self.duration]))
        sites = np.concatenate(([self.start], self.jump_sites))
        return t0, t1, sites

    def local_time(self, site):
        t0, t1, sites = self.segments()
        return float(np.sum((t1 - t0)[sites == site]))

    def local_time_table(self, n_sites):
        t0, t1, sites = self.segments()
        return np.bincount(sites, weights=t1 - t0, minlength=n_sites)

    def to_line(self):
        '''Serialize as `x0 T t1:s1 t2:s2 ...`.'''
        parts = [str(self.start), repr(float(self.duration))]
        parts += [f"{repr(float(t))}:{int(s)}"
                  for t, s in zip(self.jump_times, self.jump_sites)]
        return " ".join(parts)

    @classmethod
    def from_line(cls, line):
        parts = line.split()
        start, duration = int(parts[0]), float(parts[1])
        times, sites = [], []
        for tok in parts[2:]:
            t, s = tok.split(":")
            times.append(float(t))
            sites.append(int(s))
        return cls(start, duration, np.array(times), np.array(sites, dtype=np.int64))


def sample_free_walk(torus, x, T, rng):
    '''Draw from P_x^T: jump clock Poisson(d*T), uniform signed steps.'''
    if T <= 0:
        raise ValueError("T must be > 0")
    n_jumps = rng.poisson(torus.d * T)
    if n_jumps == 0:
        return Path(int(x), float(T))
    times = np.sort(rng.random(n_jumps) * T)
    dirs = rng.integers(0, 2 * torus.d, n_jumps)
    site = int(x)
    keep_t, keep_s = [], []
    for t, k in zip(times, dirs):
        nxt = int(torus.neighbor_table[site, k])
        if nxt != site:
            keep_t.append(t)
            keep_s.append(nxt)
            site = nxt
    return Path(int(x), float(T), np.array(keep_t),
                np.array(keep_s, dtype=np.int64))


def position(path, t):
    return path.position(t)


def local_time(path, site):
    return path.local_time(site)


class GinibreDurationLaw:
    '''Normalized grid law P(T = nu*k) = e^{-kappa nu k} / c, k >= 1.

    c = e^{-kappa nu}/(1 - e^{-kappa nu}) is the normalization constant of
    the unnormalized weights e^{-kappa T} on the grid nu N*.
    '''

    def __init__(self, nu, kappa):
        if kappa <= 0 or nu <= 0:
            raise ValueError("need kappa > 0 and nu > 0 for a normalizable law")
        self.nu = float(nu)
        self.kappa = float(kappa)
        a = np.exp(-kappa * nu)
        self.normalization = a / (1.0 - a)
        self._p = 1.0 - a

    def sample(self, rng, size=None):
        k = rng.geometric(self._p, size=size)
        return self.nu * k


class SymanzikDurationLaw:
    '''Normalized continuum law with density kappa e^{-kappa T} on (0, inf);
    normalization constant of e^{-kappa T} dT is 1/kappa.'''

    def __init__(self, kappa):
        if kappa <= 0:
            raise ValueError("need kappa > 0 for a normalizable law")
        self.kappa = float(kappa)
        self.normalization = 1.0 / kappa

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.kappa, size=size)


def open_path_weighted_sample(torus, x, y, duration_law, rng, f):
    '''One unbiased contribution to the e^{-kappa T}-weighted open-path
    integral sum/int_T e^{-kappa T} int W^T_{y,x}(dw) f(w).

    Returns (indicator{end == y} * f(path), normalization) so that
    E[first] * second is the target.  The duration law must match the
    ensemble: grid-geometric (Ginibre) or exponential (Symanzik).
    '''
    T = float(duration_law.sample(rng))
    path = sample_free_walk(torus, x, T, rng)
    val = f(path) if path.end == int(y) else 0.0
    return val, duration_law.normalization


class LoopIntensity:
    '''Single-loop intensity measure restricted to closed loops.

    kind "ginibre":      nu * sum_{T in nu N*} (e^{-kappa T}/T) W^{L,T}
    kind "symanzik_eps": int_eps^inf dT (e^{-kappa T}/T) W^{L,T}

    total mass m = sum/int of e^{-kappa T} psi^{L,T}(0) |Lambda| / T; the
    normalized measure factorizes as (duration law) x (uniform base site)
    x (bridge), and bridges are drawn by rejection with acceptance
    probability psi^{L,T}(0).
    '''

    TAIL = 1e-12

    def __init__(self, torus, kind, kappa, nu=None, eps=None, heat_kernel=None):
        if kappa <= 0:
            raise ValueError("kappa must be > 0")
        self.torus = torus
        self.kind = kind
        self.kappa = float(kappa)
        self.hk = heat_kernel if heat_kernel is not None else HeatKernel(torus)
        self.metadata = {}
        if kind == "ginibre":
            if nu is None or nu <= 0:
                raise ValueError("ginibre intensity needs nu > 0")
            self.nu = float(nu)
            self._build_grid_law()
        elif kind == "symanzik_eps":
            if eps is None or eps <= 0:
                raise ValueError("symanzik intensity needs eps > 0")
            self.eps = float(eps)
            self._build_continuum_law()
        else:
            raise ValueError(f"unknown intensity kind {kind!r}")

    # -- ginibre: discrete duration grid ------------------------------------
    def _build_grid_law(self):
        nu, kappa, n = self.nu, self.kappa, self.torus.n_sites
        a = np.exp(-kappa * nu)
        # truncate when the remaining tail (psi <= 1 bound) drops below
        # TAIL times a lower bound on the mass (first term, psi >= 1/n)
        k_max = 1
        while (n * a ** (k_max + 1) / ((k_max + 1) * (1 - a)) > self.TAIL * a
               and k_max < 100000):
            k_max += 1
        k = np.arange(1, k_max + 1)
        w = np.exp(-kappa * nu * k) * self.hk.at_origin(nu * k) * n / k
        self.total_mass = float(w.sum())
        tail = n * a ** (k_max + 1) / ((k_max + 1) * (1 - a))
        self._durations = nu * k
        self._probs = w / w.sum()
        self._cum = np.cumsum(self._probs)
        self.metadata.update(k_max=k_max, tail_bound=float(tail))

    # -- symanzik: eps-truncated continuum law ------------------------------
    def _build_continuum_law(self):
        kappa, eps, n = self.kappa, self.eps, self.torus.n_sites

        def integrand(t):
            return np.exp(-kappa * t) * self.hk.at_origin(t) * n / t

        # T_max so the dropped tail (psi <= 1) is below TAIL relative
        t_max = eps
        while n * np.exp(-kappa * t_max) / (kappa * t_max) > self.TAIL:
            t_max *= 1.25
        mass, err = integrate.quad(integrand, eps, t_max, limit=500,
                                   epsabs=1e-13, epsrel=1e-12)
        # geometric grid for the tabulated inverse CDF
        grid = np.geomspace(eps, t_max, 8192)
        vals = integrand(grid)
        cdf = np.concatenate(([0.0], np.cumsum(
            0.5 * (vals[1:] + vals[:-1]) * np.diff(grid))))
        self.total_mass = float(mass)
        self._grid = grid
        self._cdf = cdf / cdf[-1]
        self.metadata.update(t_max=float(t_max), quad_err=float(err),
                             grid_points=len(grid),
                             cdf_norm_gap=float(abs(cdf[-1] - mass) / mass))

    # -----------------------------------------------------------------------
    def sample_duration(self, rng, size=None):
        u = rng.random(size)
        if self.kind == "ginibre":
            idx = np.searchsorted(self._cum, u, side="left")
            idx = np.minimum(idx, len(self._durations) - 1)
            return self._durations[idx]
        return np.interp(u, self._cdf, self._grid)

    def sample_loop(self, rng, max_tries=10000):
        T = float(self.sample_duration(rng))
        x = int(rng.integers(self.torus.n_sites))
        for _ in range(max_tries):
            path = sample_free_walk(self.torus, x, T, rng)
            if path.end == x:
                return path
        raise RuntimeError(
            f"bridge rejection budget exceeded (T={T}, acceptance "
            f"~ {self.hk.at_origin(T):.3e})")


def sample_loop(intensity, rng, max_tries=10000):
    return intensity.sample_loop(rng, max_tries=max_tries)
