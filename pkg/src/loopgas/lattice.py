'''Torus geometry, discrete Laplacian, heat kernels, potential periodization.

Convention for degenerate side lengths: the Laplacian acts through the 2d
signed unit steps with wraparound, so L=2 carries doubled edge weights and
L=1 gives Delta = 0.  This keeps the spectral (Fourier) representation of
the heat kernel valid for every L; geometry-sensitive experiments should
use L >= 3.
'''

import itertools
import json

import numpy as np
from scipy import integrate, special


class Torus:
    '''The periodic lattice [0,L)^d with flat site indexing.

    Sites are indexed row-major: index = sum_i c_i * L^(d-1-i) for
    coordinates c in {0,...,L-1}^d.
    '''

    def __init__(self, d, L):
        if d < 1 or L < 1:
            raise ValueError("need d >= 1 and L >= 1")
        self.d = int(d)
        self.L = int(L)
        self.n_sites = self.L ** self.d
        # coordinate table, shape (n_sites, d)
        self.coords = np.array(
            list(itertools.product(range(self.L), repeat=self.d)), dtype=np.int64
        ).reshape(self.n_sites, self.d)
        self._strides = self.L ** np.arange(self.d - 1, -1, -1, dtype=np.int64)
        # site reached from each site by each of the 2d signed steps
        steps = []
        for j in range(self.d):
            for sgn in (+1, -1):
                e = np.zeros(self.d, dtype=np.int64)
                e[j] = sgn
                steps.append(e)
        self.steps = np.array(steps, dtype=np.int64)          # (2d, d)
        nb = (self.coords[:, None, :] + self.steps[None, :, :]) % self.L
        self.neighbor_table = self.index_of(nb)               # (n_sites, 2d)
        self._diff_table = None

    def index_of(self, coords):
        '''Flat site index of coordinate array(s) (taken mod L).'''
        c = np.asarray(coords, dtype=np.int64) % self.L
        return c @ self._strides

    def centered(self, coords):
        '''Representative of coords mod L with entries in [-L/2, L/2).'''
        c = np.asarray(coords, dtype=np.int64) % self.L
        half = self.L // 2
        return (c + half) % self.L - half

    def min_norm(self, coords):
        '''Periodic Euclidean norm |x|_L = min_k |x + Lk|.'''
        c = np.asarray(coords, dtype=np.int64) % self.L
        m = np.minimum(c, self.L - c)
        return np.sqrt(np.sum(m * m, axis=-1))

    def diff_index(self, i, j):
        '''Site index of coords(i) - coords(j) mod L.'''
        return self.diff_table[i, j]

    @property
    def diff_table(self):
        if self._diff_table is None:
            diff = (self.coords[:, None, :] - self.coords[None, :, :]) % self.L
            self._diff_table = self.index_of(diff)
        return self._diff_table


def laplacian_matrix(torus):
    '''Discrete Laplacian: (Delta f)(x) = sum over 2d signed steps e of
    (f(x+e) - f(x)), with periodic wraparound.'''
    n = torus.n_sites
    mat = np.zeros((n, n))
    for i in range(n):
        mat[i, i] -= 2 * torus.d
        for j in torus.neighbor_table[i]:
            mat[i, j] += 1.0
    return mat


class HeatKernel:
    '''Spectral heat kernel psi^{L,t} of e^{t Delta/2} on the torus.

    psi^{L,t}(x) = L^{-d} sum_xi e^{-t lambda_xi} e^{i xi.x},
    lambda_xi = d - sum_j cos xi_j, xi in (2 pi/L) {0..L-1}^d.
    '''

    def __init__(self, torus):
        self.torus = torus
        k = 2.0 * np.pi * np.arange(torus.L) / torus.L
        grids = np.meshgrid(*([k] * torus.d), indexing="ij")
        self.rates = torus.d - sum(np.cos(g) for g in grids)   # shape (L,)*d
        self._cache = {}

    def table(self, t):
        '''Table x -> psi^{L,t}(x), flat-indexed like the torus sites.'''
        if t < 0:
            raise ValueError("t must be >= 0")
        key = float(t)
        tab = self._cache.get(key)
        if tab is None:
            tab = np.fft.ifftn(np.exp(-key * self.rates)).real.reshape(-1)
            tab.setflags(write=False)
            self._cache[key] = tab
        return tab

    def at_origin(self, t):
        '''psi^{L,t}(0) for scalar or array t (vectorized over t).'''
        t = np.asarray(t, dtype=float)
        return np.mean(np.exp(-np.multiply.outer(t, self.rates.reshape(-1))),
                       axis=-1)

    def matrix(self, t):
        '''psi^{L,t}(x-y) as an n_sites x n_sites matrix.'''
        return self.table(t)[self.torus.diff_table]


def heat_kernel(hk, t):
    '''Functional form of HeatKernel.table.'''
    return hk.table(t)


def heat_kernel_infinite(d, t, x, tail_tol=1e-10, method="quadrature"):
    '''Infinite-lattice kernel psi^{inf,t}(x), x an integer vector of length d.

    The integral factorizes over dimensions:
    psi^{inf,t}(x) = prod_j (2 pi)^{-1} int e^{-t(1-cos xi)} cos(xi x_j) dxi,
    which also equals prod_j e^{-t} I_{x_j}(t) (modified Bessel).  Both
    routes are exposed and serve as mutual oracles.
    '''
    x = np.atleast_1d(np.asarray(x, dtype=np.int64))
    if x.size != d:
        raise ValueError("x must have length d")
    if t < 0:
        raise ValueError("t must be >= 0")
    if method == "bessel":
        return float(np.prod(special.ive(np.abs(x), t)))
    if method != "quadrature":
        raise ValueError("method must be 'quadrature' or 'bessel'")
    out = 1.0
    for xj in x:
        val, err = integrate.quad(
            lambda xi: np.exp(-t * (1.0 - np.cos(xi))) * np.cos(xi * xj),
            -np.pi, np.pi, epsabs=tail_tol * np.pi, limit=200)
        if err > tail_tol:
            raise ArithmeticError(
                f"quadrature error {err:.2e} above tail_tol {tail_tol:.2e}")
        out *= val / (2.0 * np.pi)
    return out


class PotentialSpec:
    '''Two-body potential on Z^d: nonnegative even finite part plus an
    optional hard core of radius R in {0,1} (v = +inf on |x| < R).

    entries: dict mapping coordinate tuples to values; completed to an even
    function; must be absolutely summable (finite support here).
    '''

    def __init__(self, d, R, entries):
        if R not in (0, 1):
            raise ValueError("hard-core radius R must be 0 or 1")
        self.d = int(d)
        self.R = int(R)
        completed = {}
        for site, val in entries.items():
            site = tuple(int(c) for c in site)
            if len(site) != self.d:
                raise ValueError(f"entry {site} has wrong dimension")
            val = float(val)
            if not np.isfinite(val) or val < 0:
                raise ValueError("finite part must be finite and >= 0")
            neg = tuple(-c for c in site)
            for s in (site, neg):
                if s in completed and completed[s] != val:
                    raise ValueError(f"conflicting values at {s}")
                completed[s] = val
        for site in completed:
            if self.R == 1 and all(c == 0 for c in site) and completed[site] != 0.0:
                raise ValueError("finite part must vanish on the hard core")
        self.entries = completed

    @property
    def l1_norm(self):
        return sum(self.entries.values())

    @classmethod
    def from_function(cls, d, R, func, radius):
        '''Tabulate v(x) = func(x) on the cube |x_i| <= radius.

        Per-site values below 1e-14 are dropped (the spec-level tail
        truncation threshold); callers declare radius large enough that
        the dropped tail is below their tolerance.
        '''
        entries = {}
        for site in itertools.product(range(-radius, radius + 1), repeat=d):
            if R == 1 and all(c == 0 for c in site):
                continue
            val = float(func(np.array(site)))
            if val >= 1e-14:
                entries[site] = val
        return cls(d, R, entries)

    @classmethod
    def from_json(cls, doc):
        '''Load from {"d": int, "R": 0|1, "entries": [[x-vector, value], ...]}.

        Symmetry is completed automatically; duplicate sites are rejected.
        '''
        if isinstance(doc, (str, bytes)):
            doc = json.loads(doc)
        for key in ("d", "R", "entries"):
            if key not in doc:
                raise ValueError(f"potential document missing '{key}'")
        d = int(doc["d"])
        entries = {}
        for item in doc["entries"]:
            if len(item) != 2:
                raise ValueError("each entry must be [x-vector, value]")
            vec, val = item
            if np.isscalar(vec):
                vec = [vec]
            site = tuple(int(c) for c in vec)
            if len(site) != d:
                raise ValueError(f"entry {site} has wrong dimension")
            if site in entries:
                raise ValueError(f"duplicate entry at {site}")
            entries[site] = float(val)
        return cls(d, int(doc["R"]), entries)


def load_potential(path):
    with open(path) as fh:
        return PotentialSpec.from_json(json.load(fh))


def periodize_potential(spec, L):
    '''v^L(x) = sum_{k in (LZ)^d} v(x+k) as a flat table over the torus;
    +inf where some representative hits the hard core.'''
    torus = Torus(spec.d, L)
    table = np.zeros(torus.n_sites)
    for site, val in spec.entries.items():
        table[torus.index_of(site)] += val
    if spec.R == 1:
        # |x+k| < 1 only at x = 0 mod L
        table[torus.index_of(np.zeros(spec.d, dtype=np.int64))] = np.inf
    return table


def check_positive_type(vL, torus):
    '''Discrete Fourier transform test of positive type.

    Returns (is_positive_type, min real Fourier coefficient).
    '''
    vL = np.asarray(vL, dtype=float)
    if not np.all(np.isfinite(vL)):
        raise ValueError("positive type undefined for hard-core potentials")
    spectrum = np.fft.fftn(vL.reshape((torus.L,) * torus.d)).real
    mn = float(spectrum.min())
    return mn >= -1e-10, mn
