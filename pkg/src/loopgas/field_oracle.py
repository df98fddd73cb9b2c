'''Classical field theory oracle: complex Gaussian sampling, relative
partition function and correlation kernels, single-site quadrature,
Hubbard-Stratonovich and complex-Wick identity checks.

Covariance convention: E[conj(phi(x)) phi(y)] = C_{x,y} with
C = (-Delta/2 + kappa)^{-1}; p-point moments then obey the permanent
formula E[prod conj(phi(y_j)) prod phi(x_i)] = sum_pi prod_k C_{x_k, y_pi(k)}.
'''

import itertools
import math

import numpy as np
from scipy import integrate

from .lattice import check_positive_type, laplacian_matrix
from .loop_mc import McEstimate, _chunks, _welford_merge


class GaussianField:
    '''Complex Gaussian measure with covariance C = (-Delta/2 + kappa)^{-1}.'''

    def __init__(self, torus, kappa):
        if kappa <= 0:
            raise ValueError("kappa must be > 0 (covariance must be SPD)")
        self.torus = torus
        self.kappa = float(kappa)
        prec = kappa * np.eye(torus.n_sites) - 0.5 * laplacian_matrix(torus)
        self.covariance = np.linalg.inv(prec)
        w, U = np.linalg.eigh(self.covariance)
        if np.min(w) <= 0:
            raise ValueError("covariance not positive definite")
        self.factor = (U * np.sqrt(w)) @ U.T

    def sample(self, rng, size=None):
        '''Field samples, shape (size, n_sites) (or (n_sites,) if size None).'''
        n = self.torus.n_sites
        shape = (n,) if size is None else (size, n)
        z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
        return z / math.sqrt(2.0) @ self.factor


def sample_field(gf, rng):
    return gf.sample(rng)


def _quartic_weight(fields, vmat):
    '''W = 1/2 sum_{x,y} |phi(x)|^2 v(x-y) |phi(y)|^2, batched.'''
    dens = np.abs(fields) ** 2
    return 0.5 * np.einsum("ax,xy,ay->a", dens, vmat, dens)


def _batched_mc(make_values, n_samples, seed, workers):
    '''Deterministic parallel-reduction MC over vectorized batches.

    make_values(rng, count) -> array of count sample values.
    '''
    streams = np.random.SeedSequence(seed).spawn(workers)
    parts = []
    for w, n_w in enumerate(_chunks(n_samples, workers)):
        rng = np.random.default_rng(streams[w])
        vals = np.asarray(make_values(rng, n_w), dtype=float)
        if n_w:
            m = float(vals.mean())
            parts.append((n_w, m, float(np.sum((vals - m) ** 2))))
        else:
            parts.append((0, 0.0, 0.0))
    count, mean, M2 = _welford_merge(parts)
    var = M2 / (count - 1) if count > 1 else 0.0
    return mean, math.sqrt(var / count) if count else 0.0, count


def estimate_Zcl(gf, vL, n_samples, seed, workers=1, lam=1.0):
    '''MC estimate of Z^cl = E_mu[e^{-lam W}] with the quartic weight W.'''
    vmat = np.asarray(vL)[gf.torus.diff_table]
    if not np.isfinite(vmat).all():
        raise ValueError("finite potential required")

    def values(rng, count):
        fields = gf.sample(rng, count)
        return np.exp(-lam * _quartic_weight(fields, vmat))

    mean, se, count = _batched_mc(values, n_samples, seed, workers)
    return McEstimate(mean, se, count, seed,
                      {"kind": "Zcl", "lam": lam, "workers": workers})


def estimate_gamma_cl(gf, vL, p, xs, ys, n_samples, seed, workers=1,
                      lam=1.0, normalized=True):
    '''Ratio estimator of Gamma_p^cl(x, y) =
    E[prod conj(phi(y_j)) prod phi(x_i) e^{-lam W}] / E[e^{-lam W}],
    with independent streams for numerator and denominator.

    normalized=False returns the unnormalized moment (numerator only).
    '''
    xs = [int(x) for x in np.atleast_1d(xs)]
    ys = [int(y) for y in np.atleast_1d(ys)]
    if len(xs) != p or len(ys) != p:
        raise ValueError("x and y must have length p")
    vmat = np.asarray(vL)[gf.torus.diff_table]

    def values(rng, count):
        fields = gf.sample(rng, count)
        mono = np.prod(fields[:, xs], axis=1) * np.prod(
            np.conj(fields[:, ys]), axis=1)
        out = mono * np.exp(-lam * _quartic_weight(fields, vmat))
        return out.real

    num_mean, num_se, count = _batched_mc(values, n_samples, seed, workers)
    meta = {"kind": "gamma_cl", "p": p, "x": xs, "y": ys, "lam": lam,
            "workers": workers}
    if not normalized:
        return McEstimate(num_mean, num_se, count, seed, meta)
    denom_seed = (int(seed) ^ 0x9E3779B97F4A7C15) % 2**63
    den = estimate_Zcl(gf, vL, n_samples, denom_seed, workers, lam=lam)
    if abs(den.mean) <= 3.0 * den.std_error:
        raise ArithmeticError("denominator estimate consistent with 0")
    ratio = num_mean / den.mean
    rel = (num_se / num_mean) ** 2 if num_mean != 0 else 0.0
    se = (abs(ratio) * math.sqrt(rel + (den.std_error / den.mean) ** 2)
          if num_mean != 0 else num_se / den.mean)
    meta.update(denominator=den.mean, denominator_se=den.std_error)
    return McEstimate(ratio, se, count, seed, meta)


def wick_moment(C, xs, ys):
    '''Gaussian moment sum_pi prod_k C_{x_k, y_pi(k)} (complex Wick).'''
    xs, ys = list(xs), list(ys)
    total = 0.0
    for pi in itertools.permutations(range(len(ys))):
        total += math.prod(C[xs[k], ys[pi[k]]] for k in range(len(xs)))
    return total


def quadrature_single_site(kappa, w, p):
    '''Exact single-site (L=1) classical values via the radial law
    s = |phi|^2 ~ Exp(kappa):
    Z^cl = kappa int e^{-kappa s - w s^2/2} ds,
    Gamma_p^cl(0,0) = kappa int s^p e^{...} ds / Z^cl.'''
    def moment(q):
        val, err = integrate.quad(
            lambda s: kappa * s ** q * np.exp(-kappa * s - 0.5 * w * s * s),
            0.0, np.inf, epsabs=1e-13, epsrel=1e-13, limit=400)
        if err > 1e-10 * max(val, 1.0):
            raise ArithmeticError("single-site quadrature did not converge")
        return val

    Z = moment(0)
    return Z, moment(p) / Z


def hubbard_stratonovich_check(v_pt, torus, f, n_samples, seed, workers=1):
    '''Check E_{mu_v}[e^{i<f, sigma>}] = e^{-<f, v f>/2} for the real
    Gaussian measure with covariance matrix V_{xy} = v(x-y).

    Returns a report with the MC comparison (3 sigma) and the exact
    characteristic-function identity evaluated through the sampling
    factor (1e-12).'''
    v_pt = np.asarray(v_pt, dtype=float)
    ok, mn = check_positive_type(v_pt, torus)
    if not ok:
        raise ValueError(f"potential not of positive type (min coeff {mn:.3e})")
    f = np.asarray(f, dtype=float)
    V = v_pt[torus.diff_table]
    w, U = np.linalg.eigh(V)
    w = np.clip(w, 0.0, None)
    factor = (U * np.sqrt(w)) @ U.T
    target = math.exp(-0.5 * float(f @ V @ f))
    # deterministic identity: the sampler's covariance is factor @ factor.T
    exact_gap = abs(math.exp(-0.5 * float(f @ factor @ factor.T @ f)) - target)

    def values(rng, count):
        sigma = rng.standard_normal((count, len(f))) @ factor.T
        return np.cos(sigma @ f)

    mean, se, count = _batched_mc(values, n_samples, seed, workers)
    z = abs(mean - target) / max(se, 1e-15)
    return {"pass": bool(z <= 3.0 and exact_gap <= 1e-12),
            "mc": mean, "mc_se": se, "target": target, "z": z,
            "exact_identity_gap": exact_gap, "n": count}


def correlation_inequality_check(gf, vL, lam_grid, p, xs, ys, n_samples,
                                 seed, workers=1):
    '''Check 0 <= Gamma-hat_p^{cl,lam} <= Gamma-hat_p^{cl,0} (the Wick
    value) within 3 sigma across the lam grid; fresh samples per lam.'''
    xs = [int(x) for x in np.atleast_1d(xs)]
    ys = [int(y) for y in np.atleast_1d(ys)]
    wick = wick_moment(gf.covariance, xs, ys)
    rows, ok = [], True
    for i, lam in enumerate(lam_grid):
        est = estimate_gamma_cl(gf, vL, p, xs, ys, n_samples,
                                seed + 1000 * i, workers, lam=lam,
                                normalized=False)
        lower = est.mean >= -3.0 * est.std_error
        upper = est.mean <= wick + 3.0 * est.std_error
        ok = ok and lower and upper
        rows.append({"lam": lam, "value": est.mean, "se": est.std_error,
                     "lower_ok": lower, "upper_ok": upper})
    return {"pass": bool(ok), "wick_value": wick, "rows": rows}
