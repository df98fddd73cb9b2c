'''Poissonized Monte Carlo estimators for loop-ensemble partition
functions and correlation kernels (grid-duration and continuum ensembles).

Estimator identities:
  E_Poisson(m)[e^{-V}] = (sum_n (1/n!) int L^n e^{-V}) / e^m  (partition),
and for kernels the relative open-path form: each open path is drawn from
the normalized duration law and a free walk, and the product of endpoint
indicators times e^{-V(open paths + Poisson background)} times the
duration-law normalizations is averaged; the background expectation of
e^{-V} (an independent stream) divides the result.

Determinism: a run is a pure function of (seed, workers).  Samples are
partitioned into per-worker chunks with rng streams spawned from the
master seed, and the per-worker moments are merged in worker order
(Welford), so results are bit-identical for a fixed worker count.
'''

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .interactions import v_cl_pair, v_ginibre_pair, v_total, v_total_largemass
from .lattice import laplacian_matrix
from .paths import GinibreDurationLaw, SymanzikDurationLaw, sample_free_walk


@dataclass
class McEstimate:
    mean: float
    std_error: float
    n_samples: int
    seed: int
    metadata: dict = field(default_factory=dict)

    def to_json(self):
        doc = {"mean": self.mean, "std_error": self.std_error,
               "n": self.n_samples, "seed": self.seed,
               "params": self.metadata}
        return json.dumps(doc)

    def csv_row(self):
        return [self.mean, self.std_error, self.n_samples, self.seed]


@dataclass
class EnsembleSpec:
    torus: object
    params: object          # InteractionParams
    intensity: object       # LoopIntensity
    kind: str               # "ginibre" | "symanzik_eps"

    def __post_init__(self):
        expected = "ginibre" if self.kind == "ginibre" else "symanzik_eps"
        if self.intensity.kind != expected:
            raise ValueError("intensity kind does not match ensemble kind")

    def total_interaction(self, config):
        if self.kind == "ginibre":
            if self.params.mode == "largemass":
                return v_total_largemass(config, self.params)
            pair = lambda a, b: v_ginibre_pair(a, b, self.params)
            return v_total(config, pair)
        pair = lambda a, b: self.params.lam * v_cl_pair(
            a, b, self.params.vL, self.torus)
        return v_total(config, pair)

    def duration_law(self):
        if self.kind == "ginibre":
            return GinibreDurationLaw(self.params.nu, self.intensity.kappa)
        return SymanzikDurationLaw(self.intensity.kappa)


def _chunks(n_samples, workers):
    base, extra = divmod(n_samples, workers)
    return [base + (1 if w < extra else 0) for w in range(workers)]


def _welford_merge(parts):
    '''Merge per-worker (count, mean, M2) in order.'''
    count, mean, M2 = 0, 0.0, 0.0
    for c, m, m2 in parts:
        if c == 0:
            continue
        delta = m - mean
        tot = count + c
        mean += delta * c / tot
        M2 += m2 + delta * delta * count * c / tot
        count = tot
    return count, mean, M2


def run_mc(sample_fn, n_samples, seed, workers=1):
    '''Average sample_fn(rng) over n_samples with deterministic reduction.

    Returns (mean, std_error, count).  sample_fn must be a pure function
    of the rng stream.
    '''
    streams = np.random.SeedSequence(seed).spawn(workers)
    parts = []
    for w, n_w in enumerate(_chunks(n_samples, workers)):
        rng = np.random.default_rng(streams[w])
        c, m, m2 = 0, 0.0, 0.0
        for _ in range(n_w):
            x = sample_fn(rng)
            c += 1
            d = x - m
            m += d / c
            m2 += d * (x - m)
        parts.append((c, m, m2))
    count, mean, M2 = _welford_merge(parts)
    var = M2 / (count - 1) if count > 1 else 0.0
    return mean, math.sqrt(var / count) if count else 0.0, count


def _draw_background(intensity, rng):
    n = rng.poisson(intensity.total_mass)
    return [intensity.sample_loop(rng) for _ in range(n)]


def estimate_rel_partition(spec, n_samples, seed, workers=1):
    '''MC estimate of the relative partition function Z = E_Poisson[e^{-V}].'''
    if not np.isfinite(spec.intensity.total_mass):
        raise ValueError("loop intensity mass must be finite")

    def one(rng):
        config = _draw_background(spec.intensity, rng)
        V = spec.total_interaction(config)
        return 0.0 if np.isinf(V) else math.exp(-V)

    mean, se, count = run_mc(one, n_samples, seed, workers)
    meta = {"kind": spec.kind, "mass": spec.intensity.total_mass,
            "workers": workers}
    meta.update(spec.intensity.metadata)
    return McEstimate(mean, se, count, seed, meta)


def estimate_gamma_p(spec, p, xs, ys, n_samples, seed, workers=1,
                     denom_samples=None):
    '''MC estimate of the kernel entry Gamma_p(x, y) via the relative
    open-path representation; permutations enumerated (p <= 4).'''
    if p < 1 or p > 4:
        raise ValueError("p must be in 1..4 (permutation enumeration)")
    xs = [int(x) for x in np.atleast_1d(xs)]
    ys = [int(y) for y in np.atleast_1d(ys)]
    if len(xs) != p or len(ys) != p:
        raise ValueError("x and y must have length p")
    law = spec.duration_law()
    perms = list(itertools.permutations(range(p)))
    norm_p = law.normalization ** p

    def one(rng):
        background = _draw_background(spec.intensity, rng)
        total = 0.0
        for pi in perms:
            opens = []
            hit = True
            for i in range(p):
                T = float(law.sample(rng))
                path = sample_free_walk(spec.torus, xs[i], T, rng)
                if path.end != ys[pi[i]]:
                    hit = False
                    break
                opens.append(path)
            if not hit:
                continue
            V = spec.total_interaction(opens + background)
            if not np.isinf(V):
                total += norm_p * math.exp(-V)
        return total

    num_mean, num_se, count = run_mc(one, n_samples, seed, workers)
    # independent stream for the denominator (fixed derived seed)
    denom_seed = (int(seed) ^ 0x9E3779B97F4A7C15) % 2**63
    denom = estimate_rel_partition(
        spec, denom_samples or n_samples, denom_seed, workers)
    if abs(denom.mean) <= 3.0 * denom.std_error:
        raise ArithmeticError("denominator estimate consistent with 0")
    ratio = num_mean / denom.mean
    se = abs(ratio) * math.sqrt(
        (num_se / num_mean) ** 2 + (denom.std_error / denom.mean) ** 2
    ) if num_mean != 0 else norm_p / math.sqrt(count)
    meta = {"kind": spec.kind, "p": p, "x": xs, "y": ys,
            "denominator": denom.mean, "denominator_se": denom.std_error,
            "workers": workers}
    return McEstimate(ratio, se, count, seed, meta)


def free_gas_gamma1(params, torus, kappa=None):
    '''Free Bose kernel Gamma_1 = A (I - A)^{-1}, A = e^{nu(Delta/2 - kappa)};
    the normalization matches estimate_gamma_p (relative open-path form).'''
    if kappa is None:
        kappa = params.kappa
    if kappa is None or kappa * params.nu <= 0:
        raise ValueError("need kappa * nu > 0")
    A = scipy.linalg.expm(
        params.nu * (0.5 * laplacian_matrix(torus)
                     - kappa * np.eye(torus.n_sites)))
    rad = np.max(np.abs(np.linalg.eigvalsh(A)))
    if rad >= 1.0:
        raise ArithmeticError(f"spectral radius {rad:.6f} >= 1: kappa too small")
    return np.linalg.solve(np.eye(torus.n_sites) - A, A)
