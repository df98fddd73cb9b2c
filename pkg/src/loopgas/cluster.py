'''Combinatorics and cluster-expansion engine: connected graphs, trees,
the Kruskal map and its preimage bracket, Ursell functions, the tree
bound with its resummation identity, degree-constrained tree counts,
truncated expansion series for log Z and correlation kernels, and
numeric checks of the Riemann-sum and vertex-integration bounds.

The expansion is built on the loop measures
  mu(dw)        = nu sum_{T in nu N*} (e^{-kappa T}/T) W^{L,T}(dw) e^{-V(w,w)/2},
  muhat_{y,x}   = sum_{T in nu N*} e^{-kappa T} W^{L,T}_{y,x}(dw) e^{-V(w,w)/2},
with Mayer factor zeta(w, wt) = e^{-V(w,wt)/2} - 1 and
  X(w_1..w_p) = sum_{n >= max(p,1)} n!/(n-p)! int mu^{(n-p)} phi(w_1..w_n),
phi the Ursell function.  Then log Z = X - X^0 and
  Gamma_p(x,y) = sum_pi int muhat^{(p)} sum_{partitions} prod_blocks X(block).
'''

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .interactions import v_ginibre_pair
from .loop_mc import McEstimate, _chunks, _welford_merge, run_mc
from .paths import sample_free_walk

MAX_ENUM_N = 7
MAX_URSELL_N = 6
MAX_BRACKET_N = 5


@dataclass(frozen=True)
class Graph:
    '''Simple graph on vertices 0..n-1; edges are (i, j) pairs with i < j.'''
    n: int
    edges: frozenset

    def __post_init__(self):
        for i, j in self.edges:
            if not (0 <= i < j < self.n):
                raise ValueError(f"bad edge ({i}, {j}) on {self.n} vertices")

    def degree_sequence(self):
        deg = [0] * self.n
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return tuple(deg)

    def is_connected(self):
        return _is_connected(self.n, self.edges)

    def is_tree(self):
        return len(self.edges) == self.n - 1 and self.is_connected()


def complete_edges(n):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


def _is_connected(n, edges):
    uf = _UnionFind(n)
    parts = n
    for i, j in edges:
        if uf.union(i, j):
            parts -= 1
    return parts == 1


def _check_enum_budget(n, cap, what):
    if n < 1:
        raise ValueError("need n >= 1")
    if n > cap:
        raise ValueError(f"{what} enumeration budget is n <= {cap}, got {n}")


def connected_graphs(n):
    '''All connected graphs on [n], duplicate-free (n <= 7).'''
    _check_enum_budget(n, MAX_ENUM_N, "connected graph")
    all_edges = complete_edges(n)
    for mask in range(1 << len(all_edges)):
        edges = frozenset(e for b, e in enumerate(all_edges) if mask >> b & 1)
        if _is_connected(n, edges):
            yield Graph(n, edges)


def _prufer_decode(n, seq):
    deg = [1] * n
    for v in seq:
        deg[v] += 1
    edges = []
    for v in seq:
        leaf = min(u for u in range(n) if deg[u] == 1)
        edges.append((min(leaf, v), max(leaf, v)))
        deg[leaf] -= 1
        deg[v] -= 1
    u, w = [x for x in range(n) if deg[x] == 1]
    edges.append((u, w))
    return frozenset(edges)


def trees(n):
    '''All labelled trees on [n] via Prufer sequences (n <= 7).'''
    _check_enum_budget(n, MAX_ENUM_N, "tree")
    if n == 1:
        yield Graph(1, frozenset())
        return
    for seq in itertools.product(range(n), repeat=n - 2):
        yield Graph(n, _prufer_decode(n, seq))


def trees_with_degrees(deltas):
    '''All trees with the prescribed degree sequence.'''
    deltas = tuple(int(d) for d in deltas)
    for t in trees(len(deltas)):
        if t.degree_sequence() == deltas:
            yield t


def tree_count(deltas):
    '''|T_n^{delta}| = (n-2)!/prod (delta_i - 1)!; 0 for infeasible
    sequences; the single-vertex tree counts as 1 for delta = (0,).'''
    deltas = tuple(int(d) for d in deltas)
    n = len(deltas)
    if n == 1:
        return 1 if deltas == (0,) else 0
    if any(d < 1 for d in deltas) or sum(deltas) != 2 * (n - 1):
        return 0
    if n == 2:
        return 1
    out = math.factorial(n - 2)
    for d in deltas:
        out //= math.factorial(d - 1)
    return out


def lexicographic_order(edge):
    return edge


def kruskal(graph, edge_order=lexicographic_order):
    '''The spanning tree K(G): grow a forest from the empty set, always
    adding the smallest edge of G that closes no cycle.'''
    if not graph.is_connected():
        raise ValueError("kruskal requires a connected graph")
    uf = _UnionFind(graph.n)
    kept = []
    for e in sorted(graph.edges, key=edge_order):
        if uf.union(*e):
            kept.append(e)
    return Graph(graph.n, frozenset(kept))


def kruskal_preimage_bracket(tree, edge_order=lexicographic_order):
    '''M(T) = union of all connected G with K(G) = T, plus exhaustive
    verification that K^{-1}(T) = {G : T subset G subset M(T)} (n <= 5).'''
    _check_enum_budget(tree.n, MAX_BRACKET_N, "preimage bracket")
    if not tree.is_tree():
        raise ValueError("expected a tree")
    preimage = [g for g in connected_graphs(tree.n)
                if kruskal(g, edge_order).edges == tree.edges]
    m_edges = frozenset().union(*(g.edges for g in preimage))
    bracket = {frozenset(tree.edges | set(extra))
               for r in range(len(m_edges - tree.edges) + 1)
               for extra in itertools.combinations(m_edges - tree.edges, r)}
    ok = {g.edges for g in preimage} == bracket
    return Graph(tree.n, m_edges), ok


@lru_cache(maxsize=None)
def _expansion_tables(n):
    '''Edge-mask tables over the complete graph on [n] (lex edge order):
    connected-graph masks, tree masks, and for each tree the extra edges
    M(T) \\ T of the Kruskal preimage bracket.'''
    all_edges = complete_edges(n)
    index = {e: b for b, e in enumerate(all_edges)}
    n_e = len(all_edges)
    conn = []
    for mask in range(1 << n_e):
        edges = [all_edges[b] for b in range(n_e) if mask >> b & 1]
        if _is_connected(n, frozenset(edges)):
            conn.append([mask >> b & 1 for b in range(n_e)])
    conn = np.array(conn, dtype=bool).reshape(len(conn), n_e)
    tree_rows, extra_rows = [], []
    for t in trees(n):
        row = np.zeros(n_e, dtype=bool)
        for e in t.edges:
            row[index[e]] = True
        tree_rows.append(row)
        if n <= MAX_BRACKET_N:
            m, ok = kruskal_preimage_bracket(t)
            if not ok:
                raise AssertionError("Kruskal bracket failed in table build")
            extra = np.zeros(n_e, dtype=bool)
            for e in m.edges - t.edges:
                extra[index[e]] = True
            extra_rows.append(extra)
    tree_mask = np.array(tree_rows, dtype=bool).reshape(len(tree_rows), n_e)
    extra_mask = (np.array(extra_rows, dtype=bool).reshape(len(extra_rows), n_e)
                  if extra_rows else None)
    return all_edges, conn, tree_mask, extra_mask


def _edge_vector(matrix, all_edges):
    return np.array([matrix[i, j] for i, j in all_edges], dtype=float)


def ursell(zeta_matrix):
    '''phi = (1/n!) sum over connected graphs of prod of edge zetas (n <= 6).'''
    zeta_matrix = np.asarray(zeta_matrix, dtype=float)
    n = len(zeta_matrix)
    _check_enum_budget(n, MAX_URSELL_N, "Ursell")
    if n == 1:
        return 1.0
    all_edges, conn, _, _ = _expansion_tables(n)
    z = _edge_vector(zeta_matrix, all_edges)
    return float(np.where(conn, z, 1.0).prod(axis=1).sum()) / math.factorial(n)


def tree_sum(zeta_matrix, absolute=True):
    '''(1/n!) sum over trees of prod of edge |zeta| (the tree bound).'''
    zeta_matrix = np.asarray(zeta_matrix, dtype=float)
    n = len(zeta_matrix)
    if n == 1:
        return 1.0
    all_edges, _, tree_mask, _ = _expansion_tables(n)
    z = _edge_vector(zeta_matrix, all_edges)
    if absolute:
        z = np.abs(z)
    return float(np.where(tree_mask, z, 1.0).prod(axis=1).sum()) / math.factorial(n)


def tree_bound_check(zeta_matrix, V_matrix=None, tol=1e-12):
    '''Report on |ursell(zeta)| <= tree sum of |zeta|, and (when the
    nonnegative interaction matrix V with zeta = e^{-V/2} - 1 is given)
    on the exact resummation identity
    phi = (1/n!) sum_T prod_T zeta * e^{- sum_{M(T)\\T} V/2}.'''
    zeta_matrix = np.asarray(zeta_matrix, dtype=float)
    n = len(zeta_matrix)
    off = zeta_matrix[~np.eye(n, dtype=bool)]
    if np.any(off < -1.0 - 1e-14) or np.any(off > 1e-14):
        raise ValueError("zeta entries must lie in [-1, 0]")
    phi = ursell(zeta_matrix)
    bound = tree_sum(zeta_matrix)
    report = {"n": n, "ursell": phi, "tree_bound": bound,
              "bound_ok": bool(abs(phi) <= bound + tol)}
    if V_matrix is not None and n >= 2:
        _check_enum_budget(n, MAX_BRACKET_N, "resummation")
        V_matrix = np.asarray(V_matrix, dtype=float)
        all_edges, _, tree_mask, extra_mask = _expansion_tables(n)
        z = _edge_vector(zeta_matrix, all_edges)
        v = _edge_vector(V_matrix, all_edges)
        prods = np.where(tree_mask, z, 1.0).prod(axis=1)
        resum = float((prods * np.exp(-0.5 * (extra_mask @ v))).sum())
        resum /= math.factorial(n)
        report["resummation"] = resum
        report["resummation_gap"] = abs(resum - phi)
        report["resummation_ok"] = bool(abs(resum - phi) <= tol)
    return report


def descendants_identity_check(n):
    '''For every tree on [n] and every root r, check
    sum_{w != r} (1 - |Q(w)|) = |Q(r)| with Q(w) the direct descendants.'''
    _check_enum_budget(n, MAX_ENUM_N, "descendants")
    for t in trees(n):
        adj = {v: set() for v in range(n)}
        for i, j in t.edges:
            adj[i].add(j)
            adj[j].add(i)
        for r in range(n):
            # orient away from the root: |Q(w)| = deg(w) - 1 for w != r
            q = {w: len(adj[w]) - (0 if w == r else 1) for w in range(n)}
            if sum(1 - q[w] for w in range(n) if w != r) != q[r]:
                return False
    return True


# -- truncated expansion series ---------------------------------------------

def _partitions(items):
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _partitions(rest):
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1:]
        yield [[first]] + part


def _pair_interaction(params):
    return lambda a, b: v_ginibre_pair(a, b, params)


def _self_weight(path, pair):
    val = pair(path, path)
    return 0.0 if np.isinf(val) else math.exp(-0.5 * val)


def _zeta_matrix(paths, pair):
    '''Mayer factors zeta_ij = e^{-V(w_i, w_j)} - 1 between distinct
    loops: in the total interaction (1/2) sum_{i,j} V, the two ordered
    pairs (i, j), (j, i) cancel the 1/2, so each unordered pair carries
    the full Boltzmann factor e^{-V}; only self pairs keep e^{-V/2}.'''
    n = len(paths)
    V = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            V[i, j] = V[j, i] = pair(paths[i], paths[j])
    return np.exp(-V) - 1.0, V


def _require_ginibre(spec):
    if spec.kind != "ginibre":
        raise ValueError("expansion estimators require the grid ensemble")
    if spec.intensity.kappa * spec.params.nu <= 0:
        raise ValueError("need kappa * nu > 0")


def estimate_X(spec, fixed_paths, n_max, n_samples, seed, workers=1):
    '''Per-order MC estimate of the truncated series X(fixed paths):
    order n draws n - p loops from the free normalized loop law, carries
    the self-interaction importance weights e^{-V(w,w)/2}, evaluates the
    Ursell factor over fixed + drawn paths, and multiplies the loop mass
    to the power n - p and the combinatorial factor n!/(n-p)!.

    Returns a report with per-order means/std errors/effective sample
    sizes, the truncated total, and a tree-bound MC estimate of the
    order-(n_max + 1) remainder magnitude.
    '''
    _require_ginibre(spec)
    p = len(fixed_paths)
    if n_max > 4:
        raise ValueError("truncation budget is n_max <= 4")
    if n_max < max(p, 1):
        raise ValueError("n_max below the leading order")
    pair = _pair_interaction(spec.params)
    mass = spec.intensity.total_mass
    orders = list(range(max(p, 1), n_max + 1))

    def order_value(n, rng, bound_mode=False):
        drawn = [spec.intensity.sample_loop(rng) for _ in range(n - p)]
        weight = math.prod(_self_weight(w, pair) for w in drawn)
        zeta, _ = _zeta_matrix(list(fixed_paths) + drawn, pair)
        phi = tree_sum(zeta) if bound_mode else ursell(zeta)
        factor = (math.factorial(n) // math.factorial(n - p)) * mass ** (n - p)
        return factor * weight * phi, weight

    report = {"p": p, "n_max": n_max, "orders": orders, "means": [],
              "std_errors": [], "ess": [], "mass": mass}
    for n in orders:
        vals, wts = _order_mc(order_value, n, n_samples, seed + n, workers)
        report["means"].append(vals[0])
        report["std_errors"].append(vals[1])
        report["ess"].append(wts)
    rem = _order_mc(lambda n, rng: order_value(n, rng, bound_mode=True),
                    n_max + 1, n_samples, seed + n_max + 1, workers)
    report["remainder"] = rem[0][0]
    report["remainder_se"] = rem[0][1]
    report["total"] = float(sum(report["means"]))
    report["total_se"] = float(math.sqrt(sum(s * s for s in report["std_errors"])))
    return report


def _order_mc(order_value, n, n_samples, seed, workers):
    '''Deterministic ordered-reduction MC for one expansion order;
    returns ((mean, std_error), effective sample size of the weights).'''
    streams = np.random.SeedSequence(seed).spawn(workers)
    parts = []
    w_sum = w_sq = 0.0
    for w, n_w in enumerate(_chunks(n_samples, workers)):
        rng = np.random.default_rng(streams[w])
        c, m, m2 = 0, 0.0, 0.0
        for _ in range(n_w):
            x, wt = order_value(n, rng)
            w_sum += wt
            w_sq += wt * wt
            c += 1
            d = x - m
            m += d / c
            m2 += d * (x - m)
        parts.append((c, m, m2))
    count, mean, M2 = _welford_merge(parts)
    var = M2 / (count - 1) if count > 1 else 0.0
    se = math.sqrt(var / count) if count else 0.0
    ess = w_sum * w_sum / w_sq if w_sq > 0 else 0.0
    return (mean, se), ess


def expansion_csv_rows(report):
    '''Rows (order, mean, std_error, tree_bound_remainder) for CSV dumps;
    the remainder is attached to the last truncated order.'''
    rows = []
    for k, n in enumerate(report["orders"]):
        rem = report["remainder"] if n == report["n_max"] else ""
        rows.append([n, report["means"][k], report["std_errors"][k], rem])
    return rows


def log_Z_via_expansion(spec, n_max, n_samples, seed, workers=1):
    '''log Z = X - X^0 truncated at n_max; X^0 (zero interaction) has
    only the order-1 term, which equals the free loop mass exactly.'''
    report = estimate_X(spec, [], n_max, n_samples, seed, workers)
    report["X0"] = spec.intensity.total_mass
    report["log_Z"] = report["total"] - report["X0"]
    report["log_Z_se"] = report["total_se"]
    return report


def gamma_via_expansion(spec, p, xs, ys, n_max, n_samples, seed, workers=1):
    '''Expansion estimate of the kernel entry Gamma_p(x, y):
    sum over endpoint permutations of open paths drawn from the
    normalized duration law (with the muhat normalization and
    self-interaction weight), times the partition sum of per-block
    one-sample X estimates.  Unbiased because the loop draws of distinct
    blocks are independent within a sample.'''
    _require_ginibre(spec)
    if p < 1 or p > 2:
        raise ValueError("p must be 1 or 2 (partition enumeration budget)")
    xs = [int(x) for x in np.atleast_1d(xs)]
    ys = [int(y) for y in np.atleast_1d(ys)]
    if len(xs) != p or len(ys) != p:
        raise ValueError("x and y must have length p")
    pair = _pair_interaction(spec.params)
    mass = spec.intensity.total_mass
    law = spec.duration_law()
    perms = list(itertools.permutations(range(p)))
    parts_list = list(_partitions(range(p)))

    def one_block_X(block_paths, rng):
        b = len(block_paths)
        total = 0.0
        for n in range(b, n_max + 1):
            drawn = [spec.intensity.sample_loop(rng) for _ in range(n - b)]
            weight = math.prod(_self_weight(w, pair) for w in drawn)
            zeta, _ = _zeta_matrix(block_paths + drawn, pair)
            factor = (math.factorial(n) // math.factorial(n - b)
                      ) * mass ** (n - b)
            total += factor * weight * ursell(zeta)
        return total

    def one(rng):
        val = 0.0
        for pi in perms:
            opens, hit = [], True
            for i in range(p):
                T = float(law.sample(rng))
                path = sample_free_walk(spec.torus, xs[i], T, rng)
                if path.end != ys[pi[i]]:
                    hit = False
                    break
                opens.append(path)
            if not hit:
                continue
            weight = math.prod(law.normalization * _self_weight(w, pair)
                               for w in opens)
            part_sum = 0.0
            for partition in parts_list:
                prod = 1.0
                for block in partition:
                    prod *= one_block_X([opens[i] for i in block], rng)
                part_sum += prod
            val += weight * part_sum
        return val

    mean, se, count = run_mc(one, n_samples, seed, workers)
    meta = {"kind": "gamma_expansion", "p": p, "x": xs, "y": ys,
            "n_max": n_max, "workers": workers}
    return McEstimate(mean, se, count, seed, meta)


# -- bound harnesses ---------------------------------------------------------

def grid_exponential_moment(kappa, nu, q, tol=1e-15):
    '''nu sum_{T in nu N*} e^{-kappa T} T^q, truncated below tol relative.'''
    total, k = 0.0, 1
    while True:
        term = nu * math.exp(-kappa * nu * k) * (nu * k) ** q
        total += term
        # past the mode the terms decay at least geometrically
        if k * kappa * nu > q and term < tol * max(total, 1e-300):
            return total
        k += 1


def riemann_sum_bound_check(kappa_grid, nu_factors, q_grid):
    '''Check nu sum_T e^{-kappa T} T^q <= C q!/kappa^{q+1} with one
    constant C over the grid; nu runs over nu_factors / kappa (<= 1/kappa).
    Reports the smallest working C (the max ratio).'''
    rows, c_max = [], 0.0
    for kappa in kappa_grid:
        for fac in nu_factors:
            if fac > 1.0 + 1e-12:
                raise ValueError("need nu <= 1/kappa")
            nu = fac / kappa
            for q in q_grid:
                lhs = grid_exponential_moment(kappa, nu, q)
                rhs = math.factorial(q) / kappa ** (q + 1)
                ratio = lhs / rhs
                c_max = max(c_max, ratio)
                rows.append({"kappa": kappa, "nu": nu, "q": q,
                             "lhs": lhs, "rhs": rhs, "ratio": ratio})
    return {"C": c_max, "rows": rows}


def integration_bound_check(spec, q_grid, n_samples, seed, workers=1,
                            reference_duration=None):
    '''MC estimates of the four vertex-integration left-hand sides for a
    fixed constant reference loop, against their stated right-hand sides:
      (i)   int mu(dwt) T^q |zeta(w, wt)|        vs T(w) q! ||v||_1 / kappa^{q+1}
      (ii)  nu sum_y int muhat_{y,x} T^q |zeta|  vs T(w) (q+1)! ||v||_1 / kappa^{q+2}
      (iii) int mu(dwt) T^q  (q >= 1)            vs (q-1)! |Lambda| / kappa^q
      (iv)  nu sum_y int muhat_{y,x} T^q         vs q! / kappa^{q+1}
    Reports per-clause fitted constants (max LHS/RHS over the q grid).'''
    _require_ginibre(spec)
    if spec.params.mode != "meanfield":
        raise ValueError("bound harness expects the mean-field coupling")
    pair = _pair_interaction(spec.params)
    nu, kappa = spec.params.nu, spec.intensity.kappa
    mass = spec.intensity.total_mass
    c_hat = math.exp(-kappa * nu) / (1.0 - math.exp(-kappa * nu))
    v_l1 = float(np.sum(np.abs(spec.params.vL)))
    T_ref = reference_duration if reference_duration is not None else nu
    ref = sample_free_walk(spec.torus, 0, T_ref, np.random.default_rng(0))
    law = spec.duration_law()
    rows, consts = [], {k: 0.0 for k in ("i", "ii", "iii", "iv")}
    for qi, q in enumerate(q_grid):
        def closed_plain(rng):
            wt = spec.intensity.sample_loop(rng)
            return mass * _self_weight(wt, pair) * wt.duration ** q

        def closed_zeta(rng):
            wt = spec.intensity.sample_loop(rng)
            z = abs(math.exp(-0.5 * pair(ref, wt)) - 1.0)
            return mass * _self_weight(wt, pair) * wt.duration ** q * z

        def open_plain(rng):
            T = float(law.sample(rng))
            wt = sample_free_walk(spec.torus, 0, T, rng)
            return nu * c_hat * _self_weight(wt, pair) * T ** q

        def open_zeta(rng):
            T = float(law.sample(rng))
            wt = sample_free_walk(spec.torus, 0, T, rng)
            z = abs(math.exp(-0.5 * pair(ref, wt)) - 1.0)
            return nu * c_hat * _self_weight(wt, pair) * T ** q * z

        ests = {}
        ests["i"] = run_mc(closed_zeta, n_samples, seed + 10 * qi, workers)
        ests["ii"] = run_mc(open_zeta, n_samples, seed + 10 * qi + 1, workers)
        ests["iii"] = (run_mc(closed_plain, n_samples,
                              seed + 10 * qi + 2, workers)
                       if q >= 1 else None)
        ests["iv"] = run_mc(open_plain, n_samples, seed + 10 * qi + 3, workers)
        rhs = {
            "i": T_ref * math.factorial(q) * v_l1 / kappa ** (q + 1),
            "ii": T_ref * math.factorial(q + 1) * v_l1 / kappa ** (q + 2),
            "iii": (math.factorial(q - 1) * spec.torus.n_sites / kappa ** q
                    if q >= 1 else None),
            "iv": math.factorial(q) / kappa ** (q + 1),
        }
        row = {"q": q}
        for key in ("i", "ii", "iii", "iv"):
            if ests[key] is None:
                continue
            mean, se, _ = ests[key]
            ratio = mean / rhs[key]
            consts[key] = max(consts[key], ratio)
            row[key] = {"lhs": mean, "lhs_se": se, "rhs": rhs[key],
                        "ratio": ratio}
        rows.append(row)
    return {"constants": consts, "rows": rows, "T_ref": T_ref,
            "v_l1": v_l1}
