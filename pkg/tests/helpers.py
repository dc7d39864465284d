"""Shared test fixtures: worked example graphs, random generators, and
independent brute-force oracles (kept deliberately separate from the library
implementations they check)."""

from __future__ import annotations

import math
import random
from itertools import combinations, permutations, product

from sdgdyn import (
    NEGATIVE,
    POSITIVE,
    Fds,
    IntervalProduct,
    SignedDigraph,
    construct_nilpotent,
    is_signed_cycle,
)

SIGNS = (POSITIVE, NEGATIVE)


# ---------------------------------------------------------------------------
# fixed example graphs
# ---------------------------------------------------------------------------


def eight_vertex_example() -> SignedDigraph:
    """Three initial components {1,2,3}, {4,5}, {6}; lambda 3, beta 1."""
    arcs = [
        ("1", "2", "-"), ("2", "1", "-"), ("2", "1", "+"), ("3", "1", "+"),
        ("2", "3", "-"), ("4", "5", "+"), ("5", "4", "-"), ("3", "7", "+"),
        ("4", "7", "-"), ("4", "8", "+"), ("5", "8", "-"), ("6", "8", "-"),
        ("7", "8", "+"), ("7", "8", "-"), ("8", "7", "-"),
    ]
    return SignedDigraph.from_arcs(arcs, vertices=[str(i) for i in range(1, 9)])


def pseudo_cycle_example() -> SignedDigraph:
    """Underlying 3-cycle with parallel arcs from 3 to 1."""
    arcs = [("3", "1", "+"), ("3", "1", "-"), ("1", "2", "+"), ("2", "3", "-")]
    return SignedDigraph.from_arcs(arcs, vertices=["1", "2", "3"])


def double_loop_example() -> SignedDigraph:
    """Single vertex carrying a positive and a negative loop."""
    return SignedDigraph.from_arcs([("1", "1", "+"), ("1", "1", "-")])


# ---------------------------------------------------------------------------
# random generators
# ---------------------------------------------------------------------------


def random_connected_sdg(
    rng: random.Random,
    n_max: int = 7,
    extra_arcs: int | None = None,
    loops: bool = True,
) -> SignedDigraph:
    """Random weakly connected signed digraph with first-seen vertex order."""
    n = rng.randint(1, n_max)
    names = [str(i + 1) for i in range(n)]
    arcs: set[tuple[str, str, str]] = set()
    for k in range(1, n):
        other = names[rng.randrange(k)]
        src, dst = (names[k], other) if rng.random() < 0.5 else (other, names[k])
        arcs.add((src, dst, rng.choice(SIGNS)))
    extra = extra_arcs if extra_arcs is not None else rng.randint(0, 2 * n)
    for _ in range(extra):
        src = rng.choice(names)
        dst = rng.choice(names)
        if src == dst and not loops:
            continue
        arcs.add((src, dst, rng.choice(SIGNS)))
    return SignedDigraph.from_arcs(sorted(arcs), vertices=names)


def random_non_cycle_connected_sdg(rng: random.Random, n_max: int = 7) -> SignedDigraph:
    while True:
        g = random_connected_sdg(rng, n_max)
        if g.arcs and not is_signed_cycle(g):
            return g
        if g.n == 1 and not g.arcs:
            return g  # the one-vertex arcless graph is admissible


def random_subsystem_triple(
    rng: random.Random, n_max: int = 6, attempts: int = 200
):
    """Random (g, H, h) with H a spanning subgraph satisfying the convergence
    preconditions and h a degree-bounded system on exactly H, or None."""
    for _ in range(attempts):
        g = random_connected_sdg(rng, n_max)
        if not g.arcs:
            continue
        arcs = sorted(g.arcs)
        keep = [a for a in arcs if rng.random() < 0.5]
        sub = g.spanning(keep)
        iso = {
            v
            for v in g.vertices
            if sub.in_degree(v) == 0 == sub.out_degree(v)
            and (g.in_degree(v) > 0 or g.out_degree(v) > 0)
        }
        rest = sub.without_vertices(iso)
        ok = True
        for v in rest.vertices:
            if rest.in_degree(v) == 0 and g.in_degree(v) > 0:
                ok = False
                break
            if rest.out_degree(v) == 0 and g.out_degree(v) > 0:
                ok = False
                break
        if not ok:
            continue
        for comp in g.weak_components():
            if set(comp) <= iso and is_signed_cycle(g.induced(comp)):
                ok = False
                break
        if not ok:
            continue
        h = random_system_on(rng, sub)
        if h is None:
            continue
        return g, sub, h
    return None


def random_system_on(
    rng: random.Random, graph: SignedDigraph, attempts: int = 80
) -> Fds | None:
    """A degree-bounded system whose interaction graph is exactly ``graph``:
    randomized local-table sampling with a canonical fallback."""
    import numpy as np

    n = graph.n
    sizes = []
    for v in graph.vertices:
        dout, din = graph.out_degree(v), graph.in_degree(v)
        if dout == 0 and din > 0:
            sizes.append(2)
        elif dout == 0:
            sizes.append(1)
        else:
            sizes.append(rng.randint(2, dout + 1))
    domain = IntervalProduct(tuple((0, s - 1) for s in sizes))
    grids = domain.coordinate_grids

    tables = []
    for k, v in enumerate(graph.vertices):
        nbrs = sorted(graph.in_neighbors(v), key=graph.index)
        want = {
            j: {s for s in SIGNS if (j, v, s) in graph.arcs} for j in nbrs
        }
        local_shape = tuple(sizes[graph.index(j)] for j in nbrs)
        cells = 1
        for s in local_shape:
            cells *= s
        found = None
        for _ in range(attempts):
            local = np.array(
                [rng.randrange(sizes[k]) for _ in range(cells)], dtype=np.int64
            )
            good = True
            for axis, j in enumerate(nbrs):
                diff = np.diff(local.reshape(local_shape), axis=axis)
                got = set()
                if (diff > 0).any():
                    got.add(POSITIVE)
                if (diff < 0).any():
                    got.add(NEGATIVE)
                if got != want[j]:
                    good = False
                    break
            if good:
                found = local
                break
        if found is None:
            return _canonical_system_on(graph)
        if nbrs:
            weights = [1] * len(nbrs)
            for a in range(len(nbrs) - 2, -1, -1):
                weights[a] = weights[a + 1] * local_shape[a + 1]
            expand = np.zeros(domain.size, dtype=np.int64)
            for a, j in enumerate(nbrs):
                expand += grids[graph.index(j)] * weights[a]
            tables.append(found[expand])
        else:
            tables.append(np.full(domain.size, int(found[0]), dtype=np.int64))
    return Fds(domain, tuple(tables))


def _canonical_system_on(graph: SignedDigraph) -> Fds | None:
    """Deterministic system on exactly ``graph``: nilpotent construction on
    non-cycle components, the unique two-level network on signed cycles."""
    from sdgdyn import cycle_subsystem, enumerate_cycles

    cycle_comps = []
    for comp in graph.weak_components():
        sub = graph.induced(comp)
        if is_signed_cycle(sub):
            cycle_comps.append(comp)
    if not cycle_comps:
        f, _ = construct_nilpotent(graph)
        return f
    # Mixed case: build per component and paste tables together.
    import numpy as np

    intervals: dict[str, tuple[int, int]] = {}
    values: dict[str, tuple] = {}  # vertex -> (kind, payload)
    for comp in graph.weak_components():
        sub = graph.induced(comp)
        if is_signed_cycle(sub):
            cyc = enumerate_cycles(sub)[0]
            pred = {dst: (src, sign) for (src, dst, sign) in cyc.arcs()}
            for v in comp:
                intervals[v] = (0, 1)
                values[v] = ("cycle", pred[v])
        else:
            f, _ = construct_nilpotent(sub)
            for i, v in enumerate(sub.vertices):
                intervals[v] = f.domain.intervals[i]
                values[v] = ("table", (sub, f, i))
    domain = IntervalProduct(tuple(intervals[v] for v in graph.vertices))
    grids = domain.coordinate_grids
    tables = []
    for v in graph.vertices:
        kind, payload = values[v]
        if kind == "cycle":
            src, sign = payload
            col = grids[graph.index(src)]
            tables.append(col if sign == POSITIVE else 1 - col)
        else:
            sub, f, i = payload
            off = np.zeros(domain.size, dtype=np.int64)
            for k2, u in enumerate(sub.vertices):
                off += (
                    grids[graph.index(u)] - f.domain.lows[k2]
                ) * f.domain.weights[k2]
            tables.append(f.tables[i][off])
    return Fds(domain, tuple(tables))


# ---------------------------------------------------------------------------
# independent oracles
# ---------------------------------------------------------------------------


def oracle_lambda(g: SignedDigraph) -> int:
    """Reachability-matrix recomputation of the layer bound (no BFS/Tarjan)."""
    n = g.n
    idx = {v: i for i, v in enumerate(g.vertices)}
    adj = [[math.inf] * n for _ in range(n)]
    for (s, t, _) in g.arcs:
        adj[idx[s]][idx[t]] = 1
    for i in range(n):
        adj[i][i] = 0  # d(j, j) = 0 even on a loop
    for m in range(n):  # Floyd-Warshall
        for i in range(n):
            for j in range(n):
                if adj[i][m] + adj[m][j] < adj[i][j]:
                    adj[i][j] = adj[i][m] + adj[m][j]
    sccs: list[frozenset[int]] = []
    seen = set()
    for i in range(n):
        if i in seen:
            continue
        comp = frozenset(
            j for j in range(n) if adj[i][j] < math.inf and adj[j][i] < math.inf
        )
        sccs.append(comp)
        seen |= comp
    initial = [
        comp
        for comp in sccs
        if all(
            idx[s] in comp or adj[idx[s]][next(iter(comp))] == math.inf
            for (s, t, _) in g.arcs
            if idx[t] in comp
        )
    ]
    best = 0
    for j in range(n):
        score = min(
            (min(adj[i][j] for i in comp) + len(comp)) for comp in initial
            if any(adj[i][j] < math.inf for i in comp)
        )
        best = max(best, score)
    return int(best)


def oracle_cycles(g: SignedDigraph, max_len: int | None = None):
    """Brute-force cycle enumeration: try every vertex subset and rotation."""
    found = set()
    names = list(g.vertices)
    maxm = len(names) if max_len is None else min(max_len, len(names))
    for m in range(1, maxm + 1):
        for subset in combinations(names, m):
            for perm in permutations(subset):
                if perm[0] != min(perm, key=g.index):
                    continue
                steps = [
                    (perm[t], perm[(t + 1) % m]) for t in range(m)
                ]
                opts = []
                ok = True
                for (a, b) in steps:
                    signs = [s for s in SIGNS if (a, b, s) in g.arcs]
                    if not signs:
                        ok = False
                        break
                    opts.append(signs)
                if not ok:
                    continue
                for combo in product(*opts):
                    found.add((perm, combo))
    return found


def brute_force_image_chain(f: Fds, steps: int) -> set:
    """f^steps(X) computed state by state, without the library's chain."""
    out = set()
    for s in f.domain.states():
        x = s
        for _ in range(steps):
            x = f.evaluate(x)
        out.add(x)
    return out
