"""Signed directed graphs and their structural analysis.

A signed digraph has a finite ordered vertex set and a set of arcs
``(source, target, sign)`` with sign ``+`` or ``-``.  The same ordered pair
may carry both signs ("parallel arcs") but never the same sign twice.
Vertex identifiers are opaque strings; every deterministic tie-break in this
package uses the position of the vertex in the graph's vertex tuple
(first-seen order), never the lexicographic order of the names.

All types are immutable values and all operations are pure functions, so
everything here is safe to share between threads.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Iterable, Iterator, Sequence

POSITIVE = "+"
NEGATIVE = "-"
SIGNS = (POSITIVE, NEGATIVE)

#: An arc is (source vertex, target vertex, sign).
Arc = tuple[str, str, str]

DEFAULT_CYCLE_CAP = 10**6


class SdgError(Exception):
    """Base class for all errors raised by this package."""


class SdgParseError(SdgError):
    """Malformed graph or system file."""


class PreconditionError(SdgError):
    """A documented precondition of an operation does not hold."""


class ResourceCapError(SdgError):
    """A configurable resource cap was exceeded."""


class InternalInvariantError(SdgError):
    """A construction reached a state its invariants forbid.

    Raised instead of silently patching over the problem; seeing this error
    means either the input violated an unchecked assumption or there is a
    bug worth reporting.
    """


def _check_sign(sign: str) -> None:
    if sign not in SIGNS:
        raise SdgParseError(f"invalid arc sign {sign!r}, expected '+' or '-'")


@dataclass(frozen=True)
class UnsignedDigraph:
    """Plain digraph: the signed graph with signs (and parallel arcs) dropped."""

    vertices: tuple[str, ...]
    arcs: frozenset[tuple[str, str]]

    def out_degree(self, v: str) -> int:
        return sum(1 for (s, _) in self.arcs if s == v)

    def in_degree(self, v: str) -> int:
        return sum(1 for (_, t) in self.arcs if t == v)


@dataclass(frozen=True)
class SignedDigraph:
    """Immutable signed digraph with ordered vertices.

    Build instances with :meth:`from_arcs` (which fixes the vertex order as
    first seen) or pass an explicit vertex tuple and arc frozenset.
    """

    vertices: tuple[str, ...]
    arcs: frozenset[Arc]

    def __post_init__(self) -> None:
        seen = set(self.vertices)
        if len(seen) != len(self.vertices):
            raise SdgParseError("duplicate vertex identifier")
        for src, dst, sign in self.arcs:
            _check_sign(sign)
            if src not in seen or dst not in seen:
                raise SdgParseError(f"arc ({src},{dst},{sign}) references unknown vertex")

    @classmethod
    def from_arcs(
        cls, arcs: Iterable[Arc] = (), vertices: Iterable[str] = ()
    ) -> "SignedDigraph":
        """Build a graph; vertex order is declaration order then first use in arcs."""
        order: list[str] = []
        seen: set[str] = set()

        def add(v: str) -> None:
            if v not in seen:
                seen.add(v)
                order.append(v)

        for v in vertices:
            add(v)
        arc_list: list[Arc] = []
        arc_set: set[Arc] = set()
        for src, dst, sign in arcs:
            arc = (str(src), str(dst), sign)
            if arc in arc_set:
                raise SdgParseError(f"duplicate arc ({src},{dst},{sign})")
            arc_set.add(arc)
            arc_list.append(arc)
            add(arc[0])
            add(arc[1])
        return cls(tuple(order), frozenset(arc_set))

    # -- basic accessors ---------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.vertices)

    @cached_property
    def _index(self) -> dict[str, int]:
        return {v: k for k, v in enumerate(self.vertices)}

    def index(self, v: str) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise PreconditionError(f"unknown vertex {v!r}") from None

    @cached_property
    def _in_plus(self) -> dict[str, frozenset[str]]:
        acc: dict[str, set[str]] = {v: set() for v in self.vertices}
        for src, dst, sign in self.arcs:
            if sign == POSITIVE:
                acc[dst].add(src)
        return {v: frozenset(s) for v, s in acc.items()}

    @cached_property
    def _in_minus(self) -> dict[str, frozenset[str]]:
        acc: dict[str, set[str]] = {v: set() for v in self.vertices}
        for src, dst, sign in self.arcs:
            if sign == NEGATIVE:
                acc[dst].add(src)
        return {v: frozenset(s) for v, s in acc.items()}

    def in_plus(self, v: str) -> frozenset[str]:
        """Vertices with a positive arc into ``v``."""
        self.index(v)
        return self._in_plus[v]

    def in_minus(self, v: str) -> frozenset[str]:
        """Vertices with a negative arc into ``v``."""
        self.index(v)
        return self._in_minus[v]

    def in_neighbors(self, v: str) -> frozenset[str]:
        return self.in_plus(v) | self.in_minus(v)

    def out_neighbors(self, v: str) -> frozenset[str]:
        self.index(v)
        return frozenset(dst for (src, dst, _) in self.arcs if src == v)

    def in_degree(self, v: str) -> int:
        """Number of arcs entering ``v``; parallel arcs count twice."""
        return len(self.in_plus(v)) + len(self.in_minus(v))

    def out_degree(self, v: str) -> int:
        """Number of arcs leaving ``v``; parallel arcs count twice."""
        self.index(v)
        return sum(1 for (src, _, _) in self.arcs if src == v)

    def sorted_arcs(self) -> list[Arc]:
        """Arcs in (source index, target index, '+' before '-') order."""
        return sorted(
            self.arcs,
            key=lambda a: (self.index(a[0]), self.index(a[1]), a[2] != POSITIVE),
        )

    # -- derived graphs ----------------------------------------------------

    def underlying(self) -> UnsignedDigraph:
        """The unsigned digraph: one arc per ordered pair that carries any sign."""
        return UnsignedDigraph(
            self.vertices, frozenset((s, t) for (s, t, _) in self.arcs)
        )

    @cached_property
    def _under_succ(self) -> dict[str, tuple[str, ...]]:
        acc: dict[str, set[str]] = {v: set() for v in self.vertices}
        for src, dst, _ in self.arcs:
            acc[src].add(dst)
        return {
            v: tuple(sorted(s, key=self.index)) for v, s in acc.items()
        }

    @cached_property
    def _under_pred(self) -> dict[str, tuple[str, ...]]:
        acc: dict[str, set[str]] = {v: set() for v in self.vertices}
        for src, dst, _ in self.arcs:
            acc[dst].add(src)
        return {
            v: tuple(sorted(s, key=self.index)) for v, s in acc.items()
        }

    def without_arcs(self, arcs: Iterable[Arc]) -> "SignedDigraph":
        """Spanning subgraph with the given arcs removed."""
        drop = set(arcs)
        unknown = drop - self.arcs
        if unknown:
            raise PreconditionError(f"arcs not present: {sorted(unknown)}")
        return SignedDigraph(self.vertices, self.arcs - drop)

    def spanning(self, arcs: Iterable[Arc]) -> "SignedDigraph":
        """Spanning subgraph keeping exactly the given arcs."""
        keep = frozenset(arcs)
        unknown = keep - self.arcs
        if unknown:
            raise PreconditionError(f"arcs not present: {sorted(unknown)}")
        return SignedDigraph(self.vertices, keep)

    def induced(self, vertices: Iterable[str]) -> "SignedDigraph":
        """Subgraph induced by a vertex subset, keeping the ambient order."""
        want = set(vertices)
        unknown = want - set(self.vertices)
        if unknown:
            raise PreconditionError(f"unknown vertices: {sorted(unknown)}")
        verts = tuple(v for v in self.vertices if v in want)
        arcs = frozenset(a for a in self.arcs if a[0] in want and a[1] in want)
        return SignedDigraph(verts, arcs)

    def without_vertices(self, vertices: Iterable[str]) -> "SignedDigraph":
        drop = set(vertices)
        return self.induced(v for v in self.vertices if v not in drop)

    def union(self, other: "SignedDigraph") -> "SignedDigraph":
        """Union of vertex sets and arc sets (shared names denote shared vertices)."""
        verts = list(self.vertices)
        seen = set(verts)
        for v in other.vertices:
            if v not in seen:
                seen.add(v)
                verts.append(v)
        return SignedDigraph(tuple(verts), self.arcs | other.arcs)

    def is_spanning_subgraph_of(self, other: "SignedDigraph") -> bool:
        return self.vertices == other.vertices and self.arcs <= other.arcs

    def weak_components(self) -> tuple[tuple[str, ...], ...]:
        """Connected components of the underlying undirected graph, ordered."""
        adj: dict[str, set[str]] = {v: set() for v in self.vertices}
        for src, dst, _ in self.arcs:
            adj[src].add(dst)
            adj[dst].add(src)
        seen: set[str] = set()
        comps: list[tuple[str, ...]] = []
        for root in self.vertices:
            if root in seen:
                continue
            queue, comp = deque([root]), []
            seen.add(root)
            while queue:
                v = queue.popleft()
                comp.append(v)
                for w in adj[v]:
                    if w not in seen:
                        seen.add(w)
                        queue.append(w)
            comps.append(tuple(sorted(comp, key=self.index)))
        return tuple(comps)


# ---------------------------------------------------------------------------
# strong components, lambda, beta
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComponentStructure:
    """Strong components plus the quantities driving the nilpotent synthesis.

    ``lam`` is the largest, over all vertices i, of the least value of
    (distance from an initial component I to i) + |I|.  ``beta`` is 0 when
    every initial strong component is a single loop-free vertex and 1
    otherwise.
    """

    strong_components: tuple[tuple[str, ...], ...]
    initial_components: tuple[tuple[str, ...], ...]
    is_basic: bool
    beta: int
    lam: int


def _tarjan_sccs(g: SignedDigraph) -> list[list[str]]:
    # Iterative Tarjan; succ lists are index-sorted so output is deterministic.
    index_of: dict[str, int] = {}
    lowlink: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    sccs: list[list[str]] = []
    counter = 0

    for root in g.vertices:
        if root in index_of:
            continue
        work: list[tuple[str, int]] = [(root, 0)]
        while work:
            v, pi = work.pop()
            if pi == 0:
                index_of[v] = lowlink[v] = counter
                counter += 1
                stack.append(v)
                on_stack.add(v)
            recurse = False
            succ = g._under_succ[v]
            for k in range(pi, len(succ)):
                w = succ[k]
                if w not in index_of:
                    work.append((v, k + 1))
                    work.append((w, 0))
                    recurse = True
                    break
                if w in on_stack:
                    lowlink[v] = min(lowlink[v], index_of[w])
            if recurse:
                continue
            if lowlink[v] == index_of[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                sccs.append(comp)
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[v])
    return sccs


def component_structure(g: SignedDigraph) -> ComponentStructure:
    """Strong components, which are initial, whether basic, beta and lambda."""
    if g.n == 0:
        raise PreconditionError("component structure of the empty graph is undefined")
    sccs = [sorted(c, key=g.index) for c in _tarjan_sccs(g)]
    sccs.sort(key=lambda c: g.index(c[0]))
    member: dict[str, int] = {}
    for k, comp in enumerate(sccs):
        for v in comp:
            member[v] = k

    initial_flags = [True] * len(sccs)
    for src, dst, _ in g.arcs:
        if member[src] != member[dst]:
            initial_flags[member[dst]] = False
    initial = [tuple(c) for c, flag in zip(sccs, initial_flags) if flag]

    def trivial(comp: Sequence[str]) -> bool:
        v = comp[0]
        return len(comp) == 1 and v not in g._under_succ[v]

    basic = all(trivial(c) for c in initial)

    lam = 0
    best = [math.inf] * g.n
    for comp in initial:
        dist = _multi_source_distance(g, comp)
        for v in g.vertices:
            score = dist[v] + len(comp)
            k = g.index(v)
            if score < best[k]:
                best[k] = score
    lam_f = max(best)
    if math.isinf(lam_f):
        raise InternalInvariantError("vertex unreachable from every initial component")
    lam = int(lam_f)

    return ComponentStructure(
        strong_components=tuple(tuple(c) for c in sccs),
        initial_components=tuple(initial),
        is_basic=basic,
        beta=0 if basic else 1,
        lam=lam,
    )


def _multi_source_distance(g: SignedDigraph, sources: Iterable[str]) -> dict[str, float]:
    dist: dict[str, float] = {v: math.inf for v in g.vertices}
    queue: deque[str] = deque()
    for v in sources:
        g.index(v)
        if dist[v] != 0:
            dist[v] = 0
            queue.append(v)
    while queue:
        v = queue.popleft()
        for w in g._under_succ[v]:
            if math.isinf(dist[w]):
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def distance(g: SignedDigraph, sources: Iterable[str], target: str) -> float:
    """Fewest arcs on a path from any vertex of ``sources`` to ``target``.

    Returns 0 when the target belongs to the source set and ``math.inf``
    when it is unreachable.
    """
    g.index(target)
    return _multi_source_distance(g, sources)[target]


def classify_vertices(
    g: SignedDigraph,
) -> tuple[frozenset[str], frozenset[str], frozenset[str]]:
    """Return (sources, sinks, isolated): in-degree 0 / out-degree 0 / both."""
    sources = frozenset(v for v in g.vertices if g.in_degree(v) == 0)
    sinks = frozenset(v for v in g.vertices if g.out_degree(v) == 0)
    return sources, sinks, sources & sinks


# ---------------------------------------------------------------------------
# cycles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SignedCycle:
    """A simple directed cycle with one chosen sign per step.

    ``vertices[k] -> vertices[k+1]`` carries ``signs[k]``; the final sign
    closes the cycle back to ``vertices[0]``.  The rotation starts at the
    vertex with the smallest index, which makes descriptors canonical.
    """

    vertices: tuple[str, ...]
    signs: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.vertices) != len(self.signs) or not self.vertices:
            raise PreconditionError("cycle needs one sign per step")
        if len(set(self.vertices)) != len(self.vertices):
            raise PreconditionError("cycle repeats a vertex")

    @property
    def sign(self) -> str:
        neg = sum(1 for s in self.signs if s == NEGATIVE)
        return POSITIVE if neg % 2 == 0 else NEGATIVE

    def arcs(self) -> tuple[Arc, ...]:
        m = len(self.vertices)
        return tuple(
            (self.vertices[k], self.vertices[(k + 1) % m], self.signs[k])
            for k in range(m)
        )

    def vertex_set(self) -> frozenset[str]:
        return frozenset(self.vertices)


def _simple_cycles_underlying(
    g: SignedDigraph, max_length: int | None
) -> Iterator[tuple[str, ...]]:
    # Each simple cycle is produced once, rotated so its smallest-index vertex
    # comes first: roots are scanned in index order and the search never
    # descends below the current root.
    idx = g.index
    succ = g._under_succ
    for root in g.vertices:
        r = idx(root)
        path = [root]
        on_path = {root}
        iters = [iter(succ[root])]
        while iters:
            advanced = False
            for w in iters[-1]:
                if w == root:
                    if max_length is None or len(path) <= max_length:
                        yield tuple(path)
                    continue
                if idx(w) <= r or w in on_path:
                    continue
                if max_length is not None and len(path) >= max_length:
                    continue
                path.append(w)
                on_path.add(w)
                iters.append(iter(succ[w]))
                advanced = True
                break
            if not advanced:
                iters.pop()
                on_path.discard(path.pop())


def enumerate_cycles(
    g: SignedDigraph,
    max_length: int | None = None,
    cap: int = DEFAULT_CYCLE_CAP,
) -> list[SignedCycle]:
    """All simple directed cycles, one descriptor per sign pattern.

    Parallel arcs multiply the descriptors: a cycle whose steps offer both
    signs appears once per combination.  Deterministic order; raises
    :class:`ResourceCapError` past ``cap`` descriptors.
    """
    sign_options: dict[tuple[str, str], list[str]] = {}
    for src, dst, sign in g.arcs:
        sign_options.setdefault((src, dst), [])
    for pair in sign_options:
        opts = [s for s in SIGNS if (pair[0], pair[1], s) in g.arcs]
        sign_options[pair] = opts

    out: list[SignedCycle] = []
    for cyc in _simple_cycles_underlying(g, max_length):
        m = len(cyc)
        step_opts = [sign_options[(cyc[k], cyc[(k + 1) % m])] for k in range(m)]
        for combo in product(*step_opts):
            out.append(SignedCycle(cyc, tuple(combo)))
            if len(out) > cap:
                raise ResourceCapError(f"more than {cap} cycles")
    return out


def find_disjoint_positive_cycles(
    g: SignedDigraph, k: int, cap: int = DEFAULT_CYCLE_CAP
) -> list[SignedCycle] | None:
    """Exact search for ``k`` vertex-disjoint positive cycles.

    Returns the first family in the deterministic search order, or ``None``
    when no such family exists (the backtracking is exhaustive).
    """
    if k <= 0:
        raise PreconditionError("k must be positive")
    positives = [c for c in enumerate_cycles(g, cap=cap) if c.sign == POSITIVE]

    chosen: list[SignedCycle] = []
    used: set[str] = set()

    def search(start: int) -> bool:
        if len(chosen) == k:
            return True
        for pos in range(start, len(positives)):
            c = positives[pos]
            vs = c.vertex_set()
            if vs & used:
                continue
            chosen.append(c)
            used.update(vs)
            if search(pos + 1):
                return True
            chosen.pop()
            used.difference_update(vs)
        return False

    return list(chosen) if search(0) else None


def underlying_cycle_order(g: SignedDigraph) -> tuple[str, ...] | None:
    """Vertex order when the underlying digraph is one cycle through all vertices."""
    if g.n == 0:
        return None
    for v in g.vertices:
        if len(g._under_succ[v]) != 1 or len(g._under_pred[v]) != 1:
            return None
    order = [g.vertices[0]]
    while True:
        nxt = g._under_succ[order[-1]][0]
        if nxt == order[0]:
            break
        if nxt in order:
            return None
        order.append(nxt)
    return tuple(order) if len(order) == g.n else None


def is_signed_cycle(g: SignedDigraph) -> bool:
    """True when the underlying digraph is a single all-covering cycle and no
    ordered pair carries both signs."""
    if underlying_cycle_order(g) is None:
        return False
    pairs = [(s, t) for (s, t, _) in g.arcs]
    return len(pairs) == len(set(pairs)) == len(g.arcs)


# ---------------------------------------------------------------------------
# text format and DOT export
# ---------------------------------------------------------------------------


def parse_sdg(text: str) -> SignedDigraph:
    """Parse the ``sdg v1`` text format.

    Grammar: a ``sdg v1`` header line, then any number of ``vertex <name>``
    and ``arc <src> <dst> <+|->`` lines.  ``#`` starts a comment; blank lines
    are ignored.  Duplicate arc or vertex declarations are rejected.
    """
    vertices: list[str] = []
    arcs: list[Arc] = []
    declared: set[str] = set()
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if not header_seen:
            if line != "sdg v1":
                raise SdgParseError(f"line {lineno}: expected 'sdg v1' header")
            header_seen = True
            continue
        fields = line.split()
        if fields[0] == "vertex" and len(fields) == 2:
            if fields[1] in declared:
                raise SdgParseError(f"line {lineno}: duplicate vertex {fields[1]!r}")
            declared.add(fields[1])
            vertices.append(fields[1])
        elif fields[0] == "arc" and len(fields) == 4:
            src, dst, sign = fields[1], fields[2], fields[3]
            if sign not in SIGNS:
                raise SdgParseError(f"line {lineno}: bad sign {sign!r}")
            if (src, dst, sign) in arcs:
                raise SdgParseError(f"line {lineno}: duplicate arc")
            arcs.append((src, dst, sign))
        else:
            raise SdgParseError(f"line {lineno}: unrecognized directive {fields[0]!r}")
    if not header_seen:
        raise SdgParseError("missing 'sdg v1' header")
    return SignedDigraph.from_arcs(arcs, vertices)


def format_sdg(g: SignedDigraph) -> str:
    """Serialize to the ``sdg v1`` text format (round-trips through parse_sdg)."""
    lines = ["sdg v1"]
    lines.extend(f"vertex {v}" for v in g.vertices)
    lines.extend(f"arc {s} {t} {sign}" for (s, t, sign) in g.sorted_arcs())
    return "\n".join(lines) + "\n"


def load_sdg(path: str) -> SignedDigraph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_sdg(fh.read())


def save_sdg(g: SignedDigraph, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_sdg(g))


def to_dot(g: SignedDigraph, name: str = "G") -> str:
    """Graphviz DOT export: positive arcs green, negative red, parallels doubled."""
    lines = [f"digraph {name} {{"]
    for v in g.vertices:
        lines.append(f'  "{v}";')
    for src, dst, sign in g.sorted_arcs():
        color = "green" if sign == POSITIVE else "red"
        lines.append(f'  "{src}" -> "{dst}" [color={color}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
