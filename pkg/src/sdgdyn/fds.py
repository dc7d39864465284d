"""Finite dynamical systems over products of integer intervals.

A system is a self-map of ``X = X_1 x ... x X_n`` where each ``X_i`` is a
finite integer interval.  Transition tables are stored per component over
the full state space, indexed by a mixed-radix offset with component 1 most
significant: ``offset(x) = sum_i (x_i - min X_i) * W_i`` with ``W_n = 1`` and
``W_i = W_{i+1} * |X_{i+1}|``.  This is exactly numpy's C order, so tables
reshape to ``shape = (|X_1|, ..., |X_n|)`` without reindexing.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .sdg import (
    NEGATIVE,
    POSITIVE,
    PreconditionError,
    ResourceCapError,
    SdgParseError,
    SignedDigraph,
)

DEFAULT_STATE_CAP = 10**7
DEFAULT_TABLE_CAP = 10**7

State = tuple[int, ...]


def state_cap() -> int:
    """Largest allowed state-space size; the SDG_CAP env var overrides it."""
    raw = os.environ.get("SDG_CAP")
    if raw is None:
        return DEFAULT_STATE_CAP
    try:
        return int(raw)
    except ValueError:
        raise SdgParseError(f"SDG_CAP must be an integer, got {raw!r}") from None


@dataclass(frozen=True)
class IntervalProduct:
    """An ordered product of finite integer intervals ``[lo, hi]``."""

    intervals: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        norm = tuple((int(lo), int(hi)) for lo, hi in self.intervals)
        object.__setattr__(self, "intervals", norm)
        for lo, hi in norm:
            if lo > hi:
                raise PreconditionError(f"empty interval [{lo},{hi}]")
        if self.size > state_cap():
            raise ResourceCapError(
                f"state space of size {self.size} exceeds cap {state_cap()}"
            )

    @property
    def n(self) -> int:
        return len(self.intervals)

    @cached_property
    def shape(self) -> tuple[int, ...]:
        return tuple(hi - lo + 1 for lo, hi in self.intervals)

    @cached_property
    def size(self) -> int:
        out = 1
        for lo, hi in self.intervals:
            out *= hi - lo + 1
        return out

    @cached_property
    def lows(self) -> tuple[int, ...]:
        return tuple(lo for lo, _ in self.intervals)

    @cached_property
    def weights(self) -> tuple[int, ...]:
        w = [1] * self.n
        for i in range(self.n - 2, -1, -1):
            w[i] = w[i + 1] * self.shape[i + 1]
        return tuple(w)

    def contains(self, state: Sequence[int]) -> bool:
        return len(state) == self.n and all(
            lo <= x <= hi for x, (lo, hi) in zip(state, self.intervals)
        )

    def offset(self, state: Sequence[int]) -> int:
        if not self.contains(state):
            raise PreconditionError(f"state {tuple(state)} outside domain")
        return sum(
            (x - lo) * w for x, (lo, _), w in zip(state, self.intervals, self.weights)
        )

    def state(self, offset: int) -> State:
        if not 0 <= offset < self.size:
            raise PreconditionError(f"offset {offset} out of range")
        out = []
        for (lo, _), w in zip(self.intervals, self.weights):
            out.append(lo + offset // w)
            offset %= w
        return tuple(out)

    def states(self) -> Iterator[State]:
        """All states in offset order (last component varies fastest)."""
        return product(*(range(lo, hi + 1) for lo, hi in self.intervals))

    @cached_property
    def coordinate_grids(self) -> tuple[np.ndarray, ...]:
        """Per-component value of every state, each a flat array of length size."""
        grids = np.indices(self.shape).reshape(self.n, -1)
        return tuple(grids[i] + self.lows[i] for i in range(self.n))

    def subset_of(self, other: "IntervalProduct") -> bool:
        return self.n == other.n and all(
            olo <= lo and hi <= ohi
            for (lo, hi), (olo, ohi) in zip(self.intervals, other.intervals)
        )

    def offsets_in(self, other: "IntervalProduct") -> np.ndarray:
        """Offsets of this domain's states inside a larger domain."""
        if not self.subset_of(other):
            raise PreconditionError("domain is not contained in the target domain")
        acc = np.zeros(self.size, dtype=np.int64)
        for i in range(self.n):
            acc += (self.coordinate_grids[i] - other.lows[i]) * other.weights[i]
        return acc


@dataclass(frozen=True, eq=False)
class Fds:
    """A finite dynamical system: a domain plus one full table per component."""

    domain: IntervalProduct
    tables: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        tabs = []
        for i, t in enumerate(self.tables):
            arr = np.asarray(t, dtype=np.int64)
            if arr.shape != (self.domain.size,):
                raise PreconditionError(
                    f"table {i} has {arr.shape}, expected ({self.domain.size},)"
                )
            lo, hi = self.domain.intervals[i]
            if arr.size and (arr.min() < lo or arr.max() > hi):
                raise PreconditionError(f"table {i} leaves interval [{lo},{hi}]")
            arr.flags.writeable = False
            tabs.append(arr)
        if len(tabs) != self.domain.n:
            raise PreconditionError("one table per component required")
        object.__setattr__(self, "tables", tuple(tabs))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Fds):
            return NotImplemented
        return self.domain == other.domain and all(
            np.array_equal(a, b) for a, b in zip(self.tables, other.tables)
        )

    @property
    def n(self) -> int:
        return self.domain.n

    @cached_property
    def successor_offsets(self) -> np.ndarray:
        """Offset of ``f(x)`` for every state offset ``x``."""
        acc = np.zeros(self.domain.size, dtype=np.int64)
        for i in range(self.n):
            acc += (self.tables[i] - self.domain.lows[i]) * self.domain.weights[i]
        return acc

    def evaluate(self, state: Sequence[int]) -> State:
        off = self.domain.offset(state)
        return tuple(int(t[off]) for t in self.tables)

    def iterate(self, state: Sequence[int], k: int) -> State:
        if k < 0:
            raise PreconditionError("iteration count must be nonnegative")
        off = self.domain.offset(state)
        succ = self.successor_offsets
        for _ in range(k):
            off = int(succ[off])
        return self.domain.state(off)

    def image_offsets(self, offsets: np.ndarray | None = None) -> np.ndarray:
        """Sorted unique offsets of ``f(S)`` (``S`` = whole domain by default)."""
        succ = self.successor_offsets
        if offsets is None:
            return np.unique(succ)
        return np.unique(succ[offsets])

    # -- structure ----------------------------------------------------------

    def interaction_graph(self, names: Sequence[str] | None = None) -> SignedDigraph:
        """Extract the signed dependence graph, comparing unit steps only.

        There is a positive (negative) arc ``j -> i`` when increasing ``x_j``
        by one raises (lowers) ``f_i`` somewhere in the domain.
        """
        if names is None:
            names = tuple(str(i + 1) for i in range(self.n))
        if len(names) != self.n:
            raise PreconditionError("need one vertex name per component")
        shape = self.domain.shape
        arcs = []
        for i in range(self.n):
            cube = self.tables[i].reshape(shape)
            for j in range(self.n):
                if shape[j] < 2:
                    continue
                diff = np.diff(cube, axis=j)
                if (diff > 0).any():
                    arcs.append((names[j], names[i], POSITIVE))
                if (diff < 0).any():
                    arcs.append((names[j], names[i], NEGATIVE))
        return SignedDigraph.from_arcs(arcs, names)

    def is_degree_bounded(
        self, graph: SignedDigraph | None = None
    ) -> tuple[bool, tuple[int, ...]]:
        """Check interval sizes against the interaction graph's out-degrees.

        Requires ``|X_i| = 2`` for non-isolated sinks and
        ``|X_i| <= out-degree + 1`` otherwise (hence 1 for isolated
        vertices).  Returns the verdict and the offending component indices.
        """
        g = graph if graph is not None else self.interaction_graph()
        if g.n != self.n:
            raise PreconditionError("graph arity differs from system arity")
        bad = []
        for i, v in enumerate(g.vertices):
            size = self.domain.shape[i]
            dout, din = g.out_degree(v), g.in_degree(v)
            if dout == 0 and din > 0:
                ok = size == 2
            else:
                ok = size <= dout + 1
            if not ok:
                bad.append(i)
        return (not bad, tuple(bad))

    def nilpotency_index(self) -> int | None:
        """Least k with ``f^k`` constant, or None if no iterate is constant.

        Iterates the image chain ``S_1 = f(X)``, ``S_{m+1} = f(S_m)`` until it
        stabilizes; the chain is strictly decreasing until it reaches the
        eventual image.
        """
        succ = self.successor_offsets
        current = np.unique(succ)
        k = 1
        while True:
            if current.size == 1:
                return k
            nxt = np.unique(succ[current])
            if nxt.size == current.size:
                return None
            current = nxt
            k += 1

    def fixed_points(self) -> list[State]:
        """All states with ``f(x) = x``, sorted by offset."""
        offs = np.nonzero(self.successor_offsets == np.arange(self.domain.size))[0]
        return [self.domain.state(int(o)) for o in offs]

    # -- transformations ------------------------------------------------------

    def translate(self, deltas: Sequence[int]) -> "Fds":
        """Conjugate by a per-component shift ``x_i -> x_i + d_i``."""
        if len(deltas) != self.n:
            raise PreconditionError("need one delta per component")
        dom = IntervalProduct(
            tuple(
                (lo + d, hi + d)
                for (lo, hi), d in zip(self.domain.intervals, deltas)
            )
        )
        tables = tuple(t + d for t, d in zip(self.tables, deltas))
        return Fds(dom, tables)

    def mirror(self, components: Iterable[int]) -> "Fds":
        """Conjugate by ``x_i -> lo_i + hi_i - x_i`` on the given components.

        Arc signs are preserved only for sets closed under the dependence
        relation (for example whole weak components of the interaction
        graph); callers are responsible for choosing such sets.
        """
        comps = sorted(set(components))
        for i in comps:
            if not 0 <= i < self.n:
                raise PreconditionError(f"component {i} out of range")
        if not comps:
            return self
        shape = self.domain.shape
        tables = []
        for i in range(self.n):
            cube = np.flip(self.tables[i].reshape(shape), axis=comps)
            flat = cube.reshape(-1).copy()
            if i in comps:
                lo, hi = self.domain.intervals[i]
                flat = lo + hi - flat
            tables.append(flat)
        return Fds(self.domain, tuple(tables))


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------


def from_component_functions(
    domain: IntervalProduct,
    functions: Sequence[Callable[[tuple[np.ndarray, ...]], np.ndarray]],
) -> Fds:
    """Build a system by evaluating one vectorized function per component.

    Each function receives the per-component coordinate arrays (flat, in
    offset order) and returns the component's value for every state.
    """
    grids = domain.coordinate_grids
    tables = []
    for fn in functions:
        vals = np.asarray(fn(grids), dtype=np.int64)
        tables.append(np.broadcast_to(vals, (domain.size,)).copy())
    return Fds(domain, tuple(tables))


def constant_fds(domain: IntervalProduct, value: Sequence[int]) -> Fds:
    if not domain.contains(value):
        raise PreconditionError("constant value outside domain")
    return Fds(
        domain,
        tuple(np.full(domain.size, v, dtype=np.int64) for v in value),
    )


def random_fds(rng, sizes: Sequence[int], lows: Sequence[int] | None = None) -> Fds:
    """Uniformly random tables over the given interval sizes (test support)."""
    if lows is None:
        lows = [0] * len(sizes)
    dom = IntervalProduct(tuple((lo, lo + s - 1) for lo, s in zip(lows, sizes)))
    tables = tuple(
        np.array(
            [rng.randint(lo, lo + s - 1) for _ in range(dom.size)], dtype=np.int64
        )
        for lo, s in zip(lows, sizes)
    )
    return Fds(dom, tables)


# ---------------------------------------------------------------------------
# convergence between systems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceWitness:
    """Outcome of checking that ``f`` converges toward ``h`` in ``k`` steps.

    Valid iff ``f^k(X) <= h(Y) <= Y <= X`` and ``f`` agrees with ``h`` on
    every state of ``Y``.  The first inclusion is componentwise: every
    coordinate of every ``f^k`` value must be a value ``h`` takes at that
    coordinate, i.e. ``f^k(X)`` lies in the box ``h_1(Y) x ... x h_n(Y)``.
    (Requiring membership in the exact image set ``{h(y)}`` is strictly
    stronger and provably unachievable: when two components of ``h`` are
    correlated, any system realizing extra arcs between them has image
    states outside ``{h(y)}``.)
    """

    steps: int
    image_of_fk: tuple[State, ...]
    image_of_h: tuple[State, ...]
    domains_nested: bool
    h_image_in_h_domain: bool
    fk_image_in_h_image: bool
    agreement: bool
    counterexample: State | None = None

    @property
    def valid(self) -> bool:
        return (
            self.domains_nested
            and self.h_image_in_h_domain
            and self.fk_image_in_h_image
            and self.agreement
        )

    def failures(self) -> list[str]:
        out = []
        if not self.domains_nested:
            out.append("subsystem domain is not contained in the system domain")
        if not self.h_image_in_h_domain:
            out.append("subsystem image leaves its own domain")
        if not self.fk_image_in_h_image:
            out.append(f"f^{self.steps}(X) is not contained in h(Y)")
        if not self.agreement:
            out.append(f"f and h disagree on Y (e.g. at {self.counterexample})")
        return out


def converges_toward(f: Fds, h: Fds, k: int) -> ConvergenceWitness:
    """Decide by enumeration whether ``f`` converges toward ``h`` in ``k`` steps."""
    if f.n != h.n:
        raise PreconditionError("systems have different numbers of components")
    if k < 0:
        raise PreconditionError("step count must be nonnegative")
    nested = h.domain.subset_of(f.domain)
    if not nested:
        return ConvergenceWitness(k, (), (), False, False, False, False)

    y_in_x = h.domain.offsets_in(f.domain)

    h_img_y = h.image_offsets()
    h_img_states = [h.domain.state(int(o)) for o in h_img_y]

    # f^k(X) as offsets within X.
    fk = np.arange(f.domain.size, dtype=np.int64)
    succ = f.successor_offsets
    for _ in range(k):
        fk = np.unique(succ[fk])

    # Componentwise inclusion in h_1(Y) x ... x h_n(Y).
    fk_in_h = True
    rem = fk.copy()
    for i in range(f.n):
        coord = f.domain.lows[i] + rem // f.domain.weights[i]
        rem = rem % f.domain.weights[i]
        if not np.isin(coord, np.unique(h.tables[i])).all():
            fk_in_h = False
            break

    agree = True
    counter: State | None = None
    f_on_y = succ[y_in_x]
    h_succ_x = np.empty(h.domain.size, dtype=np.int64)
    h_succ = h.successor_offsets
    for off in range(h.domain.size):
        h_succ_x[off] = f.domain.offset(h.domain.state(int(h_succ[off])))
    mism = np.nonzero(f_on_y != h_succ_x)[0]
    if mism.size:
        agree = False
        counter = h.domain.state(int(mism[0]))

    fk_states = tuple(f.domain.state(int(o)) for o in fk)
    return ConvergenceWitness(
        steps=k,
        image_of_fk=fk_states,
        image_of_h=tuple(h_img_states),
        domains_nested=True,
        h_image_in_h_domain=True,
        fk_image_in_h_image=fk_in_h,
        agreement=agree,
        counterexample=counter,
    )


# ---------------------------------------------------------------------------
# brute-force enumeration of degree-bounded systems
# ---------------------------------------------------------------------------


def _admissible_sizes(g: SignedDigraph, v: str) -> list[int]:
    dout, din = g.out_degree(v), g.in_degree(v)
    if dout == 0 and din > 0:
        return [2]
    if dout == 0:
        return [1]
    # Size 1 cannot realize an out-arc, so it never yields an admissible system.
    return list(range(2, dout + 2))


def _local_sign_ok(
    local: np.ndarray, local_shape: tuple[int, ...], axis: int, want: set[str]
) -> bool:
    diff = np.diff(local.reshape(local_shape), axis=axis)
    got = set()
    if (diff > 0).any():
        got.add(POSITIVE)
    if (diff < 0).any():
        got.add(NEGATIVE)
    return got == want


def enumerate_degree_bounded_systems(
    g: SignedDigraph, table_cap: int = DEFAULT_TABLE_CAP
) -> Iterator[Fds]:
    """Yield every degree-bounded system whose interaction graph is exactly ``g``.

    Intervals are normalized to start at 0; all admissible size assignments
    are scanned in ascending lexicographic order.  Component functions are
    enumerated as local tables over the component's in-neighbors and
    filtered for exact sign realization, so the yield order is
    deterministic.  Raises :class:`ResourceCapError` once more than
    ``table_cap`` candidate local tables have been scanned.
    """
    n = g.n
    verts = g.vertices
    size_menu = [_admissible_sizes(g, v) for v in verts]
    in_nbrs = [sorted(g.in_neighbors(v), key=g.index) for v in verts]
    want_signs = [
        {
            j: {s for s in (POSITIVE, NEGATIVE) if (j, v, s) in g.arcs}
            for j in in_nbrs[i]
        }
        for i, v in enumerate(verts)
    ]

    scanned = 0
    for sizes in product(*size_menu):
        domain = IntervalProduct(tuple((0, s - 1) for s in sizes))
        grids = domain.coordinate_grids

        per_component: list[list[np.ndarray]] = []
        feasible = True
        for i, v in enumerate(verts):
            nbrs = in_nbrs[i]
            local_shape = tuple(sizes[g.index(j)] for j in nbrs)
            cells = 1
            for s in local_shape:
                cells *= s
            valid: list[np.ndarray] = []
            total = sizes[i] ** cells
            scanned += total
            if scanned > table_cap:
                raise ResourceCapError(
                    f"enumeration exceeds cap of {table_cap} candidate tables"
                )
            for combo in product(range(sizes[i]), repeat=cells):
                local = np.array(combo, dtype=np.int64)
                ok = True
                for axis, j in enumerate(nbrs):
                    if not _local_sign_ok(local, local_shape, axis, want_signs[i][j]):
                        ok = False
                        break
                if ok:
                    valid.append(local)
            if not valid:
                feasible = False
                break
            # Expansion index: local offset of each full state.
            if nbrs:
                loc_weights = [1] * len(nbrs)
                for a in range(len(nbrs) - 2, -1, -1):
                    loc_weights[a] = loc_weights[a + 1] * local_shape[a + 1]
                expand = np.zeros(domain.size, dtype=np.int64)
                for a, j in enumerate(nbrs):
                    expand += grids[g.index(j)] * loc_weights[a]
            else:
                expand = np.zeros(domain.size, dtype=np.int64)
            per_component.append([loc[expand] for loc in valid])
        if not feasible:
            continue
        for combo_tables in product(*per_component):
            yield Fds(domain, tuple(combo_tables))


# ---------------------------------------------------------------------------
# JSON serialization ("fds v1")
# ---------------------------------------------------------------------------

FDS_VERSION = "fds.v1"


def fds_to_dict(f: Fds) -> dict:
    return {
        "version": FDS_VERSION,
        "intervals": [[lo, hi] for lo, hi in f.domain.intervals],
        "tables": [t.tolist() for t in f.tables],
    }


def fds_from_dict(data: dict) -> Fds:
    if not isinstance(data, dict) or data.get("version") != FDS_VERSION:
        raise SdgParseError(f"expected a {FDS_VERSION!r} document")
    try:
        intervals = tuple((int(lo), int(hi)) for lo, hi in data["intervals"])
        tables = [np.array(t, dtype=np.int64) for t in data["tables"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise SdgParseError(f"malformed system document: {exc}") from None
    try:
        return Fds(IntervalProduct(intervals), tuple(tables))
    except PreconditionError as exc:
        raise SdgParseError(str(exc)) from None


def save_fds(f: Fds, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(fds_to_dict(f), fh)
        fh.write("\n")


def load_fds(path: str) -> Fds:
    with open(path, "r", encoding="utf-8") as fh:
        return fds_from_dict(json.load(fh))
