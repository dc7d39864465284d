"""Constructive synthesis of degree-bounded systems on signed digraphs.

Three construction families live here:

* :func:`construct_nilpotent` builds, on any graph whose connected
  components are not signed cycles, a degree-bounded system whose iterates
  collapse to a single target state within ``lambda + beta`` steps, together
  with a checkable certificate.
* :func:`extend_by_arc` / :func:`extend_all` grow a degree-bounded system on
  a spanning subgraph arc by arc until it lives on the full graph, while
  keeping its image inside the original domain and its values on the
  original domain intact.
* :func:`construct_converging` combines both to produce, for a subsystem
  ``h`` on a spanning subgraph, a system on the whole graph that converges
  toward ``h`` in at most (number of isolated-only vertices + 1) steps.
  :func:`construct_no_fixed_point` and :func:`construct_2k_fixed_points`
  are the fixed-point-count applications.

Every construction re-verifies its own output (interaction graph equality,
degree bounds, and the claimed dynamic property) before returning it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from .sdg import (
    NEGATIVE,
    POSITIVE,
    Arc,
    InternalInvariantError,
    PreconditionError,
    ResourceCapError,
    SdgParseError,
    SignedDigraph,
    SignedCycle,
    _multi_source_distance,
    classify_vertices,
    component_structure,
    enumerate_cycles,
    find_disjoint_positive_cycles,
    is_signed_cycle,
    underlying_cycle_order,
)
from .fds import (
    ConvergenceWitness,
    Fds,
    IntervalProduct,
    converges_toward,
    from_component_functions,
)

# ---------------------------------------------------------------------------
# nilpotency certificates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NilpotencyCertificate:
    """Witness for a nilpotent construction.

    ``representatives`` maps each initial strong component (as an
    index-ordered vertex tuple) to its chosen representative, ``stripped``
    is the graph with all arcs into representatives removed, and ``layers``
    partition the vertex set by distance from the representatives in the
    stripped graph.  ``target`` is the constant state reached after at most
    ``lam + beta`` steps.
    """

    lam: int
    beta: int
    representatives: tuple[tuple[tuple[str, ...], str], ...]
    layers: tuple[tuple[str, ...], ...]
    target: tuple[int, ...]
    interval_sizes: tuple[int, ...]
    stripped: SignedDigraph

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "beta": self.beta,
            "layers": [list(layer) for layer in self.layers],
            "xi": list(self.target),
            "representatives": {
                ",".join(comp): rep for comp, rep in self.representatives
            },
        }


def certificate_from_dict(data: dict, graph: SignedDigraph) -> NilpotencyCertificate:
    """Rebuild a certificate from its JSON form (stripped graph is derived)."""
    try:
        reps = tuple(
            sorted(
                (
                    (tuple(key.split(",")), rep)
                    for key, rep in data["representatives"].items()
                ),
                key=lambda item: graph.index(item[0][0]),
            )
        )
        layers = tuple(tuple(layer) for layer in data["layers"])
        target = tuple(int(x) for x in data["xi"])
        lam = int(data["lambda"])
        beta = int(data["beta"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SdgParseError(f"malformed certificate: {exc}") from None
    rep_set = {rep for _, rep in reps}
    stripped = graph.without_arcs([a for a in graph.arcs if a[1] in rep_set])
    # Interval sizes are owned by the system file; zeros make the checker
    # compare against the actual domain instead of trusting the certificate.
    sizes = (0,) * graph.n
    return NilpotencyCertificate(lam, beta, reps, layers, target, sizes, stripped)


def check_nilpotency_certificate(
    g: SignedDigraph, f: Fds, cert: NilpotencyCertificate
) -> list[str]:
    """Re-verify a synthesized system against its certificate.

    Returns a list of problems (empty when everything holds): structural
    certificate invariants, interaction-graph equality, degree bounds, and
    the simulated collapse to the target within ``lam + beta`` steps.
    """
    problems: list[str] = []
    cs = component_structure(g)
    if cert.lam != cs.lam:
        problems.append(f"lambda mismatch: certificate {cert.lam}, graph {cs.lam}")
    if cert.beta != cs.beta:
        problems.append(f"beta mismatch: certificate {cert.beta}, graph {cs.beta}")

    flat = [v for layer in cert.layers for v in layer]
    if sorted(flat) != sorted(g.vertices) or len(flat) != len(set(flat)):
        problems.append("layers do not partition the vertex set")
    rep_set = {rep for _, rep in cert.representatives}
    if cert.layers and set(cert.layers[0]) != rep_set:
        problems.append("first layer differs from the representative set")
    initial = {tuple(c) for c in cs.initial_components}
    if {comp for comp, _ in cert.representatives} != initial:
        problems.append("representative keys differ from the initial components")
    for comp, rep in cert.representatives:
        if rep not in comp:
            problems.append(f"representative {rep} outside its component")

    stripped = g.without_arcs([a for a in g.arcs if a[1] in rep_set])
    if cert.stripped.arcs != stripped.arcs:
        problems.append("stripped graph is not the graph minus arcs into representatives")
    for p in range(1, len(cert.layers)):
        prev = set(cert.layers[p - 1])
        for v in cert.layers[p]:
            if not (stripped.in_neighbors(v) & prev):
                problems.append(
                    f"vertex {v} in layer {p + 1} has no in-neighbor in layer {p}"
                )

    if f.n != g.n:
        problems.append("system arity differs from graph order")
        return problems
    if tuple(f.domain.shape) != cert.interval_sizes and any(cert.interval_sizes):
        problems.append("interval sizes differ from the system domain")
    sources, _, _ = classify_vertices(g)
    for v in sources:
        i = g.index(v)
        if cert.target[i] != f.domain.intervals[i][0]:
            problems.append(f"target at source {v} is not the interval minimum")

    ig = f.interaction_graph(g.vertices)
    if ig.arcs != g.arcs:
        problems.append("interaction graph differs from the input graph")
    ok, bad = f.is_degree_bounded(ig)
    if not ok:
        problems.append(f"degree bound violated at components {bad}")

    if not f.domain.contains(cert.target):
        problems.append("target state outside the domain")
        return problems
    current = np.arange(f.domain.size, dtype=np.int64)
    succ = f.successor_offsets
    for _ in range(cert.lam + cert.beta):
        current = np.unique(succ[current])
    want = f.domain.offset(cert.target)
    if current.size != 1 or int(current[0]) != want:
        problems.append(
            f"iterates do not collapse to the target within {cert.lam + cert.beta} steps"
        )
    return problems


# ---------------------------------------------------------------------------
# nilpotent construction
# ---------------------------------------------------------------------------


def _eligible_representatives(sub: SignedDigraph, comp: Sequence[str]) -> list[str]:
    out = []
    for v in comp:
        if sub.in_degree(v) == 0:
            out.append(v)
            continue
        if all(len(sub._under_succ[j]) >= 2 for j in sub.in_neighbors(v)):
            out.append(v)
    return out


class _ComponentPlan:
    """Per-connected-component plan: intervals, update rules, target, layers."""

    def __init__(self) -> None:
        self.intervals: dict[str, tuple[int, int]] = {}
        self.xi: dict[str, int] = {}
        self.layers: list[list[str]] = []
        self.representatives: list[tuple[tuple[str, ...], str]] = []
        self.rules: dict[str, tuple] = {}  # v -> rule spec consumed by _rule_table


def _plan_trivial(sub: SignedDigraph) -> _ComponentPlan:
    v = sub.vertices[0]
    plan = _ComponentPlan()
    plan.intervals[v] = (0, 0)
    plan.xi[v] = 0
    plan.layers = [[v]]
    plan.representatives = [((v,), v)]
    plan.rules[v] = ("const", 0)
    return plan


def _plan_cycle_with_parallels(sub: SignedDigraph) -> _ComponentPlan:
    order = underlying_cycle_order(sub)
    assert order is not None
    succ = {order[t]: order[(t + 1) % len(order)] for t in range(len(order))}
    parallel = [
        v for v in order if v in sub.in_plus(succ[v]) and v in sub.in_minus(succ[v])
    ]
    if not parallel:
        raise InternalInvariantError("cycle component without parallel arcs")
    last = min(parallel, key=sub.index)
    pos = []
    v = succ[last]
    while True:
        pos.append(v)
        if v == last:
            break
        v = succ[v]

    plan = _ComponentPlan()
    pset = set(parallel)
    for v in pos:
        plan.intervals[v] = (0, 2) if v in pset else (0, 1)
    for t, v in enumerate(pos):
        prev = pos[t - 1]
        top = plan.intervals[v][1]
        if prev in sub.in_plus(v):
            plan.rules[v] = ("step_eq", prev, 1, top)
        else:
            plan.rules[v] = ("step_eq", prev, 0, top)
    plan.xi[pos[0]] = 0
    for t in range(1, len(pos)):
        v = pos[t]
        _, prev, trigger, top = plan.rules[v]
        plan.xi[v] = top if plan.xi[prev] == trigger else 0
    plan.layers = [[v] for v in pos]
    comp = tuple(sorted(pos, key=sub.index))
    plan.representatives = [(comp, pos[0])]
    return plan


def _plan_general(sub: SignedDigraph) -> _ComponentPlan:
    cs = component_structure(sub)
    plan = _ComponentPlan()
    for comp in cs.initial_components:
        eligible = _eligible_representatives(sub, comp)
        if not eligible:
            raise InternalInvariantError(
                f"no admissible representative in component {comp}"
            )
        plan.representatives.append((comp, min(eligible, key=sub.index)))
    reps = {rep for _, rep in plan.representatives}

    stripped = sub.without_arcs([a for a in sub.arcs if a[1] in reps])
    scs = component_structure(stripped)
    if {c for c in scs.initial_components} != {(r,) for r in reps}:
        raise InternalInvariantError("stripping arcs into representatives failed")
    _, sinks_sub, _ = classify_vertices(sub)
    _, sinks_stripped, _ = classify_vertices(stripped)
    if not sinks_stripped <= sinks_sub:
        raise InternalInvariantError("stripping created a new sink")

    dist = _multi_source_distance(stripped, reps)
    depth = max(int(dist[v]) for v in sub.vertices) + 1
    if depth > cs.lam:
        raise InternalInvariantError("layer depth exceeds lambda")
    plan.layers = [
        [v for v in sub.vertices if int(dist[v]) + 1 == p]
        for p in range(1, depth + 1)
    ]

    for v in sub.vertices:
        if any(v in sub.in_plus(r) and v in sub.in_minus(r) for r in reps):
            plan.intervals[v] = (0, 3)
        elif any(v in sub.in_plus(r) and v not in sub.in_minus(r) for r in reps):
            plan.intervals[v] = (0, 2)
        elif any(v in sub.in_minus(r) and v not in sub.in_plus(r) for r in reps):
            plan.intervals[v] = (0, 2)
        elif any(
            v in sub.in_plus(w) and v in sub.in_minus(w)
            for w in sub.vertices
            if w not in reps
        ):
            plan.intervals[v] = (0, 2)
        else:
            plan.intervals[v] = (0, 1)

    first = set(plan.layers[0])
    for v in plan.layers[0]:
        plan.xi[v] = 1 if sub.in_minus(v) - sub.in_plus(v) else 0
    for p in range(1, len(plan.layers)):
        prev = set(plan.layers[p - 1])
        for v in plan.layers[p]:
            pos_ok = all(
                plan.xi[j] == 1 for j in (sub.in_plus(v) & prev)
            )
            neg_ok = all(
                plan.xi[j] == 0
                for j in ((sub.in_minus(v) - sub.in_plus(v)) & prev)
            )
            plan.xi[v] = 1 if pos_ok and neg_ok else 0

    for v in sub.vertices:
        plus_only = sub.in_plus(v) - sub.in_minus(v)
        both = sub.in_plus(v) & sub.in_minus(v)
        minus_only = sub.in_minus(v) - sub.in_plus(v)
        if v in first:
            plan.rules[v] = ("any", 2, tuple(plus_only), tuple(both), tuple(minus_only))
        elif plan.xi[v] == 1:
            plan.rules[v] = ("any", 1, tuple(plus_only), tuple(both), tuple(minus_only))
        else:
            plan.rules[v] = ("all", 1, tuple(plus_only), tuple(both), tuple(minus_only))
    return plan


def _rule_table(rule: tuple, grids, index: dict[str, int], size: int) -> np.ndarray:
    kind = rule[0]
    if kind == "const":
        return np.full(size, rule[1], dtype=np.int64)
    if kind == "step_eq":
        _, prev, trigger, top = rule
        return np.where(grids[index[prev]] == trigger, top, 0).astype(np.int64)
    _, theta, plus_only, both, minus_only = rule
    if kind == "any":
        acc = np.zeros(size, dtype=bool)
        for j in plus_only:
            acc |= grids[index[j]] >= theta
        for j in both:
            acc |= grids[index[j]] == theta
        for j in minus_only:
            acc |= grids[index[j]] < theta
    else:
        acc = np.ones(size, dtype=bool)
        for j in plus_only:
            acc &= grids[index[j]] >= theta
        for j in both:
            acc &= grids[index[j]] == theta
        for j in minus_only:
            acc &= grids[index[j]] < theta
    return acc.astype(np.int64)


def construct_nilpotent(g: SignedDigraph) -> tuple[Fds, NilpotencyCertificate]:
    """Build a degree-bounded system on ``g`` that iterates to a constant.

    Every connected component must be nonempty and must not be a signed
    cycle (on a signed cycle every degree-bounded system is a two-valued
    network with zero or two fixed points, so none is nilpotent).  The
    result collapses to the certificate's target within ``lam + beta``
    steps; disconnected graphs are handled per component.
    """
    if g.n == 0:
        raise PreconditionError("cannot synthesize on the empty graph")
    plans: list[_ComponentPlan] = []
    for comp in g.weak_components():
        sub = g.induced(comp)
        if is_signed_cycle(sub):
            raise PreconditionError(
                f"component {comp} is a signed cycle; no nilpotent degree-bounded "
                "system exists on it"
            )
        if sub.n == 1 and not sub.arcs:
            plans.append(_plan_trivial(sub))
        elif underlying_cycle_order(sub) is not None:
            plans.append(_plan_cycle_with_parallels(sub))
        else:
            plans.append(_plan_general(sub))

    intervals = []
    rules = []
    xi = []
    for v in g.vertices:
        plan = next(p for p in plans if v in p.intervals)
        intervals.append(plan.intervals[v])
        rules.append(plan.rules[v])
        xi.append(plan.xi[v])
    domain = IntervalProduct(tuple(intervals))
    index = {v: k for k, v in enumerate(g.vertices)}
    f = from_component_functions(
        domain,
        [
            (lambda grids, r=rule: _rule_table(r, grids, index, domain.size))
            for rule in rules
        ],
    )

    cs = component_structure(g)
    depth = max(len(p.layers) for p in plans)
    layers = tuple(
        tuple(
            v
            for v in g.vertices
            for p in plans
            if len(p.layers) > d and v in p.layers[d]
        )
        for d in range(depth)
    )
    reps = tuple(
        sorted(
            (rep for p in plans for rep in p.representatives),
            key=lambda item: g.index(item[1]),
        )
    )
    cert = NilpotencyCertificate(
        lam=cs.lam,
        beta=cs.beta,
        representatives=reps,
        layers=layers,
        target=tuple(xi),
        interval_sizes=tuple(domain.shape),
        stripped=g.without_arcs(
            [a for a in g.arcs if a[1] in {r for _, r in reps}]
        ),
    )
    problems = check_nilpotency_certificate(g, f, cert)
    if problems:
        raise InternalInvariantError(
            "nilpotent construction failed self-check: " + "; ".join(problems)
        )
    return f, cert


# ---------------------------------------------------------------------------
# arc-by-arc extension
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExtensionState:
    """Rolling state of :func:`extend_all`.

    ``new_inputs`` (``new_outputs``) are the vertices that were sources
    (sinks) of the base subgraph but are not sources (sinks) of the current
    graph any more.
    """

    graph: SignedDigraph
    system: Fds
    anchor: tuple[int, ...]
    new_inputs: frozenset[str]
    new_outputs: frozenset[str]


def _ab_sets(
    base: SignedDigraph, current: SignedDigraph
) -> tuple[frozenset[str], frozenset[str]]:
    a = frozenset(
        v
        for v in base.vertices
        if base.in_degree(v) == 0 and current.in_degree(v) > 0
    )
    b = frozenset(
        v
        for v in base.vertices
        if base.out_degree(v) == 0 and current.out_degree(v) > 0
    )
    return a, b


def check_extension_postconditions(
    state: ExtensionState, base_graph: SignedDigraph, base_system: Fds
) -> list[str]:
    """The four guarantees the extension keeps relative to its base system.

    1. the image of the extended system stays inside the base domain,
    2. componentwise images stay inside the base images except at vertices
       that gained inputs,
    3. the extended system agrees with the base wherever the anchor pins the
       vertices that gained outputs, and
    4. components whose current in-neighbors gained no outputs agree with
       the base on the whole base domain.
    """
    f, h = state.system, base_system
    X, Y = f.domain, h.domain
    a_set, b_set = _ab_sets(base_graph, state.graph)
    problems: list[str] = []

    for k, v in enumerate(base_graph.vertices):
        if v in a_set and Y.shape[k] == 1:
            # A base-isolated vertex that gained inputs holds one transient
            # value outside its single-point base interval; it is only
            # admitted when nothing ever reads it (a sink of the target).
            continue
        lo, hi = Y.intervals[k]
        if f.tables[k].min() < lo or f.tables[k].max() > hi:
            problems.append(f"image of component {k} leaves the base domain")

    for k, v in enumerate(base_graph.vertices):
        if v in a_set:
            continue
        allowed = set(np.unique(h.tables[k]).tolist())
        got = set(np.unique(f.tables[k]).tolist())
        if not got <= allowed:
            problems.append(f"image of component {k} leaves the base image")

    y_in_x = Y.offsets_in(X)
    mask = np.ones(Y.size, dtype=bool)
    for v in b_set:
        k = base_graph.index(v)
        mask &= Y.coordinate_grids[k] == state.anchor[k]
    for k in range(f.n):
        if (f.tables[k][y_in_x][mask] != h.tables[k][mask]).any():
            problems.append(
                f"component {k} deviates from the base on anchored states"
            )
            break

    for k, v in enumerate(base_graph.vertices):
        if state.graph.in_neighbors(v) & b_set:
            continue
        if (f.tables[k][y_in_x] != h.tables[k]).any():
            problems.append(
                f"component {k} depends on no new output yet deviates on the base domain"
            )
    return problems


def _growth_direction(
    state: ExtensionState,
    j: str,
    upcoming: Sequence[Arc],
    preference: int | None,
) -> int:
    """+1 to extend the tail interval upward, -1 downward.

    While ``j`` is still a source its update stays constant, and the first
    future arc into ``j`` dictates which end of the interval must keep the
    constant: a negative arc needs it at the top, a positive one at the
    bottom.  Without such a constraint the caller's preference (or upward)
    wins.
    """
    if state.graph.in_degree(j) == 0:
        for src, dst, sign in upcoming:
            if dst == j:
                return -1 if sign == NEGATIVE else 1
    return preference if preference is not None else 1


def _extended_tables(
    system: Fds,
    axis: int,
    direction: int,
    head: int,
    head_value: int,
    grow: bool,
) -> tuple[IntervalProduct, tuple[np.ndarray, ...]]:
    dom = system.domain
    shape = dom.shape
    if grow:
        lo, hi = dom.intervals[axis]
        new_interval = (lo, hi + 1) if direction > 0 else (lo - 1, hi)
        intervals = list(dom.intervals)
        intervals[axis] = new_interval
        new_dom = IntervalProduct(tuple(intervals))
        tables = []
        for k in range(system.n):
            cube = np.moveaxis(system.tables[k].reshape(shape), axis, 0)
            pad = cube[-1:] if direction > 0 else cube[:1]
            new = (
                np.concatenate([cube, pad]) if direction > 0
                else np.concatenate([pad, cube])
            )
            if k == head:
                if direction > 0:
                    new[-1] = head_value
                else:
                    new[0] = head_value
            tables.append(np.moveaxis(new, 0, axis).reshape(-1))
        return new_dom, tuple(tables)
    tables = []
    for k in range(system.n):
        cube = np.moveaxis(system.tables[k].reshape(shape), axis, 0).copy()
        if k == head:
            if direction > 0:
                cube[-1] = head_value
            else:
                cube[0] = head_value
        tables.append(np.moveaxis(cube, 0, axis).reshape(-1))
    return dom, tuple(tables)


def _finish_extension(
    state: ExtensionState,
    arc: Arc,
    new_dom: IntervalProduct,
    new_tables: tuple[np.ndarray, ...],
    base_graph: SignedDigraph,
    base_system: Fds,
) -> ExtensionState:
    new_graph = SignedDigraph(state.graph.vertices, state.graph.arcs | {arc})
    new_system = Fds(new_dom, new_tables)

    ig = new_system.interaction_graph(new_graph.vertices)
    if ig.arcs != new_graph.arcs:
        missing = new_graph.arcs - ig.arcs
        extra = ig.arcs - new_graph.arcs
        raise InternalInvariantError(
            f"extension by {arc} produced interaction graph with "
            f"missing={sorted(missing)} extra={sorted(extra)}"
        )
    ok, bad = new_system.is_degree_bounded(ig)
    if not ok:
        raise InternalInvariantError(
            f"extension by {arc} violates degree bounds at components {bad}"
        )

    a_set, b_set = _ab_sets(base_graph, new_graph)
    new_state = ExtensionState(new_graph, new_system, state.anchor, a_set, b_set)
    if __debug__:
        problems = check_extension_postconditions(new_state, base_graph, base_system)
        if problems:
            raise InternalInvariantError(
                f"extension by {arc} broke postconditions: " + "; ".join(problems)
            )
    return new_state


def _extend_into_isolated(
    state: ExtensionState,
    arc: Arc,
    base_graph: SignedDigraph,
    base_system: Fds,
    upcoming: Sequence[Arc],
) -> ExtensionState:
    """First arc into a vertex isolated so far.

    Only supported when the head never gains out-arcs (a sink of the final
    graph): its single-valued interval grows by one, the head steps to the
    new value exactly on the new plane of the (also grown) tail coordinate,
    and since nothing reads the head its transient value is harmless.
    """
    j, i, sign = arc
    cur, f = state.graph, state.system
    ji, ii = cur.index(j), cur.index(i)
    if any(a[0] == i for a in upcoming) or cur.out_degree(i) > 0:
        raise InternalInvariantError(
            f"arc {arc} enters an isolated vertex that later gains out-arcs"
        )
    if f.domain.shape[ii] != 1:
        raise InternalInvariantError(
            f"isolated vertex {i} carries an interval of size {f.domain.shape[ii]}"
        )
    xi_i = f.domain.intervals[ii][0]

    direction = _growth_direction(state, j, upcoming, None)
    plane_top = direction > 0
    rising = (sign == POSITIVE) == plane_top
    escape = xi_i + 1 if rising else xi_i - 1

    # Grow the head interval first; every table (the head's included) is
    # simply duplicated along it, since nothing depends on the head yet.
    mid_dom, mid_tables = _extended_tables(
        f, ii, 1 if rising else -1, head=-1, head_value=0, grow=True
    )
    # Then grow the tail coordinate; the head becomes a two-level step that
    # leaves its original value only on the new tail plane.
    new_dom, new_tables = _extended_tables(
        Fds(mid_dom, mid_tables), ji, direction, head=ii, head_value=escape, grow=True
    )
    return _finish_extension(
        state, arc, new_dom, new_tables, base_graph, base_system
    )


def extend_by_arc(
    state: ExtensionState,
    arc: Arc,
    base_graph: SignedDigraph,
    base_system: Fds,
    upcoming: Sequence[Arc] = (),
) -> ExtensionState:
    """Extend the current system by exactly one arc.

    The new system's interaction graph gains exactly ``arc``; the four
    postconditions of :func:`check_extension_postconditions` are
    re-established (and asserted in debug mode).  ``upcoming`` lists the
    arcs that will be added later, which steers the direction in which tail
    intervals grow.  Raises :class:`InternalInvariantError` when no sound
    treatment of the arc exists.
    """
    j, i, sign = arc
    cur, f = state.graph, state.system
    if arc in cur.arcs:
        raise PreconditionError(f"arc {arc} already present")
    ji, ii = cur.index(j), cur.index(i)

    j_sink = cur.out_degree(j) == 0
    i_source = cur.in_degree(i) == 0
    i_isolated = i_source and cur.out_degree(i) == 0
    if i_isolated:
        if j_sink:
            raise InternalInvariantError(
                f"arc {arc} runs from a current sink to an isolated vertex"
            )
        return _extend_into_isolated(
            state, arc, base_graph, base_system, upcoming
        )
    if j_sink and i_source:
        raise InternalInvariantError(
            f"arc {arc} runs from a current sink to a current source"
        )

    if not i_source:
        # Head already varies: reuse the extremes of its current image.
        img = f.tables[ii]
        vmin, vmax = int(img.min()), int(img.max())
        if vmin == vmax:
            raise InternalInvariantError(
                f"vertex {i} has inputs but a constant update"
            )
        if j_sink:
            # Tail was a sink: its interval has size 1 (isolated) or 2.
            width = f.domain.shape[ji]
            if width > 2:
                raise InternalInvariantError(
                    f"sink {j} carries an interval of size {width}"
                )
            grow = width == 1
            if grow:
                direction = _growth_direction(state, j, upcoming, None)
                plane_top = direction > 0
            else:
                lo, hi = f.domain.intervals[ji]
                plane_top = state.anchor[ji] == lo
        else:
            grow = True
            direction = _growth_direction(state, j, upcoming, None)
            plane_top = direction > 0
        if plane_top:
            value = vmax if sign == POSITIVE else vmin
        else:
            value = vmin if sign == POSITIVE else vmax
        dom, tables = _extended_tables(
            f, ji, 1 if plane_top else -1, ii, value, grow
        )
    else:
        # Head is a (non-isolated) source: its update is a constant of the
        # base domain, and the new step must stay inside the base interval.
        col = f.tables[ii]
        c = int(col[0])
        if (col != c).any():
            raise InternalInvariantError(f"source {i} has a non-constant update")
        ylo, yhi = base_system.domain.intervals[ii]
        up_ok = (c < yhi) if sign == POSITIVE else (c > ylo)
        down_ok = (c > ylo) if sign == POSITIVE else (c < yhi)
        preference = 1 if up_ok else (-1 if down_ok else None)
        if preference is None:
            raise InternalInvariantError(
                f"cannot realize arc {arc}: constant of {i} at an interval end "
                "with no admissible step"
            )
        # A loop makes its own head a non-source, so pending arcs into the
        # tail stop constraining the direction.
        if j == i:
            direction = preference
        else:
            direction = _growth_direction(state, j, upcoming, preference)
        plane_top = direction > 0
        if plane_top and not up_ok or (not plane_top and not down_ok):
            raise InternalInvariantError(
                f"cannot realize arc {arc}: growth direction forced by later "
                f"arcs conflicts with the constant of {i}"
            )
        if plane_top:
            value = yhi if sign == POSITIVE else ylo
        else:
            value = ylo if sign == POSITIVE else yhi
        dom, tables = _extended_tables(f, ji, direction, ii, value, True)

    return _finish_extension(state, arc, dom, tables, base_graph, base_system)


def extend_all(
    target: SignedDigraph,
    base_graph: SignedDigraph,
    base_system: Fds,
    anchor: Sequence[int] | None = None,
    order: Sequence[Arc] | None = None,
    future_arcs: Sequence[Arc] = (),
) -> Fds:
    """Fold :func:`extend_by_arc` over all arcs of ``target`` missing from the base.

    Requires the two structural hypotheses of the extension: no target arc
    from a sink of the base to a source of the base, and no target arc into
    a vertex isolated in the base.  Arcs are added in (source index, target
    index, ``+`` before ``-``) order unless an explicit order is supplied;
    ``future_arcs`` are arcs that later invocations will add, used only to
    steer interval growth.
    """
    if not base_graph.is_spanning_subgraph_of(target):
        raise PreconditionError("base graph is not a spanning subgraph of the target")
    ig = base_system.interaction_graph(base_graph.vertices)
    if ig.arcs != base_graph.arcs:
        raise PreconditionError(
            "base system's interaction graph differs from the base graph"
        )
    sources_b, sinks_b, isolated_b = classify_vertices(base_graph)
    for src, dst, _ in target.arcs - base_graph.arcs:
        if src in sinks_b and dst in sources_b:
            raise PreconditionError(
                f"target arc ({src},{dst}) runs from a base sink to a base source"
            )
        if dst in isolated_b and target.out_degree(dst) > 0:
            # Arcs into a base-isolated vertex are supported only when the
            # vertex stays a sink of the target graph.
            raise PreconditionError(
                f"target arc ({src},{dst}) enters a base-isolated non-sink vertex"
            )

    if anchor is None:
        anchor = tuple(lo for lo, _ in base_system.domain.intervals)
    anchor = tuple(int(x) for x in anchor)
    if not base_system.domain.contains(anchor):
        raise PreconditionError("anchor state outside the base domain")

    missing = target.arcs - base_graph.arcs
    if order is None:
        seq = sorted(
            missing,
            key=lambda a: (target.index(a[0]), target.index(a[1]), a[2] != POSITIVE),
        )
    else:
        seq = list(order)
        if set(seq) != missing or len(seq) != len(missing):
            raise PreconditionError("order must list each missing arc exactly once")

    a_set, b_set = _ab_sets(base_graph, base_graph)
    state = ExtensionState(base_graph, base_system, anchor, a_set, b_set)
    pending = list(seq) + list(future_arcs)
    for pos, arc in enumerate(seq):
        state = extend_by_arc(
            state, arc, base_graph, base_system, upcoming=pending[pos + 1 :]
        )
    return state.system


# ---------------------------------------------------------------------------
# convergence toward a subsystem
# ---------------------------------------------------------------------------


def _validate_subsystem(g: SignedDigraph, sub: SignedDigraph, h: Fds) -> None:
    if not sub.is_spanning_subgraph_of(g):
        raise PreconditionError("subgraph is not a spanning subgraph of the graph")
    if h.n != g.n:
        raise PreconditionError("subsystem arity differs from the graph order")
    ig = h.interaction_graph(g.vertices)
    if ig.arcs != sub.arcs:
        raise PreconditionError(
            "subsystem's interaction graph differs from the subgraph"
        )
    ok, bad = h.is_degree_bounded(ig)
    if not ok:
        raise PreconditionError(f"subsystem violates degree bounds at components {bad}")


def _isolated_only_vertices(g: SignedDigraph, sub: SignedDigraph) -> list[str]:
    out = []
    for v in g.vertices:
        iso_sub = sub.in_degree(v) == 0 and sub.out_degree(v) == 0
        iso_g = g.in_degree(v) == 0 and g.out_degree(v) == 0
        if iso_sub and not iso_g:
            out.append(v)
    return out


def _component_qualifies(g: SignedDigraph, iso: set[str], comp: Sequence[str]) -> bool:
    """One of: not strongly connected, has an arc leaving the isolated set,
    or receives no arc from outside the isolated set."""
    sub = g.induced(comp)
    strongly_connected = len(component_structure(sub).strong_components) == 1
    leaving = any(a[0] in set(comp) and a[1] not in iso for a in g.arcs)
    entering = any(a[0] not in iso and a[1] in set(comp) for a in g.arcs)
    return (not strongly_connected) or leaving or (not entering)


@dataclass(frozen=True)
class ConvergencePlan:
    """Dispatch data for :func:`construct_converging`.

    ``isolated`` lists the vertices isolated in the subgraph but not in the
    graph.  When ``property_p`` holds (every component of the induced
    isolated subgraph is not strongly connected, has an arc leaving the
    isolated set, or receives none from outside) and no closed cycle hides
    in the block graph, the direct path runs: a nilpotent system on
    ``block_graph`` is glued into the product subsystem and extended twice.
    Otherwise ``closed`` names the vertices (no arc leaves them) whose
    entering arcs are peeled off for a recursive pass and reattached through
    a clamped nilpotent block.
    """

    isolated: tuple[str, ...]
    property_p: bool
    closed: tuple[str, ...]
    block_graph: SignedDigraph


def convergence_plan(g: SignedDigraph, sub: SignedDigraph) -> ConvergencePlan:
    iso = _isolated_only_vertices(g, sub)
    iso_set = set(iso)
    comps = g.induced(iso).weak_components()
    closed: set[str] = set()
    for c in comps:
        if not _component_qualifies(g, iso_set, c):
            closed.update(c)
    property_p = not closed
    _, block_graph = _nilpotent_block_graph(g, sub, iso)
    if property_p:
        # Components that keep only their internal no-leaving arcs may still
        # collapse to signed cycles (e.g. a loop fed from a leaving-arc
        # vertex); those closed cycles are peeled off like the strongly
        # connected blocks.
        for comp in block_graph.weak_components():
            if is_signed_cycle(block_graph.induced(comp)):
                closed.update(comp)
    return ConvergencePlan(
        isolated=tuple(iso),
        property_p=property_p,
        closed=tuple(sorted(closed, key=g.index)),
        block_graph=block_graph,
    )


class _PeelComponent(Exception):
    """Internal signal: reroute a closed block component through the split."""

    def __init__(self, component: tuple[str, ...]):
        super().__init__(component)
        self.component = component


def _converging_pipeline(
    g: SignedDigraph, sub: SignedDigraph, h: Fds, iso: list[str]
) -> Fds:
    if not iso:
        return extend_all(g, sub, h)
    plan = convergence_plan(g, sub)
    if not plan.closed:
        try:
            return _pipeline_direct(g, sub, h, iso)
        except _PeelComponent as peel:
            return _pipeline_split(g, sub, h, iso, list(peel.component))
    return _pipeline_split(g, sub, h, iso, list(plan.closed))


def _nilpotent_block_graph(
    g: SignedDigraph, sub: SignedDigraph, iso: list[str]
) -> tuple[SignedDigraph, SignedDigraph]:
    """The padded subgraph (base plus internal no-leaving arcs) and the
    nilpotent block graph induced on the isolated set."""
    iso_set = set(iso)
    no_leaving = {
        u for u in iso if all(a[1] in iso_set for a in g.arcs if a[0] == u)
    }
    q_arcs = frozenset(a for a in g.arcs if a[0] in no_leaving and a[1] in iso_set)
    padded = SignedDigraph(g.vertices, sub.arcs | q_arcs)
    return padded, padded.induced(iso)


def _inward_arc_order(
    g: SignedDigraph,
    arcs: frozenset[Arc],
    mirrored: set[str],
    iso: Sequence[str],
) -> list[Arc]:
    """Deterministic order for the arcs entering the isolated set.

    A vertex's incoming arcs come before its outgoing ones whenever the
    added arcs allow it (the constant-update position of a still-source tail
    is consumed by its first incoming arc, after which its interval may grow
    freely), and each head sees its orientation-compatible sign first.
    Cyclic added-arc structures fall back to index order inside a group.
    """
    heads = sorted({a[1] for a in arcs}, key=g.index)
    internal = SignedDigraph.from_arcs(
        {(a[0], a[1], a[2]) for a in arcs if a[0] in set(iso) and a[1] in set(iso)},
        vertices=heads + [v for v in iso if v not in heads],
    )
    order_in_dag: dict[str, int] = {}
    sccs = component_structure(internal).strong_components if internal.n else ()
    # Strong components are emitted children-last by the index-deterministic
    # search; rank heads by a topological pass over the condensation.
    member = {v: k for k, c in enumerate(sccs) for v in c}
    indeg = {k: 0 for k in range(len(sccs))}
    succ: dict[int, set[int]] = {k: set() for k in range(len(sccs))}
    for (s, t, _) in internal.arcs:
        if member[s] != member[t] and member[t] not in succ[member[s]]:
            succ[member[s]].add(member[t])
            indeg[member[t]] += 1
    frontier = sorted(k for k, d in indeg.items() if d == 0)
    rank = 0
    while frontier:
        k = frontier.pop(0)
        for v in sccs[k]:
            order_in_dag[v] = rank
        rank += 1
        for w in sorted(succ[k]):
            indeg[w] -= 1
            if indeg[w] == 0:
                frontier.append(w)
        frontier.sort()

    def key(a: Arc):
        head_rank = order_in_dag.get(a[1], len(sccs))
        preferred = NEGATIVE if a[1] in mirrored else POSITIVE
        # Inside a cyclic group, a head kept at its interval top (negative
        # orientation) must receive its arc while the tail still grows
        # upward, so such heads go first.
        return (
            head_rank,
            a[1] not in mirrored,
            g.index(a[1]),
            a[2] != preferred,
            g.index(a[0]),
        )

    return sorted(arcs, key=key)


def _pipeline_direct(
    g: SignedDigraph, sub: SignedDigraph, h: Fds, iso: list[str]
) -> Fds:
    """All isolated-set components qualify: build a nilpotent block and extend."""
    iso_set = set(iso)
    padded, q_graph = _nilpotent_block_graph(g, sub, iso)
    q_arcs = padded.arcs - sub.arcs

    for comp in q_graph.weak_components():
        if is_signed_cycle(q_graph.induced(comp)):
            raise InternalInvariantError(
                "nilpotent block contains a signed-cycle component"
            )
    block, cert = construct_nilpotent(q_graph)

    # Mirror whole block components whose constant-update vertices must keep
    # their constant at the top of the interval (first future arc negative).
    added = g.arcs - (sub.arcs | q_arcs | frozenset(a for a in g.arcs if a[1] not in iso_set))
    mirror_coords: list[int] = []
    for comp in q_graph.weak_components():
        want_plain = True
        want_mirror = True
        for u in comp:
            if q_graph.in_degree(u) > 0:
                continue
            signs = {a[2] for a in added if a[1] == u}
            if signs == {POSITIVE}:
                want_mirror = False
            elif signs == {NEGATIVE}:
                want_plain = False
        if want_plain:
            continue
        if not want_mirror:
            # Two sources of one block component need opposite orientations;
            # when no arc leaves the component it can be peeled off and
            # reattached by clamping instead, which is orientation-free.
            if all(a[1] in set(comp) for a in g.arcs if a[0] in set(comp)):
                raise _PeelComponent(tuple(comp))
            raise InternalInvariantError(
                f"block component {comp} needs both orientations at once"
            )
        mirror_coords.extend(q_graph.index(u) for u in comp)
    mirrored = {q_graph.vertices[k] for k in mirror_coords}
    target = list(cert.target)
    if mirror_coords:
        block = block.mirror(mirror_coords)
        for k in mirror_coords:
            lo, hi = block.domain.intervals[k]
            target[k] = lo + hi - target[k]

    xi_iso = {v: h.domain.intervals[g.index(v)][0] for v in iso}
    for v in iso:
        lo, hi = h.domain.intervals[g.index(v)]
        if lo != hi:
            raise InternalInvariantError(
                f"subsystem interval at isolated vertex {v} is not a single value"
            )
    deltas = [
        xi_iso[v] - target[q_graph.index(v)] for v in q_graph.vertices
    ]
    block = block.translate(deltas)

    # Product system on the padded subgraph.
    tilde_intervals = []
    for k, v in enumerate(g.vertices):
        if v in iso_set:
            tilde_intervals.append(block.domain.intervals[q_graph.index(v)])
        else:
            tilde_intervals.append(h.domain.intervals[k])
    tilde_dom = IntervalProduct(tuple(tilde_intervals))
    grids = tilde_dom.coordinate_grids

    block_off = np.zeros(tilde_dom.size, dtype=np.int64)
    for u in iso:
        k = q_graph.index(u)
        block_off += (
            grids[g.index(u)] - block.domain.lows[k]
        ) * block.domain.weights[k]
    h_off = np.zeros(tilde_dom.size, dtype=np.int64)
    for k, v in enumerate(g.vertices):
        if v in iso_set:
            h_off += (xi_iso[v] - h.domain.lows[k]) * h.domain.weights[k]
        else:
            h_off += (grids[k] - h.domain.lows[k]) * h.domain.weights[k]

    tilde_tables = []
    for k, v in enumerate(g.vertices):
        if v in iso_set:
            tilde_tables.append(block.tables[q_graph.index(v)][block_off])
        else:
            tilde_tables.append(h.tables[k][h_off])
    tilde_h = Fds(tilde_dom, tuple(tilde_tables))

    outward = SignedDigraph(
        g.vertices, padded.arcs | frozenset(a for a in g.arcs if a[1] not in iso_set)
    )
    anchor1 = tuple(
        xi_iso[v] if v in iso_set else tilde_dom.intervals[k][0]
        for k, v in enumerate(g.vertices)
    )

    remaining = _inward_arc_order(g, g.arcs - outward.arcs, mirrored, iso)
    middle = extend_all(
        outward, padded, tilde_h, anchor=anchor1, future_arcs=remaining
    )
    return extend_all(g, outward, middle, order=remaining)


def _pipeline_split(
    g: SignedDigraph,
    sub: SignedDigraph,
    h: Fds,
    iso: list[str],
    closed: Sequence[str],
) -> Fds:
    """Part of the isolated set is closed (no arc leaves it): peel its
    entering arcs off, recurse, then glue a nilpotent block over it."""
    closed_set = set(closed)
    if not closed:
        raise InternalInvariantError("split pipeline invoked with nothing to split")
    for a in g.arcs:
        if a[0] in closed_set and a[1] not in closed_set:
            raise InternalInvariantError(
                f"split set is not closed: arc {a} leaves it"
            )

    trimmed = SignedDigraph(
        g.vertices, frozenset(a for a in g.arcs if a[1] not in closed_set)
    )
    inner, _ = construct_converging(trimmed, sub, h)

    xi = tuple(hi for _, hi in inner.domain.intervals)
    q_arcs = frozenset(a for a in g.arcs if a[1] in closed_set)
    q_graph = SignedDigraph(g.vertices, q_arcs)
    block, cert = construct_nilpotent(q_graph)
    deltas = [xi[k] - cert.target[k] for k in range(g.n)]
    block = block.translate(deltas)

    for k, v in enumerate(g.vertices):
        if v not in closed_set and block.domain.intervals[k][0] != xi[k]:
            raise InternalInvariantError(
                "nilpotent block does not start at the inner system's maximum"
            )

    intervals = []
    for k in range(g.n):
        if g.vertices[k] in closed_set:
            intervals.append(block.domain.intervals[k])
        else:
            intervals.append(
                (inner.domain.intervals[k][0], block.domain.intervals[k][1])
            )
    dom = IntervalProduct(tuple(intervals))
    grids = dom.coordinate_grids

    down_off = np.zeros(dom.size, dtype=np.int64)  # clamp onto the inner domain
    for k, v in enumerate(g.vertices):
        if v in closed_set:
            coord = np.full(dom.size, xi[k], dtype=np.int64)
        else:
            coord = np.minimum(grids[k], xi[k])
        down_off += (coord - inner.domain.lows[k]) * inner.domain.weights[k]
    up_off = np.zeros(dom.size, dtype=np.int64)  # clamp onto the block domain
    for k, v in enumerate(g.vertices):
        if v in closed_set:
            coord = grids[k]
        else:
            coord = np.maximum(grids[k], xi[k])
        up_off += (coord - block.domain.lows[k]) * block.domain.weights[k]

    tables = []
    for k, v in enumerate(g.vertices):
        if v in closed_set:
            tables.append(block.tables[k][up_off])
        else:
            tables.append(inner.tables[k][down_off])
    return Fds(dom, tuple(tables))


def _search_converging(
    g: SignedDigraph, h: Fds, steps: int, candidate_cap: int = 500_000
) -> Fds:
    """Exhaustive fallback: smallest degree-bounded system on ``g`` agreeing
    with ``h`` on its domain that passes the convergence check.

    Component tables are enumerated over in-neighbor grids with the values
    on the subsystem's domain pinned by the agreement requirement, over all
    interval placements containing the subsystem's intervals.
    """
    n = g.n
    verts = g.vertices
    in_nbrs = [sorted(g.in_neighbors(v), key=g.index) for v in verts]
    want = [
        {j: {s for s in (POSITIVE, NEGATIVE) if (j, v, s) in g.arcs} for j in in_nbrs[k]}
        for k, v in enumerate(verts)
    ]

    def placements(k: int, v: str) -> list[tuple[int, int]]:
        ylo, yhi = h.domain.intervals[k]
        dout, din = g.out_degree(v), g.in_degree(v)
        if dout == 0 and din > 0:
            sizes = [2]
        elif dout == 0:
            sizes = [1]
        else:
            sizes = list(range(2, dout + 2))
        out = []
        for s in sizes:
            for lo in range(yhi - s + 1, ylo + 1):
                out.append((lo, lo + s - 1))
        return out

    scanned = 0
    for intervals in product(*(placements(k, v) for k, v in enumerate(verts))):
        try:
            dom = IntervalProduct(tuple(intervals))
        except ResourceCapError:
            continue
        grids = dom.coordinate_grids
        per_component: list[list[np.ndarray]] = []
        feasible = True
        for k, v in enumerate(verts):
            nbrs = in_nbrs[k]
            local_shape = tuple(
                intervals[g.index(j)][1] - intervals[g.index(j)][0] + 1 for j in nbrs
            )
            cells = int(np.prod(local_shape)) if nbrs else 1
            pinned: dict[int, int] = {}
            for cell in range(cells):
                rem, combo = cell, []
                for width in reversed(local_shape):
                    combo.append(rem % width)
                    rem //= width
                combo.reverse()
                coords = {
                    j: intervals[g.index(j)][0] + c for j, c in zip(nbrs, combo)
                }
                if all(
                    h.domain.intervals[g.index(j)][0]
                    <= coords[j]
                    <= h.domain.intervals[g.index(j)][1]
                    for j in nbrs
                ):
                    y_state = [lo for lo, _ in h.domain.intervals]
                    for j in nbrs:
                        y_state[g.index(j)] = coords[j]
                    pinned[cell] = h.evaluate(y_state)[k]
            free = [c for c in range(cells) if c not in pinned]
            lo_k, hi_k = intervals[k]
            width_k = hi_k - lo_k + 1
            total = width_k ** len(free)
            scanned += total
            if scanned > candidate_cap:
                raise ResourceCapError(
                    f"fallback search exceeds {candidate_cap} candidates"
                )
            valid: list[np.ndarray] = []
            for combo in product(range(lo_k, hi_k + 1), repeat=len(free)):
                local = np.empty(cells, dtype=np.int64)
                for cell, val in pinned.items():
                    local[cell] = val
                for cell, val in zip(free, combo):
                    local[cell] = val
                ok = True
                for axis, j in enumerate(nbrs):
                    diff = np.diff(local.reshape(local_shape), axis=axis)
                    got = set()
                    if (diff > 0).any():
                        got.add(POSITIVE)
                    if (diff < 0).any():
                        got.add(NEGATIVE)
                    if got != want[k][j]:
                        ok = False
                        break
                if ok:
                    valid.append(local)
            if not valid:
                feasible = False
                break
            if nbrs:
                loc_weights = [1] * len(nbrs)
                for a in range(len(nbrs) - 2, -1, -1):
                    loc_weights[a] = loc_weights[a + 1] * local_shape[a + 1]
                expand = np.zeros(dom.size, dtype=np.int64)
                for a, j in enumerate(nbrs):
                    expand += (
                        grids[g.index(j)] - intervals[g.index(j)][0]
                    ) * loc_weights[a]
            else:
                expand = np.zeros(dom.size, dtype=np.int64)
            per_component.append([loc[expand] for loc in valid])
        if not feasible:
            continue
        for combo_tables in product(*per_component):
            f = Fds(dom, tuple(combo_tables))
            if converges_toward(f, h, steps).valid:
                return f
    raise InternalInvariantError(
        "no converging degree-bounded system found by exhaustive search"
    )


def construct_converging(
    g: SignedDigraph, subgraph: SignedDigraph, h: Fds
) -> tuple[Fds, ConvergenceWitness]:
    """Build a degree-bounded system on ``g`` converging toward ``h``.

    ``subgraph`` must be a spanning subgraph of ``g`` and ``h`` a
    degree-bounded system whose interaction graph is exactly ``subgraph``.
    Writing I for the vertices isolated in the subgraph but not in ``g``,
    the preconditions are: every source (sink) of the subgraph outside I is
    a source (sink) of ``g``, and no connected component of ``g`` is a
    signed cycle contained in I.  The result converges toward ``h`` in at
    most ``len(I) + 1`` steps, and the returned witness records the
    verification.
    """
    _validate_subsystem(g, subgraph, h)
    iso = _isolated_only_vertices(g, subgraph)
    iso_set = set(iso)

    rest = subgraph.without_vertices(iso)
    for v in rest.vertices:
        if rest.in_degree(v) == 0 and g.in_degree(v) > 0:
            raise PreconditionError(
                f"vertex {v} is a source of the subgraph but not of the graph"
            )
        if rest.out_degree(v) == 0 and g.out_degree(v) > 0:
            raise PreconditionError(
                f"vertex {v} is a sink of the subgraph but not of the graph"
            )
    for comp in g.weak_components():
        if set(comp) <= iso_set and is_signed_cycle(g.induced(comp)):
            raise PreconditionError(
                f"component {comp} is a signed cycle inside the isolated set"
            )

    steps = len(iso) + 1
    f: Fds | None = None
    try:
        candidate = _converging_pipeline(g, subgraph, h, iso)
        ig = candidate.interaction_graph(g.vertices)
        ok, _ = candidate.is_degree_bounded(ig)
        if ig.arcs == g.arcs and ok and converges_toward(candidate, h, steps).valid:
            f = candidate
    except (InternalInvariantError, PreconditionError):
        f = None
    if f is None:
        f = _search_converging(g, h, steps)
    witness = converges_toward(f, h, steps)
    if not witness.valid:
        raise InternalInvariantError(
            "convergence verification failed: " + "; ".join(witness.failures())
        )
    return f, witness


# ---------------------------------------------------------------------------
# fixed-point count realizations
# ---------------------------------------------------------------------------


def cycle_subsystem(
    g: SignedDigraph, cycles: Sequence[SignedCycle]
) -> tuple[SignedDigraph, Fds]:
    """Spanning subgraph keeping only the given disjoint cycles, plus the
    unique degree-bounded system on it (single-value intervals elsewhere)."""
    used: set[str] = set()
    arcs: set[Arc] = set()
    for c in cycles:
        if used & c.vertex_set():
            raise PreconditionError("cycles are not vertex-disjoint")
        used |= c.vertex_set()
        arcs |= set(c.arcs())
    sub = g.spanning(arcs)

    intervals = []
    for v in g.vertices:
        intervals.append((0, 1) if v in used else (0, 0))
    dom = IntervalProduct(tuple(intervals))
    pred: dict[str, tuple[str, str]] = {}
    for c in cycles:
        for (src, dst, sign) in c.arcs():
            pred[dst] = (src, sign)

    def make_fn(k: int, v: str):
        if v not in pred:
            return lambda grids: np.zeros(dom.size, dtype=np.int64)
        src, sign = pred[v]
        si = g.index(src)
        if sign == POSITIVE:
            return lambda grids: grids[si].astype(np.int64)
        return lambda grids: (1 - grids[si]).astype(np.int64)

    h = from_component_functions(
        dom, [make_fn(k, v) for k, v in enumerate(g.vertices)]
    )
    return sub, h


def construct_no_fixed_point(g: SignedDigraph) -> Fds:
    """A degree-bounded system on a connected graph with a negative cycle
    that has no fixed point."""
    if g.n == 0 or len(g.weak_components()) != 1:
        raise PreconditionError("graph must be nonempty and connected")
    negative = next(
        (c for c in enumerate_cycles(g) if c.sign == NEGATIVE), None
    )
    if negative is None:
        raise PreconditionError("graph has no negative cycle")
    sub, h = cycle_subsystem(g, [negative])
    if sub.arcs == g.arcs:
        f = h
    else:
        f, _ = construct_converging(g, sub, h)
    fixed = f.fixed_points()
    if fixed:
        raise InternalInvariantError(f"construction left fixed points: {fixed}")
    return f


def construct_2k_fixed_points(g: SignedDigraph, k: int) -> Fds:
    """A degree-bounded system on a connected graph with ``k`` disjoint
    positive cycles that has exactly ``2**k`` fixed points."""
    if g.n == 0 or len(g.weak_components()) != 1:
        raise PreconditionError("graph must be nonempty and connected")
    cycles = find_disjoint_positive_cycles(g, k)
    if cycles is None:
        raise PreconditionError(f"graph has no {k} vertex-disjoint positive cycles")
    sub, h = cycle_subsystem(g, cycles)
    if sub.arcs == g.arcs:
        f = h
    else:
        f, _ = construct_converging(g, sub, h)
    fixed = f.fixed_points()
    if len(fixed) != 2**k:
        raise InternalInvariantError(
            f"construction has {len(fixed)} fixed points, wanted {2 ** k}"
        )
    return f


# ---------------------------------------------------------------------------
# certificate files
# ---------------------------------------------------------------------------


def save_certificate(cert: NilpotencyCertificate, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cert.to_dict(), fh)
        fh.write("\n")


def load_certificate(path: str, graph: SignedDigraph) -> NilpotencyCertificate:
    with open(path, "r", encoding="utf-8") as fh:
        return certificate_from_dict(json.load(fh), graph)
