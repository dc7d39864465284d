"""Command-line front end.

Subcommands: analyze, synth-nilpotent, synth-converge, synth-fixed-points,
verify, enumerate, export-dot.  Reports are line oriented; ``--json``
switches to a single JSON document on stdout.  Exit status: 0 when all
requested checks pass, 1 on failed checks, 2 on parse errors, 3 on
precondition violations, 4 on resource caps.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Sequence

from . import fds as fds_mod
from . import sdg as sdg_mod
from . import synthesis as syn_mod
from .fds import converges_toward, enumerate_degree_bounded_systems, load_fds, save_fds
from .sdg import (
    InternalInvariantError,
    PreconditionError,
    ResourceCapError,
    SdgError,
    SdgParseError,
    classify_vertices,
    component_structure,
    enumerate_cycles,
    load_sdg,
    to_dot,
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_PARSE = 2
EXIT_PRECONDITION = 3
EXIT_CAP = 4


def _cert_path(out: str) -> str:
    if out.endswith(".json"):
        return out[: -len(".json")] + ".cert.json"
    return out + ".cert.json"


def _emit(report: dict, lines: list[str], as_json: bool, out_path: str | None) -> None:
    text = json.dumps(report, indent=2) if as_json else "\n".join(lines)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _cap_from(args) -> int | None:
    if args.cap is not None:
        return args.cap
    env = os.environ.get("SDG_CAP")
    return int(env) if env is not None else None


def cmd_analyze(args) -> int:
    g = load_sdg(args.graph)
    cs = component_structure(g)
    sources, sinks, isolated = classify_vertices(g)
    cap = _cap_from(args) or sdg_mod.DEFAULT_CYCLE_CAP
    cycles = enumerate_cycles(g, cap=cap)
    pos = sum(1 for c in cycles if c.sign == sdg_mod.POSITIVE)
    report = {
        "vertices": list(g.vertices),
        "arcs": [list(a) for a in g.sorted_arcs()],
        "lambda": cs.lam,
        "beta": cs.beta,
        "strong_components": [list(c) for c in cs.strong_components],
        "initial_components": [list(c) for c in cs.initial_components],
        "is_basic": cs.is_basic,
        "sources": sorted(sources, key=g.index),
        "sinks": sorted(sinks, key=g.index),
        "isolated": sorted(isolated, key=g.index),
        "cycles": {"total": len(cycles), "positive": pos, "negative": len(cycles) - pos},
        "seed": args.seed,
    }
    lines = [
        f"vertices: {g.n}",
        f"arcs: {len(g.arcs)}",
        f"lambda: {cs.lam}",
        f"beta: {cs.beta}",
        f"strong components: {len(cs.strong_components)}",
        f"initial components: "
        + " ".join("{" + ",".join(c) + "}" for c in cs.initial_components),
        f"basic: {'yes' if cs.is_basic else 'no'}",
        f"sources: {' '.join(report['sources']) or '-'}",
        f"sinks: {' '.join(report['sinks']) or '-'}",
        f"isolated: {' '.join(report['isolated']) or '-'}",
        f"cycles: {len(cycles)} ({pos} positive, {len(cycles) - pos} negative)",
    ]
    _emit(report, lines, args.json, None)
    return EXIT_OK


def _write_synth_output(args, f, cert=None, extra=None, verdict="") -> None:
    out = args.out
    if out:
        save_fds(f, out)
        if cert is not None:
            syn_mod.save_certificate(cert, _cert_path(out))
    report = {
        "system": fds_mod.fds_to_dict(f),
        "verdict": verdict,
        "seed": args.seed,
    }
    if cert is not None:
        report["certificate"] = cert.to_dict()
    if extra:
        report.update(extra)
    lines = [verdict]
    if out:
        lines.append(f"wrote {out}")
        if cert is not None:
            lines.append(f"wrote {_cert_path(out)}")
    _emit(report, lines, args.json, None)


def cmd_synth_nilpotent(args) -> int:
    g = load_sdg(args.graph)
    f, cert = syn_mod.construct_nilpotent(g)
    problems = syn_mod.check_nilpotency_certificate(g, f, cert)
    if problems:
        print("; ".join(problems), file=sys.stderr)
        return EXIT_FAILED
    index = f.nilpotency_index()
    verdict = f"nilpotent, index {index} (bound {cert.lam + cert.beta})"
    _write_synth_output(args, f, cert=cert, verdict=verdict)
    return EXIT_OK


def cmd_synth_converge(args) -> int:
    g = load_sdg(args.graph)
    h = load_fds(args.sub)
    sub = h.interaction_graph(g.vertices)
    f, witness = syn_mod.construct_converging(g, sub, h)
    if not witness.valid:
        print("; ".join(witness.failures()), file=sys.stderr)
        return EXIT_FAILED
    verdict = f"converges toward subsystem in at most {witness.steps} steps"
    _write_synth_output(args, f, verdict=verdict, extra={"steps": witness.steps})
    return EXIT_OK


def cmd_synth_fixed_points(args) -> int:
    g = load_sdg(args.graph)
    k = args.cycles
    if k is None:
        raise PreconditionError("synth-fixed-points requires --cycles")
    if k == 0:
        f = syn_mod.construct_no_fixed_point(g)
        expected = 0
    else:
        f = syn_mod.construct_2k_fixed_points(g, k)
        expected = 2**k
    count = len(f.fixed_points())
    if count != expected:
        print(f"expected {expected} fixed points, found {count}", file=sys.stderr)
        return EXIT_FAILED
    verdict = f"{count} fixed points"
    _write_synth_output(args, f, verdict=verdict, extra={"fixed_points": count})
    return EXIT_OK


def cmd_verify(args) -> int:
    g = load_sdg(args.graph)
    checks: list[tuple[str, bool]] = []
    report: dict = {"checks": [], "seed": args.seed}

    f = load_fds(args.fds) if args.fds else None
    if f is not None:
        ig = f.interaction_graph(g.vertices)
        checks.append(("interaction graph matches", ig.arcs == g.arcs))
        ok, bad = f.is_degree_bounded(ig)
        checks.append(
            ("degree bounds hold" + (f" (violations at {list(bad)})" if bad else ""), ok)
        )
        index = f.nilpotency_index()
        report["nilpotency_index"] = index
        report["fixed_points"] = len(f.fixed_points())
        cert_file = _cert_path(args.fds)
        if os.path.exists(cert_file):
            cert = syn_mod.load_certificate(cert_file, g)
            problems = syn_mod.check_nilpotency_certificate(g, f, cert)
            checks.append(
                (
                    "certificate verifies"
                    + (f" ({'; '.join(problems)})" if problems else ""),
                    not problems,
                )
            )

    if args.sub:
        if f is None:
            raise PreconditionError("--sub requires --fds")
        if args.steps is None:
            raise PreconditionError("--sub requires --steps")
        h = load_fds(args.sub)
        steps = args.steps
        witness = converges_toward(f, h, steps)
        checks.append(
            (
                f"converges toward subsystem in {steps} steps"
                + (f" ({'; '.join(witness.failures())})" if not witness.valid else ""),
                witness.valid,
            )
        )

    if not checks:
        checks.append(("graph file well-formed", True))

    lines = []
    all_ok = True
    for label, ok in checks:
        all_ok &= ok
        lines.append(f"{'PASS' if ok else 'FAIL'}: {label}")
        report["checks"].append({"check": label, "ok": ok})
    if "nilpotency_index" in report:
        lines.append(f"nilpotency index: {report['nilpotency_index']}")
        lines.append(f"fixed points: {report['fixed_points']}")
    report["ok"] = all_ok
    _emit(report, lines, args.json, None)
    return EXIT_OK if all_ok else EXIT_FAILED


def cmd_enumerate(args) -> int:
    g = load_sdg(args.graph)
    cap = _cap_from(args) or fds_mod.DEFAULT_TABLE_CAP
    count = 0
    summaries = []
    for f in enumerate_degree_bounded_systems(g, table_cap=cap):
        count += 1
        summaries.append(
            {
                "sizes": list(f.domain.shape),
                "nilpotency_index": f.nilpotency_index(),
                "fixed_points": len(f.fixed_points()),
            }
        )
    report = {"count": count, "systems": summaries, "seed": args.seed}
    lines = [f"degree-bounded systems: {count}"]
    for s in summaries:
        lines.append(
            f"sizes={s['sizes']} index={s['nilpotency_index']} "
            f"fixed_points={s['fixed_points']}"
        )
    _emit(report, lines, args.json, None)
    return EXIT_OK


def cmd_export_dot(args) -> int:
    g = load_sdg(args.graph)
    text = to_dot(g)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdgdyn",
        description="Analyze signed digraphs and synthesize degree-bounded systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, *, graph=True, fds=False, subsys=False, steps=False,
            cycles=False, out=False):
        p = sub.add_parser(name)
        if graph:
            p.add_argument("--graph", required=True, help="sdg v1 graph file")
        if fds:
            p.add_argument("--fds", help="fds v1 system file")
        if subsys:
            p.add_argument("--sub", required=(name == "synth-converge"),
                           help="fds v1 subsystem file")
        if steps:
            p.add_argument("--steps", type=int, help="convergence step count")
        if cycles:
            p.add_argument("--cycles", type=int,
                           help="0: no fixed point; k>0: 2^k fixed points")
        if out:
            p.add_argument("--out", help="output path")
        p.add_argument("--cap", type=int, help="resource cap override")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized runs")
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.set_defaults(func=func)
        return p

    add("analyze", cmd_analyze)
    add("synth-nilpotent", cmd_synth_nilpotent, out=True)
    add("synth-converge", cmd_synth_converge, subsys=True, out=True)
    add("synth-fixed-points", cmd_synth_fixed_points, cycles=True, out=True)
    add("verify", cmd_verify, fds=True, subsys=True, steps=True)
    add("enumerate", cmd_enumerate)
    add("export-dot", cmd_export_dot, out=True)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SdgParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except ResourceCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except InternalInvariantError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except SdgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    raise SystemExit(main())
