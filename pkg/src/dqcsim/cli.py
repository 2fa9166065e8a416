"""Command-line entry point.

Subcommands: `run` (execute a protocol and write its JSON result),
`verify` (execute named harness checks or `all`), and `graph` (emit the
dotted triple-graph of a base graph). Exit codes: 0 success, 1 check
failure or abort, 2 usage error, 3 input error. All randomness flows from
--seed through named sub-streams, so equal invocations produce
byte-identical JSON.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import protocols
from .graphs import (
    build_linear_cluster,
    dotted_triple_graph,
    dtgraph_to_json,
    graph_from_json,
)
from .harness import CHECKS, named_rng, run_checks
from .qcore import DensityState, plus_state

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INPUT = 0, 1, 2, 3

PROTOCOLS = ("bfk", "mf13", "tau", "dbsp", "hi", "vbdqc", "dmpqc")


class InputError(ValueError):
    """Malformed input artifact (graph file, angle list)."""


def _matrix_json(m) -> list:
    a = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def _state_json(state) -> dict | None:
    if state is None:
        return None
    return {"dims": list(state.dims), "matrix": _matrix_json(state.matrix)}


def _dumps(obj, pretty: bool) -> str:
    if pretty:
        return json.dumps(obj, sort_keys=True, indent=2) + "\n"
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def _emit(text: str, out_path) -> None:
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_graph(path):
    if path is None:
        return None
    try:
        with open(path) as fh:
            obj = json.load(fh)
        return graph_from_json(obj)
    except OSError as exc:
        raise InputError(f"cannot read graph file: {exc}") from exc
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed graph file {path!r}: {exc}") from exc


def _angles(args, n_default: int):
    if args.angles:
        ks = list(args.angles)
    else:
        ks = [0] * n_default
    for k in ks:
        if not 0 <= k < 8:
            raise InputError(f"angle index {k} outside 0..7")
    return ks


def _default_input(topology) -> DensityState:
    n = len(topology.input_nodes)
    vec = plus_state(0)
    for _ in range(n - 1):
        vec = np.kron(vec, plus_state(0))
    return DensityState.from_vector(vec, (2,) * n)


def _kinds(args, default=("PS", "RM")):
    if not args.clients:
        return list(default)
    kinds = [k.strip().upper() for k in args.clients.split(",") if k.strip()]
    if not kinds or any(k not in ("PS", "RM") for k in kinds):
        raise InputError(f"bad --clients value {args.clients!r}")
    return kinds


def cmd_run(args) -> int:
    if args.protocol not in PROTOCOLS:
        print(f"unknown protocol {args.protocol!r}", file=sys.stderr)
        return EXIT_USAGE
    rng = named_rng(args.seed, f"run-{args.protocol}")
    result = {"protocol": args.protocol, "seed": args.seed}

    if args.protocol in ("bfk", "mf13", "tau"):
        topology = _load_graph(args.graph)
        if topology is None:
            phi = _angles(args, 1)
            topology = build_linear_cluster(len(phi) + 1)
        flow = protocols.default_flow(topology)
        phi = _angles(args, len(flow.order))
        runner = {"bfk": protocols.run_bfk09, "mf13": protocols.run_mf13,
                  "tau": protocols.run_tau}[args.protocol]
        res = runner(phi, _default_input(topology), topology, rng=rng)
        result.update(
            accepted=bool(res.accepted),
            results=res.extras["results"],
            output=_state_json(res.output),
            angles=phi,
        )
    elif args.protocol == "dbsp":
        setting = (args.setting or "ps").lower()
        rho = DensityState.from_vector(plus_state(0), (2,))
        if setting == "mixed":
            kinds = _kinds(args)
            res = protocols.run_dbsp_mixed(kinds, rho, rng)
        elif setting in ("ps", "rm"):
            k = len(_kinds(args, default=("PS",)))
            res = protocols.run_dbsp(setting.upper(), rho, k, rng)
        else:
            print(f"bad --setting {args.setting!r}", file=sys.stderr)
            return EXIT_USAGE
        result.update(theta=int(res.theta), records=res.records,
                      state=_state_json(res.state), setting=setting)
    elif args.protocol == "hi":
        setting = (args.setting or "ps").upper()
        if setting not in ("PS", "RM"):
            print(f"bad --setting {args.setting!r}", file=sys.stderr)
            return EXIT_USAGE
        rho = DensityState.from_vector(plus_state(0), (2,))
        runs = {}
        for b in (0, 1):
            post, recs = protocols.run_hi_gadget(setting, b, rho, rng)
            recs = {k: v for k, v in recs.items()}
            runs[str(b)] = {"records": recs, "state": _state_json(post)}
        result.update(setting=setting.lower(), runs=runs)
    elif args.protocol == "vbdqc":
        setting = (args.setting or "ps").upper()
        if setting not in ("PS", "RM"):
            print(f"bad --setting {args.setting!r}", file=sys.stderr)
            return EXIT_USAGE
        base = _load_graph(args.graph) or build_linear_cluster(2)
        flow = protocols.default_flow(base)
        phi = _angles(args, len(flow.order))
        res = protocols.run_vbdqc(setting, phi, _default_input(base), base,
                                  rng=rng)
        result.update(
            accepted=bool(res.accepted),
            results=res.extras["results"],
            trap_ok=res.extras["trap_ok"],
            output=_state_json(res.output),
            setting=setting.lower(),
            angles=phi,
        )
    else:  # dmpqc
        kinds = _kinds(args)
        base = _load_graph(args.graph) or build_linear_cluster(2)
        flow = protocols.default_flow(base)
        phi = _angles(args, len(flow.order))
        res = protocols.run_dmpqc(kinds, phi, _default_input(base), base,
                                  rng=rng)
        result.update(
            accepted=bool(res.accepted),
            results=res.extras["results"],
            trap_ok=res.extras["trap_ok"],
            smpc=res.extras["smpc"],
            output=_state_json(res.output),
            clients=kinds,
            angles=phi,
        )

    _emit(_dumps(result, args.pretty), args.out)
    return EXIT_OK if result.get("accepted", True) else EXIT_FAIL


def cmd_verify(args) -> int:
    names = list(args.checks) or ["all"]
    if names == ["all"]:
        names = list(CHECKS)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        print(f"unknown checks: {', '.join(unknown)}", file=sys.stderr)
        print(f"available: {', '.join(CHECKS)}", file=sys.stderr)
        return EXIT_USAGE
    reports = run_checks(names, seed=args.seed)
    lines = [_dumps(r.to_json(), args.pretty) for r in reports]
    _emit("".join(lines), args.out)
    if not args.out:
        width = max(len(r.check) for r in reports)
        for r in reports:
            mark = "pass" if r.passed else "FAIL"
            print(f"# {r.check:<{width}}  {mark}  deviation={r.deviation:.3e}"
                  f"  tolerance={r.tolerance:.0e}", file=sys.stderr)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def cmd_graph(args) -> int:
    base = _load_graph(args.graph)
    if base is None:
        base = build_linear_cluster(2)
    rng = named_rng(args.seed, "graph")
    if not base.nodes:
        _emit(_dumps({"nodes": [], "edges": []}, args.pretty), args.out)
        return EXIT_OK
    dt = dotted_triple_graph(base, rng)
    _emit(_dumps(dtgraph_to_json(dt), args.pretty), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dqcsim",
        description="Delegated-quantum-computation simulator and checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="write JSON here")
        fmt = p.add_mutually_exclusive_group()
        fmt.add_argument("--json", dest="pretty", action="store_false",
                         default=False, help="compact JSON (default)")
        fmt.add_argument("--pretty", dest="pretty", action="store_true",
                         help="indented JSON")

    p_run = sub.add_parser("run", help="execute one protocol")
    p_run.add_argument("protocol")
    p_run.add_argument("--setting", default=None,
                       help="ps, rm, or mixed (dbsp only)")
    p_run.add_argument("--clients", default=None,
                       help="comma-separated client kinds, e.g. ps,rm")
    p_run.add_argument("--graph", default=None, help="graph JSON file")
    p_run.add_argument("--angles", type=int, nargs="*", default=None,
                       help="angle indices in 0..7")
    p_run.add_argument("--trials", type=int, default=1)
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_verify = sub.add_parser("verify", help="run harness checks")
    p_verify.add_argument("checks", nargs="*",
                          help=f"check names or 'all' ({', '.join(CHECKS)})")
    p_verify.add_argument("--trials", type=int, default=None)
    common(p_verify)
    p_verify.set_defaults(func=cmd_verify)

    p_graph = sub.add_parser("graph", help="emit a dotted triple-graph")
    p_graph.add_argument("--graph", default=None, help="base graph JSON file")
    common(p_graph)
    p_graph.set_defaults(func=cmd_graph)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
