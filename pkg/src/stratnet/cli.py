"""Command-line front end.

Exit codes: 0 success / property holds, 1 property fails, 2 invalid input
or usage, 3 undecided within budget, 4 internal disagreement between
deciders (never expected).  The STRATNET_BUDGET environment variable
overrides the switching and step budgets.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import builder, correctness, interactive, net as net_mod, rewrite
from .correctness import BalanceWitness, BudgetExceeded, PreconditionError
from .net import InvalidNetError, Net, NetFormatError

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INVALID = 2
EXIT_BUDGET = 3
EXIT_DISAGREE = 4


def _budget(default: int) -> int:
    raw = os.environ.get("STRATNET_BUDGET")
    if raw:
        try:
            return int(raw)
        except ValueError:
            pass
    return default


def _emit(doc, pretty: bool) -> None:
    if pretty:
        print(json.dumps(doc, indent=2))
    else:
        print(json.dumps(doc, separators=(",", ":")))


def _read_net(path: str, allow_flat: bool = False) -> Net:
    with open(path, "rb") as fh:
        return net_mod.load(fh.read(), allow_flat_conclusions=allow_flat)


def _witness_doc(w: BalanceWitness) -> dict:
    return {
        "kind": "cycle" if w.closed else "path",
        "elements": list(w.elements),
        "balance": w.balance,
        "weights": w.flavor,
    }


def _dot(net: Net) -> str:
    g = net_mod.underlying_graph(net, at_depth_zero=False)
    lines = ["graph net {"]
    for n in g.nodes:
        kind = net.links[n].kind if n in net.links else "box"
        lines.append(f'  "{n}" [label="{n}\\n{kind}"];')
    for a, b, e in g.edges:
        lines.append(f'  "{a}" -- "{b}" [label="{net_mod.label_str(net.edges[e])}"];')
    for e in net.conclusions:
        lines.append(f'  "conc:{e}" [shape=none,label="{net_mod.label_str(net.edges[e])}"];')
        lines.append(f'  "{net.producer(e)}" -- "conc:{e}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- subcommands ----------------------------------------------------------------


def cmd_validate(args) -> int:
    try:
        with open(args.file, "rb") as fh:
            data = fh.read()
        loaded = net_mod.load(data, allow_flat_conclusions=True)
    except (NetFormatError, InvalidNetError, OSError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    report = net_mod.validate(loaded)
    if not report.ok():
        print(str(report), file=sys.stderr)
        return EXIT_INVALID
    flat = [e for e in loaded.conclusions if loaded.edges[e].flat]
    if flat:
        print(
            f"invalid: conclusions carry flat labels on edge(s) {', '.join(flat)}",
            file=sys.stderr,
        )
        return EXIT_INVALID
    if args.dot:
        with open(args.dot, "w") as fh:
            fh.write(_dot(loaded))
    _emit({"valid": True, "links": len(loaded.links), "edges": len(loaded.edges)}, args.pretty)
    return EXIT_OK


def _check_one(path: str, criterion: str, budget: int, pretty: bool) -> int:
    try:
        n = _read_net(path)
    except (NetFormatError, InvalidNetError, OSError) as exc:
        print(f"{path}: invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        if criterion == "dr":
            witness = correctness.find_cyclic_switching(n, budget)
            if witness is None:
                _emit({"file": path, "criterion": "dr", "holds": True}, pretty)
                return EXIT_OK
            _emit(
                {
                    "file": path,
                    "criterion": "dr",
                    "holds": False,
                    "witness": {
                        "chosen": witness.chosen,
                        "cycle_edges": list(witness.cycle_edges),
                        "inside": list(witness.depth_context),
                    },
                },
                pretty,
            )
            return EXIT_FAIL
        if not correctness.is_dr_correct(n, budget) or n.has_flat_conclusion():
            _emit({"file": path, "criterion": "proofnet", "holds": False, "reason": "not a DR-net"}, pretty)
            return EXIT_FAIL
        strong = correctness.is_strongly_indexable(n)
        if strong is True:
            _emit({"file": path, "criterion": "proofnet", "holds": True}, pretty)
            return EXIT_OK
        _emit(
            {"file": path, "criterion": "proofnet", "holds": False, "witness": _witness_doc(strong)},
            pretty,
        )
        return EXIT_FAIL
    except BudgetExceeded as exc:
        print(f"{path}: undecided: {exc}", file=sys.stderr)
        return EXIT_BUDGET


def cmd_check(args) -> int:
    budget = _budget(correctness.DEFAULT_SWITCHING_BUDGET)
    codes = _for_each(args.files, args.jobs, lambda p: _check_one(p, args.criterion, budget, args.pretty))
    return max(codes)


def cmd_index(args) -> int:
    try:
        n = _read_net(args.file)
    except (NetFormatError, InvalidNetError, OSError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    result = correctness.solve_indexing(n, args.flavor)
    if isinstance(result, BalanceWitness):
        _emit(_witness_doc(result), args.pretty)
        return EXIT_FAIL
    if args.strong:
        ok, pair = correctness.conclusion_groups_equal(n, result)
        if not ok:
            witness = correctness.conclusion_path_witness(n, pair[0], pair[1], args.flavor)
            _emit(_witness_doc(witness), args.pretty)
            return EXIT_FAIL
    _emit(result.to_document(), args.pretty)
    return EXIT_OK


def _l3_verdicts(n: Net, methods: list[str], budget: int, step_budget: int) -> dict[str, bool]:
    out: dict[str, bool] = {}
    for m in methods:
        if m == "indexing":
            out[m] = correctness.is_l3_indexing_route(n, budget, check_preconditions=False) is True
        elif m == "geometric":
            out[m] = correctness.is_l3_geometric(n, budget, check_preconditions=False) is True
        elif m == "interactive":
            closed = net_mod.parr_closure(n)
            out[m] = interactive.interactive_l3_check(closed, budget=step_budget).member
    return out


def _l3_one(path: str, method: str, budget: int, step_budget: int, pretty: bool) -> int:
    try:
        n = _read_net(path)
    except (NetFormatError, InvalidNetError, OSError) as exc:
        print(f"{path}: invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    methods = ["indexing", "geometric", "interactive"] if method == "all" else [method]
    if "interactive" in methods and n.cut_links():
        print(
            f"{path}: the interactive method needs a cut-free net; run normalize first",
            file=sys.stderr,
        )
        return EXIT_INVALID
    try:
        if not correctness.is_dr_correct(n, budget) or n.has_flat_conclusion():
            print(f"{path}: not a DR-net, membership is undefined", file=sys.stderr)
            return EXIT_INVALID
        verdicts = _l3_verdicts(n, methods, budget, step_budget)
    except BudgetExceeded as exc:
        print(f"{path}: undecided: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    _emit({"file": path, "verdicts": verdicts}, pretty)
    values = set(verdicts.values())
    if len(values) > 1:
        print(f"{path}: methods disagree; this is a bug", file=sys.stderr)
        return EXIT_DISAGREE
    return EXIT_OK if values == {True} else EXIT_FAIL


def cmd_l3(args) -> int:
    budget = _budget(correctness.DEFAULT_SWITCHING_BUDGET)
    step_budget = _budget(rewrite.DEFAULT_STEP_BUDGET)
    codes = _for_each(
        args.files, args.jobs, lambda p: _l3_one(p, args.method, budget, step_budget, args.pretty)
    )
    return max(codes)


def cmd_normalize(args) -> int:
    try:
        n = _read_net(args.file)
    except (NetFormatError, InvalidNetError, OSError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    budget = _budget(rewrite.DEFAULT_STEP_BUDGET)
    try:
        result, trace = rewrite.normalize(
            n, strategy=args.strategy, budget=budget, no_axiom=args.no_axiom
        )
    except BudgetExceeded as exc:
        print(f"undecided: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    data = net_mod.save(result, pretty=args.pretty)
    if args.output:
        with open(args.output, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.write(data.decode())
        if not data.endswith(b"\n"):
            sys.stdout.write("\n")
    if args.trace:
        with open(args.trace, "w") as fh:
            json.dump(trace.to_document(), fh, indent=2 if args.pretty else None)
    return EXIT_OK


def cmd_gen(args) -> int:
    params = builder.GenParams(
        target_size=args.size,
        box_bias=args.box_bias,
        paragraph_bias=args.paragraph_bias,
        exponential_bias=args.exponential_bias,
        cut_bias=args.cut_bias,
    )
    n = builder.random_net(args.seed, params)
    data = net_mod.save(n, pretty=args.pretty)
    if args.output:
        with open(args.output, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.write(data.decode())
        if not data.endswith(b"\n"):
            sys.stdout.write("\n")
    return EXIT_OK


def cmd_test(args) -> int:
    try:
        n = _read_net(args.file)
    except (NetFormatError, InvalidNetError, OSError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if n.cut_links():
        print("the interactive tests need a cut-free net; run normalize first", file=sys.stderr)
        return EXIT_INVALID
    if len(n.conclusions) != 1:
        print(
            f"note: joining {len(n.conclusions)} conclusions before testing",
            file=sys.stderr,
        )
        n = net_mod.parr_closure(n)
    budget = _budget(rewrite.DEFAULT_STEP_BUDGET)
    formula = n.edges[n.conclusions[0]].formula
    try:
        report = interactive.interactive_l3_check(n, budget=budget)
    except BudgetExceeded as exc:
        print(f"undecided: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    doc = report.to_document(formula)
    if args.level is not None:
        doc["levels"] = [r for r in doc["levels"] if r["k"] == args.level]
        ok = all(r["pass"] for r in doc["levels"])
    else:
        ok = report.member
    _emit(doc, args.pretty)
    return EXIT_OK if ok else EXIT_FAIL


def _for_each(files: list[str], jobs: int, fn) -> list[int]:
    if jobs > 1 and len(files) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, files))
    return [fn(p) for p in files]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stratnet",
        description="Proof nets with a stratification modality: correctness, indexings, "
        "cut-elimination, and level-membership deciders.",
    )
    parser.add_argument(
        "--pretty", action="store_true", dest="pretty_global", help="human-readable JSON output"
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--pretty", action="store_true", help="human-readable JSON output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="structural validation of a net document")
    p.add_argument("file")
    p.add_argument("--dot", metavar="PATH", help="also write the underlying graph in DOT format")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("check", parents=[common], help="switching-acyclicity or full proof-net check")
    p.add_argument("--criterion", choices=["dr", "proofnet"], required=True)
    p.add_argument("files", nargs="+")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("index", parents=[common], help="solve for an integer indexing")
    p.add_argument("--flavor", choices=["plain", "exponential"], default="plain")
    p.add_argument("--strong", action="store_true", help="require equal conclusion indexes")
    p.add_argument("file")
    p.set_defaults(fn=cmd_index)

    p = sub.add_parser("l3", parents=[common], help="level-membership decision")
    p.add_argument("--method", choices=["indexing", "geometric", "interactive", "all"], default="all")
    p.add_argument("files", nargs="+")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(fn=cmd_l3)

    p = sub.add_parser("normalize", parents=[common], help="cut-elimination to normal form")
    p.add_argument("--strategy", choices=["lo", "in", "level"], default="lo")
    p.add_argument("--no-axiom", action="store_true", help="stop at the fixed point of non-axiom steps")
    p.add_argument("--trace", metavar="PATH", help="write the rewrite trace as JSON")
    p.add_argument("--output", "-o", metavar="PATH", help="write the result here instead of stdout")
    p.add_argument("file")
    p.set_defaults(fn=cmd_normalize)

    p = sub.add_parser("gen", parents=[common], help="generate a random sequentializable net")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--size", type=int, default=20)
    p.add_argument("--cut-bias", type=float, default=0.2)
    p.add_argument("--paragraph-bias", type=float, default=0.2)
    p.add_argument("--exponential-bias", type=float, default=0.3)
    p.add_argument("--box-bias", type=float, default=0.3)
    p.add_argument("--output", "-o", metavar="PATH")
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("test", parents=[common], help="run the interactive level tests")
    p.add_argument("--level", type=int, default=None, help="run a single level instead of all")
    p.add_argument("file")
    p.set_defaults(fn=cmd_test)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    args.pretty = args.pretty or getattr(args, "pretty_global", False)
    try:
        return args.fn(args)
    except PreconditionError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except BudgetExceeded as exc:
        print(f"undecided: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
