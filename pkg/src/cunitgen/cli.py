"""Command-line front end: parse units, run generation, write artifacts.

Exit status: 0 when every selected function reached its target coverage,
2 when generation finished but coverage is incomplete (the reports explain
why), 1 on errors such as unparseable input.
"""

from __future__ import annotations

import argparse
import os
import shutil
import sys
from concurrent.futures import ThreadPoolExecutor

from .config import Config
from .errors import CunitgenError
from .frontend.parser import parse_unit
from .pipeline import FunctionOutcome, generate_function, write_outputs


def build_arg_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cunitgen",
        description="Generate compilable unit tests for an annotated C subset "
                    "via symbolic execution.",
    )
    p.add_argument("sources", nargs="+", help="C source files (one unit each)")
    p.add_argument("--coverage", choices=["c0", "c1"], default="c1",
                   help="structural coverage criterion (default c1)")
    p.add_argument("--max-depth", type=int, default=256,
                   help="maximal depth of the symbolic test case tree")
    p.add_argument("--ptr-array-size", type=int, default=10,
                   help="element count of auto-generated pointer regions")
    p.add_argument("--solver", choices=["builtin", "smtlib-out"], default="builtin")
    p.add_argument("--budget-ms", type=int, default=2000,
                   help="per-constraint solver time budget")
    p.add_argument("--budget-nodes", type=int, default=10000,
                   help="per-constraint solver search-node budget")
    p.add_argument("--smtlib-wait-ms", type=int, default=0,
                   help="with --solver=smtlib-out, wait this long for a "
                        ".model answer file before falling back to the "
                        "built-in backend")
    p.add_argument("--out-dir", default="ctgout")
    p.add_argument("--function", help="generate only for this function")
    p.add_argument("--do-not-stub", default="",
                   help="comma-separated callees that must not be stubbed")
    p.add_argument("--stub-globals", action="append", default=[],
                   metavar="CALLEE=G1,G2",
                   help="globals a stubbed callee may modify (repeatable)")
    p.add_argument("--dump-cfg", action="store_true",
                   help="write <fn>_cfg.txt next to the other outputs")
    p.add_argument("--dump-stct", action="store_true",
                   help="print the final symbolic test case tree")
    p.add_argument("--jobs", type=int, default=1,
                   help="generate for this many functions concurrently")
    p.add_argument("-v", "--verbose", action="store_true",
                   help="log selected traces and constraint text")
    p.add_argument("-q", "--quiet", action="store_true")
    return p


def config_from_args(args: argparse.Namespace) -> Config:
    stub_globals: dict[str, list[str]] = {}
    for spec in args.stub_globals:
        callee, _, names = spec.partition("=")
        if not names:
            raise CunitgenError(f"malformed --stub-globals {spec!r}")
        stub_globals.setdefault(callee.strip(), []).extend(
            n.strip() for n in names.split(",") if n.strip())
    return Config(
        coverage=args.coverage,
        max_depth=args.max_depth,
        ptr_array_size=args.ptr_array_size,
        solver=args.solver,
        budget_ms=args.budget_ms,
        budget_nodes=args.budget_nodes,
        out_dir=args.out_dir,
        function=args.function,
        do_not_stub=[s.strip() for s in args.do_not_stub.split(",") if s.strip()],
        stub_globals=stub_globals,
        smtlib_wait_ms=args.smtlib_wait_ms,
        verbose=args.verbose,
        quiet=args.quiet,
        jobs=max(1, args.jobs),
        dump_cfg=args.dump_cfg,
        dump_stct=args.dump_stct,
    )


def ship_compat_header(out_dir: str) -> None:
    src = os.path.join(os.path.dirname(__file__), "data", "rtt_annotations.h")
    os.makedirs(out_dir, exist_ok=True)
    shutil.copyfile(src, os.path.join(out_dir, "rtt_annotations.h"))


def generate(config: Config, sources: list[str]) -> tuple[int, list[FunctionOutcome]]:
    """Run the whole pipeline; returns (exit status, per-function outcomes)."""
    work: list[tuple] = []
    try:
        for path in sources:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
            unit = parse_unit(text, path, os.path.dirname(os.path.abspath(path)))
            for fn in unit.functions:
                if fn.body is None or fn.annotation_only:
                    continue
                if config.function and fn.name != config.function:
                    continue
                work.append((unit, fn))
    except CunitgenError as exc:
        if not config.quiet:
            print(f"error: {exc}", file=sys.stderr)
        return 1, []
    if config.function and not work:
        if not config.quiet:
            print(f"error: function {config.function} not found", file=sys.stderr)
        return 1, []
    ship_compat_header(config.out_dir)
    if config.jobs > 1 and len(work) > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            outcomes = list(pool.map(
                lambda item: generate_function(item[0], item[1], config), work))
    else:
        outcomes = [generate_function(unit, fn, config) for unit, fn in work]
    status = 0
    for (unit, _fn), outcome in zip(work, outcomes):
        if outcome.status != "ok":
            status = 1
            if not config.quiet:
                print(f"error [{outcome.name}]: {outcome.message}", file=sys.stderr)
            continue
        write_outputs(outcome, unit, config)
        if not outcome.criterion_complete and status == 0:
            status = 2
        if not config.quiet:
            r = outcome.report
            print(f"{outcome.name}: {len(outcome.test_cases)} test cases, "
                  f"{r.nodes_covered}/{r.nodes_total} nodes, "
                  f"{r.edges_covered}/{r.edges_total} branch edges "
                  f"({outcome.elapsed_s:.2f}s)")
            if config.verbose and outcome.message:
                print(outcome.message)
    return status, outcomes


def main(argv: list[str] | None = None) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        config = config_from_args(args)
    except (CunitgenError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    status, _ = generate(config, args.sources)
    return status


if __name__ == "__main__":
    sys.exit(main())
