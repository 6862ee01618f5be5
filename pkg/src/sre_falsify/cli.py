"""``sre-falsify``: falsify one method, or run a directory of benchmark pairs.

Exit codes for ``falsify``: 0 Falsified, 1 NotFalsifiedAtBound,
2 Budget or Unknown, 3 and above for usage, input and solver errors.
"""

from __future__ import annotations

import argparse
import logging
import multiprocessing
import shlex
import shutil
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import engine as E
from . import report
from . import solver as _solver
from .speclang import ParseError, SortError, load_module, module_harness

EXIT_FALSIFIED = 0
EXIT_NOT_FALSIFIED = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 3
EXIT_INPUT = 4
EXIT_SOLVER = 5

ENGINES = ("deriv", "naive")


@dataclass
class RunConfig:
    engine: str = "deriv"
    max_ctx: int | None = None
    max_events: int | None = None
    max_steps: int | None = None
    dist_cutoff: int | None = None
    solver_cmd: str | None = None
    query_timeout: float = 2.0
    timeout: float = 60.0
    verify: bool = False

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine {self.engine}")
        for name in ("max_ctx", "max_events", "max_steps", "dist_cutoff"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name.replace('_', '-')} must be non-negative")
        if self.timeout <= 0 or self.query_timeout <= 0:
            raise ValueError("timeouts must be positive")

    def bounds(self, file_bounds: dict) -> E.Bounds:
        b = E.Bounds.from_dict(file_bounds)
        for name in ("max_ctx", "max_events", "max_steps", "dist_cutoff"):
            v = getattr(self, name)
            if v is not None:
                setattr(b, name, v)
        b.timeout = self.timeout
        return b


class SolverSetupError(Exception):
    pass


def _install_solver(cfg: RunConfig):
    cmd = shlex.split(cfg.solver_cmd) if cfg.solver_cmd else _solver.default_solver_cmd()
    if not cmd:
        raise SolverSetupError("no SMT solver found: install z3 or pass --solver-cmd")
    if shutil.which(cmd[0]) is None:
        raise SolverSetupError(f"solver command not found: {cmd[0]}")
    if len(cmd) == 1:
        cmd += ["-in", "-smt2"]
    _solver.set_solver(_solver.SmtSolver(cmd, timeout=cfg.query_timeout))


def run_file(path: str, method: str | None, cfg: RunConfig) -> E.FalsifyResult:
    """Parse ``path``, build the harness for ``method`` and run one engine."""
    from .exec_deriv import run_deriv
    from .exec_naive import run_naive

    module = load_module(path)
    name = module.target(method)
    harness = module_harness(module, name)
    bounds = cfg.bounds(module.bounds)
    run = run_deriv if cfg.engine == "deriv" else run_naive
    result = run(harness, bounds, name)
    if cfg.verify and result.falsified and not E.replay(result, result.harness):
        result.verdict = E.Verdict.UNKNOWN
        result.note = "witness failed concrete replay"
    return result


def _exit_code(r: E.FalsifyResult) -> int:
    if r.verdict is E.Verdict.FALSIFIED:
        return EXIT_FALSIFIED
    if r.verdict is E.Verdict.NOT_FALSIFIED:
        return EXIT_NOT_FALSIFIED
    return EXIT_INCONCLUSIVE


def cmd_falsify(args) -> int:
    if args.method and args.method_opt and args.method != args.method_opt:
        print("error: conflicting method names", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = _config(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        _install_solver(cfg)
    except SolverSetupError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    try:
        result = run_file(args.file, args.method or args.method_opt, cfg)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ParseError, SortError, ValueError, KeyError) as exc:
        print(f"{args.file}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(report.dumps(result) if args.json else report.format_result(result))
    return _exit_code(result)


# ---------------------------------------------------------------------------
# bench


def _bench_child(conn, path, cfg: RunConfig, mem_mb: int | None):
    if mem_mb:
        import resource

        limit = mem_mb * 1024 * 1024
        resource.setrlimit(resource.RLIMIT_AS, (limit, limit))
    logging.disable(logging.CRITICAL)
    try:
        _install_solver(cfg)
        r = run_file(path, None, cfg)
        replay = ""
        if r.falsified:
            replay = "ok" if E.replay(r, r.harness) else "failed"
        s = r.stats
        conn.send(("ok", r.verdict.value, s.wall_seconds, s.solver_seconds, s.states,
                   s.solver_calls, replay))
    except MemoryError:
        conn.send(("oom",))
    except Exception as exc:  # reported as an "error" row, the suite goes on
        conn.send(("error", f"{type(exc).__name__}: {exc}"))
    finally:
        conn.close()


def bench_one(path: Path, engine: str, cfg: RunConfig, mem_mb: int | None,
              grace: float = 10.0) -> report.BenchRow:
    """Run one engine on one file in a child process under time and memory caps."""
    name, _, variant = path.stem.rpartition("_")
    run_cfg = RunConfig(**{**cfg.__dict__, "engine": engine})
    ctx = multiprocessing.get_context("fork")
    parent, child = ctx.Pipe(duplex=False)
    start = time.perf_counter()
    proc = ctx.Process(target=_bench_child, args=(child, str(path), run_cfg, mem_mb))
    proc.start()
    child.close()
    msg = None
    if parent.poll(cfg.timeout + grace):
        try:
            msg = parent.recv()
        except EOFError:
            msg = None
    elapsed = time.perf_counter() - start
    if proc.is_alive():
        proc.kill()
    proc.join()
    row = report.BenchRow(name, variant, engine, "error", elapsed)
    if msg is None:
        row.verdict = report.TIMEOUT if elapsed >= cfg.timeout else report.OUT_OF_MEMORY
    elif msg[0] == "oom":
        row.verdict = report.OUT_OF_MEMORY
    elif msg[0] == "error":
        row.detail = msg[1]
    else:
        _, verdict, wall, solver_s, states, calls, replay = msg
        row.verdict = verdict
        row.wall_s, row.solver_s, row.states, row.solver_calls, row.replay = (
            wall, solver_s, states, calls, replay)
        if verdict == E.Verdict.BUDGET.value and wall >= cfg.timeout:
            row.verdict = report.TIMEOUT
    row.expected = row.verdict == report.expected_verdict(variant) and row.replay != "failed"
    return row


def bench_pairs(directory: Path) -> list:
    files = sorted(directory.glob("*.hat"))
    return [f for f in files if f.stem.endswith(("_bug", "_fixed"))]


def cmd_bench(args) -> int:
    try:
        cfg = _config(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    directory = Path(args.dir)
    if not directory.is_dir():
        print(f"error: {directory} is not a directory", file=sys.stderr)
        return EXIT_INPUT
    files = bench_pairs(directory)
    if not files:
        print(f"error: no *_bug.hat / *_fixed.hat files in {directory}", file=sys.stderr)
        return EXIT_INPUT
    engines = ENGINES if args.engine == "both" else (args.engine,)
    rows = []
    for f in files:
        for eng in engines:
            row = bench_one(f, eng, cfg, args.mem_mb)
            rows.append(row)
            extra = f"  [{row.detail}]" if row.detail else ""
            print(f"{row.benchmark:24s} {row.variant:6s} {eng:6s} {row.verdict:20s} "
                  f"{row.wall_s:8.2f}s{extra}", flush=True)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "bench.csv").write_text(report.rows_to_csv(rows))
    (out / "bench.md").write_text(report.rows_to_markdown(rows))
    report.plot_timings(rows, str(out / "bench.png"), cap=cfg.timeout)
    print(f"wrote {out / 'bench.csv'}, {out / 'bench.md'}, {out / 'bench.png'}")
    return 0 if all(r.expected for r in rows if r.engine == "deriv") else EXIT_INCONCLUSIVE


# ---------------------------------------------------------------------------


def _config(args) -> RunConfig:
    return RunConfig(
        engine=args.engine if args.engine in ENGINES else "deriv",
        max_ctx=args.max_ctx,
        max_events=args.max_events,
        max_steps=args.max_steps,
        dist_cutoff=args.dist_cutoff,
        solver_cmd=args.solver_cmd,
        query_timeout=args.query_timeout,
        timeout=args.timeout,
        verify=getattr(args, "verify", False),
    )


def _bounds_flags(p: argparse.ArgumentParser):
    p.add_argument("--max-ctx", type=int, help="longest harness context trace to try")
    p.add_argument("--max-events", type=int, help="events a run may produce after the context")
    p.add_argument("--max-steps", type=int, help="state expansions before giving up")
    p.add_argument("--dist-cutoff", type=int, help="depth cutoff of the dead-state distance")
    p.add_argument("--solver-cmd", help="SMT-LIB2 solver command reading a script on stdin")
    p.add_argument("--query-timeout", type=float, default=2.0, help="seconds per solver query")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sre-falsify",
                                description="Find traces that violate a method's effect specification.")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("falsify", help="falsify one method of a .hat file")
    f.add_argument("file")
    f.add_argument("method", nargs="?", help="method to check (default: the file's harness)")
    f.add_argument("--method", dest="method_opt")
    f.add_argument("--engine", choices=ENGINES, default="deriv")
    f.add_argument("--timeout", type=float, default=60.0, help="wall-clock seconds for the run")
    f.add_argument("--json", action="store_true", help="print a JSON report")
    f.add_argument("--verify", action="store_true", help="replay the witness before reporting it")
    _bounds_flags(f)
    f.set_defaults(func=cmd_falsify)

    b = sub.add_parser("bench", help="run every *_bug/*_fixed pair in a directory")
    b.add_argument("dir")
    b.add_argument("--engine", choices=ENGINES + ("both",), default="both")
    b.add_argument("--timeout", type=float, default=60.0, help="per-run wall-clock budget")
    b.add_argument("--mem-mb", type=int, default=2048, help="per-run address-space cap (0 = none)")
    b.add_argument("--out", default="bench_out", help="directory for CSV, markdown and PNG")
    _bounds_flags(b)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    finally:
        _solver.get_solver().close()


if __name__ == "__main__":
    sys.exit(main())
