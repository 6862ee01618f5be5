"""Human and machine-readable renderings of engine results and bench tables."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, fields

from . import events as ev
from .engine import FalsifyResult, Verdict

# ---------------------------------------------------------------------------
# Single results


def _json_value(v):
    if isinstance(v, bool) or v is None:
        return v
    if isinstance(v, int):
        return v
    return str(v)


def user_model(model: dict) -> dict:
    """Model restricted to program-level symbols (event-locals are elided)."""
    out = {}
    for v, val in sorted(model.items(), key=lambda kv: getattr(kv[0], "id", 0)):
        name = repr(v)
        if "@" in name:
            continue
        out[name] = _json_value(val)
    return out


def result_to_json(r: FalsifyResult) -> dict:
    trace = []
    for i, g in enumerate(r.ground):
        qual = ev.format_event(r.trace[i]) if i < len(r.trace) else None
        trace.append({
            "fname": g.fname,
            "args": [_json_value(a) for a in g.args],
            "ret": _json_value(g.ret),
            "qualifier": qual,
        })
    return {
        "verdict": r.verdict.value,
        "method": r.method,
        "engine": r.engine,
        "kind": r.kind or None,
        "context_length": r.ctx_len if r.falsified else None,
        "trace": trace,
        "model": user_model(r.model),
        "stats": {
            "states": r.stats.states,
            "solver_calls": r.stats.solver_calls,
            "wall_ms": round(r.stats.wall_seconds * 1000, 3),
            "solver_ms": round(r.stats.solver_seconds * 1000, 3),
        },
        "note": r.note or None,
    }


def format_result(r: FalsifyResult) -> str:
    lines = [f"{r.method}: {r.verdict.value} ({r.engine} engine)"]
    if r.falsified:
        what = {"abort": "an assertion can fail",
                "early": "the produced trace can no longer satisfy the effect",
                "postcondition": "the produced trace violates the effect"}.get(r.kind, r.kind)
        lines.append(f"  reason: {what}")
        lines.append("  witness trace:")
        for i, g in enumerate(r.ground):
            tag = "ctx" if i < r.ctx_len else "run"
            lines.append(f"    [{tag}] {g}")
        model = user_model(r.model)
        if model:
            lines.append("  model: " + ", ".join(f"{k} = {v}" for k, v in model.items()))
    if r.note:
        lines.append(f"  note: {r.note}")
    s = r.stats
    lines.append(f"  states {s.states}, pruned {s.pruned}, solver calls {s.solver_calls}, "
                 f"wall {s.wall_seconds:.3f}s (solver {s.solver_seconds:.3f}s)")
    return "\n".join(lines)


def dumps(r: FalsifyResult) -> str:
    return json.dumps(result_to_json(r), indent=2)


# ---------------------------------------------------------------------------
# Bench tables


@dataclass
class BenchRow:
    benchmark: str
    variant: str  # "bug" | "fixed"
    engine: str
    verdict: str  # a Verdict value, or "T/O" / "O/M" / "error"
    wall_s: float
    solver_s: float = 0.0
    states: int = 0
    solver_calls: int = 0
    replay: str = ""  # "ok", "failed", or "" when nothing to replay
    expected: bool = False
    detail: str = ""


TIMEOUT = "T/O"
OUT_OF_MEMORY = "O/M"


def expected_verdict(variant: str) -> str:
    return Verdict.FALSIFIED.value if variant == "bug" else Verdict.NOT_FALSIFIED.value


def rows_to_csv(rows: list) -> str:
    buf = io.StringIO()
    names = [f.name for f in fields(BenchRow)]
    w = csv.DictWriter(buf, fieldnames=names, lineterminator="\n")
    w.writeheader()
    for r in rows:
        d = asdict(r)
        d["wall_s"] = f"{r.wall_s:.4f}"
        d["solver_s"] = f"{r.solver_s:.4f}"
        w.writerow(d)
    return buf.getvalue()


def _cell(row: BenchRow | None) -> str:
    if row is None:
        return ""
    if row.verdict in (TIMEOUT, OUT_OF_MEMORY, "error"):
        return row.verdict
    short = {"Falsified": "F", "NotFalsifiedAtBound": "NF", "Budget": "T/O", "Unknown": "?"}
    return f"{short.get(row.verdict, row.verdict)} {row.wall_s:.2f}s"


def _speedup(d: BenchRow | None, n: BenchRow | None) -> str:
    if d is None or n is None:
        return ""
    if n.verdict in (TIMEOUT, OUT_OF_MEMORY) or n.verdict == Verdict.BUDGET.value:
        return n.verdict if n.verdict != Verdict.BUDGET.value else TIMEOUT
    if d.wall_s <= 0:
        return ""
    return f"x{n.wall_s / d.wall_s:.1f}"


def rows_to_markdown(rows: list) -> str:
    """One line per benchmark: both variants under both engines, plus the
    naive/derivative wall-clock ratio on the buggy variant."""
    index = {(r.benchmark, r.variant, r.engine): r for r in rows}
    names = sorted({r.benchmark for r in rows})
    out = ["| benchmark | deriv bug | deriv fixed | naive bug | naive fixed | speedup (bug) |",
           "|---|---|---|---|---|---|"]
    for b in names:
        get = lambda v, e: index.get((b, v, e))  # noqa: E731
        out.append(f"| {b} | {_cell(get('bug', 'deriv'))} | {_cell(get('fixed', 'deriv'))} | "
                   f"{_cell(get('bug', 'naive'))} | {_cell(get('fixed', 'naive'))} | "
                   f"{_speedup(get('bug', 'deriv'), get('bug', 'naive'))} |")
    bad = [r for r in rows if not r.expected]
    out.append("")
    out.append("F = Falsified, NF = NotFalsifiedAtBound, T/O = time budget exhausted, "
               "O/M = memory budget exhausted.")
    if bad:
        out.append("")
        out.append("Unexpected verdicts: " + ", ".join(
            f"{r.benchmark}/{r.variant}/{r.engine} ({r.verdict})" for r in bad))
    return "\n".join(out) + "\n"


def plot_timings(rows: list, path: str, cap: float | None = None) -> None:
    """Grouped bar chart of wall-clock time per benchmark and engine (buggy
    variants); runs that hit a budget are drawn at the cap and hatched."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    bug = [r for r in rows if r.variant == "bug"]
    names = sorted({r.benchmark for r in bug})
    engines = [e for e in ("deriv", "naive") if any(r.engine == e for r in bug)]
    index = {(r.benchmark, r.engine): r for r in bug}
    x = np.arange(len(names))
    width = 0.8 / max(len(engines), 1)
    fig, ax = plt.subplots(figsize=(max(6.0, 1.1 * len(names)), 4.0))
    for k, eng in enumerate(engines):
        heights, hatches = [], []
        for n in names:
            r = index.get((n, eng))
            if r is None:
                heights.append(0.0)
                hatches.append("")
                continue
            budget = r.verdict in (TIMEOUT, OUT_OF_MEMORY, Verdict.BUDGET.value)
            h = cap if (budget and cap) else r.wall_s
            heights.append(max(h, 1e-3))
            hatches.append("//" if budget else "")
        bars = ax.bar(x + (k - (len(engines) - 1) / 2) * width, heights, width, label=eng)
        for bar, hatch in zip(bars, hatches):
            bar.set_hatch(hatch)
    ax.set_yscale("log")
    ax.set_ylabel("wall clock (s)")
    ax.set_xticks(x)
    ax.set_xticklabels(names, rotation=30, ha="right")
    ax.set_title("Time to falsify the buggy variant")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
