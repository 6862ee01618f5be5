"""Pieces shared by both execution engines: bounds, verdicts, reachability
of symbolic traces, ground witness construction and concrete replay."""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field
from typing import Sequence

from . import events as ev
from . import solver as _solver
from . import sre as S
from .logic import Formula, Sym, SymVar, conj, eval_ground, free_syms

log = logging.getLogger(__name__)


class Verdict(enum.Enum):
    FALSIFIED = "Falsified"
    NOT_FALSIFIED = "NotFalsifiedAtBound"
    BUDGET = "Budget"
    UNKNOWN = "Unknown"


@dataclass
class Bounds:
    max_ctx: int = 4  # longest context trace tried (derivative engine)
    max_events: int = 8  # events a single run may produce after the context
    max_unroll: int = 4  # recursive calls unfolded along one path
    max_steps: int = 200_000  # state expansions over the whole search
    eff_len: int = 2  # longest effect sample appended per call
    dist_cutoff: int = 4
    reach_every: int = 1  # reachability check period (expansions)
    timeout: float = 60.0  # wall-clock seconds for one engine run
    max_minterms: int = 4096
    max_word_states: int = 200_000  # naive emptiness search nodes

    @classmethod
    def from_dict(cls, d: dict) -> "Bounds":
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)


@dataclass
class Stats:
    states: int = 0
    pruned: int = 0
    solver_calls: int = 0
    solver_seconds: float = 0.0
    wall_seconds: float = 0.0
    max_trace: int = 0
    unknowns: int = 0


@dataclass
class FalsifyResult:
    verdict: Verdict
    engine: str
    method: str = ""
    trace: tuple = ()  # symbolic witness
    ground: tuple = ()  # GroundEvent witness
    model: dict = field(default_factory=dict)  # SymVar -> value
    phi: Formula | None = None
    kind: str = ""  # "postcondition" | "early" | "abort"
    curr: S.SRE | None = None  # naive engine: the trace language the witness must belong to
    ctx_len: int = 0  # witness events belonging to the harness context
    stats: Stats = field(default_factory=Stats)
    note: str = ""
    harness: object = field(default=None, repr=False)  # the instantiated harness replayed against

    @property
    def falsified(self) -> bool:
        return self.verdict is Verdict.FALSIFIED


class Deadline:
    def __init__(self, seconds: float):
        self.end = time.monotonic() + seconds

    def expired(self) -> bool:
        return time.monotonic() > self.end


class SolverMeter:
    """Track solver work done during one engine run."""

    def __init__(self):
        self.s = _solver.get_solver()
        self.calls0 = self.s.stats.calls
        self.secs0 = self.s.stats.seconds

    def fill(self, stats: Stats):
        stats.solver_calls = self.s.stats.calls - self.calls0
        stats.solver_seconds = self.s.stats.seconds - self.secs0


# ---------------------------------------------------------------------------
# Reachability and witnesses


def trace_constraint(trace: Sequence[ev.SymEvent]) -> Formula:
    return conj(*(ev.constr_event(l, pos=i) for i, l in enumerate(trace)))


def reachable(phi: Formula, trace: Sequence[ev.SymEvent], want_model: bool = True):
    """Sat(model) | UNSAT | UNKNOWN for Φ ∧ constr(Τ)."""
    return _solver.get_solver().check_sat(conj(phi, trace_constraint(trace)), want_model)


def _value_of(model: dict, v: SymVar):
    return model.get(v, 0)


def ground_event_at(l: ev.SymEvent, pos: int, model: dict) -> ev.GroundEvent:
    """A concrete call matching ``l`` read off a model of ``constr_event(l, pos)``."""
    sig = ev.current_signature()
    candidates = [f for f, _ in l.atoms]
    for f in candidates:
        d = ev.decl_of(f)
        args = tuple(_value_of(model, ev.event_var(pos, f, loc)) for loc in d.locals)
        ret = _value_of(model, ev.event_var(pos, f, d.ret_local))
        g = ev.GroundEvent(f, args, ret)
        if ev.match_ground(l, g, model):
            return g
    if l.others:
        names = sorted(sig.names()) if sig is not None else []
        for f in names:
            if f not in l._amap:
                d = ev.decl_of(f)
                return ev.GroundEvent(f, tuple(0 for _ in d.params), 0)
    raise ValueError(f"model does not realise literal {ev.format_event(l)} at position {pos}")


def ground_trace(trace: Sequence[ev.SymEvent], model: dict) -> tuple:
    return tuple(ground_event_at(l, i, model) for i, l in enumerate(trace))


def complete_model(model: dict, *things) -> dict:
    """Give every symbol mentioned in ``things`` (formulas/SREs) a value."""
    out = dict(model)
    for t in things:
        syms = S.sre_syms(t) if isinstance(t, S.SRE) else free_syms(t)
        for v in syms:
            if isinstance(v, Sym):
                v = v.var
            out.setdefault(v, 0)
    return out


def replay(result: FalsifyResult, harness) -> bool:
    """Concrete re-check of a falsification: the model satisfies the path
    condition, every witness event matches its literal, and (for
    postcondition violations) the context part of the ground trace is in
    σ(R_ctx) while the rest is rejected by σ(R_eff)."""
    if not result.falsified:
        return False
    sigma = result.model
    if result.phi is not None and not eval_ground(result.phi, sigma):
        return False
    if result.trace and len(result.trace) == len(result.ground):
        for l, g in zip(result.trace, result.ground):
            if not ev.match_ground(l, g, sigma):
                return False
    if result.curr is not None and not S.ground_match(result.curr, result.ground, sigma):
        return False
    if result.kind == "abort":
        return True
    ctx, rest = result.ground[:result.ctx_len], result.ground[result.ctx_len:]
    return S.ground_match(harness.ctx, ctx, sigma) and not S.ground_match(harness.eff, rest, sigma)
