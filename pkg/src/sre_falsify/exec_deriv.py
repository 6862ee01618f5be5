"""Derivative-guided symbolic execution.

A state carries the path condition Φ, the symbolic trace Τ produced so far
and the continuation effect R_cont, the derivative of the postcondition over
Τ.  ``admit`` refines Τ with a compatible sample of the admitted language,
``append`` extends Τ with an effect sample met with a prefix of R_cont.  The
worklist prefers states whose R_cont is close to ∅, and a state whose R_cont
*is* ∅ is a falsification as soon as Τ is reachable.
"""

from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass

from . import core as C
from . import events as ev
from . import solver as _solver
from . import sre as S
from .engine import (
    Bounds,
    Deadline,
    FalsifyResult,
    SolverMeter,
    Stats,
    Verdict,
    complete_model,
    ground_trace,
    log,
    reachable,
    replay,
)
from .logic import FALSE, TRUE, conj
from .speclang import Harness


@dataclass(eq=False)
class DState:
    phi: object
    trace: tuple
    rcont: S.SRE
    expr: C.Expr
    ctx_len: int = 0
    unrolls: int = 0
    since_check: int = 0


def _usable(l: ev.SymEvent) -> bool:
    # semantic emptiness is left to the (cheaper, path-aware) reachability check
    return not ev.is_bottom(l)


def admit_traces(trace: tuple, r_past: S.SRE) -> list:
    """Every Τ ∧ Τ_past with Τ_past ⊑ r_past and |Τ_past| = |Τ|, built
    position by position so incompatible samples are never materialised."""
    out: list = []
    n = len(trace)

    def go(i, r, acc):
        if i == n:
            if S.nullable(r):
                out.append(tuple(acc))
            return
        for l, d in S._successors(r, include_dead=False):
            if d is S.EMPTY:
                continue
            m = ev.meet(l, trace[i])
            if not _usable(m):
                continue
            acc.append(m)
            go(i + 1, d, acc)
            acc.pop()

    go(0, r_past, [])
    return list(dict.fromkeys(out))


def pair_with_prefixes(t_eff: tuple, rcont: S.SRE) -> list:
    """(Τ_eff ∧ Τ_prefix, ∂_{Τ_prefix} R_cont) for every prefix of R_cont of
    length |Τ_eff|, dead branches included."""
    out: list = []

    def go(i, r, acc):
        if i == len(t_eff):
            out.append((tuple(acc), r))
            return
        for l, d in S._successors(r, include_dead=True):
            m = ev.meet(l, t_eff[i])
            if not _usable(m):
                continue
            acc.append(m)
            go(i + 1, d, acc)
            acc.pop()

    go(0, rcont, [])
    return out


class DerivEngine:
    def __init__(self, bounds: Bounds | None = None, method: str = ""):
        self.b = bounds or Bounds()
        self.method = method
        self.stats = Stats()
        self._serial = itertools.count()
        self._samples: dict = {}

    # -- sampling caches ---------------------------------------------------------

    def _effect_samples(self, r: S.SRE, exact: int | None) -> list:
        key = (r, exact)
        hit = self._samples.get(key)
        if hit is None:
            if exact is None:
                hit = list(S.sample_traces(r, self.b.eff_len))
            else:
                hit = [t for t in S.sample_traces(r, exact) if len(t) == exact]
            self._samples[key] = hit
        return hit

    # -- search --------------------------------------------------------------------

    def _push(self, heap, s: DState):
        n = len(s.trace)
        if n - s.ctx_len > self.b.max_events:
            self.stats.pruned += 1
            self.bounded = True
            return
        self.stats.max_trace = max(self.stats.max_trace, n)
        prio = S.dist_to_dead(s.rcont, self.b.dist_cutoff)
        heapq.heappush(heap, (prio, n, next(self._serial), s))

    def _candidate(self, s: DState, kind: str):
        res = reachable(s.phi, s.trace)
        if res is _solver.UNKNOWN:
            self.stats.unknowns += 1
            return None
        if not res:
            self.stats.pruned += 1
            return None
        model = complete_model(res.model, s.phi, self.h.ctx, self.h.eff)
        out = FalsifyResult(Verdict.FALSIFIED, "deriv", self.method, s.trace,
                            ground_trace(s.trace, model), model, s.phi, kind, ctx_len=s.ctx_len)
        if not replay(out, self.h):
            log.error("replay rejected a %s witness; treating it as unknown", kind)
            self.stats.unknowns += 1
            return None
        return out

    def _search(self, expr, ctx_len: int, deadline: Deadline):
        heap: list = []
        self._push(heap, DState(TRUE, (), self.h.eff, expr))
        while heap:
            if deadline.expired() or self.stats.states >= self.b.max_steps:
                self.budget_hit = True
                return None
            _, _, _, s = heapq.heappop(heap)
            self.stats.states += 1
            if s.rcont is S.EMPTY:
                found = self._candidate(s, "early")
                if found:
                    return found
                continue
            s.since_check += 1
            if s.since_check >= self.b.reach_every and s.trace:
                s.since_check = 0
                r = reachable(s.phi, s.trace, want_model=False)
                if r is _solver.UNSAT:
                    self.stats.pruned += 1
                    continue
            try:
                found = self._expand(s, heap, ctx_len)
            except _solver.SolverUnknown as exc:
                log.warning("state dropped: %s", exc)
                self.stats.unknowns += 1
                continue
            if found:
                return found
        return None

    def _expand(self, s: DState, heap, ctx_len: int):
        expr, phi, unrolls = s.expr, s.phi, s.unrolls
        # run pure, non-branching steps in place
        while True:
            st = C.decompose(expr)
            if st.kind == "pure" and len(st.succ) == 1:
                unrolls += st.unrolls
                if unrolls > self.b.max_unroll:
                    self.bounded = True
                    return None
                expr = st.succ[0]
                continue
            if st.kind == "gensym":
                expr = st.plug(C.gensym_value(st.payload))
                continue
            if st.kind == "assume":
                phi = conj(phi, st.payload)
                if phi is FALSE:
                    self.stats.pruned += 1
                    return None
                expr = st.plug(None)
                continue
            break

        def child(trace=s.trace, rcont=s.rcont, e=expr, ctx=s.ctx_len):
            return DState(phi, trace, rcont, e, ctx, unrolls, s.since_check)

        if st.kind == "value":
            if not S.nullable(s.rcont):
                return self._candidate(child(), "postcondition")
            return None
        if st.kind == "abort":
            return self._candidate(child(), "abort")
        if st.kind == "pure":
            for e in st.succ:
                self._push(heap, child(e=e))
            return None
        if st.kind == "admit":
            nxt = st.plug(None)
            for t in admit_traces(s.trace, st.payload):
                self._push(heap, child(trace=t, e=nxt))
            return None
        if st.kind == "append":
            nxt = st.plug(None)
            if st.context:
                # the context is judged by R_ctx alone; R_cont stays R_eff
                for t_ctx in self._effect_samples(st.payload, ctx_len):
                    self._push(heap, child(trace=s.trace + t_ctx, e=nxt, ctx=s.ctx_len + len(t_ctx)))
                return None
            for t_eff in self._effect_samples(st.payload, None):
                for t_new, d in pair_with_prefixes(t_eff, s.rcont):
                    self._push(heap, child(trace=s.trace + t_new, rcont=d, e=nxt))
            return None
        raise RuntimeError(f"stuck state: {expr!r}")

    def run(self, harness: Harness) -> FalsifyResult:
        start = time.perf_counter()
        meter = SolverMeter()
        C.clear_caches()
        self.h = harness.instantiate()
        expr = self.h.expr
        deadline = Deadline(self.b.timeout)
        self.budget_hit = False
        self.bounded = False
        found = None
        for ctx_len in range(0, self.b.max_ctx + 1):
            found = self._search(expr, ctx_len, deadline)
            if found or self.budget_hit:
                break
        self.stats.wall_seconds = time.perf_counter() - start
        meter.fill(self.stats)
        if found:
            found.stats = self.stats
            found.harness = self.h
            return found
        if self.budget_hit:
            verdict = Verdict.BUDGET
        elif self.stats.unknowns:
            verdict = Verdict.UNKNOWN
        else:
            verdict = Verdict.NOT_FALSIFIED
        return FalsifyResult(verdict, "deriv", self.method, stats=self.stats)


def run_deriv(harness: Harness, bounds: Bounds | None = None, method: str = "") -> FalsifyResult:
    return DerivEngine(bounds, method).run(harness)
