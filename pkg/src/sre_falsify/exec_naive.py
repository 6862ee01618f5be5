"""Baseline engine: trace-augmented symbolic execution that carries the whole
trace language R_curr and decides emptiness by mintermization.

The context/effect split of the postcondition is made explicit by a single
boundary marker event that the harness's context append emits: R_curr ends
its context part with the marker, admitted languages are interleaved with
it, and the postcondition becomes ``R_ctx · marker · R_eff``.
"""

from __future__ import annotations

import heapq
import itertools
import time
from collections import deque
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
    log,
    replay,
)
from .logic import FALSE, TRUE, UNIT, And, Atom, FalseF, Not, Or, TrueF, atoms_of, conj, neg
from .speclang import Harness

MARKER_FNAME = "#ctx"


# known to decl_of but kept out of user signatures
ev._known_decls[MARKER_FNAME] = ev.EffectDecl(MARKER_FNAME, (), ("ret", UNIT))
MARKER = ev.atom_event(MARKER_FNAME)
NOT_MARKER = ev.complement(MARKER)
NO_MARKERS = S.star(S.lit(NOT_MARKER))
ONE_MARKER = S.concat(S.star(S.lit(NOT_MARKER)), S.lit(MARKER), S.star(S.lit(NOT_MARKER)))


# ---------------------------------------------------------------------------
# Marker-aware SRE transformations


_excl_memo: dict = {}
_inter_memo: dict = {}


def exclude_marker(r: S.SRE) -> S.SRE:
    """``r`` with every literal restricted to non-marker events."""
    hit = _excl_memo.get(r)
    if hit is not None:
        return hit
    if r.kind == S.LIT_K:
        out = S.lit(ev.meet(r.lit, NOT_MARKER))
    elif r.kind == S.NOT_K:
        # a complement would otherwise readmit words that mention the marker
        out = S.and_(S.neg(exclude_marker(r.kids[0])), NO_MARKERS)
    elif r.kids:
        out = S.rebuild(r, [exclude_marker(c) for c in r.kids])
    else:
        out = r
    _excl_memo[r] = out
    return out


def interleave_marker(r: S.SRE) -> S.SRE:
    """Words of ``r`` with exactly one marker inserted somewhere."""
    hit = _inter_memo.get(r)
    if hit is not None:
        return hit
    k = r.kind
    m = S.lit(MARKER)
    if k == S.EMPTY_K:
        out = S.EMPTY
    elif k == S.EPS_K:
        out = m
    elif k == S.LIT_K:
        x = exclude_marker(r)
        out = S.or_(S.concat(m, x), S.concat(x, m))
    elif k == S.STAR_K:
        x = exclude_marker(r)
        # inside one iteration, or between two (which covers the empty word)
        out = S.or_(S.concat(x, interleave_marker(r.kids[0]), x), S.concat(x, m, x))
    elif k == S.CAT_K:
        head, rest = r.kids[0], S.concat(*r.kids[1:])
        out = S.or_(S.concat(interleave_marker(head), exclude_marker(rest)),
                    S.concat(exclude_marker(head), interleave_marker(rest)))
    elif k == S.NOT_K:
        out = S.and_(ONE_MARKER, S.neg(interleave_marker(r.kids[0])))
    elif k == S.AND_K:
        out = S.and_(*(interleave_marker(c) for c in r.kids))
    else:
        out = S.or_(*(interleave_marker(c) for c in r.kids))
    _inter_memo[r] = out
    return out


# ---------------------------------------------------------------------------
# Mintermization and emptiness


class MintermExplosion(Exception):
    pass


@dataclass(frozen=True)
class Letter:
    fname: str
    minterm: object  # Formula over event-locals and symbols
    signs: tuple  # ((atom, bool), ...)


def _prop_eval(f, signs: dict) -> bool:
    if isinstance(f, TrueF):
        return True
    if isinstance(f, FalseF):
        return False
    if isinstance(f, Atom):
        return signs[f]
    if isinstance(f, Not):
        return not signs[f.arg]
    if isinstance(f, And):
        return all(_prop_eval(a, signs) for a in f.args)
    if isinstance(f, Or):
        return any(_prop_eval(a, signs) for a in f.args)
    raise TypeError(f)


@dataclass
class SatSre:
    """Outcome of :func:`sat_sre`: ``status`` is "sat", "unsat" or "unknown"."""

    status: str
    model: dict | None = None
    word: tuple = ()  # GroundEvent witness
    reason: str = ""


class _Alphabet:
    def __init__(self, phi, r: S.SRE, max_minterms: int, deadline: Deadline | None):
        self.phi = phi
        lits = S.literals(r)
        atoms_by_f: dict = {}
        for l in lits:
            for f, q in l.atoms:
                bucket = atoms_by_f.setdefault(f, {})
                for a in atoms_of(q):
                    bucket.setdefault(a, None)
        sig = ev.current_signature()
        names = set(sig.names()) if sig is not None else set()
        names |= set(atoms_by_f)
        letters: list = []
        solver = _solver.get_solver()
        for f in sorted(atoms_by_f):
            parts = [((), TRUE)]
            for a in atoms_by_f[f]:
                nxt = []
                for signs, q in parts:
                    for pol in (True, False):
                        q2 = conj(q, a if pol else neg(a))
                        if q2 is FALSE:
                            continue
                        res = solver.check_sat(conj(phi, ev.localize(q2, f, 0)), want_model=False)
                        if res is _solver.UNKNOWN:
                            raise _solver.SolverUnknown("minterm satisfiability")
                        if res:
                            nxt.append((signs + ((a, pol),), q2))
                if len(letters) + len(nxt) > max_minterms:
                    raise MintermExplosion(f"more than {max_minterms} minterms")
                if deadline is not None and deadline.expired():
                    raise TimeoutError
                parts = nxt
            letters.extend(Letter(f, q, signs) for signs, q in parts)
        rest = sorted(names - set(atoms_by_f))
        if rest:
            letters.append(Letter(rest[0], TRUE, ()))
        self.letters = letters
        self._match: dict = {}

    def matches(self, l: ev.SymEvent, i: int) -> bool:
        key = (l, i)
        hit = self._match.get(key)
        if hit is None:
            letter = self.letters[i]
            q = l._amap.get(letter.fname)
            hit = l.others if q is None else _prop_eval(q, dict(letter.signs))
            self._match[key] = hit
        return hit


class _LetterMatcher:
    def __init__(self, alpha: _Alphabet):
        self.alpha = alpha
        self.memo: dict = {}

    def deriv(self, r: S.SRE, i: int) -> S.SRE:
        key = (r, i)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        k = r.kind
        if k == S.EMPTY_K or k == S.EPS_K:
            out = S.EMPTY
        elif k == S.LIT_K:
            out = S.EPS if self.alpha.matches(r.lit, i) else S.EMPTY
        elif k == S.STAR_K:
            out = S.concat(self.deriv(r.kids[0], i), r)
        elif k == S.CAT_K:
            head, rest = r.kids[0], S.concat(*r.kids[1:])
            out = S.concat(self.deriv(head, i), rest)
            if S.nullable(head):
                out = S.or_(out, self.deriv(rest, i))
        elif k == S.NOT_K:
            out = S.neg(self.deriv(r.kids[0], i))
        elif k == S.AND_K:
            out = S.and_(*(self.deriv(c, i) for c in r.kids))
        else:
            out = S.or_(*(self.deriv(c, i) for c in r.kids))
        self.memo[key] = out
        return out


def _letters_constraint(phi, alpha: _Alphabet, used) -> object:
    return conj(phi, *(ev.localize(alpha.letters[i].minterm, alpha.letters[i].fname, ("L", i))
                       for i in sorted(used)))


def _ground_letter(alpha: _Alphabet, i: int, model: dict) -> ev.GroundEvent:
    letter = alpha.letters[i]
    d = ev.decl_of(letter.fname)
    args = tuple(model.get(ev.event_var(("L", i), letter.fname, loc), 0) for loc in d.locals)
    ret = model.get(ev.event_var(("L", i), letter.fname, d.ret_local), 0)
    return ev.GroundEvent(letter.fname, args, ret)


def sat_sre(phi, r: S.SRE, bounds: Bounds | None = None, deadline: Deadline | None = None) -> SatSre:
    """Decide whether some σ ⊨ Φ admits a word of σ(r).

    Satisfiability of a word depends only on the *set* of letters it uses
    (event-locals are fresh per position), so the search runs over pairs
    (derivative, letter set) and is exhaustive up to ``max_word_states``.
    """
    bounds = bounds or Bounds()
    if r is S.EMPTY:
        return SatSre("unsat")
    solver = _solver.get_solver()
    base = solver.check_sat(phi, want_model=False)
    if base is _solver.UNKNOWN:
        return SatSre("unknown", reason="path condition")
    if not base:
        return SatSre("unsat")
    try:
        alpha = _Alphabet(phi, r, bounds.max_minterms, deadline)
    except MintermExplosion as exc:
        return SatSre("unknown", reason=str(exc))
    except _solver.SolverUnknown as exc:
        return SatSre("unknown", reason=str(exc))
    matcher = _LetterMatcher(alpha)
    set_sat: dict = {frozenset(): True}

    def feasible(used: frozenset):
        hit = set_sat.get(used)
        if hit is None:
            res = solver.check_sat(_letters_constraint(phi, alpha, used), want_model=False)
            if res is _solver.UNKNOWN:
                return None
            hit = set_sat[used] = bool(res)
        return hit

    # Feasibility is monotone in the letter set, so a node whose set is a
    # superset of one already seen at the same derivative adds nothing.
    # Expanding by set size first keeps the per-state antichains small.
    start = (r, frozenset())
    parent = {start: None}
    seen_sets: dict = {}
    serial = itertools.count()
    heap = [(0, next(serial), start)]
    unknown = False
    expanded = 0
    while heap:
        expanded += 1
        if expanded > bounds.max_word_states:
            return SatSre("unknown", reason="word search bound")
        if deadline is not None and deadline.expired():
            raise TimeoutError
        _, _, node = heapq.heappop(heap)
        state, used = node
        minimal = seen_sets.setdefault(state, [])
        if any(u <= used for u in minimal):
            continue
        minimal.append(used)
        if S.nullable(state):
            res = solver.check_sat(_letters_constraint(phi, alpha, used))
            if isinstance(res, _solver.Sat):
                word = []
                n = node
                while parent[n] is not None:
                    n, i = parent[n]
                    word.append(i)
                word.reverse()
                return SatSre("sat", res.model, tuple(_ground_letter(alpha, i, res.model) for i in word))
            if res is _solver.UNKNOWN:
                unknown = True
        for i in range(len(alpha.letters)):
            d = matcher.deriv(state, i)
            if d is S.EMPTY:
                continue
            nused = used | {i}
            nxt = (d, nused)
            if nxt in parent or any(u <= nused for u in seen_sets.get(d, ())):
                continue
            ok = feasible(nused)
            if ok is None:
                unknown = True
                continue
            if not ok:
                continue
            parent[nxt] = (node, i)
            heapq.heappush(heap, (len(nused), next(serial), nxt))
    return SatSre("unknown" if unknown else "unsat")


# ---------------------------------------------------------------------------
# Naive stepping


@dataclass(eq=False)
class NState:
    phi: object
    rcurr: S.SRE
    expr: C.Expr
    appended: int = 0
    unrolls: int = 0


def step_naive(s: NState) -> list:
    """Successor states by the naive rules; terminal states yield []."""
    st = C.decompose(s.expr)
    if st.kind in ("value", "abort"):
        return []
    if st.kind == "pure":
        return [NState(s.phi, s.rcurr, e, s.appended, s.unrolls + st.unrolls) for e in st.succ]
    if st.kind == "gensym":
        return [NState(s.phi, s.rcurr, st.plug(C.gensym_value(st.payload)), s.appended, s.unrolls)]
    if st.kind == "assume":
        return [NState(conj(s.phi, st.payload), s.rcurr, st.plug(None), s.appended, s.unrolls)]
    if st.kind == "admit":
        return [NState(s.phi, S.and_(s.rcurr, interleave_marker(st.payload)), st.plug(None),
                       s.appended, s.unrolls)]
    if st.kind == "append":
        if st.context:
            r = S.concat(s.rcurr, exclude_marker(st.payload), S.lit(MARKER))
            return [NState(s.phi, r, st.plug(None), s.appended, s.unrolls)]
        r = S.concat(s.rcurr, exclude_marker(st.payload))
        return [NState(s.phi, r, st.plug(None), s.appended + 1, s.unrolls)]
    raise RuntimeError(f"stuck state: {s.expr!r}")


class NaiveEngine:
    def __init__(self, bounds: Bounds | None = None, method: str = ""):
        self.b = bounds or Bounds()
        self.method = method
        self.stats = Stats()

    def _check(self, s: NState, target: S.SRE, kind: str, deadline: Deadline):
        res = sat_sre(s.phi, target, self.b, deadline)
        if res.status == "unknown":
            log.info("naive emptiness check inconclusive: %s", res.reason)
            self.stats.unknowns += 1
            return None
        if res.status == "unsat":
            return None
        marker_at = next((j for j, g in enumerate(res.word) if g.fname == MARKER_FNAME), len(res.word))
        ground = tuple(g for g in res.word if g.fname != MARKER_FNAME)
        model = complete_model(res.model, s.phi, self.h.ctx, self.h.eff)
        if not S.ground_match(s.rcurr, res.word, model):
            log.error("naive witness is not in R_curr; treating it as unknown")
            self.stats.unknowns += 1
            return None
        out = FalsifyResult(Verdict.FALSIFIED, "naive", self.method, (), ground, model, s.phi, kind,
                            ctx_len=marker_at)
        if not replay(out, self.h):
            log.error("replay rejected a naive %s witness; treating it as unknown", kind)
            self.stats.unknowns += 1
            return None
        return out

    def run(self, harness: Harness) -> FalsifyResult:
        start = time.perf_counter()
        meter = SolverMeter()
        C.clear_caches()
        self.h = harness.instantiate()
        post = S.concat(exclude_marker(self.h.ctx), S.lit(MARKER), exclude_marker(self.h.eff))
        neg_post = S.neg(post)
        deadline = Deadline(self.b.timeout)
        frontier = deque([NState(TRUE, S.EPS, self.h.expr)])
        budget = found = None
        solver = _solver.get_solver()
        try:
            while frontier:
                if deadline.expired() or self.stats.states >= self.b.max_steps:
                    budget = True
                    break
                s = frontier.popleft()
                self.stats.states += 1
                st = C.decompose(s.expr)
                if st.kind == "value":
                    found = self._check(s, S.and_(s.rcurr, neg_post), "postcondition", deadline)
                elif st.kind == "abort":
                    found = self._check(s, s.rcurr, "abort", deadline)
                else:
                    for n in step_naive(s):
                        if n.unrolls > self.b.max_unroll or n.appended > self.b.max_events:
                            self.stats.pruned += 1
                            continue
                        if n.phi is not s.phi:
                            if n.phi is FALSE or not solver.check_sat(n.phi, want_model=False):
                                self.stats.pruned += 1
                                continue
                        frontier.append(n)
                if found:
                    break
        except TimeoutError:
            budget = True
        self.stats.wall_seconds = time.perf_counter() - start
        meter.fill(self.stats)
        if found:
            found.stats = self.stats
            found.harness = self.h
            return found
        if budget:
            verdict = Verdict.BUDGET
        elif self.stats.unknowns:
            verdict = Verdict.UNKNOWN
        else:
            verdict = Verdict.NOT_FALSIFIED
        return FalsifyResult(verdict, "naive", self.method, stats=self.stats)


def run_naive(harness: Harness, bounds: Bounds | None = None, method: str = "") -> FalsifyResult:
    return NaiveEngine(bounds, method).run(harness)
