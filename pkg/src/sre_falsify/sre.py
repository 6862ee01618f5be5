"""Symbolic regular expressions and their derivatives.

Nodes are hash-consed; the smart constructors normalize enough (flattening,
ACI ordering of conjunction/disjunction, unit and zero laws) that derivative
states stay finite and "is this ∅" is a pointer comparison.
"""

from __future__ import annotations

import itertools
import logging
from collections import deque
from typing import Iterable, Iterator, Mapping, Sequence

from . import events as ev
from . import solver as _solver
from .events import BOTTOM, TOP, GroundEvent, SymEvent
from .logic import Formula, Sym, SymVar, free_syms, map_terms, subst_term

log = logging.getLogger(__name__)

MAX_LITERALS = 256


class NotAPrefix(Exception):
    """A literal neither included in nor disjoint from a head literal."""


class LiteralExplosion(Exception):
    """A next-literal set grew beyond ``MAX_LITERALS``."""


EMPTY_K, EPS_K, LIT_K, STAR_K, CAT_K, NOT_K, AND_K, OR_K = range(8)
_KIND_NAMES = ["empty", "eps", "lit", "star", "concat", "not", "and", "or"]


class SRE:
    __slots__ = ("kind", "lit", "kids", "serial", "_nullable", "__weakref__")
    _table: dict = {}
    _serials = itertools.count()

    def __new__(cls, kind: int, lit: SymEvent | None = None, kids: tuple = ()):
        key = (kind, lit, kids)
        obj = SRE._table.get(key)
        if obj is None:
            obj = object.__new__(cls)
            obj.kind = kind
            obj.lit = lit
            obj.kids = kids
            obj.serial = next(SRE._serials)
            obj._nullable = None
            SRE._table[key] = obj
        return obj

    def __reduce__(self):
        return (SRE, (self.kind, self.lit, self.kids))

    def __repr__(self):
        return format_sre(self)

    @property
    def kind_name(self) -> str:
        return _KIND_NAMES[self.kind]


EMPTY = SRE(EMPTY_K)
EPS = SRE(EPS_K)
DOT = SRE(LIT_K, TOP)
ALL = SRE(STAR_K, None, (DOT,))


def _key(r: SRE) -> int:
    return r.serial


def empty() -> SRE:
    return EMPTY


def eps() -> SRE:
    return EPS


def lit(l: SymEvent) -> SRE:
    if ev.is_bottom(l):
        return EMPTY
    return SRE(LIT_K, l)


def star(r: SRE) -> SRE:
    if r is EMPTY or r is EPS:
        return EPS
    if r.kind == STAR_K:
        return r
    return SRE(STAR_K, None, (r,))


def concat(*rs: SRE) -> SRE:
    out = []
    for r in rs:
        if r is EMPTY:
            return EMPTY
        if r is EPS:
            continue
        if r.kind == CAT_K:
            out.extend(r.kids)
        else:
            out.append(r)
    if not out:
        return EPS
    if len(out) == 1:
        return out[0]
    return SRE(CAT_K, None, tuple(out))


def neg(r: SRE) -> SRE:
    if r.kind == NOT_K:
        return r.kids[0]
    if r is EMPTY:
        return ALL
    if r is ALL:
        return EMPTY
    return SRE(NOT_K, None, (r,))


def and_(*rs: SRE) -> SRE:
    out = set()
    for r in rs:
        if r is EMPTY:
            return EMPTY
        if r is ALL:
            continue
        if r.kind == AND_K:
            out.update(r.kids)
        else:
            out.add(r)
    if not out:
        return ALL
    if any(r.kind == NOT_K and r.kids[0] in out for r in out):
        return EMPTY
    if len(out) == 1:
        return next(iter(out))
    return SRE(AND_K, None, tuple(sorted(out, key=_key)))


def or_(*rs: SRE) -> SRE:
    out = set()
    for r in rs:
        if r is ALL:
            return ALL
        if r is EMPTY:
            continue
        if r.kind == OR_K:
            out.update(r.kids)
        else:
            out.add(r)
    if not out:
        return EMPTY
    if any(r.kind == NOT_K and r.kids[0] in out for r in out):
        return ALL
    if len(out) == 1:
        return next(iter(out))
    return SRE(OR_K, None, tuple(sorted(out, key=_key)))


def plus(r: SRE) -> SRE:
    return concat(r, star(r))


def rebuild(r: SRE, kids: Sequence[SRE]) -> SRE:
    """Re-apply the smart constructor for ``r``'s kind to new children."""
    k = r.kind
    if k == STAR_K:
        return star(kids[0])
    if k == CAT_K:
        return concat(*kids)
    if k == NOT_K:
        return neg(kids[0])
    if k == AND_K:
        return and_(*kids)
    if k == OR_K:
        return or_(*kids)
    return r


# ---------------------------------------------------------------------------
# Nullability


def nullable(r: SRE) -> bool:
    v = r._nullable
    if v is None:
        k = r.kind
        if k == EPS_K or k == STAR_K:
            v = True
        elif k == EMPTY_K or k == LIT_K:
            v = False
        elif k == NOT_K:
            v = not nullable(r.kids[0])
        elif k == CAT_K or k == AND_K:
            v = all(nullable(c) for c in r.kids)
        else:
            v = any(nullable(c) for c in r.kids)
        r._nullable = v
    return v


# ---------------------------------------------------------------------------
# Next literals


def literal_set_complement(ls: Iterable[SymEvent]) -> SymEvent:
    return ev.complement(ev.join_all(ls))


def _keep(l: SymEvent) -> bool:
    if ev.is_bottom(l):
        return False
    e = ev.is_empty(l)
    return e is not True


def _unique(ls: Iterable[SymEvent]) -> tuple:
    seen = {}
    for l in ls:
        if l not in seen and _keep(l):
            seen[l] = None
    out = tuple(seen)
    if len(out) > MAX_LITERALS:
        raise LiteralExplosion(f"{len(out)} next literals exceed the cap of {MAX_LITERALS}")
    return out


def _cross(a: tuple, b: tuple) -> tuple:
    """The ⋈ operator on literal sets (bottom elements already removed)."""
    ca, cb = literal_set_complement(a), literal_set_complement(b)
    out = [ev.meet(x, y) for x in a for y in b]
    out += [ev.meet(x, cb) for x in a]
    out += [ev.meet(ca, y) for y in b]
    return _unique(out)


_next_memo: dict = {}


def _next(r: SRE) -> tuple:
    hit = _next_memo.get(r)
    if hit is not None:
        return hit
    k = r.kind
    if k == EMPTY_K or k == EPS_K:
        out = ()
    elif k == LIT_K:
        out = _unique((r.lit,))
    elif k == STAR_K:
        out = _next(r.kids[0])
    elif k == CAT_K:
        head, rest = r.kids[0], concat(*r.kids[1:])
        out = _cross(_next(head), _next(rest)) if nullable(head) else _next(head)
    elif k == NOT_K:
        inner = _next(r.kids[0])
        out = _unique(inner + (literal_set_complement(inner),))
    else:
        # ∧ needs the full ⋈ too: its complement literals must not straddle a child's literal
        out = _next(r.kids[0])
        for c in r.kids[1:]:
            out = _cross(out, _next(c))
    _next_memo[r] = out
    return out


def next_literals(r: SRE) -> tuple:
    """Admissible next literals; ``(BOTTOM,)`` when no event can start a word."""
    out = _next(r)
    return out if out else (BOTTOM,)


def dead_literal(r: SRE) -> SymEvent:
    """∁ of the next literals: every event after which ``r`` has no continuation."""
    return literal_set_complement(_next(r))


# ---------------------------------------------------------------------------
# Symbolic derivatives


_deriv_memo: dict = {}


def deriv_literal(r: SRE, l: SymEvent) -> SRE:
    key = (r, l)
    hit = _deriv_memo.get(key)
    if hit is not None:
        return hit
    k = r.kind
    if k == EMPTY_K or k == EPS_K:
        out = EMPTY
    elif k == LIT_K:
        inc = ev.includes(l, r.lit)
        if inc is True:
            out = EPS
        else:
            dis = ev.includes(l, ev.complement(r.lit))
            if dis is True:
                out = EMPTY
            elif inc is _solver.UNKNOWN or dis is _solver.UNKNOWN:
                raise _solver.SolverUnknown(f"cannot compare {l!r} with {r.lit!r}")
            else:
                raise NotAPrefix(f"{l!r} is not a prefix literal of {r.lit!r}")
    elif k == STAR_K:
        out = concat(deriv_literal(r.kids[0], l), r)
    elif k == CAT_K:
        head, rest = r.kids[0], concat(*r.kids[1:])
        out = concat(deriv_literal(head, l), rest)
        if nullable(head):
            out = or_(out, deriv_literal(rest, l))
    elif k == NOT_K:
        out = neg(deriv_literal(r.kids[0], l))
    elif k == AND_K:
        out = and_(*(deriv_literal(c, l) for c in r.kids))
    else:
        out = or_(*(deriv_literal(c, l) for c in r.kids))
    _deriv_memo[key] = out
    return out


def deriv_trace(r: SRE, trace: Iterable[SymEvent]) -> SRE:
    for l in trace:
        r = deriv_literal(r, l)
    return r


def _successors(r: SRE, include_dead: bool) -> list:
    """(literal, derivative) pairs covering every possible next event."""
    out = []
    for l in _next(r):
        try:
            out.append((l, deriv_literal(r, l)))
        except _solver.SolverUnknown as exc:
            log.warning("dropping prefix branch: %s", exc)
    if include_dead:
        d = dead_literal(r)
        if _keep(d):
            out.append((d, EMPTY))
    return out


def enumerate_prefixes(r: SRE, max_len: int, include_dead: bool = False) -> Iterator[tuple]:
    """Breadth-first (trace, derivative) pairs with |trace| ≤ max_len.

    Without ``include_dead`` branches whose derivative is ∅ are pruned.
    """
    frontier = [((), r)]
    yield frontier[0]
    for _ in range(max_len):
        nxt = []
        for trace, state in frontier:
            for l, d in _successors(state, include_dead):
                if d is EMPTY and not include_dead:
                    continue
                item = (trace + (l,), d)
                nxt.append(item)
                yield item
        frontier = nxt
        if not frontier:
            return


def sample_traces(r: SRE, max_len: int) -> Iterator[tuple]:
    """Symbolic traces Τ with |Τ| ≤ max_len and Τ ⊑ r."""
    for trace, d in enumerate_prefixes(r, max_len, include_dead=False):
        if nullable(d):
            yield trace


_dist_memo: dict = {}


def dist_to_dead(r: SRE, cutoff: int = 4) -> int:
    """Length of the shortest prefix leading to ∅; ``cutoff + 1`` when none is that short."""
    if r is EMPTY:
        return 0
    key = (r, cutoff)
    hit = _dist_memo.get(key)
    if hit is not None:
        return hit
    seen = {r}
    level = [r]
    result = cutoff + 1
    for depth in range(1, cutoff + 1):
        nxt = []
        for s in level:
            for _, d in _successors(s, include_dead=True):
                if d is EMPTY:
                    result = depth
                    break
                if d not in seen:
                    seen.add(d)
                    nxt.append(d)
            if result == depth:
                break
        if result <= cutoff or not nxt:
            break
        level = nxt
    _dist_memo[key] = result
    return result


def trace_conj(t1: Sequence[SymEvent], t2: Sequence[SymEvent]):
    """Pointwise meet, or None when lengths differ or some meet is syntactically ⊥."""
    if len(t1) != len(t2):
        return None
    out = []
    for a, b in zip(t1, t2):
        m = ev.meet(a, b)
        if ev.is_bottom(m):
            return None
        out.append(m)
    return tuple(out)


def clear_caches():
    for m in (_next_memo, _deriv_memo, _dist_memo, _subst_memo):
        m.clear()
    ev.clear_caches()


# ---------------------------------------------------------------------------
# Substitution


_subst_memo: dict = {}


def map_literals(r: SRE, fn, memo: dict) -> SRE:
    hit = memo.get(r)
    if hit is not None:
        return hit
    if r.kind == LIT_K:
        out = lit(fn(r.lit))
    elif r.kids:
        out = rebuild(r, [map_literals(c, fn, memo) for c in r.kids])
    else:
        out = r
    memo[r] = out
    return out


def subst_event(l: SymEvent, binding: Mapping) -> SymEvent:
    if not binding:
        return l
    return ev.make_event({f: map_terms(q, lambda t: subst_term(t, binding)) for f, q in l.atoms},
                         l.others)


def subst(r: SRE, binding: Mapping) -> SRE:
    """Substitute Var/Sym leaves in every qualifier (keys are term nodes)."""
    if not binding:
        return r
    key = (r, frozenset(binding.items()))
    hit = _subst_memo.get(key)
    if hit is None:
        hit = map_literals(r, lambda l: subst_event(l, binding), {})
        _subst_memo[key] = hit
    return hit


def apply_interp(r: SRE, sigma: Mapping[SymVar, object]) -> SRE:
    """Instantiate symbolic variables with constants."""
    from .logic import const

    binding = {Sym(v): const(val, v.sort) for v, val in sigma.items()}
    return subst(r, binding)


def literals(r: SRE) -> list:
    out, seen, stack = [], set(), [r]
    while stack:
        n = stack.pop()
        if n in seen:
            continue
        seen.add(n)
        if n.kind == LIT_K:
            out.append(n.lit)
        stack.extend(n.kids)
    return sorted(set(out), key=lambda l: l.serial)


def sre_syms(r: SRE) -> set:
    out = set()
    for l in literals(r):
        for _, q in l.atoms:
            out |= free_syms(q)
    return out


def size(r: SRE) -> int:
    return 1 + sum(size(c) for c in r.kids)


# ---------------------------------------------------------------------------
# Ground semantics


class GroundMatcher:
    """Classic derivatives w.r.t. concrete events under a fixed interpretation."""

    def __init__(self, sigma: Mapping | None = None):
        self.sigma = dict(sigma or {})
        self._memo: dict = {}
        self._lit_memo: dict = {}

    def matches(self, l: SymEvent, a: GroundEvent) -> bool:
        key = (l, a)
        hit = self._lit_memo.get(key)
        if hit is None:
            hit = ev.match_ground(l, a, self.sigma)
            self._lit_memo[key] = hit
        return hit

    def deriv(self, r: SRE, a: GroundEvent) -> SRE:
        key = (r, a)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        k = r.kind
        if k == EMPTY_K or k == EPS_K:
            out = EMPTY
        elif k == LIT_K:
            out = EPS if self.matches(r.lit, a) else EMPTY
        elif k == STAR_K:
            out = concat(self.deriv(r.kids[0], a), r)
        elif k == CAT_K:
            head, rest = r.kids[0], concat(*r.kids[1:])
            out = concat(self.deriv(head, a), rest)
            if nullable(head):
                out = or_(out, self.deriv(rest, a))
        elif k == NOT_K:
            out = neg(self.deriv(r.kids[0], a))
        elif k == AND_K:
            out = and_(*(self.deriv(c, a) for c in r.kids))
        else:
            out = or_(*(self.deriv(c, a) for c in r.kids))
        self._memo[key] = out
        return out

    def match(self, r: SRE, trace: Iterable[GroundEvent]) -> bool:
        for a in trace:
            r = self.deriv(r, a)
            if r is EMPTY:
                return False
        return nullable(r)


def ground_deriv(r: SRE, a: GroundEvent, sigma: Mapping | None = None) -> SRE:
    return GroundMatcher(sigma).deriv(r, a)


def ground_match(r: SRE, trace: Iterable[GroundEvent], sigma: Mapping | None = None) -> bool:
    return GroundMatcher(sigma).match(r, trace)


def ground_words(r: SRE, alphabet: Sequence[GroundEvent], max_len: int,
                 sigma: Mapping | None = None) -> set:
    """All accepted words of length ≤ max_len over ``alphabet``."""
    m = GroundMatcher(sigma)
    out = set()
    queue = deque([((), r)])
    while queue:
        word, state = queue.popleft()
        if nullable(state):
            out.add(word)
        if len(word) == max_len:
            continue
        for a in alphabet:
            d = m.deriv(state, a)
            if d is not EMPTY:
                queue.append((word + (a,), d))
    return out


# ---------------------------------------------------------------------------
# Printing (parseable by ``syntax.parse_sre`` when qualifiers are open)


_PREC = {OR_K: 1, AND_K: 2, CAT_K: 3, NOT_K: 4, STAR_K: 5}


def format_sre(r: SRE, ctx: int = 0) -> str:
    k = r.kind
    if k == EMPTY_K:
        return "empty"
    if k == EPS_K:
        return "eps"
    if k == LIT_K:
        s = ev.format_event(r.lit)
        return s if (s.startswith("<") and s.count("<") == 1) or s == "." else f"({s})"
    p = _PREC[k]
    if k == STAR_K:
        s = format_sre(r.kids[0], p + 1) + "*"
    elif k == NOT_K:
        s = "!" + format_sre(r.kids[0], p)
    elif k == CAT_K:
        s = " ; ".join(format_sre(c, p + 1) for c in r.kids)
    elif k == AND_K:
        s = " /\\ ".join(format_sre(c, p + 1) for c in r.kids)
    else:
        s = " \\/ ".join(format_sre(c, p + 1) for c in r.kids)
    return f"({s})" if p < ctx else s
