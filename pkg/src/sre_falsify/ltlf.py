"""LTL over finite traces, translated to SREs.

A literal holds at a position when the event there matches it.  Temporal
operators quantify over every position of the trace *including* the end
position (the empty suffix), which is exactly what the SRE translations
``F φ = •*·φ`` and ``G φ = ¬(•*·¬φ)`` compute.  Consequently ``G ℓ`` for a
plain literal never holds (no event sits at the end position), while
``G ¬ℓ`` means "no event matches ℓ from here on".
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from . import events as ev
from . import sre as S
from .logic import FALSE


class LTLf:
    __slots__ = ()


@dataclass(frozen=True)
class Lit(LTLf):
    lit: ev.SymEvent


@dataclass(frozen=True)
class X(LTLf):
    arg: LTLf


@dataclass(frozen=True)
class F(LTLf):
    arg: LTLf


@dataclass(frozen=True)
class G(LTLf):
    arg: LTLf


@dataclass(frozen=True)
class U(LTLf):
    lit: ev.SymEvent
    arg: LTLf


@dataclass(frozen=True)
class W(LTLf):
    lit: ev.SymEvent
    arg: LTLf


@dataclass(frozen=True)
class Not(LTLf):
    arg: LTLf


@dataclass(frozen=True)
class And(LTLf):
    left: LTLf
    right: LTLf


@dataclass(frozen=True)
class Or(LTLf):
    left: LTLf
    right: LTLf


def as_literal(f: LTLf) -> ev.SymEvent | None:
    """The single literal denoted by ``f`` when used as a U/W left operand."""
    if isinstance(f, Lit):
        return f.lit
    if isinstance(f, Not):
        inner = as_literal(f.arg)
        return None if inner is None else ev.complement(inner)
    if isinstance(f, (And, Or)):
        a, b = as_literal(f.left), as_literal(f.right)
        if a is None or b is None:
            return None
        return ev.meet(a, b) if isinstance(f, And) else ev.join(a, b)
    return None


def to_sre(f: LTLf) -> S.SRE:
    if isinstance(f, Lit):
        return S.concat(S.lit(f.lit), S.ALL)
    if isinstance(f, X):
        return S.concat(S.DOT, to_sre(f.arg))
    if isinstance(f, F):
        return S.concat(S.ALL, to_sre(f.arg))
    if isinstance(f, G):
        return S.neg(S.concat(S.ALL, S.neg(to_sre(f.arg))))
    if isinstance(f, U):
        return S.concat(S.star(S.lit(f.lit)), to_sre(f.arg))
    if isinstance(f, W):
        r = to_sre(f.arg)
        return S.or_(S.neg(S.concat(S.ALL, r)), S.concat(S.star(S.lit(f.lit)), r))
    if isinstance(f, Not):
        return S.neg(to_sre(f.arg))
    if isinstance(f, And):
        return S.and_(to_sre(f.left), to_sre(f.right))
    if isinstance(f, Or):
        return S.or_(to_sre(f.left), to_sre(f.right))
    raise TypeError(f)


def eval_ltlf(f: LTLf, trace: Sequence[ev.GroundEvent], sigma: Mapping | None = None) -> bool:
    """Direct evaluation at position 0; positions range over 0..len(trace)."""
    sigma = dict(sigma or {})
    n = len(trace)
    memo: dict = {}

    def holds_lit(l, i):
        return i < n and ev.match_ground(l, trace[i], sigma)

    def holds(g, i):
        key = (id(g), i)
        if key in memo:
            return memo[key]
        if isinstance(g, Lit):
            v = holds_lit(g.lit, i)
        elif isinstance(g, X):
            v = i < n and holds(g.arg, i + 1)
        elif isinstance(g, F):
            v = any(holds(g.arg, j) for j in range(i, n + 1))
        elif isinstance(g, G):
            v = all(holds(g.arg, j) for j in range(i, n + 1))
        elif isinstance(g, U):
            v = _until(g, i)
        elif isinstance(g, W):
            v = not any(holds(g.arg, j) for j in range(i, n + 1)) or _until(g, i)
        elif isinstance(g, Not):
            v = not holds(g.arg, i)
        elif isinstance(g, And):
            v = holds(g.left, i) and holds(g.right, i)
        else:
            v = holds(g.left, i) or holds(g.right, i)
        memo[key] = v
        return v

    def _until(g, i):
        for j in range(i, n + 1):
            if holds(g.arg, j):
                return True
            if not holds_lit(g.lit, j):
                return False
        return False

    return holds(f, 0)


def parse_ltlf(text: str, sig=None) -> LTLf:
    from .syntax import Parser

    p = Parser(text, sig=sig)
    f = p.ltl()
    p.done()
    return f


def _format_literal(l: ev.SymEvent) -> str:
    """A literal as an LTLf formula denoting exactly that literal.

    Literal-level complement cannot be printed as ``~``: in LTLf that is
    negation, which also holds at the end position.  Unmentioned functions are
    written as ``.`` minus the mentioned ones instead.
    """
    if l is ev.TOP:
        return "."
    if l is ev.BOTTOM:
        return "(. /\\ ~.)"
    parts = [ev.format_event(ev.atom_event(f, q)) for f, q in l.atoms if q is not FALSE]
    if l.others:
        rest = " /\\ ".join(["."] + [f"~{ev.format_event(ev.atom_event(f))}" for f, _ in l.atoms])
        parts.append(f"({rest})")
    if not parts:
        return "(. /\\ ~.)"
    return parts[0] if len(parts) == 1 else "(" + " \\/ ".join(parts) + ")"


def format_ltlf(f: LTLf) -> str:
    if isinstance(f, Lit):
        return _format_literal(f.lit)
    if isinstance(f, (X, F, G)):
        return f"({type(f).__name__} {format_ltlf(f.arg)})"
    if isinstance(f, (U, W)):
        return f"({_format_literal(f.lit)} {type(f).__name__} {format_ltlf(f.arg)})"
    if isinstance(f, Not):
        return f"~({format_ltlf(f.arg)})"
    op = "/\\" if isinstance(f, And) else "\\/"
    return f"({format_ltlf(f.left)} {op} {format_ltlf(f.right)})"
