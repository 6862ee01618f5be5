"""Symbolic events: stratified literals over an effect signature.

A literal maps each mentioned function name to a qualifier over that call's
argument and return names (``Local`` terms).  ``others`` says whether calls to
functions *not* mentioned are admitted unconditionally, so the complement of a
literal never has to enumerate the signature.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping

from . import solver as _solver
from .logic import (
    FALSE,
    TRUE,
    Formula,
    Local,
    Sort,
    INT,
    Sym,
    SymVar,
    Var,
    is_closed,
    And,
    conj,
    disj,
    eval_ground,
    fresh_sym,
    map_terms,
    neg,
    subst_term,
)


# ---------------------------------------------------------------------------
# Signature


@dataclass(frozen=True)
class EffectDecl:
    fname: str
    params: tuple  # ((name, Sort), ...)
    ret: tuple  # (name, Sort)

    @functools.cached_property
    def locals(self) -> tuple:
        return tuple(Local(n, s) for n, s in self.params)

    @functools.cached_property
    def ret_local(self) -> Local:
        return Local(*self.ret)

    def __str__(self):
        ps = ", ".join(f"{n}: {s}" for n, s in self.params)
        return f"effect {self.fname} : ({ps}) -> ({self.ret[0]}: {self.ret[1]})"


class EffectSignature:
    def __init__(self, decls: Iterable[EffectDecl] = ()):
        self.decls: dict[str, EffectDecl] = {}
        for d in decls:
            self.add(d)

    def add(self, d: EffectDecl):
        if d.fname in self.decls and self.decls[d.fname] != d:
            raise ValueError(f"effect {d.fname} declared twice")
        self.decls[d.fname] = d

    def __getitem__(self, fname: str) -> EffectDecl:
        return self.decls[fname]

    def __contains__(self, fname: str) -> bool:
        return fname in self.decls

    def names(self) -> frozenset:
        return frozenset(self.decls)


_signature: EffectSignature | None = None


def set_signature(sig: EffectSignature | None) -> EffectSignature | None:
    """Install the signature used to interpret ``others``; None means an open world."""
    global _signature
    old, _signature = _signature, sig
    for d in (sig.decls.values() if sig else ()):
        _known_decls[d.fname] = d
    return old


def current_signature() -> EffectSignature | None:
    return _signature


_known_decls: dict[str, EffectDecl] = {}


def decl_of(fname: str) -> EffectDecl:
    if _signature is not None and fname in _signature:
        return _signature[fname]
    try:
        return _known_decls[fname]
    except KeyError:
        raise KeyError(f"unknown effect {fname}") from None


def _remainder_nonempty(mentioned: Iterable[str]) -> bool:
    if _signature is None:
        return True
    return not _signature.names() <= set(mentioned)


# ---------------------------------------------------------------------------
# Literals


class SymEvent:
    __slots__ = ("atoms", "others", "_amap", "serial", "__weakref__")
    _table: dict = {}
    _serials = itertools.count()

    def __new__(cls, atoms: tuple, others: bool):
        key = (atoms, others)
        obj = SymEvent._table.get(key)
        if obj is None:
            obj = object.__new__(cls)
            obj.atoms = atoms
            obj.others = others
            obj._amap = dict(atoms)
            obj.serial = next(SymEvent._serials)
            SymEvent._table[key] = obj
        return obj

    def __reduce__(self):
        return (SymEvent, (self.atoms, self.others))

    def qualifier(self, fname: str) -> Formula:
        q = self._amap.get(fname)
        if q is None:
            return TRUE if self.others else FALSE
        return q

    def fnames(self) -> tuple:
        return tuple(f for f, _ in self.atoms)

    def __repr__(self):
        return format_event(self)


def make_event(atoms: Mapping[str, Formula] | Iterable, others: bool = False) -> SymEvent:
    items = dict(atoms)
    default = TRUE if others else FALSE
    kept = tuple(sorted((f, q) for f, q in items.items() if q is not default))
    if others and _signature is not None and _signature.names() <= {f for f, _ in kept}:
        others = False
    return SymEvent(kept, others)


BOTTOM = SymEvent((), False)
TOP = SymEvent((), True)


def atom_event(fname: str, qualifier: Formula = TRUE) -> SymEvent:
    return make_event({fname: qualifier})


def is_bottom(l: SymEvent) -> bool:
    """Syntactic emptiness: nothing admitted under any interpretation."""
    return l is BOTTOM or (not l.others and all(q is FALSE for _, q in l.atoms))


def is_top(l: SymEvent) -> bool:
    return l is TOP or (l.others and all(q is TRUE for _, q in l.atoms))


_complement_memo: dict = {}
_meet_memo: dict = {}
_join_memo: dict = {}


def complement(l: SymEvent) -> SymEvent:
    hit = _complement_memo.get(l)
    if hit is None:
        hit = make_event({f: neg(q) for f, q in l.atoms}, not l.others)
        _complement_memo[l] = hit
        _complement_memo.setdefault(hit, l)
    return hit


def meet(a: SymEvent, b: SymEvent) -> SymEvent:
    if a is b:
        return a
    key = (a, b) if a.serial < b.serial else (b, a)
    hit = _meet_memo.get(key)
    if hit is None:
        names = set(a._amap) | set(b._amap)
        hit = make_event({f: conj(a.qualifier(f), b.qualifier(f)) for f in names},
                         a.others and b.others)
        _meet_memo[key] = hit
    return hit


def join(a: SymEvent, b: SymEvent) -> SymEvent:
    if a is b:
        return a
    key = (a, b) if a.serial < b.serial else (b, a)
    hit = _join_memo.get(key)
    if hit is None:
        names = set(a._amap) | set(b._amap)
        hit = make_event({f: disj(a.qualifier(f), b.qualifier(f)) for f in names},
                         a.others or b.others)
        _join_memo[key] = hit
    return hit


def meet_all(ls: Iterable[SymEvent]) -> SymEvent:
    out = TOP
    for l in ls:
        out = meet(out, l)
    return out


def join_all(ls: Iterable[SymEvent]) -> SymEvent:
    out = BOTTOM
    for l in ls:
        out = join(out, l)
    return out


def incompatible(a: SymEvent, b: SymEvent) -> bool:
    """Name-level disjointness: the meet is syntactically bottom."""
    return is_bottom(meet(a, b))


# ---------------------------------------------------------------------------
# Constraints and solver-backed queries


_event_vars: dict = {}


def event_var(pos, fname: str, local: Local) -> SymVar:
    """The symbolic stand-in for ``local`` of the event at trace position ``pos``."""
    key = (pos, fname, local)
    v = _event_vars.get(key)
    if v is None:
        v = fresh_sym(local.sort, f"{fname}.{local.name}@{pos}")
        _event_vars[key] = v
    return v


_localize_memo: dict = {}


def localize(q: Formula, fname: str, pos) -> Formula:
    """Replace the event-local names of ``q`` by position-indexed symbols."""
    key = (q, fname, pos)
    hit = _localize_memo.get(key)
    if hit is None:
        cache: dict = {}

        def fn(t):
            return subst_term(t, _LocalBinder(fname, pos, cache))

        hit = map_terms(q, fn)
        _localize_memo[key] = hit
    return hit


class _LocalBinder(dict):
    def __init__(self, fname, pos, cache):
        super().__init__()
        self.fname, self.pos, self.cache = fname, pos, cache

    def get(self, t, default=None):
        if isinstance(t, Local):
            return Sym(event_var(self.pos, self.fname, t))
        if isinstance(t, Var):
            return Sym(program_var(t.name))
        return default


_program_vars: dict = {}


def program_var(name: str) -> SymVar:
    """Placeholder symbol for an unsubstituted program variable in solver queries."""
    v = _program_vars.get(name)
    if v is None:
        v = _program_vars[name] = fresh_sym(INT, name)
    return v


def constr_event(l: SymEvent, pos=None) -> Formula:
    """Formula satisfiable exactly when some call matches ``l``.

    With ``pos=None`` the argument/return names are replaced by fresh symbols.
    """
    if pos is None:
        pos = ("fresh", fresh_sym(Sort("unit"), "ev").id)
    parts = [localize(q, f, pos) for f, q in l.atoms]
    if l.others and _remainder_nonempty(l._amap):
        parts.append(TRUE)
    return disj(*parts)


def _implies_syntactically(a: Formula, b: Formula) -> bool:
    if b is TRUE or a is FALSE or a is b:
        return True
    if isinstance(a, And):
        need = b.args if isinstance(b, And) else (b,)
        have = set(a.args)
        return all(x in have for x in need)
    return False


_includes_memo: dict = {}


def includes(sub: SymEvent, sup: SymEvent):
    """Whether ``sub`` ⊑ ``sup`` for every interpretation: True, False or UNKNOWN.

    Decided per function name, since the argument names of different
    functions are independent.
    """
    if sub is sup or is_bottom(sub) or is_top(sup):
        return True
    key = (sub, sup)
    hit = _includes_memo.get(key)
    if hit is not None:
        return hit
    result = True
    names = set(sub._amap) | set(sup._amap)
    if sub.others and not sup.others and _remainder_nonempty(names):
        result = False
    else:
        s = _solver.get_solver()
        for f in sorted(names):
            a, b = sub.qualifier(f), sup.qualifier(f)
            if _implies_syntactically(a, b):
                continue
            r = s.check_sat(conj(localize(a, f, 0), neg(localize(b, f, 0))), want_model=False)
            if r is _solver.UNSAT:
                continue
            if r is _solver.UNKNOWN:
                result = _solver.UNKNOWN
                continue
            result = False
            break
    if result is not _solver.UNKNOWN:
        _includes_memo[key] = result
    return result


_empty_memo: dict = {}


def is_empty(l: SymEvent):
    """Whether ``l`` admits no call under any interpretation: True, False or UNKNOWN."""
    if is_bottom(l):
        return True
    hit = _empty_memo.get(l)
    if hit is not None:
        return hit
    if l.others and _remainder_nonempty(l._amap):
        result = False
    else:
        result = True
        s = _solver.get_solver()
        for f, q in l.atoms:
            r = s.check_sat(localize(q, f, 0), want_model=False)
            if isinstance(r, _solver.Sat):
                result = False
                break
            if r is _solver.UNKNOWN:
                result = _solver.UNKNOWN
    if result is not _solver.UNKNOWN:
        _empty_memo[l] = result
    return result


def clear_caches():
    for m in (_includes_memo, _empty_memo):
        m.clear()


# ---------------------------------------------------------------------------
# Ground events


@dataclass(frozen=True)
class GroundEvent:
    fname: str
    args: tuple
    ret: object = 0

    def __str__(self):
        args = " ".join(map(str, self.args))
        return f"{self.ret} <- {self.fname} {args}".rstrip()


def ground_env(alpha: GroundEvent, sigma: Mapping) -> dict:
    d = decl_of(alpha.fname)
    env = dict(sigma)
    for loc, v in zip(d.locals, alpha.args):
        env[loc] = v
    env[d.ret_local] = alpha.ret
    return env


def match_ground(l: SymEvent, alpha: GroundEvent, sigma: Mapping) -> bool:
    q = l._amap.get(alpha.fname)
    if q is None:
        return l.others
    if q is TRUE:
        return True
    if q is FALSE:
        return False
    return eval_ground(q, ground_env(alpha, sigma))


# ---------------------------------------------------------------------------
# Printing


def format_qualifier(q: Formula) -> str:
    s = repr(q)
    if s.startswith("(") and s.endswith(")") and isinstance(q, And):
        s = s[1:-1]
    return s


def format_event(l: SymEvent) -> str:
    if l is BOTTOM:
        return "<bot>"
    if l is TOP:
        return "."
    parts = []
    for f, q in l.atoms:
        try:
            d = decl_of(f)
            names = " ".join(n for n, _ in d.params)
            head = f"{f} {names}".rstrip()
            if d.ret[1].kind != "unit":
                head += f" = {d.ret[0]}"
        except KeyError:
            head = f
        parts.append(f"<{head} | {format_qualifier(q)}>" if q is not TRUE else f"<{f}>")
    body = " | ".join(parts)
    if l.others:
        mentioned = " | ".join(f"<{f}>" for f, _ in l.atoms)
        body = f"{body} | ~({mentioned})" if parts else "."
    return body
