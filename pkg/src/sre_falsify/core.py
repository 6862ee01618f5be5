"""Core language in monadic normal form and its engine-independent stepping.

Both execution engines share ``decompose``: it finds the next redex, performs
the purely structural rules itself, and hands effectful redexes (symbol
generation, assume, admit, append) back to the engine together with a
continuation that plugs the result into the evaluation context.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping

from . import sre as S
from .logic import (
    FALSE,
    TRUE,
    UNIT,
    UNIT_VALUE,
    App,
    Formula,
    Sort,
    Sym,
    Term,
    Var,
    atom,
    free_vars,
    fresh_sym,
    neg,
    subst_term,
    substitute,
    term_leaves,
)


class Expr:
    __slots__ = ()


@dataclass(frozen=True, eq=False)
class Fun:
    params: tuple
    body: Expr

    def __repr__(self):
        return f"(fun {' '.join(self.params) or '()'} -> {self.body!r})"


@dataclass(frozen=True, eq=False)
class Fix:
    name: str
    params: tuple
    body: Expr

    def __repr__(self):
        return f"(fix {self.name} {' '.join(self.params)} -> ...)"


Value = Term | Fun | Fix


@dataclass(frozen=True, eq=False)
class Ret(Expr):
    value: object

    def __repr__(self):
        return repr(self.value)


@dataclass(frozen=True, eq=False)
class GenSym(Expr):
    sort: Sort
    hint: str = "x"

    def __repr__(self):
        return "??"


@dataclass(frozen=True, eq=False)
class Abort(Expr):
    def __repr__(self):
        return "abort"


@dataclass(frozen=True, eq=False)
class Assume(Expr):
    formula: Formula

    def __repr__(self):
        return f"assume({self.formula!r})"


@dataclass(frozen=True, eq=False)
class Admit(Expr):
    sre: S.SRE

    def __repr__(self):
        return f"admit({self.sre!r})"


@dataclass(frozen=True, eq=False)
class Append(Expr):
    sre: S.SRE
    context: bool = False  # the harness's context prefix

    def __repr__(self):
        return f"append({self.sre!r})"


@dataclass(frozen=True, eq=False)
class Let(Expr):
    var: str
    bound: Expr
    body: Expr

    def __repr__(self):
        return f"let {self.var} = {self.bound!r} in {self.body!r}"


@dataclass(frozen=True, eq=False)
class LetApp(Expr):
    var: str
    fn: object  # Var naming a function, Fun or Fix
    args: tuple
    body: Expr

    def __repr__(self):
        fn = self.fn.name if isinstance(self.fn, (Var, Fix)) else "<fun>"
        return f"let {self.var} = {fn} {' '.join(map(repr, self.args))} in {self.body!r}"


@dataclass(frozen=True, eq=False)
class Choice(Expr):
    left: Expr
    right: Expr

    def __repr__(self):
        return f"({self.left!r}) (+) ({self.right!r})"


def seq(*es: Expr) -> Expr:
    out = es[-1]
    for e in reversed(es[:-1]):
        out = Let("_", e, out)
    return out


def is_value(e: Expr) -> bool:
    return isinstance(e, Ret)


# ---------------------------------------------------------------------------
# Sugar


def assert_(phi: Formula) -> Expr:
    """(assume ¬φ; abort) ⊗ assume φ, dropping a branch that is trivially dead."""
    if phi is TRUE:
        return Assume(TRUE)
    if phi is FALSE:
        return seq(Assume(TRUE), Abort())
    return Choice(seq(Assume(neg(phi)), Abort()), Assume(phi))


def affirm(r: S.SRE) -> Expr:
    return Choice(seq(Admit(S.neg(r)), Abort()), Admit(r))


# ---------------------------------------------------------------------------
# Substitution


def _split(binding: Mapping[str, object]):
    terms = {Var(k): v for k, v in binding.items() if isinstance(v, Term)}
    return terms


def subst_value(v, binding: Mapping[str, object]):
    if isinstance(v, Var) and v.name in binding:
        return binding[v.name]
    if isinstance(v, Term):
        terms = _split(binding)
        return subst_term(v, terms) if terms else v
    if isinstance(v, Fun):
        inner = {k: x for k, x in binding.items() if k not in v.params}
        return Fun(v.params, subst(v.body, inner)) if inner else v
    if isinstance(v, Fix):
        inner = {k: x for k, x in binding.items() if k not in v.params and k != v.name}
        return Fix(v.name, v.params, subst(v.body, inner)) if inner else v
    raise TypeError(v)


def subst(e: Expr, binding: Mapping[str, object]) -> Expr:
    """Capture-avoiding substitution of closed values for program variables."""
    if not binding:
        return e
    fv = free_vars_expr(e)
    if not any(k in fv for k in binding):
        return e
    binding = {k: v for k, v in binding.items() if k in fv}
    if isinstance(e, Ret):
        return Ret(subst_value(e.value, binding))
    if isinstance(e, (GenSym, Abort)):
        return e
    if isinstance(e, Assume):
        terms = _split(binding)
        return Assume(substitute(e.formula, terms)) if terms else e
    if isinstance(e, Admit):
        return Admit(S.subst(e.sre, _split(binding)))
    if isinstance(e, Append):
        return Append(S.subst(e.sre, _split(binding)), e.context)
    if isinstance(e, Let):
        inner = {k: v for k, v in binding.items() if k != e.var}
        return Let(e.var, subst(e.bound, binding), subst(e.body, inner))
    if isinstance(e, LetApp):
        inner = {k: v for k, v in binding.items() if k != e.var}
        return LetApp(e.var, subst_value(e.fn, binding),
                      tuple(subst_value(a, binding) for a in e.args), subst(e.body, inner))
    if isinstance(e, Choice):
        return Choice(subst(e.left, binding), subst(e.right, binding))
    raise TypeError(e)


# ---------------------------------------------------------------------------
# Free variables / well-formedness


def sre_free_vars(r: S.SRE) -> set:
    out = set()
    for l in S.literals(r):
        for _, q in l.atoms:
            out |= free_vars(q)
    return out


def value_free_vars(v) -> set:
    if isinstance(v, Term):
        return {t.name for t in term_leaves(v) if isinstance(t, Var)}
    if isinstance(v, Fun):
        return free_vars_expr(v.body) - set(v.params)
    if isinstance(v, Fix):
        return free_vars_expr(v.body) - set(v.params) - {v.name}
    raise TypeError(v)


_fv_memo: dict = {}


def free_vars_expr(e: Expr) -> frozenset:
    hit = _fv_memo.get(e)
    if hit is None:
        hit = _fv_memo[e] = frozenset(_free_vars_expr(e))
    return hit


def clear_caches():
    _fv_memo.clear()


def _free_vars_expr(e: Expr) -> set:
    if isinstance(e, Ret):
        return value_free_vars(e.value)
    if isinstance(e, (GenSym, Abort)):
        return set()
    if isinstance(e, Assume):
        return free_vars(e.formula)
    if isinstance(e, (Admit, Append)):
        return sre_free_vars(e.sre)
    if isinstance(e, Let):
        return free_vars_expr(e.bound) | (free_vars_expr(e.body) - {e.var})
    if isinstance(e, LetApp):
        out = value_free_vars(e.fn)
        for a in e.args:
            out |= value_free_vars(a)
        return out | (free_vars_expr(e.body) - {e.var})
    if isinstance(e, Choice):
        return free_vars_expr(e.left) | free_vars_expr(e.right)
    raise TypeError(e)


def check_well_formed(e: Expr, bound: frozenset = frozenset()) -> None:
    """Raise ValueError unless ``e`` is closed (modulo ``bound``) and in MNF."""
    free = free_vars_expr(e) - bound
    if free:
        raise ValueError(f"free variables {sorted(free)}")
    _check_mnf(e)


def _check_mnf(e):
    if isinstance(e, Ret):
        if isinstance(e.value, (Fun, Fix)):
            _check_mnf(e.value.body)
        elif not isinstance(e.value, Term):
            raise ValueError(f"not a value: {e.value!r}")
    elif isinstance(e, Let):
        _check_mnf(e.bound)
        _check_mnf(e.body)
    elif isinstance(e, LetApp):
        if not isinstance(e.fn, (Var, Fun, Fix)):
            raise ValueError("application head must be a value")
        for a in e.args:
            if not isinstance(a, (Term, Fun, Fix)):
                raise ValueError("application arguments must be values")
        if isinstance(e.fn, (Fun, Fix)):
            _check_mnf(e.fn.body)
        _check_mnf(e.body)
    elif isinstance(e, Choice):
        _check_mnf(e.left)
        _check_mnf(e.right)


# ---------------------------------------------------------------------------
# Stepping


@dataclass
class Step:
    """Outcome of decomposing an expression.

    kind: "value" | "abort" | "pure" | "gensym" | "assume" | "admit" | "append".
    For "pure", ``succ`` lists the successor expressions; for effectful kinds
    ``plug`` maps the effect's result value to the successor expression.
    """

    kind: str
    payload: object = None
    succ: list = field(default_factory=list)
    plug: Callable | None = None
    context: bool = False
    unrolls: int = 0


def _apply(fn, args):
    if isinstance(fn, Fun):
        if len(fn.params) != len(args):
            raise ValueError(f"arity mismatch: expected {len(fn.params)}, got {len(args)}")
        return subst(fn.body, dict(zip(fn.params, args)))
    raise TypeError(fn)


def decompose(e: Expr) -> Step:
    if isinstance(e, Ret):
        return Step("value", e.value)
    if isinstance(e, Abort):
        return Step("abort")
    if isinstance(e, GenSym):
        return Step("gensym", e, plug=Ret)
    if isinstance(e, Assume):
        return Step("assume", e.formula, plug=lambda _v: Ret(UNIT_VALUE))
    if isinstance(e, Admit):
        return Step("admit", e.sre, plug=lambda _v: Ret(UNIT_VALUE))
    if isinstance(e, Append):
        return Step("append", e.sre, plug=lambda _v: Ret(UNIT_VALUE), context=e.context)
    if isinstance(e, Choice):
        return Step("pure", succ=[e.left, e.right])
    if isinstance(e, LetApp):
        fn = e.fn
        if isinstance(fn, Fun):
            return Step("pure", succ=[Let(e.var, _apply(fn, e.args), e.body)])
        if isinstance(fn, Fix):
            if len(fn.params) != len(e.args):
                raise ValueError(f"arity mismatch calling {fn.name}")
            unrolled = Fun((fn.name,), subst(fn.body, dict(zip(fn.params, e.args))))
            return Step("pure", succ=[LetApp(e.var, unrolled, (fn,), e.body)], unrolls=1)
        raise ValueError(f"stuck application of {fn!r}")
    if isinstance(e, Let):
        b = e.bound
        if isinstance(b, Ret):
            return Step("pure", succ=[subst(e.body, {e.var: b.value})])
        if isinstance(b, Abort):
            return Step("pure", succ=[Abort()])
        inner = decompose(b)
        if inner.kind == "pure":
            inner.succ = [Let(e.var, s, e.body) for s in inner.succ]
            return inner
        plug = inner.plug
        inner.plug = lambda v: Let(e.var, plug(v), e.body)
        return inner
    raise TypeError(e)


def gensym_value(g: GenSym) -> Term:
    if g.sort == UNIT:
        return UNIT_VALUE
    return Sym(fresh_sym(g.sort, g.hint))


def cond(v: Term) -> Formula:
    return atom(v)
