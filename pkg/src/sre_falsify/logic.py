"""Symbolic first-order values and quantifier-free formulas.

Terms and formulas are hash-consed: constructing a node that already exists
returns the existing object, so equality is identity and hashing is cheap.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping


# ---------------------------------------------------------------------------
# Sorts and symbolic variables


@dataclass(frozen=True)
class Sort:
    kind: str  # "unit" | "bool" | "int" | "unint"
    name: str = ""

    def __str__(self) -> str:
        return self.name if self.kind == "unint" else self.kind


UNIT = Sort("unit")
BOOL = Sort("bool")
INT = Sort("int")


def uninterpreted(name: str) -> Sort:
    return Sort("unint", name)


class SymVar:
    """A symbolic constant. Identity is the id; ids are never reused."""

    __slots__ = ("id", "hint", "sort")

    def __init__(self, id: int, hint: str, sort: Sort):
        self.id = id
        self.hint = hint
        self.sort = sort

    def __repr__(self) -> str:
        return f"{self.hint}#{self.id}"

    @property
    def smt_name(self) -> str:
        return f"s{self.id}"


_sym_counter = itertools.count()


def fresh_sym(sort: Sort, hint: str = "x") -> SymVar:
    return SymVar(next(_sym_counter), hint, sort)


# ---------------------------------------------------------------------------
# Hash-consing base


_serials = itertools.count()


class _Interned:
    __slots__ = ("__weakref__", "serial")
    _table: dict = {}

    def __new__(cls, *args):
        key = (cls, args)
        obj = _Interned._table.get(key)
        if obj is None:
            obj = object.__new__(cls)
            obj.serial = next(_serials)
            obj._init(*args)
            _Interned._table[key] = obj
        return obj

    def __copy__(self):
        return self

    def __deepcopy__(self, memo):
        return self

    def __reduce__(self):
        return (type(self), self._args())


# ---------------------------------------------------------------------------
# Terms


class Term(_Interned):
    __slots__ = ()


class Const(Term):
    __slots__ = ("value", "sort")

    def _init(self, value, sort):
        self.value = value
        self.sort = sort

    def _args(self):
        return (self.value, self.sort)

    def __repr__(self):
        if self.sort.kind == "unint" and self.value == 0:
            return "null"
        if self.sort == UNIT:
            return "()"
        if self.sort == BOOL:
            return "true" if self.value else "false"
        return str(self.value)


class Var(Term):
    """A program variable (bound by the surrounding program or spec)."""

    __slots__ = ("name",)

    def _init(self, name):
        self.name = name

    def _args(self):
        return (self.name,)

    def __repr__(self):
        return self.name


class Local(Term):
    """An argument or return name scoped to a single event qualifier."""

    __slots__ = ("name", "sort")

    def _init(self, name, sort):
        self.name = name
        self.sort = sort

    def _args(self):
        return (self.name, self.sort)

    def __repr__(self):
        return self.name


class Sym(Term):
    __slots__ = ("var",)

    def _init(self, var):
        self.var = var

    def _args(self):
        return (self.var,)

    def __repr__(self):
        return repr(self.var)


ARITH_OPS = {"+", "-"}
CMP_OPS = {"=", "<", "<="}
BOOL_OPS = {"and", "or", "not"}


class App(Term):
    __slots__ = ("op", "args")

    def _init(self, op, args):
        self.op = op
        self.args = args

    def _args(self):
        return (self.op, self.args)

    def __repr__(self):
        if self.op in ARITH_OPS or self.op in CMP_OPS:
            return f"({self.args[0]!r} {self.op} {self.args[1]!r})"
        return f"{self.op}({', '.join(map(repr, self.args))})"


def const(value, sort: Sort) -> Const:
    if sort == BOOL:
        value = bool(value)
    elif sort == UNIT:
        value = 0
    return Const(value, sort)


def null(sort: Sort) -> Const:
    return Const(0, sort)


UNIT_VALUE = Const(0, UNIT)


def app(op: str, *args: Term) -> App:
    if op == "=" and len(args) == 2 and args[1].serial < args[0].serial:
        args = (args[1], args[0])
    return App(op, tuple(args))


def sym(var: SymVar) -> Sym:
    return Sym(var)


# ---------------------------------------------------------------------------
# Formulas (kept in negation normal form: Not only wraps atoms)


class Formula(_Interned):
    __slots__ = ()


class TrueF(Formula):
    __slots__ = ()

    def _init(self):
        pass

    def _args(self):
        return ()

    def __repr__(self):
        return "true"


class FalseF(Formula):
    __slots__ = ()

    def _init(self):
        pass

    def _args(self):
        return ()

    def __repr__(self):
        return "false"


class Atom(Formula):
    __slots__ = ("term",)

    def _init(self, term):
        self.term = term

    def _args(self):
        return (self.term,)

    def __repr__(self):
        t = self.term
        if isinstance(t, App) and t.op in CMP_OPS:
            return f"{t.args[0]!r} {t.op} {t.args[1]!r}"
        return repr(t)


class Not(Formula):
    __slots__ = ("arg",)

    def _init(self, arg):
        self.arg = arg

    def _args(self):
        return (self.arg,)

    def __repr__(self):
        t = self.arg.term
        if isinstance(t, App) and t.op == "=":
            return f"{t.args[0]!r} != {t.args[1]!r}"
        return f"not {self.arg!r}"


class And(Formula):
    __slots__ = ("args",)

    def _init(self, args):
        self.args = args

    def _args(self):
        return (self.args,)

    def __repr__(self):
        return "(" + " && ".join(map(repr, self.args)) + ")"


class Or(Formula):
    __slots__ = ("args",)

    def _init(self, args):
        self.args = args

    def _args(self):
        return (self.args,)

    def __repr__(self):
        return "(" + " || ".join(map(repr, self.args)) + ")"


TRUE = TrueF()
FALSE = FalseF()


def _order(fs: Iterable[Formula]) -> tuple:
    return tuple(sorted(set(fs), key=_serial_key))


def _serial_key(node) -> int:
    return node.serial


def _complementary(fs: Iterable[Formula]) -> bool:
    s = set(fs)
    return any(isinstance(f, Not) and f.arg in s for f in s)


def conj(*fs: Formula) -> Formula:
    out = []
    for f in fs:
        if f is TRUE:
            continue
        if f is FALSE:
            return FALSE
        if isinstance(f, And):
            out.extend(f.args)
        else:
            out.append(f)
    if not out:
        return TRUE
    args = _order(out)
    if len(args) == 1:
        return args[0]
    if _complementary(args):
        return FALSE
    have = set(args)
    if any(isinstance(a, Or) and any(x in have for x in a.args) for a in args):
        args = tuple(a for a in args if not (isinstance(a, Or) and any(x in have for x in a.args)))
        if len(args) == 1:
            return args[0]
    return And(args)


def disj(*fs: Formula) -> Formula:
    out = []
    for f in fs:
        if f is FALSE:
            continue
        if f is TRUE:
            return TRUE
        if isinstance(f, Or):
            out.extend(f.args)
        else:
            out.append(f)
    if not out:
        return FALSE
    args = _order(out)
    if len(args) == 1:
        return args[0]
    if _complementary(args):
        return TRUE
    have = set(args)
    if any(isinstance(a, And) and any(x in have for x in a.args) for a in args):
        args = tuple(a for a in args if not (isinstance(a, And) and any(x in have for x in a.args)))
        if len(args) == 1:
            return args[0]
    return Or(args)


def neg(f: Formula) -> Formula:
    if f is TRUE:
        return FALSE
    if f is FALSE:
        return TRUE
    if isinstance(f, Not):
        return f.arg
    if isinstance(f, Atom):
        return Not(f)
    if isinstance(f, And):
        return disj(*(neg(a) for a in f.args))
    if isinstance(f, Or):
        return conj(*(neg(a) for a in f.args))
    raise TypeError(f)


def implies(a: Formula, b: Formula) -> Formula:
    return disj(neg(a), b)


def atom(term: Term) -> Formula:
    """Lift a boolean term into a formula, exposing connectives and constants."""
    if isinstance(term, Const) and term.sort == BOOL:
        return TRUE if term.value else FALSE
    if isinstance(term, App):
        if term.op == "and":
            return conj(*(atom(a) for a in term.args))
        if term.op == "or":
            return disj(*(atom(a) for a in term.args))
        if term.op == "not":
            return neg(atom(term.args[0]))
        if term.op == "=" and term.args[0] is term.args[1]:
            return TRUE
        if term.op == "!=":
            return neg(atom(app("=", *term.args)))
        if term.op == ">":
            return Atom(app("<", term.args[1], term.args[0]))
        if term.op == ">=":
            return Atom(app("<=", term.args[1], term.args[0]))
    return Atom(term)


def eq(a: Term, b: Term) -> Formula:
    return atom(app("=", a, b))


def ne(a: Term, b: Term) -> Formula:
    return neg(eq(a, b))


def cmp(op: str, a: Term, b: Term) -> Formula:
    return atom(app(op, a, b))


# ---------------------------------------------------------------------------
# Traversals


def map_terms(f: Formula, fn, memo=None) -> Formula:
    """Rebuild ``f`` with ``fn`` applied to every atom's term."""
    if memo is None:
        memo = {}
    hit = memo.get(f)
    if hit is not None:
        return hit
    if f is TRUE or f is FALSE:
        out = f
    elif isinstance(f, Atom):
        out = atom(fn(f.term))
    elif isinstance(f, Not):
        out = neg(map_terms(f.arg, fn, memo))
    elif isinstance(f, And):
        out = conj(*(map_terms(a, fn, memo) for a in f.args))
    else:
        out = disj(*(map_terms(a, fn, memo) for a in f.args))
    memo[f] = out
    return out


def subst_term(t: Term, binding: Mapping) -> Term:
    """Replace Var/Local/Sym leaves found in ``binding`` (keyed by the leaf node)."""
    if isinstance(t, App):
        args = tuple(subst_term(a, binding) for a in t.args)
        if all(a is b for a, b in zip(args, t.args)):
            return t
        return _fold(app(t.op, *args))
    return binding.get(t, t)


def _fold(t: App) -> Term:
    if all(isinstance(a, Const) for a in t.args):
        if t.op in ARITH_OPS or t.op in CMP_OPS or t.op in BOOL_OPS:
            v = _eval_app(t.op, [a.value for a in t.args])
            return const(v, BOOL if t.op not in ARITH_OPS else t.args[0].sort)
    return t


def substitute(f: Formula, binding: Mapping) -> Formula:
    """Substitute leaves of ``f``. Keys are Var/Local/Sym nodes or variable names."""
    binding = _normalize_binding(binding)
    if not binding:
        return f
    for k, v in binding.items():
        ks, vs = leaf_sort(k), term_sort(v)
        if ks is not None and vs is not None and ks.kind != vs.kind and not _int_like(ks, vs):
            raise TypeError(f"sort mismatch substituting {k!r}:{ks} with {v!r}:{vs}")
    return map_terms(f, lambda t: subst_term(t, binding))


def _int_like(a: Sort, b: Sort) -> bool:
    return {a.kind, b.kind} <= {"int", "unint"}


def _normalize_binding(binding: Mapping) -> dict:
    out = {}
    for k, v in binding.items():
        if isinstance(k, str):
            k = Var(k)
        elif isinstance(k, SymVar):
            k = Sym(k)
        if isinstance(v, SymVar):
            v = Sym(v)
        elif isinstance(v, bool):
            v = const(v, BOOL)
        elif isinstance(v, int):
            v = const(v, INT)
        out[k] = v
    return out


def leaf_sort(t: Term) -> Sort | None:
    if isinstance(t, Sym):
        return t.var.sort
    if isinstance(t, (Local, Const)):
        return t.sort
    return None


def term_sort(t: Term) -> Sort | None:
    if isinstance(t, App):
        if t.op in ARITH_OPS:
            return INT
        return BOOL
    return leaf_sort(t)


def term_leaves(t: Term):
    if isinstance(t, App):
        for a in t.args:
            yield from term_leaves(a)
    else:
        yield t


def atoms_of(f: Formula):
    if isinstance(f, Atom):
        yield f
    elif isinstance(f, Not):
        yield f.arg
    elif isinstance(f, (And, Or)):
        for a in f.args:
            yield from atoms_of(a)


def leaves(f: Formula) -> set:
    out = set()
    for a in atoms_of(f):
        out.update(term_leaves(a.term))
    return out


def free_syms(f: Formula) -> set:
    return {t.var for t in leaves(f) if isinstance(t, Sym)}


def free_vars(f: Formula) -> set:
    return {t.name for t in leaves(f) if isinstance(t, Var)}


def is_closed(f: Formula) -> bool:
    return not any(isinstance(t, (Var, Local)) for t in leaves(f))


# ---------------------------------------------------------------------------
# Ground evaluation


def _eval_app(op, vals):
    if op == "+":
        return vals[0] + vals[1]
    if op == "-":
        return vals[0] - vals[1]
    if op == "=":
        return vals[0] == vals[1]
    if op == "<":
        return vals[0] < vals[1]
    if op == "<=":
        return vals[0] <= vals[1]
    if op == "and":
        return all(vals)
    if op == "or":
        return any(vals)
    if op == "not":
        return not vals[0]
    raise ValueError(f"unknown operator {op}")


def eval_term(t: Term, env: Mapping):
    """Evaluate a term; ``env`` maps SymVar/Local/Var nodes (or SymVars) to Python values."""
    if isinstance(t, Const):
        return t.value
    if isinstance(t, App):
        return _eval_app(t.op, [eval_term(a, env) for a in t.args])
    if isinstance(t, Sym):
        if t.var in env:
            return env[t.var]
    if t in env:
        return env[t]
    raise KeyError(f"no value for {t!r}")


def eval_ground(f: Formula, env: Mapping) -> bool:
    if f is TRUE:
        return True
    if f is FALSE:
        return False
    if isinstance(f, Atom):
        return bool(eval_term(f.term, env))
    if isinstance(f, Not):
        return not eval_ground(f.arg, env)
    if isinstance(f, And):
        return all(eval_ground(a, env) for a in f.args)
    return any(eval_ground(a, env) for a in f.args)


# ---------------------------------------------------------------------------
# SMT-LIB rendering


def smt_term(t: Term) -> str:
    if isinstance(t, Const):
        if t.sort == BOOL:
            return "true" if t.value else "false"
        return str(t.value) if t.value >= 0 else f"(- {-t.value})"
    if isinstance(t, Sym):
        return t.var.smt_name
    if isinstance(t, App):
        return f"({t.op} {' '.join(smt_term(a) for a in t.args)})"
    raise ValueError(f"open term {t!r} cannot be sent to the solver")


def smt_formula(f: Formula, memo: dict | None = None) -> str:
    if memo is None:
        memo = {}
    hit = memo.get(f)
    if hit is not None:
        return hit
    if f is TRUE:
        s = "true"
    elif f is FALSE:
        s = "false"
    elif isinstance(f, Atom):
        s = smt_term(f.term)
    elif isinstance(f, Not):
        s = f"(not {smt_formula(f.arg, memo)})"
    elif isinstance(f, And):
        s = "(and " + " ".join(smt_formula(a, memo) for a in f.args) + ")"
    else:
        s = "(or " + " ".join(smt_formula(a, memo) for a in f.args) + ")"
    memo[f] = s
    return s
