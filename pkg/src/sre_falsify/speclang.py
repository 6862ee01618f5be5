"""The ``.hat`` module language: effect signatures, trace specifications and
ML-style method bodies, plus their translation into the core language.

A module file is a sequence of top-level items::

    type Node
    effect Nxt.put : (key: Node, val: Node) -> unit
    effect Nxt.get : (key: Node) -> (val: Node)
    define linked(k, v) = ltl F (<Nxt.put k v> /\\ X G ~<Nxt.put k _>)
    spec Nxt.get
      function (k: Node) ghost (v0: Node)
      context linked(k, v0)
      return (v: Node) ensures v = v0
      effect <Nxt.get k = v>
    end
    let rec walk (n: Node) : unit = ...
    harness walk
    bounds max_ctx = 4

Every spec clause is optional: ``require``/``ensures`` default to ``true``,
``context`` to ``.*`` and ``effect`` to ``eps``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from . import core as C
from . import events as ev
from . import ltlf
from . import sre as S
from .logic import (
    BOOL,
    INT,
    TRUE,
    UNIT,
    UNIT_VALUE,
    Const,
    Formula,
    Sort,
    Term,
    Var,
    app,
    atom,
    const,
    eq,
    free_vars,
    uninterpreted,
)
from .syntax import KEYWORDS, ParseError, Parser

NULL_SORT = uninterpreted("null")


# ---------------------------------------------------------------------------
# Module-level AST


@dataclass
class MethodSpec:
    name: str
    params: tuple = ()  # ((name, Sort), ...)
    ghosts: tuple = ()
    require: Formula = TRUE
    context: S.SRE = S.ALL
    ret: tuple = ("ret", UNIT)
    ensures: Formula = TRUE
    effect: S.SRE = S.EPS

    def check(self):
        """Scope check: ensure/effect may also see the return name."""
        pre_scope = {n for n, _ in self.params} | {n for n, _ in self.ghosts}
        post_scope = pre_scope | {self.ret[0]}
        bad = (free_vars(self.require) | C.sre_free_vars(self.context)) - pre_scope
        if bad:
            raise ParseError(f"spec {self.name}: undeclared variable(s) {sorted(bad)} in require/context")
        bad = (free_vars(self.ensures) | C.sre_free_vars(self.effect)) - post_scope
        if bad:
            raise ParseError(f"spec {self.name}: undeclared variable(s) {sorted(bad)} in ensures/effect")


# Source expressions.  Positions are kept for diagnostics but ignored by ==.


@dataclass(frozen=True)
class SConst:
    term: Term
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class SVar:
    name: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class SApp:
    fn: str
    args: tuple
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class SOp:
    op: str  # + - = != < <= > >= && || not
    args: tuple
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class SLet:
    var: str
    bound: object
    body: object
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class SLetFun:
    name: str
    params: tuple  # ((name, Sort), ...)
    ret_sort: Sort | None
    fbody: object
    body: object
    rec: bool = False
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class SIf:
    cond: object
    then: object
    els: object
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class SSeq:
    first: object
    second: object
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class SAssert:
    cond: object
    assume: bool = False
    line: int = field(default=0, compare=False)


@dataclass
class MethodDef:
    name: str
    params: tuple
    ret_sort: Sort | None
    body: object
    rec: bool = False
    line: int = 0


@dataclass
class ModuleFile:
    sig: ev.EffectSignature
    sorts: dict = field(default_factory=dict)
    macros: dict = field(default_factory=dict)  # name -> (params, SRE)
    specs: dict = field(default_factory=dict)  # name -> MethodSpec
    methods: dict = field(default_factory=dict)  # name -> MethodDef
    harness: str | None = None
    bounds: dict = field(default_factory=dict)

    def install(self):
        """Make this module's signature the active one for literal semantics."""
        ev.set_signature(self.sig)
        return self

    def target(self, method: str | None = None) -> str:
        name = method or self.harness
        if name is None:
            if len(self.methods) == 1:
                return next(iter(self.methods))
            raise ValueError("no harness directive and no --method given")
        if name not in self.methods:
            raise ValueError(f"unknown method {name}")
        if name not in self.specs:
            raise ValueError(f"method {name} has no spec")
        return name


# ---------------------------------------------------------------------------
# Parser


_CMP_OPS = {"=": "=", "==": "=", "<>": "!=", "!=": "!=", "<": "<", "<=": "<=", ">": ">", ">=": ">="}


class ModuleParser(Parser):
    def __init__(self, text: str):
        self.module = ModuleFile(sig=ev.EffectSignature())
        super().__init__(text, sig=self.module.sig, macros=self.module.macros)

    def parse(self) -> ModuleFile:
        m = self.module
        while not self.at_eof():
            t = self.tok
            if self.accept("type"):
                n = self.name()
                m.sorts[n] = uninterpreted(n)
                self.sorts[n] = m.sorts[n]
            elif self.accept("effect"):
                self._effect_decl()
            elif self.accept("define"):
                self._define()
            elif self.accept("spec"):
                self._spec(t)
            elif self.accept("let"):
                self._method(t)
            elif self.accept("harness"):
                m.harness = self.name()
            elif self.accept("bounds"):
                while self.tok.kind == "name" and self.peek().text == "=":
                    key = self.advance().text
                    self.advance()
                    v = self.advance()
                    if v.kind != "int":
                        self.error("bound values must be integers")
                    m.bounds[key] = int(v.text)
            else:
                self.error(f"expected a top-level declaration, found {t.text!r}")
        self._resolve()
        return m

    # -- declarations ----------------------------------------------------------

    def _binders(self) -> tuple:
        self.expect("(")
        out = []
        if not self.at(")"):
            while True:
                n = self.name()
                self.expect(":")
                out.append((n, self.sort()))
                if not self.accept(","):
                    break
        self.expect(")")
        return tuple(out)

    def _effect_decl(self):
        fname = self.name()
        self.expect(":")
        params = self._binders()
        self.expect("->")
        if self.accept("unit"):
            ret = ("ret", UNIT)
        else:
            rs = self._binders()
            if len(rs) != 1:
                self.error("an effect returns exactly one named value or unit")
            ret = rs[0]
        try:
            self.sig.add(ev.EffectDecl(fname, params, ret))
        except ValueError as e:
            self.error(str(e))
        ev.set_signature(self.sig)

    def _sre_or_ltl(self) -> S.SRE:
        if self.accept("ltl"):
            return ltlf.to_sre(self.ltl())
        return self.sre()

    def _define(self):
        n = self.name()
        self.expect("(")
        params = []
        if not self.at(")"):
            params.append(self.name())
            while self.accept(","):
                params.append(self.name())
        self.expect(")")
        self.expect("=")
        self.macros[n] = (tuple(params), self._sre_or_ltl())

    def _spec(self, start):
        name = self.name()
        sp = MethodSpec(name)
        if self.accept("function"):
            sp.params = self._binders()
        if self.accept("ghost"):
            sp.ghosts = self._binders()
        if self.accept("require"):
            sp.require = self.formula()
        if self.accept("context"):
            sp.context = self._sre_or_ltl()
        if self.accept("return"):
            rs = self._binders()
            if len(rs) != 1:
                self.error("return declares exactly one binder")
            sp.ret = rs[0]
        if self.accept("ensures"):
            sp.ensures = self.formula()
        if self.accept("effect"):
            sp.effect = self._sre_or_ltl()
        self.expect("end")
        try:
            sp.check()
        except ParseError as e:
            raise ParseError(str(e), start.line, start.col) from None
        if name in self.module.specs:
            raise ParseError(f"duplicate spec {name}", start.line, start.col)
        self.module.specs[name] = sp

    def _fun_header(self):
        params = []
        while self.at("("):
            if self.peek().text == ")":
                self.i += 2
                continue
            params.extend(self._binders())
        ret_sort = None
        if self.accept(":"):
            ret_sort = self.sort()
        self.expect("=")
        return tuple(params), ret_sort

    def _method(self, start):
        rec = self.accept("rec")
        name = self.name()
        params, ret_sort = self._fun_header()
        body = self.expr()
        self.module.methods[name] = MethodDef(name, params, ret_sort, body, rec, start.line)

    # -- source expressions -----------------------------------------------------

    def expr(self):
        """Sequence level: ``e ; e``."""
        line = self.tok.line
        e = self.expr1()
        if self.accept(";"):
            return SSeq(e, self.expr(), line)
        return e

    def expr1(self):
        t = self.tok
        if self.accept("let"):
            rec = self.accept("rec")
            name = self.name()
            if rec or self.at("("):
                params, ret_sort = self._fun_header()
                fbody = self.expr()
                self.expect("in")
                return SLetFun(name, params, ret_sort, fbody, self.expr(), rec, t.line)
            if self.accept(":"):
                self.sort()
            self.expect("=")
            bound = self.expr()
            self.expect("in")
            return SLet(name, bound, self.expr(), t.line)
        if self.accept("if"):
            c = self.expr()
            self.expect("then")
            th = self.expr1()
            self.expect("else")
            return SIf(c, th, self.expr1(), t.line)
        if self.accept("assert"):
            return SAssert(self.expr1(), False, t.line)
        if self.accept("assume"):
            return SAssert(self.expr1(), True, t.line)
        return self._or()

    def _or(self):
        e = self._and()
        while self.at("||"):
            line = self.advance().line
            e = SOp("||", (e, self._and()), line)
        return e

    def _and(self):
        e = self._not()
        while self.at("&&"):
            line = self.advance().line
            e = SOp("&&", (e, self._not()), line)
        return e

    def _not(self):
        if self.at("not"):
            line = self.advance().line
            return SOp("not", (self._not(),), line)
        return self._cmp()

    def _cmp(self):
        e = self._arith()
        if self.tok.kind == "sym" and self.tok.text in _CMP_OPS:
            t = self.advance()
            e = SOp(_CMP_OPS[t.text], (e, self._arith()), t.line)
        return e

    def _arith(self):
        e = self._app()
        while self.at("+", "-"):
            t = self.advance()
            e = SOp(t.text, (e, self._app()), t.line)
        return e

    def _starts_atom(self) -> bool:
        t = self.tok
        if t.kind == "int":
            return True
        if t.kind == "name":
            return t.text not in KEYWORDS or t.text in ("true", "false", "null")
        return t.text == "("

    def _app(self):
        t = self.tok
        if t.kind == "name" and t.text not in KEYWORDS and self.peek().kind != "eof":
            self.advance()
            args = []
            while self._starts_atom():
                args.append(self._atom())
            if args:
                return SApp(t.text, tuple(args), t.line)
            return SVar(t.text, t.line)
        return self._atom()

    def _atom(self):
        t = self.tok
        if t.kind == "int":
            self.advance()
            return SConst(const(int(t.text), INT), t.line)
        if self.accept("true"):
            return SConst(const(True, BOOL), t.line)
        if self.accept("false"):
            return SConst(const(False, BOOL), t.line)
        if self.accept("null"):
            return SConst(Const(0, NULL_SORT), t.line)
        if self.accept("("):
            if self.accept(")"):
                return SConst(UNIT_VALUE, t.line)
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "name" and t.text not in KEYWORDS:
            self.advance()
            return SVar(t.text, t.line)
        self.error(f"expected an expression, found {t.text or 'end of input'!r}")

    # -- resolution ----------------------------------------------------------------

    def _resolve(self):
        m = self.module
        if m.harness is not None and m.harness not in m.methods:
            raise ParseError(f"harness names unknown method {m.harness}")
        for md in m.methods.values():
            _check_calls(md.body, m, {p for p, _ in md.params} | ({md.name} if md.rec else set()))


def _is_unit_literal(e) -> bool:
    return isinstance(e, SConst) and e.term is UNIT_VALUE


def _check_calls(e, m: ModuleFile, funs: set):
    """Reject calls to APIs without a spec and to unknown functions."""
    if isinstance(e, SApp):
        if e.fn not in funs and e.fn not in m.methods:
            if e.fn in m.sig:
                if e.fn not in m.specs:
                    raise ParseError(f"call to {e.fn} but no spec for it is given", e.line)
            elif e.fn not in m.specs:
                raise ParseError(f"unknown function {e.fn}", e.line)
        for a in e.args:
            _check_calls(a, m, funs)
    elif isinstance(e, SLetFun):
        inner = funs | {e.name}
        _check_calls(e.fbody, m, inner if e.rec else funs)
        _check_calls(e.body, m, inner)
    elif isinstance(e, SLet):
        _check_calls(e.bound, m, funs)
        _check_calls(e.body, m, funs - {e.var})
    elif isinstance(e, SOp):
        for a in e.args:
            _check_calls(a, m, funs)
    elif isinstance(e, SIf):
        for a in (e.cond, e.then, e.els):
            _check_calls(a, m, funs)
    elif isinstance(e, SSeq):
        _check_calls(e.first, m, funs)
        _check_calls(e.second, m, funs)
    elif isinstance(e, SAssert):
        _check_calls(e.cond, m, funs)


def parse_module(text: str) -> ModuleFile:
    return ModuleParser(text).parse()


def load_module(path) -> ModuleFile:
    with open(path, encoding="utf-8") as fh:
        return parse_module(fh.read()).install()


# ---------------------------------------------------------------------------
# Printing (parse_module(format_module(m)) reproduces m)


def _fmt_sort(s: Sort) -> str:
    return str(s)


def _fmt_binders(bs) -> str:
    return "(" + ", ".join(f"{n}: {_fmt_sort(s)}" for n, s in bs) + ")"


def _fmt_formula(f: Formula) -> str:
    return ev.format_qualifier(f)


def format_expr(e, prec: int = 0) -> str:
    """Print a source expression; ``prec`` > 0 forces parentheses around compound forms."""
    if isinstance(e, SConst):
        return repr(e.term) if not (isinstance(e.term.value, int) and e.term.value < 0 and e.term.sort == INT) \
            else f"(0 - {-e.term.value})"
    if isinstance(e, SVar):
        return e.name
    if isinstance(e, SApp):
        s = e.fn + " " + " ".join(format_expr(a, 9) for a in e.args)
        return f"({s})" if prec >= 9 else s
    if isinstance(e, SOp):
        if e.op == "not":
            s = "not " + format_expr(e.args[0], 9)
        else:
            s = f"{format_expr(e.args[0], 9)} {e.op} {format_expr(e.args[1], 9)}"
        return f"({s})" if prec >= 1 else s
    if isinstance(e, SLet):
        s = f"let {e.var} = {format_expr(e.bound)} in {format_expr(e.body)}"
    elif isinstance(e, SLetFun):
        ps = " ".join(f"({n}: {_fmt_sort(t)})" for n, t in e.params) or "()"
        rs = f" : {_fmt_sort(e.ret_sort)}" if e.ret_sort else ""
        rec = "rec " if e.rec else ""
        s = f"let {rec}{e.name} {ps}{rs} = {format_expr(e.fbody)} in {format_expr(e.body)}"
    elif isinstance(e, SIf):
        s = f"if {format_expr(e.cond)} then {format_expr(e.then, 1)} else {format_expr(e.els, 1)}"
    elif isinstance(e, SSeq):
        s = f"{format_expr(e.first, 1)}; {format_expr(e.second)}"
    elif isinstance(e, SAssert):
        s = ("assume " if e.assume else "assert ") + format_expr(e.cond, 1)
    else:
        raise TypeError(e)
    return f"({s})" if prec >= 1 else s


def format_module(m: ModuleFile) -> str:
    out = [f"type {n}" for n in m.sorts]
    for d in m.sig.decls.values():
        ret = "unit" if d.ret[1] == UNIT else _fmt_binders((d.ret,))
        out.append(f"effect {d.fname} : {_fmt_binders(d.params)} -> {ret}")
    for n, (params, body) in m.macros.items():
        out.append(f"define {n}({', '.join(params)}) = {S.format_sre(body)}")
    for sp in m.specs.values():
        lines = [f"spec {sp.name}"]
        lines.append(f"  function {_fmt_binders(sp.params)}")
        lines.append(f"  ghost {_fmt_binders(sp.ghosts)}")
        lines.append(f"  require {_fmt_formula(sp.require)}")
        lines.append(f"  context {S.format_sre(sp.context)}")
        lines.append(f"  return {_fmt_binders((sp.ret,))}")
        lines.append(f"  ensures {_fmt_formula(sp.ensures)}")
        lines.append(f"  effect {S.format_sre(sp.effect)}")
        lines.append("end")
        out.append("\n".join(lines))
    for md in m.methods.values():
        ps = " ".join(f"({n}: {_fmt_sort(t)})" for n, t in md.params) or "()"
        rs = f" : {_fmt_sort(md.ret_sort)}" if md.ret_sort else ""
        out.append(f"let {'rec ' if md.rec else ''}{md.name} {ps}{rs} =\n  {format_expr(md.body)}")
    if m.harness:
        out.append(f"harness {m.harness}")
    if m.bounds:
        out.append("bounds " + " ".join(f"{k} = {v}" for k, v in m.bounds.items()))
    return "\n\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Translation to the core language


class SortError(ParseError):
    pass


def _compatible(a: Sort | None, b: Sort | None) -> bool:
    if a is None or b is None or a == b:
        return True
    nullish = {a.kind, b.kind} <= {"unint"} and NULL_SORT in (a, b)
    return nullish


def _join(a: Sort | None, b: Sort | None) -> Sort | None:
    if a is None or a == NULL_SORT:
        return b if b is not None else a
    return a


@dataclass
class _FunInfo:
    value: object  # Var | Fun | Fix
    params: tuple
    ret_sort: Sort | None


def spec_function(sp: MethodSpec) -> C.Fun:
    """The core function standing for an API call: it generates the ghosts,
    assumes the precondition, admits the context, generates the result,
    assumes the postcondition and appends the effect."""
    steps: list = []
    if sp.require is not TRUE:
        steps.append(C.Assume(sp.require))
    if sp.context is not S.ALL:
        steps.append(C.Admit(sp.context))
    rname, rsort = sp.ret
    if rsort == UNIT:
        tail = [C.Assume(sp.ensures)] if sp.ensures is not TRUE else []
        tail.append(C.Append(sp.effect))
        body = C.subst(C.seq(*tail, C.Ret(UNIT_VALUE)), {rname: UNIT_VALUE})
        body = C.seq(*steps, body) if steps else body
    else:
        tail = [C.Assume(sp.ensures)] if sp.ensures is not TRUE else []
        tail.append(C.Append(sp.effect))
        body = C.Let(rname, C.GenSym(rsort, rname), C.seq(*tail, C.Ret(Var(rname))))
        if steps:
            body = C.seq(*steps, body)
    for g, s in reversed(sp.ghosts):
        body = C.Let(g, C.GenSym(s, g), body)
    return C.Fun(tuple(n for n, _ in sp.params), body)


class Translator:
    def __init__(self, module: ModuleFile):
        self.m = module
        self.counter = itertools.count(1)
        self._api: dict = {}
        self._methods: dict = {}

    def fresh(self) -> str:
        return f"%{next(self.counter)}"

    # -- global functions -------------------------------------------------------

    def global_fun(self, name: str) -> _FunInfo | None:
        m = self.m
        if name in m.methods:
            if name not in self._methods:
                self._methods[name] = None  # guards against mutual recursion
                self._methods[name] = self.method_value(name)
            v = self._methods[name]
            if v is None:
                raise SortError(f"mutual recursion through {name} is not supported")
            md = m.methods[name]
            return _FunInfo(v, tuple(s for _, s in md.params), md.ret_sort)
        if name in m.specs:
            if name not in self._api:
                self._api[name] = spec_function(m.specs[name])
            sp = m.specs[name]
            return _FunInfo(self._api[name], tuple(s for _, s in sp.params), sp.ret[1])
        return None

    def method_value(self, name: str):
        md = self.m.methods[name]
        env = {p: ("val", s) for p, s in md.params}
        params = tuple(p for p, _ in md.params) or ("%unit",)
        if md.rec:
            env[name] = ("fun", _FunInfo(Var(name), tuple(s for _, s in md.params) or (UNIT,), md.ret_sort))
        body, sort = self.expr(md.body, env)
        if md.ret_sort is not None and not _compatible(sort, md.ret_sort):
            raise SortError(f"{name} returns {sort} but is declared {md.ret_sort}", md.line)
        return C.Fix(name, params, body) if md.rec else C.Fun(params, body)

    # -- expressions -----------------------------------------------------------------

    def expr(self, e, env) -> tuple:
        if isinstance(e, (SConst, SVar, SOp, SApp)):
            return self.anf(e, env, lambda t, s: (C.Ret(t), s))
        if isinstance(e, SLet):
            b, bs = self.expr(e.bound, env)
            body, s = self.expr(e.body, {**env, e.var: ("val", bs)})
            return C.Let(e.var, b, body), s
        if isinstance(e, SLetFun):
            psorts = tuple(s for _, s in e.params) or (UNIT,)
            pnames = tuple(p for p, _ in e.params) or ("%unit",)
            info = _FunInfo(Var(e.name), psorts, e.ret_sort)
            fenv = {**env, **{p: ("val", s) for p, s in e.params}}
            if e.rec:
                fenv[e.name] = ("fun", info)
            fbody, fsort = self.expr(e.fbody, fenv)
            if e.ret_sort is not None and not _compatible(fsort, e.ret_sort):
                raise SortError(f"{e.name} returns {fsort} but is declared {e.ret_sort}", e.line)
            info.ret_sort = e.ret_sort or fsort
            fv = C.Fix(e.name, pnames, fbody) if e.rec else C.Fun(pnames, fbody)
            body, s = self.expr(e.body, {**env, e.name: ("fun", info)})
            return C.Let(e.name, C.Ret(fv), body), s
        if isinstance(e, SIf):
            def branch(t, _s):
                c = atom(t)
                th, s1 = self.expr(e.then, env)
                el, s2 = self.expr(e.els, env)
                if not _compatible(s1, s2):
                    raise SortError(f"if branches have sorts {s1} and {s2}", e.line)
                return C.Choice(C.seq(C.Assume(c), th), C.seq(C.Assume(atom(app("not", t))), el)), _join(s1, s2)
            return self.anf(e.cond, env, branch, want=BOOL)
        if isinstance(e, SSeq):
            a, _ = self.expr(e.first, env)
            b, s = self.expr(e.second, env)
            return C.Let("_", a, b), s
        if isinstance(e, SAssert):
            def chk(t, _s):
                f = atom(t)
                return (C.Assume(f) if e.assume else C.assert_(f)), UNIT
            return self.anf(e.cond, env, chk, want=BOOL)
        raise TypeError(e)

    def anf(self, e, env, k, want: Sort | None = None):
        """Evaluate ``e`` to a term and pass it to ``k(term, sort)``."""
        def check(s):
            if want is not None and not _compatible(s, want):
                raise SortError(f"expected {want}, found {s}", getattr(e, "line", 0))

        if isinstance(e, SConst):
            check(e.term.sort)
            return k(e.term, e.term.sort)
        if isinstance(e, SVar):
            b = env.get(e.name)
            if b is None:
                if self.global_fun(e.name) is not None:
                    raise SortError(f"function {e.name} used as a value", e.line)
                raise SortError(f"unbound variable {e.name}", e.line)
            if b[0] == "fun":
                raise SortError(f"function {e.name} used as a value", e.line)
            check(b[1])
            return k(Var(e.name), b[1])
        if isinstance(e, SOp):
            return self._op(e, env, k, check)
        if isinstance(e, SApp):
            info = env[e.fn][1] if e.fn in env and env[e.fn][0] == "fun" else None
            if info is None:
                if e.fn in env:
                    raise SortError(f"{e.fn} is not a function", e.line)
                info = self.global_fun(e.fn)
            if info is None:
                raise SortError(f"unknown function {e.fn}", e.line)
            if not info.params and len(e.args) == 1 and _is_unit_literal(e.args[0]):
                e = SApp(e.fn, (), e.line)  # f () calls a nullary function
            if len(info.params) != len(e.args):
                raise SortError(f"{e.fn} expects {len(info.params)} argument(s), got {len(e.args)}", e.line)

            def go(i, vals):
                if i == len(e.args):
                    x = self.fresh()
                    check(info.ret_sort)
                    rest, s = k(Var(x), info.ret_sort)
                    return C.LetApp(x, info.value, tuple(vals), rest), s
                return self.anf(e.args[i], env, lambda t, _s: go(i + 1, vals + [t]), want=info.params[i])

            return go(0, [])
        c, s = self.expr(e, env)
        check(s)
        x = self.fresh()
        rest, s2 = k(Var(x), s)
        return C.Let(x, c, rest), s2

    def _op(self, e: SOp, env, k, check):
        op = e.op
        if op == "not":
            check(BOOL)
            return self.anf(e.args[0], env, lambda t, _s: k(app("not", t), BOOL), want=BOOL)
        if op in ("&&", "||") and _effectful(e.args[1]):
            # keep short-circuit evaluation when the right operand has effects
            a, b = e.args
            fallback = SConst(const(op == "||", BOOL), e.line)
            rewritten = SIf(a, b, fallback, e.line) if op == "&&" else SIf(a, fallback, b, e.line)
            return self.anf(rewritten, env, k, want=BOOL)
        if op in ("+", "-"):
            want, out = INT, INT
        elif op in ("&&", "||"):
            want, out = BOOL, BOOL
        else:
            want, out = (INT if op in ("<", "<=", ">", ">=") else None), BOOL
        check(out)
        core_op = {"&&": "and", "||": "or"}.get(op, op)

        def second(t1, s1):
            def done(t2, s2):
                if op in ("=", "!=") and not _compatible(s1, s2):
                    raise SortError(f"cannot compare {s1} with {s2}", e.line)
                if op == "!=":
                    return k(app("not", app("=", t1, t2)), out)
                if op == ">":
                    return k(app("<", t2, t1), out)
                if op == ">=":
                    return k(app("<=", t2, t1), out)
                return k(app(core_op, t1, t2), out)
            return self.anf(e.args[1], env, done, want=want)

        return self.anf(e.args[0], env, second, want=want)


def _effectful(e) -> bool:
    if isinstance(e, (SConst, SVar)):
        return False
    if isinstance(e, SOp):
        return any(_effectful(a) for a in e.args)
    return True


def translate_expr(e, module: ModuleFile, env: dict | None = None) -> C.Expr:
    """Translate a source expression; ``env`` maps free names to their sorts."""
    expr, _ = Translator(module).expr(e, {n: ("val", s) for n, s in (env or {}).items()})
    return expr


def method_value(module: ModuleFile, name: str):
    return Translator(module).method_value(name)


# ---------------------------------------------------------------------------
# Harness


@dataclass
class Harness:
    """A closed harness program together with its postcondition.

    The postcondition is ``ctx · eff``; falsification splits traces at the
    end of the harness's context append, so ``ctx`` and ``eff`` are kept
    apart.  Unpacks as ``(expr, R_post)``.
    """

    expr: C.Expr
    ctx: S.SRE
    eff: S.SRE
    inputs: dict = field(default_factory=dict)  # name -> Sym once instantiated

    @property
    def post(self) -> S.SRE:
        return S.concat(self.ctx, self.eff)

    def __iter__(self):
        return iter((self.expr, self.post))

    def instantiate(self) -> "Harness":
        """Peel the leading symbol generators, substituting fresh symbols."""
        expr, binding = self.expr, dict(self.inputs)
        while isinstance(expr, C.Let) and isinstance(expr.bound, C.GenSym):
            v = C.gensym_value(expr.bound)
            binding[expr.var] = v
            expr = C.subst(expr.body, {expr.var: v})
        terms = {Var(k): v for k, v in binding.items()}
        return Harness(expr, S.subst(self.ctx, terms), S.subst(self.eff, terms), binding)


def get_harness(spec: MethodSpec, method) -> Harness:
    """Build the closed harness for ``method`` against ``spec``: generate the
    parameters and ghosts, assume the precondition, append the context, call,
    and assert the ensure clause."""
    rname, rsort = spec.ret
    ret_in_effect = rname in C.sre_free_vars(spec.effect)
    args = tuple(Var(n) for n, _ in spec.params) or (UNIT_VALUE,)
    tail = C.assert_(spec.ensures)
    if ret_in_effect:
        tmp = "%result"
        call = C.LetApp(tmp, method, args, C.seq(C.Assume(eq(Var(rname), Var(tmp))), tail))
    else:
        call = C.LetApp(rname, method, args, tail)
    body = C.seq(C.Assume(spec.require), C.Append(spec.context, context=True), call)
    binders = list(spec.params) + list(spec.ghosts) + ([spec.ret] if ret_in_effect else [])
    for n, s in reversed(binders):
        body = C.Let(n, C.GenSym(s, n), body)
    return Harness(body, spec.context, spec.effect)


def module_harness(module: ModuleFile, method: str | None = None) -> Harness:
    name = module.target(method)
    return get_harness(module.specs[name], method_value(module, name))
