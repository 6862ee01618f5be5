"""Lexer and recursive-descent parsers for the textual surface syntax.

Shared by qualifier formulas, event literals, SREs, LTLf formulas and the
``.hat`` module language (see :mod:`sre_falsify.speclang`).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import events as ev
from . import sre as S
from .logic import (
    BOOL,
    FALSE,
    INT,
    TRUE,
    UNIT_VALUE,
    Local,
    Sort,
    Term,
    Var,
    app,
    atom,
    conj,
    const,
    disj,
    eq,
    ne,
    neg,
    uninterpreted,
)


class ParseError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {msg}" if line else msg)
        self.line, self.col = line, col


@dataclass(frozen=True)
class Token:
    kind: str  # "name" | "int" | "sym" | "eof"
    text: str
    line: int
    col: int


_SYMBOLS = [
    "/\\", "\\/", "||", "&&", "->", "<-", "<=", ">=", "<>", "!=", "==",
    "<", ">", "|", "&", "~", "!", "=", "(", ")", "*", "+", "-", ";", ".", ",", ":", "[", "]",
]
_NAME = r"[A-Za-z_][A-Za-z0-9_']*(?:\.[A-Za-z_][A-Za-z0-9_']*)*"
_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>#[^\n]*)|(?P<int>[0-9]+)|(?P<name>" + _NAME + ")|(?P<sym>"
    + "|".join(re.escape(s) for s in _SYMBOLS) + ")"
)


def tokenize(text: str) -> list[Token]:
    out = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind in ("int", "name", "sym"):
            out.append(Token(kind, m.group(), line, col))
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


KEYWORDS = {
    "let", "rec", "in", "if", "then", "else", "assert", "assume", "not", "true", "false", "null",
    "spec", "end", "effect", "type", "harness", "function", "ghost", "require", "context",
    "return", "ensures", "eps", "empty", "ltl", "define", "bounds",
}

BUILTIN_SORTS = {"int": INT, "bool": BOOL, "unit": Sort("unit")}


class Parser:
    """Recursive-descent parser over a token list.

    ``sig`` supplies effect arities and argument names for literals; ``sorts``
    maps declared sort names; ``macros`` holds ``define``d SRE abbreviations.
    """

    def __init__(self, text: str, sig: ev.EffectSignature | None = None,
                 sorts: dict | None = None, macros: dict | None = None):
        self.toks = tokenize(text)
        self.i = 0
        self.sig = sig if sig is not None else ev.current_signature()
        self.sorts = dict(BUILTIN_SORTS)
        if sorts:
            self.sorts.update(sorts)
        self.macros = macros if macros is not None else {}
        self.locals: dict[str, Term] = {}

    # -- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("sym", "name") and t.text in texts

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def accept(self, *texts: str) -> bool:
        if self.at(*texts):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def error(self, msg: str):
        raise ParseError(msg, self.tok.line, self.tok.col)

    def name(self) -> str:
        t = self.tok
        if t.kind != "name" or t.text in KEYWORDS:
            self.error(f"expected a name, found {t.text or 'end of input'!r}")
        self.i += 1
        return t.text

    def at_eof(self) -> bool:
        return self.tok.kind == "eof"

    def done(self):
        if not self.at_eof():
            self.error(f"unexpected {self.tok.text!r}")

    def sort(self) -> Sort:
        n = self.name()
        if n not in self.sorts:
            self.error(f"unknown sort {n}")
        return self.sorts[n]

    # -- terms and qualifier formulas ---------------------------------------

    def term(self) -> Term:
        t = self.term_atom()
        while self.at("+", "-"):
            op = self.advance().text
            t = app(op, t, self.term_atom())
        return t

    def term_atom(self) -> Term:
        t = self.tok
        if t.kind == "int":
            self.advance()
            return const(int(t.text), INT)
        if self.accept("-"):
            tk = self.advance()
            if tk.kind != "int":
                self.error("expected an integer after '-'")
            return const(-int(tk.text), INT)
        if self.accept("null"):
            return const(0, uninterpreted("null"))
        if self.accept("true"):
            return const(True, BOOL)
        if self.accept("false"):
            return const(False, BOOL)
        if self.at("(") and self.peek().text == ")":
            self.i += 2
            return UNIT_VALUE
        if self.accept("("):
            inner = self.term()
            self.expect(")")
            return inner
        n = self.name()
        return self.locals.get(n) or Var(n)

    _CMP = {"=": "=", "==": "=", "!=": "!=", "<>": "!=", "<": "<", "<=": "<=", ">": ">", ">=": ">="}

    def formula(self, in_literal: bool = False):
        f = self._f_and(in_literal)
        while self.accept("||"):
            f = disj(f, self._f_and(in_literal))
        return f

    def _f_and(self, in_literal):
        f = self._f_not(in_literal)
        while self.accept("&&"):
            f = conj(f, self._f_not(in_literal))
        return f

    def _f_not(self, in_literal):
        if self.accept("not"):
            return neg(self._f_not(in_literal))
        return self._f_atom(in_literal)

    def _f_atom(self, in_literal):
        if self.at("("):
            save = self.i
            self.advance()
            try:
                f = self.formula(False)
                self.expect(")")
                if not self._at_cmp(in_literal) and not self.at("+", "-"):
                    return f
            except ParseError:
                pass
            self.i = save
        lhs = self.term()
        if self._at_cmp(in_literal):
            op = self._CMP[self.advance().text]
            rhs = self.term()
            return atom(app(op, lhs, rhs))
        return atom(lhs)

    def _at_cmp(self, in_literal) -> bool:
        if in_literal and self.at(">"):
            return False
        return self.tok.kind == "sym" and self.tok.text in self._CMP

    # -- literals ------------------------------------------------------------

    def literal(self) -> ev.SymEvent:
        start = self.expect("<")
        fname = self.name()
        if self.sig is None or fname not in self.sig:
            raise ParseError(f"unknown effect {fname}", start.line, start.col)
        decl = self.sig[fname]
        items = []
        while not self.at("=", "|", ">"):
            items.append(self._lit_item())
        ret_item = None
        if self.accept("="):
            ret_item = self._lit_item()
        if items and len(items) != len(decl.params):
            self.error(f"{fname} takes {len(decl.params)} argument(s), got {len(items)}")
        if self.accept("|"):
            saved = self.locals
            binders = dict(saved)
            for (kind, val), loc in zip(items, decl.locals):
                if kind != "name":
                    self.error("binder form expects plain argument names")
                binders[val] = loc
            if ret_item is not None:
                if ret_item[0] != "name":
                    self.error("binder form expects a plain return name")
                binders[ret_item[1]] = decl.ret_local
            self.locals = binders
            try:
                q = self.formula(in_literal=True)
            finally:
                self.locals = saved
        else:
            parts = [self._item_constraint(it, loc) for it, loc in zip(items, decl.locals)]
            if ret_item is not None:
                parts.append(self._item_constraint(ret_item, decl.ret_local))
            q = conj(*parts)
        self.expect(">")
        return ev.make_event({fname: q})

    def _lit_item(self):
        if self.accept("_"):
            return ("any", None)
        if self.accept("!"):
            return ("ne", self.term_atom())
        t = self.tok
        if t.kind == "name" and t.text not in KEYWORDS and self.peek().text not in ("+", "-"):
            self.advance()
            return ("name", t.text)
        return ("eq", self.term_atom())

    def _item_constraint(self, item, loc):
        kind, val = item
        if kind == "any":
            return TRUE
        if kind == "name":
            val = self.locals.get(val) or Var(val)
            return eq(loc, val)
        if kind == "ne":
            return ne(loc, val)
        return eq(loc, val)

    # -- SREs ------------------------------------------------------------------

    def sre(self) -> S.SRE:
        r = self._s_and()
        while self.accept("\\/"):
            r = S.or_(r, self._s_and())
        return r

    def _s_and(self):
        r = self._s_cat()
        while self.accept("/\\"):
            r = S.and_(r, self._s_cat())
        return r

    def _starts_primary(self) -> bool:
        t = self.tok
        if t.kind == "sym":
            return t.text in ("<", ".", "(", "~", "!")
        if t.kind == "name":
            return t.text in ("eps", "empty") or (t.text in self.macros and self.peek().text == "(")
        return False

    def _s_cat(self):
        parts = [self._s_litor()]
        while True:
            if self.accept(";"):
                parts.append(self._s_litor())
            elif self._starts_primary():
                parts.append(self._s_litor())
            else:
                break
        return S.concat(*parts)

    def _as_literal(self, r: S.SRE, op: str) -> ev.SymEvent:
        if r is S.EMPTY:
            return ev.BOTTOM
        if r.kind != S.LIT_K:
            self.error(f"'{op}' applies to single-event literals only")
        return r.lit

    def _s_litor(self):
        r = self._s_litand()
        while self.at("|"):
            self.advance()
            rhs = self._s_litand()
            r = S.lit(ev.join(self._as_literal(r, "|"), self._as_literal(rhs, "|")))
        return r

    def _s_litand(self):
        r = self._s_unary()
        while self.at("&"):
            self.advance()
            rhs = self._s_unary()
            r = S.lit(ev.meet(self._as_literal(r, "&"), self._as_literal(rhs, "&")))
        return r

    def _s_unary(self):
        if self.accept("~"):
            r = self._s_unary()
            return S.lit(ev.complement(self._as_literal(r, "~")))
        if self.accept("!"):
            return S.neg(self._s_unary())
        r = self._s_primary()
        while self.at("*", "+"):
            r = S.star(r) if self.advance().text == "*" else S.plus(r)
        return r

    def _s_primary(self):
        if self.at("<"):
            return S.lit(self.literal())
        if self.accept("."):
            return S.DOT
        if self.accept("eps"):
            return S.EPS
        if self.accept("empty"):
            return S.EMPTY
        if self.accept("("):
            r = self.sre()
            self.expect(")")
            return r
        t = self.tok
        if t.kind == "name" and t.text in self.macros:
            self.advance()
            params, body = self.macros[t.text]
            self.expect("(")
            args = []
            if not self.at(")"):
                args.append(self.term())
                while self.accept(","):
                    args.append(self.term())
            self.expect(")")
            if len(args) != len(params):
                self.error(f"{t.text} expects {len(params)} argument(s)")
            return S.subst(body, {Var(p): a for p, a in zip(params, args)})
        self.error(f"expected a regular expression, found {t.text or 'end of input'!r}")

    # -- LTLf --------------------------------------------------------------------

    def ltl(self):
        from . import ltlf as L

        if self.accept("F"):
            return L.F(self.ltl())
        if self.accept("G"):
            return L.G(self.ltl())
        if self.accept("X"):
            return L.X(self.ltl())
        lhs = self._l_or()
        if self.at("U", "W"):
            op = self.advance().text
            l = L.as_literal(lhs)
            if l is None:
                self.error(f"the left operand of {op} must be a single literal")
            rhs = self.ltl()
            return L.U(l, rhs) if op == "U" else L.W(l, rhs)
        return lhs

    def _l_or(self):
        from . import ltlf as L

        f = self._l_and()
        while self.accept("\\/"):
            f = L.Or(f, self._l_and())
        return f

    def _l_and(self):
        from . import ltlf as L

        f = self._l_not()
        while self.accept("/\\"):
            f = L.And(f, self._l_not())
        return f

    def _l_not(self):
        from . import ltlf as L

        if self.accept("~"):
            return L.Not(self._l_not())
        return self._l_atom()

    def _l_atom(self):
        from . import ltlf as L

        if self.at("<"):
            return L.Lit(self.literal())
        if self.accept("."):
            return L.Lit(ev.TOP)
        if self.accept("("):
            f = self.ltl()
            self.expect(")")
            return f
        if self.at("F", "G", "X"):
            return self.ltl()
        self.error(f"expected an LTLf formula, found {self.tok.text or 'end of input'!r}")


def parse_formula(text: str, **kw):
    p = Parser(text, **kw)
    f = p.formula()
    p.done()
    return f


def parse_literal(text: str, sig=None) -> ev.SymEvent:
    p = Parser(text, sig=sig)
    r = p._s_litor()
    p.done()
    return p._as_literal(r, "literal")


def parse_sre(text: str, sig=None, macros=None) -> S.SRE:
    p = Parser(text, sig=sig, macros=macros)
    r = p.sre()
    p.done()
    return r
