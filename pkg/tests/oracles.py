"""Independent reference implementations and random generators shared by the tests.

Nothing here calls the derivative machinery: languages are computed by set
semantics over explicit word spaces, LTLf by direct recursion.
"""

from __future__ import annotations

import itertools
import random

import numpy as np
from hypothesis import strategies as st

from sre_falsify import events as ev
from sre_falsify import ltlf as L
from sre_falsify import sre as S
from sre_falsify.events import EffectDecl, EffectSignature, GroundEvent
from sre_falsify.logic import INT, UNIT, conj, const, disj, eq, cmp, fresh_sym, neg, sym

PUT = EffectDecl("put", (("k", INT), ("v", INT)), ("r", UNIT))
GET = EffectDecl("get", (("k", INT),), ("v", INT))
SIG = EffectSignature([PUT, GET])
DECLS = {"put": PUT, "get": GET}

SYMS = tuple(fresh_sym(INT, f"s{i}") for i in range(3))


def install():
    ev.set_signature(SIG)


def alphabet(domain=(0, 1, 2), fnames=("put", "get")) -> list:
    out = []
    if "put" in fnames:
        out += [GroundEvent("put", (k, v), 0) for k in domain for v in domain]
    if "get" in fnames:
        out += [GroundEvent("get", (k,), v) for k in domain for v in domain]
    return out


def sigmas(domain=(0, 1, 2), syms=SYMS):
    for vals in itertools.product(domain, repeat=len(syms)):
        yield dict(zip(syms, vals))


def words(alpha, max_len):
    for n in range(max_len + 1):
        yield from itertools.product(alpha, repeat=n)


# ---------------------------------------------------------------------------
# Random qualifiers, literals, SREs and LTLf formulas (seeded generators)


def rand_term(rng: random.Random, fname: str, syms=SYMS, domain=(0, 1, 2)):
    d = DECLS[fname]
    pool = list(d.locals) + [d.ret_local] if fname == "get" else list(d.locals)
    r = rng.random()
    if r < 0.45:
        return const(rng.choice(domain), INT)
    if r < 0.8 and syms:
        return sym(rng.choice(syms))
    return rng.choice(pool)


def rand_atom(rng, fname, syms=SYMS, domain=(0, 1, 2)):
    d = DECLS[fname]
    pool = list(d.locals) + ([d.ret_local] if fname == "get" else [])
    lhs = rng.choice(pool)
    rhs = rand_term(rng, fname, syms, domain)
    op = rng.choice(["=", "=", "<", "<="])
    return eq(lhs, rhs) if op == "=" else cmp(op, lhs, rhs)


def rand_qual(rng, fname, depth=2, syms=SYMS, domain=(0, 1, 2)):
    if depth == 0 or rng.random() < 0.45:
        return rand_atom(rng, fname, syms, domain)
    k = rng.choice(["not", "and", "or"])
    if k == "not":
        return neg(rand_qual(rng, fname, depth - 1, syms, domain))
    a = rand_qual(rng, fname, depth - 1, syms, domain)
    b = rand_qual(rng, fname, depth - 1, syms, domain)
    return conj(a, b) if k == "and" else disj(a, b)


def rand_literal(rng, syms=SYMS, domain=(0, 1, 2), qdepth=2):
    names = rng.choice([["put"], ["get"], ["put", "get"]])
    atoms = {f: rand_qual(rng, f, qdepth, syms, domain) for f in names}
    return ev.make_event(atoms, rng.random() < 0.2)


def ground_literals(alpha, rng):
    """A literal matching a random non-empty subset of the ground alphabet."""
    chosen = [a for a in alpha if rng.random() < 0.4] or [rng.choice(alpha)]
    parts = {}
    for a in chosen:
        d = DECLS[a.fname]
        q = conj(*(eq(loc, const(v, INT)) for loc, v in zip(d.locals, a.args)),
                 *([eq(d.ret_local, const(a.ret, INT))] if a.fname == "get" else []))
        parts.setdefault(a.fname, []).append(q)
    return ev.make_event({f: disj(*qs) for f, qs in parts.items()})


def rand_raw(rng, depth, leaf):
    """Raw regex syntax tree (nested tuples) built without smart constructors."""
    if depth == 0 or rng.random() < 0.3:
        r = rng.random()
        if r < 0.08:
            return ("eps",)
        if r < 0.12:
            return ("empty",)
        return ("lit", leaf(rng))
    k = rng.choice(["star", "cat", "cat", "or", "and", "not"])
    if k in ("star", "not"):
        return (k, rand_raw(rng, depth - 1, leaf))
    return (k, rand_raw(rng, depth - 1, leaf), rand_raw(rng, depth - 1, leaf))


def raw_to_sre(raw) -> S.SRE:
    k = raw[0]
    if k == "eps":
        return S.EPS
    if k == "empty":
        return S.EMPTY
    if k == "lit":
        return S.lit(raw[1])
    if k == "star":
        return S.star(raw_to_sre(raw[1]))
    if k == "not":
        return S.neg(raw_to_sre(raw[1]))
    a, b = raw_to_sre(raw[1]), raw_to_sre(raw[2])
    return {"cat": S.concat, "or": S.or_, "and": S.and_}[k](a, b)


def rand_ltl(rng, depth, lits):
    if depth == 0 or rng.random() < 0.25:
        return L.Lit(rng.choice(lits))
    k = rng.choice(["X", "F", "G", "U", "W", "not", "and", "or"])
    if k in ("X", "F", "G"):
        return {"X": L.X, "F": L.F, "G": L.G}[k](rand_ltl(rng, depth - 1, lits))
    if k in ("U", "W"):
        l = rng.choice(lits)
        if rng.random() < 0.3:
            l = ev.complement(l)
        return (L.U if k == "U" else L.W)(l, rand_ltl(rng, depth - 1, lits))
    if k == "not":
        return L.Not(rand_ltl(rng, depth - 1, lits))
    a, b = rand_ltl(rng, depth - 1, lits), rand_ltl(rng, depth - 1, lits)
    return L.And(a, b) if k == "and" else L.Or(a, b)


def seeds(strategy_max=2**32 - 1):
    return st.integers(min_value=0, max_value=strategy_max)


# ---------------------------------------------------------------------------
# Reference semantics


def compile_raw(raw, hit):
    """A backtracking matcher for ``raw``: f(word, i) is the bitmask of ends j
    with word[i:j] in the language, ``hit(literal, letter)`` deciding leaves."""
    k = raw[0]
    if k == "eps":
        return lambda w, i: 1 << i
    if k == "empty":
        return lambda w, i: 0
    if k == "lit":
        l = raw[1]
        return lambda w, i: 1 << (i + 1) if i < len(w) and hit(l, w[i]) else 0
    a = compile_raw(raw[1], hit)
    if k == "not":
        return lambda w, i: ((1 << (len(w) + 1)) - (1 << i)) & ~a(w, i)
    if k == "star":
        def star(w, i):
            reach, todo = 1 << i, [i]
            while todo:
                step = a(w, todo.pop()) & ~reach
                reach |= step
                j = i
                while step >> j:
                    if step >> j & 1:
                        todo.append(j)
                    j += 1
            return reach
        return star
    b = compile_raw(raw[2], hit)
    if k == "or":
        return lambda w, i: a(w, i) | b(w, i)
    if k == "and":
        def both(w, i):
            left = a(w, i)
            return left and left & b(w, i)
        return both
    if k != "cat":
        raise ValueError(k)

    def cat(w, i):
        out, left, j = 0, a(w, i), i
        while left >> j:
            if left >> j & 1:
                out |= b(w, j)
            j += 1
        return out
    return cat


def raw_match(raw, word, sigma=None, hit=None) -> bool:
    """Backtracking membership over the syntax tree."""
    hit = hit or (lambda l, g: ev.match_ground(l, g, sigma or {}))
    return bool(compile_raw(raw, hit)(tuple(word), 0) >> len(word) & 1)


class WordSpace:
    """All words of length ≤ n over an alphabet, with languages as bool vectors."""

    def __init__(self, alpha, max_len):
        self.alpha = list(alpha)
        self.max_len = max_len
        self.words = list(words(range(len(self.alpha)), max_len))
        self.index = {w: i for i, w in enumerate(self.words)}
        self.size = len(self.words)
        self.lengths = np.array([len(w) for w in self.words])
        self.splits = []
        for cut in range(max_len + 1):
            ok = self.lengths >= cut
            pre = np.array([self.index[w[:cut]] if len(w) >= cut else 0 for w in self.words])
            suf = np.array([self.index[w[cut:]] if len(w) >= cut else 0 for w in self.words])
            self.splits.append((ok, pre, suf))
        self.eps = self.lengths == 0

    def lit(self, l, sigma):
        out = np.zeros(self.size, dtype=bool)
        for a, g in enumerate(self.alpha):
            if ev.match_ground(l, g, sigma):
                out[self.index[(a,)]] = True
        return out

    def cat(self, x, y):
        out = np.zeros(self.size, dtype=bool)
        for ok, pre, suf in self.splits:
            out |= ok & x[pre] & y[suf]
        return out

    def star(self, x):
        x = x & ~self.eps
        acc = self.eps.copy()
        for _ in range(self.max_len):
            nxt = acc | self.cat(x, acc)
            if (nxt == acc).all():
                break
            acc = nxt
        return acc

    def language(self, raw, sigma=None):
        sigma = sigma or {}
        k = raw[0]
        if k == "eps":
            return self.eps.copy()
        if k == "empty":
            return np.zeros(self.size, dtype=bool)
        if k == "lit":
            return self.lit(raw[1], sigma)
        if k == "star":
            return self.star(self.language(raw[1], sigma))
        if k == "not":
            return ~self.language(raw[1], sigma)
        a, b = self.language(raw[1], sigma), self.language(raw[2], sigma)
        return {"cat": self.cat, "or": np.logical_or, "and": np.logical_and}[k](a, b)

    def derivative_language(self, r: S.SRE, sigma=None, matcher=None):
        """Membership of every word as nullable(∂_w r), walking the derivative automaton level by level."""
        m = matcher or S.GroundMatcher(sigma)
        k = len(self.alpha)
        ids = {r: 0}
        states = [r]
        rows: list = []

        def row(i):
            while len(rows) <= i:
                s = states[len(rows)]
                out = []
                for a in self.alpha:
                    d = m.deriv(s, a)
                    j = ids.get(d)
                    if j is None:
                        j = ids[d] = len(states)
                        states.append(d)
                    out.append(j)
                rows.append(out)
            return rows[i]

        cur = np.zeros(1, dtype=np.int64)
        levels = [cur]
        for _ in range(self.max_len):
            for i in np.unique(cur):
                row(int(i))
            table = np.array(rows, dtype=np.int64)
            cur = table[cur].reshape(-1)
            levels.append(cur)
        nullable = np.array([S.nullable(s) for s in states])
        return nullable[np.concatenate(levels)]


def ltl_holds(f, word, i, sigma) -> bool:
    """Textbook finite-trace semantics; positions 0..len(word), the last being the end."""
    n = len(word)
    if isinstance(f, L.Lit):
        return i < n and ev.match_ground(f.lit, word[i], sigma)
    if isinstance(f, L.X):
        return i < n and ltl_holds(f.arg, word, i + 1, sigma)
    if isinstance(f, L.F):
        return any(ltl_holds(f.arg, word, j, sigma) for j in range(i, n + 1))
    if isinstance(f, L.G):
        return all(ltl_holds(f.arg, word, j, sigma) for j in range(i, n + 1))
    if isinstance(f, (L.U, L.W)):
        # W also holds when its right operand never does from i on
        if isinstance(f, L.W) and not any(ltl_holds(f.arg, word, j, sigma) for j in range(i, n + 1)):
            return True
        for j in range(i, n + 1):
            if ltl_holds(f.arg, word, j, sigma):
                return True
            if not (j < n and ev.match_ground(f.lit, word[j], sigma)):
                return False
        return False
    if isinstance(f, L.Not):
        return not ltl_holds(f.arg, word, i, sigma)
    if isinstance(f, L.And):
        return ltl_holds(f.left, word, i, sigma) and ltl_holds(f.right, word, i, sigma)
    return ltl_holds(f.left, word, i, sigma) or ltl_holds(f.right, word, i, sigma)


def ltl_language(space: WordSpace, f, sigma) -> np.ndarray:
    """Vectorised finite-trace semantics: truth at position 0 of every word in ``space``."""
    n_words, top = space.size, space.max_len
    lengths = space.lengths
    letters = np.full((n_words, top + 1), -1, dtype=np.int64)
    for w, word in enumerate(space.words):
        letters[w, :len(word)] = word
    pos = np.arange(top + 2)
    valid = pos[None, :] <= lengths[:, None]

    def lit(l):
        hit = np.array([ev.match_ground(l, a, sigma) for a in space.alpha] + [False])
        out = np.zeros((n_words, top + 2), dtype=bool)
        out[:, :top + 1] = hit[letters]
        return out

    def eventually(x):
        x = x & valid
        return np.flip(np.logical_or.accumulate(np.flip(x, 1), 1), 1)

    def until(l, x):
        lx = lit(l)
        out = np.zeros((n_words, top + 2), dtype=bool)
        for i in range(top, -1, -1):
            out[:, i] = valid[:, i] & (x[:, i] | (lx[:, i] & out[:, i + 1]))
        return out

    def go(g):
        if isinstance(g, L.Lit):
            return lit(g.lit)
        if isinstance(g, L.X):
            a = go(g.arg)
            out = np.zeros_like(a)
            out[:, :-1] = (pos[None, :-1] < lengths[:, None]) & a[:, 1:]
            return out
        if isinstance(g, L.F):
            return eventually(go(g.arg))
        if isinstance(g, L.G):
            return ~eventually(~go(g.arg))
        if isinstance(g, L.U):
            return until(g.lit, go(g.arg))
        if isinstance(g, L.W):
            a = go(g.arg)
            return until(g.lit, a) | ~eventually(a)
        if isinstance(g, L.Not):
            return ~go(g.arg)
        a, b = go(g.left), go(g.right)
        return a & b if isinstance(g, L.And) else a | b

    return go(f)[:, 0]


def bounded_equal(r1: S.SRE, r2: S.SRE, alpha, depth, sigma=None, matcher=None) -> bool:
    """Language equality on words of length ≤ depth via a product exploration."""
    m = matcher or S.GroundMatcher(sigma)
    level = {(r1, r2)}
    seen = set(level)
    for d in range(depth + 1):
        for a, b in level:
            if S.nullable(a) != S.nullable(b):
                return False
        if d == depth:
            break
        nxt = set()
        for a, b in level:
            for g in alpha:
                p = (m.deriv(a, g), m.deriv(b, g))
                if p not in seen:
                    seen.add(p)
                    nxt.add(p)
        level = nxt
    return True


def bounded_subset(r1: S.SRE, r2: S.SRE, alpha, depth, sigma=None, matcher=None) -> bool:
    """Every word of r1 with length ≤ depth is in r2."""
    m = matcher or S.GroundMatcher(sigma)
    level = {(r1, r2)}
    seen = set(level)
    for d in range(depth + 1):
        for a, b in level:
            if S.nullable(a) and not S.nullable(b):
                return False
        if d == depth:
            break
        nxt = set()
        for a, b in level:
            for g in alpha:
                da = m.deriv(a, g)
                if da is S.EMPTY:
                    continue
                p = (da, m.deriv(b, g))
                if p not in seen:
                    seen.add(p)
                    nxt.add(p)
        level = nxt
    return True


def states_after(r: S.SRE, trace, alpha, sigma, matcher=None) -> set:
    """{∂_τ r : τ a ground instance of the symbolic trace under σ}."""
    m = matcher or S.GroundMatcher(sigma)
    cur = {r}
    for l in trace:
        letters = [g for g in alpha if ev.match_ground(l, g, sigma)]
        cur = {m.deriv(s, g) for s in cur for g in letters}
        if not cur:
            break
    return cur


def instances(trace, alpha, sigma):
    """Number of ground instances of a symbolic trace under σ."""
    n = 1
    for l in trace:
        n *= sum(1 for g in alpha if ev.match_ground(l, g, sigma))
    return n
