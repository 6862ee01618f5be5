import random

import pytest
from hypothesis import given

import criteria as K
import oracles as O
from sre_falsify import events as ev
from sre_falsify import ltlf as L
from sre_falsify import sre as S
from sre_falsify.events import GroundEvent
from sre_falsify.logic import INT, Var, fresh_sym, sym
from sre_falsify.syntax import ParseError, parse_literal, parse_sre

A, B = fresh_sym(INT, "a"), fresh_sym(INT, "b")
BINDING = {Var("a"): sym(A), Var("b"): sym(B)}
PA = GroundEvent("put", (0, 0), 0)
PB = GroundEvent("put", (1, 1), 0)
IS_A = parse_literal("<put 0 0>", sig=O.SIG)
IS_B = parse_literal("<put 1 1>", sig=O.SIG)


def test_translation_shapes():
    r = L.to_sre(L.Lit(IS_A))
    assert L.to_sre(L.F(L.Lit(IS_A))) is S.concat(S.ALL, r)
    assert L.to_sre(L.X(L.Lit(IS_A))) is S.concat(S.DOT, r)
    assert L.to_sre(L.U(IS_A, L.Lit(IS_B))) is S.concat(S.star(S.lit(IS_A)), L.to_sre(L.Lit(IS_B)))


def test_evaluation_examples():
    assert not L.eval_ltlf(L.F(L.Lit(IS_B)), [PA])
    assert not L.eval_ltlf(L.X(L.Lit(IS_A)), [])
    assert L.eval_ltlf(L.X(L.Lit(IS_A)), [PB, PA])
    # G quantifies over the end position too, where no literal holds
    g = L.G(L.Lit(IS_A))
    assert not L.eval_ltlf(g, [PA, PA])
    assert not S.ground_match(L.to_sre(g), [PA, PA])
    never_b = L.G(L.Not(L.Lit(IS_B)))
    assert L.eval_ltlf(never_b, [PA, PA]) and L.eval_ltlf(never_b, [])
    assert not L.eval_ltlf(never_b, [PA, PB])


def test_parse_examples():
    f = L.parse_ltlf("F (<put a b> /\\ X G ~<put a _>)")
    assert isinstance(f, L.F) and isinstance(f.arg, L.And)
    w = L.parse_ltlf("<put 0 0> W <put 1 1>")
    assert isinstance(w, L.W) and w.lit is IS_A
    with pytest.raises(ParseError):
        L.parse_ltlf("G")
    with pytest.raises(ParseError):
        L.parse_ltlf("(F <put 0 0>) U <put 1 1>")


def test_stored_pattern_matches_the_regular_form():
    stored = S.subst(L.to_sre(L.parse_ltlf("F (<put a b> /\\ X G ~<put a _>)")), BINDING)
    regular = S.subst(parse_sre(".* ; <put a b> ; (~<put a _>)*"), BINDING)
    alpha = O.alphabet()
    for sigma in O.sigmas(syms=(A, B)):
        m = S.GroundMatcher({})
        assert O.bounded_equal(S.apply_interp(stored, sigma), S.apply_interp(regular, sigma),
                               alpha, 4, matcher=m)


@given(O.seeds())
def test_weak_until_decomposition(seed):
    rng = random.Random(seed)
    lits = [O.rand_literal(rng, syms=K.SMALL_SYMS, qdepth=1) for _ in range(3)]
    l, body = rng.choice(lits), O.rand_ltl(rng, 2, lits)
    r = L.to_sre(body)
    lhs = L.to_sre(L.W(l, body))
    rhs = S.or_(S.neg(S.concat(S.ALL, r)), S.concat(S.star(S.lit(l)), r))
    for sigma in O.sigmas(domain=(0, 1), syms=K.SMALL_SYMS):
        assert O.bounded_equal(S.apply_interp(lhs, sigma), S.apply_interp(rhs, sigma), K.LTL_ALPHA, 4)


@given(O.seeds())
def test_translation_adequacy(seed):
    t = K.ltl_adequacy(3, seed)
    assert t.violations == 0, t.examples


def test_format_round_trip():
    rng = random.Random(4)
    for _ in range(50):
        lits = [O.rand_literal(rng, syms=(), qdepth=1) for _ in range(3)]
        f = O.rand_ltl(rng, 3, lits)
        again = L.parse_ltlf(L.format_ltlf(f))
        assert O.bounded_equal(L.to_sre(f), L.to_sre(again), K.LTL_ALPHA, 4)
