import itertools
import random

import pytest
from hypothesis import given

import criteria as K
import oracles as O
from conftest import needs_z3
from sre_falsify import events as ev
from sre_falsify import sre as S
from sre_falsify.events import GroundEvent
from sre_falsify.logic import INT, Var, fresh_sym, sym
from sre_falsify.syntax import parse_literal, parse_sre

A, B = fresh_sym(INT, "a"), fresh_sym(INT, "b")
ALPHA = O.alphabet()


BINDING = {Var("a"): sym(A), Var("b"): sym(B)}


def closed(text):
    return S.subst(parse_sre(text), BINDING)


def closed_lit(text):
    return S.subst_event(parse_literal(text), BINDING)


STORED = ".* ; <put a b> ; (~<put a _>)*"
UNLINKED = "(~<put !a b>)* ; <put a !b> ; .* \\/ (~<put !a b>)*"


def put(k, v):
    return GroundEvent("put", (k, v), 0)


def test_smart_constructors():
    l = S.lit(closed_lit("<put a b>"))
    assert S.or_(S.EMPTY, l) is l
    assert S.and_(S.EMPTY, l) is S.EMPTY
    assert S.concat(S.EPS, l) is l and S.concat(l, S.EPS) is l
    assert S.concat(S.EMPTY, l) is S.EMPTY and S.concat(l, S.EMPTY) is S.EMPTY
    assert S.neg(S.neg(l)) is l
    assert S.or_(l, l) is l
    assert S.star(S.EMPTY) is S.EPS and S.star(S.EPS) is S.EPS
    assert S.lit(ev.BOTTOM) is S.EMPTY
    assert S.or_(l, S.or_(l, S.DOT)) is S.or_(S.DOT, l)


def test_nullable_examples():
    l = S.lit(closed_lit("<put a b>"))
    assert S.nullable(S.EPS) and not S.nullable(l)
    assert S.nullable(S.neg(l)) and S.nullable(S.star(l))
    assert not S.nullable(closed(".* ; <put a b> ; .*"))
    assert not S.nullable(S.EMPTY)


def test_next_literal_examples():
    assert S.next_literals(S.EMPTY) == (ev.BOTTOM,)
    assert S.next_literals(S.EPS) == (ev.BOTTOM,)
    l = closed_lit("<put a b>")
    assert S.next_literals(S.concat(S.lit(l), S.ALL)) == (l,)
    assert S.literal_set_complement([ev.TOP]) is ev.BOTTOM
    assert S.literal_set_complement([ev.BOTTOM]) is ev.TOP
    k_is_a = closed_lit("<put a _>")
    assert S.literal_set_complement([k_is_a]) is ev.complement(k_is_a)


@needs_z3
def test_derivatives_of_the_unlinked_pattern():
    r = closed(UNLINKED)
    assert S.deriv_literal(r, closed_lit("<put a !b>")) is S.ALL
    assert S.deriv_literal(r, closed_lit("<put !a b>")) is S.EMPTY
    rest = ev.join_all([closed_lit("<put a b>"), closed_lit("<put !a !b>"),
                        ev.complement(ev.atom_event("put"))])
    assert S.deriv_literal(r, rest) is r
    assert S.dist_to_dead(r) == 1
    assert S.dist_to_dead(S.ALL, cutoff=4) == 5
    assert S.dist_to_dead(S.EMPTY) == 0


@needs_z3
def test_next_literals_are_prefixes_of_the_unlinked_pattern():
    """Every admissible literal lies inside one of the three classes of events."""
    r = closed(UNLINKED)
    classes = [closed_lit("<put a !b>"), closed_lit("<put !a b>"),
               ev.join_all([closed_lit("<put a b>"), closed_lit("<put !a !b>"),
                            ev.complement(ev.atom_event("put"))])]
    for l in S.next_literals(r):
        assert any(ev.includes(l, c) is True for c in classes), l


@needs_z3
def test_deriv_trace_and_prefix_enumeration():
    r = closed(STORED)
    assert S.deriv_trace(r, ()) is r
    assert S.deriv_trace(S.EMPTY, [closed_lit("<put a b>")]) is S.EMPTY
    first = next(S.enumerate_prefixes(r, 2))
    assert first == ((), r)
    lengths = [len(t) for t, _ in S.enumerate_prefixes(r, 3)]
    assert lengths == sorted(lengths)


@needs_z3
def test_stored_traces_with_repeated_unrelated_events():
    """<put a b> followed by three events other than <put a !b> is covered by the sampled traces."""
    r = closed(STORED)
    target = [closed_lit("<put a b>")] + [ev.complement(closed_lit("<put a !b>"))] * 3
    sampled = [t for t in S.sample_traces(r, 4) if len(t) == 4]
    alpha = O.alphabet(domain=(0, 1))
    for sigma in O.sigmas(domain=(0, 1), syms=(A, B)):
        want = set(itertools.product(*[[a for a in alpha if ev.match_ground(l, a, sigma)]
                                        for l in target]))
        got = set()
        for t in sampled:
            got.update(itertools.product(*[[a for a in alpha if ev.match_ground(l, a, sigma)]
                                           for l in t]))
        assert want <= got


def test_sample_traces_small():
    assert list(S.sample_traces(S.EPS, 3)) == [()]
    l = closed_lit("<put a b>")
    assert list(S.sample_traces(S.lit(l), 3)) == [(l,)]


def test_trace_conj():
    l = closed_lit("<put a b>")
    m = closed_lit("<put a _>")
    assert S.trace_conj((), ()) == ()
    assert S.trace_conj((l,), (m,)) == (ev.meet(l, m),)
    assert S.trace_conj((l,), (ev.atom_event("get"),)) is None
    assert S.trace_conj((l,), ()) is None


def test_ground_matching_examples():
    sigma = {A: 1, B: 2}
    assert S.ground_match(S.ALL, [put(0, 0), put(1, 1)])
    assert not S.ground_match(S.lit(closed_lit("<put a b>")), [], sigma)
    # the context stores a -> b, then the method links 2 -> b as well
    assert S.ground_match(closed(STORED), [put(1, 2)], sigma)
    assert not S.ground_match(closed(UNLINKED), [put(2, 2)], sigma)
    assert S.ground_match(closed(UNLINKED), [put(1, 0), put(2, 2)], sigma)
    assert S.ground_words(S.EPS, ALPHA, 2) == {()}
    assert S.ground_words(S.neg(S.EMPTY), ALPHA, 1) == {()} | {(a,) for a in ALPHA}


def test_nullable_agrees_with_every_interpretation():
    t = K.nullable_agreement(150, seed=5)
    assert t.violations == 0, t.examples


@given(O.seeds())
def test_ground_derivatives_match_set_semantics(seed):
    t = K.ground_oracle(4, seed, max_len=5)
    assert t.violations == 0, t.examples


@needs_z3
@given(O.seeds())
def test_symbolic_derivative_law(seed):
    t = K.symbolic_law(2, seed)
    assert t.violations == 0, t.examples


@needs_z3
@given(O.seeds())
def test_residuality_recognition_and_cover(seed):
    tallies = K.prefix_properties(1, seed)
    for name, t in tallies.items():
        assert t.violations == 0, (name, t.examples)


@given(O.seeds())
def test_printing_round_trips(seed):
    rng = random.Random(seed)
    r = O.raw_to_sre(O.rand_raw(rng, 4, lambda g: O.rand_literal(g, syms=(), qdepth=1)))
    again = parse_sre(S.format_sre(r))
    assert K.O.bounded_equal(r, again, O.alphabet(domain=(0, 1)), 3)


def test_literal_cap_fails_loudly(monkeypatch):
    monkeypatch.setattr(S, "MAX_LITERALS", 2)
    lits = [S.lit(closed_lit(f"<put {i} _>")) for i in range(3)]
    with pytest.raises(S.LiteralExplosion):
        S.next_literals(S.or_(*lits))
