import random

import pytest

from jdiag.algebra_maps import (
    b_times_product,
    chi_map,
    sigma_map,
    times_product,
    union_product,
)
from jdiag.diagrams import (
    APRIME,
    BPRIME,
    canonical_form,
    canonical_to_diagram,
    disjoint_union,
    empty_diagram,
    enumerate_diagrams,
    strut_diagram,
)
from jdiag.errors import KindMismatchError, ResourceLimitError
from jdiag.rationals import QQ
from jdiag.spaces import Combo, build_quotient, reduce_combo
from jdiag.wheeling import wheel_diagram

MAXDEG = 3


def random_combo(rng, degree, kind, density=0.5):
    c = Combo(kind)
    for cd in enumerate_diagrams(degree, kind):
        if rng.random() < density:
            c.add_term(cd, QQ(rng.randint(-3, 3), rng.randint(1, 4)))
    return c


def one(kind):
    return Combo.from_diagram(kind, empty_diagram(kind.skeleton))


def test_union_unit_and_commutativity():
    rng = random.Random(2)
    for _ in range(6):
        a = random_combo(rng, 2, BPRIME)
        b = random_combo(rng, 1, BPRIME)
        assert union_product(a, one(BPRIME)) == a
        assert union_product(a, b) == union_product(b, a)


def test_union_two_wheels():
    w = Combo.from_diagram(BPRIME, wheel_diagram(2))
    u = union_product(w, w)
    assert len(u.terms) == 1
    assert list(u.terms.values())[0] == 1
    assert list(u.terms)[0].degree == 4


def test_union_kind_mismatch():
    chord = chi_map(Combo.from_diagram(BPRIME, strut_diagram()))
    with pytest.raises(KindMismatchError):
        union_product(chord, chord)


def test_times_unit_and_associativity():
    rng = random.Random(3)
    for _ in range(6):
        a = random_combo(rng, 1, APRIME)
        b = random_combo(rng, 1, APRIME)
        c = random_combo(rng, 0, APRIME)
        assert times_product(one(APRIME), a) == a
        assert times_product(a, one(APRIME)) == a
        assert (times_product(times_product(a, b), c)
                == times_product(a, times_product(b, c)))


def test_times_chord_chord():
    chord = chi_map(Combo.from_diagram(BPRIME, strut_diagram()))
    prod = times_product(chord, chord)
    assert len(prod.terms) == 1
    cd = list(prod.terms)[0]
    assert cd.degree == 2
    # two consecutive disjoint chords on four skeleton vertices
    assert b"S:4" in cd.bytes


def test_chi_basics():
    assert chi_map(one(BPRIME)) == one(APRIME)
    chord = chi_map(Combo.from_diagram(BPRIME, strut_diagram()))
    assert len(chord.terms) == 1
    assert list(chord.terms.values())[0] == 1
    w2 = chi_map(Combo.from_diagram(BPRIME, wheel_diagram(2)))
    assert len(w2.terms) == 1
    assert abs(list(w2.terms.values())[0]) == 1


def test_chi_degree_and_legs():
    for m in range(MAXDEG + 1):
        for cd in enumerate_diagrams(m, BPRIME):
            img = chi_map(Combo(BPRIME, {cd: QQ(1)}))
            for cd2 in img.terms:
                assert cd2.degree == cd.degree
                d2 = canonical_to_diagram(cd2)
                assert len(d2.skeleton) == cd.legs


def test_chi_is_isomorphism_per_degree():
    # injective (the solver would fail otherwise) and squares match
    for m in range(MAXDEG + 1):
        assert (build_quotient(m, BPRIME).dimension
                == build_quotient(m, APRIME).dimension)
        for cd in build_quotient(m, BPRIME).basis_diagrams():
            x = Combo(BPRIME, {cd: QQ(1)})
            assert sigma_map(chi_map(x), m) == x


def test_chi_of_relations_reduce_to_zero():
    from jdiag.spaces import relation_generators

    for m in range(1, MAXDEG + 1):
        space_a = build_quotient(m, APRIME)
        for gen in relation_generators(m, BPRIME):
            assert reduce_combo(chi_map(gen), space_a) == {}


def test_sigma_of_chord_is_strut():
    chord = chi_map(Combo.from_diagram(BPRIME, strut_diagram()))
    assert sigma_map(chord, 1) == Combo.from_diagram(BPRIME, strut_diagram())


def test_chi_sigma_roundtrip_on_random_interval_combos():
    rng = random.Random(4)
    for m in range(MAXDEG + 1):
        space = build_quotient(m, APRIME)
        for _ in range(4):
            a = random_combo(rng, m, APRIME)
            back = chi_map(sigma_map(a, m))
            assert reduce_combo(back, space) == reduce_combo(a, space)


def test_sigma_respects_cap():
    chord2 = times_product(
        chi_map(Combo.from_diagram(BPRIME, strut_diagram())),
        chi_map(Combo.from_diagram(BPRIME, strut_diagram())))
    with pytest.raises(ResourceLimitError):
        sigma_map(chord2, 1)


def test_b_times_unit_and_example():
    s = Combo.from_diagram(BPRIME, strut_diagram())
    assert b_times_product(one(BPRIME), s, 2) == s
    prod = b_times_product(s, s, 2)
    # the strut square plus a rational multiple of the 2-wheel
    degrees = sorted(cd.degree for cd in prod.terms)
    assert degrees == [2, 2]
    legs = sorted(cd.legs for cd in prod.terms)
    assert legs == [2, 4]


def test_b_times_associativity_low_degree():
    rng = random.Random(9)
    xs = [random_combo(rng, 1, BPRIME, density=0.8) for _ in range(3)]
    a, b, c = xs
    lhs = b_times_product(b_times_product(a, b, 2), c, 3)
    rhs = b_times_product(a, b_times_product(b, c, 2), 3)
    space = build_quotient(3, BPRIME)
    assert (reduce_combo(lhs.homogeneous_part(3), space)
            == reduce_combo(rhs.homogeneous_part(3), space))


def test_chi_legs_cap():
    d = empty_diagram()
    for _ in range(6):
        d = disjoint_union(d, strut_diagram())
    cd = canonical_form(d)[1]
    combo = Combo(BPRIME, {cd: QQ(1)})
    with pytest.raises(ResourceLimitError):
        chi_map(combo)
