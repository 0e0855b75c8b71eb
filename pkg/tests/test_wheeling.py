import itertools
import math
import random

import pytest

from jdiag.diagrams import (
    BPRIME,
    Diagram,
    T_VERT,
    U_VERT,
    canonical_form,
    canonical_to_diagram,
    degree_of,
    disjoint_union,
    empty_diagram,
    enumerate_diagrams,
    strut_diagram,
    theta_diagram,
)
from jdiag.errors import (
    MalformedDiagramError,
    ResourceLimitError,
    TruncationError,
)
from jdiag.rationals import QQ
from jdiag.spaces import Combo
from jdiag.wheeling import (
    OmegaElement,
    glue_all_legs,
    hat_apply,
    modified_bernoulli,
    omega_series,
    verify_wheeling,
    wheel_diagram,
)


def classical_bernoulli(m):
    """B_m by the defining recurrence; an independent oracle."""
    table = [QQ(1)]
    for n in range(1, m + 1):
        acc = QQ(0)
        for k in range(n):
            acc += QQ(math.comb(n + 1, k)) * table[k]
        table.append(-acc / (n + 1))
    return table[m]


def test_modified_bernoulli_paper_values():
    assert modified_bernoulli(2) == QQ(1, 48)
    assert modified_bernoulli(4) == QQ(-1, 5760)
    assert modified_bernoulli(6) == QQ(1, 362880)


def test_modified_bernoulli_matches_recurrence_oracle():
    for n in range(1, 9):
        expect = classical_bernoulli(2 * n) / (4 * n * math.factorial(2 * n))
        assert modified_bernoulli(2 * n) == expect


def test_modified_bernoulli_rejects_bad_index():
    with pytest.raises(MalformedDiagramError):
        modified_bernoulli(3)
    with pytest.raises(MalformedDiagramError):
        modified_bernoulli(0)


def test_wheel_shapes():
    for n in (2, 4, 6):
        w = wheel_diagram(n)
        assert degree_of(w) == n
        assert len(w.legs()) == n
        res = canonical_form(w)
        assert res is not None


def test_odd_wheel_flagged_and_zero():
    with pytest.warns(UserWarning):
        w3 = wheel_diagram(3)
    assert canonical_form(w3) is None


def test_wheel_matches_independent_construction():
    # rotations (leg, next, prev) instead of (prev, next, leg)
    n = 4
    kinds = [T_VERT] * n + [U_VERT] * n
    slots = [(3 * i, 3 * i + 1, 3 * i + 2) for i in range(n)]
    slots += [(3 * n + i,) for i in range(n)]
    pairs = [(3 * i + 1, 3 * ((i + 1) % n) + 2) for i in range(n)]
    pairs += [(3 * i, 3 * n + i) for i in range(n)]
    other = Diagram(kinds, slots, pairs)
    assert canonical_form(other) == canonical_form(wheel_diagram(n))


def test_omega_low_truncations():
    om0 = omega_series(0)
    assert len(om0.value.terms) == 1
    om2 = omega_series(2)
    assert dict(om2.presentation) == {(): QQ(1), (2,): QQ(1, 48)}
    om4 = omega_series(4)
    assert dict(om4.presentation) == {
        (): QQ(1),
        (2,): QQ(1, 48),
        (4,): QQ(-1, 5760),
        (2, 2): QQ(1, 2) * QQ(1, 48) ** 2,
    }


def test_omega_structural_invariants():
    om = omega_series(6)
    empty = canonical_form(empty_diagram())[1]
    assert om.value.terms[empty] == 1
    for cd in om.value.terms:
        assert cd.degree % 2 == 0
        assert cd.legs == cd.degree  # unions of wheels carry all their legs
    with pytest.raises(ResourceLimitError):
        omega_series(99)


def test_glue_wheel_examples():
    w2, w4 = wheel_diagram(2), wheel_diagram(4)
    assert glue_all_legs(w4, w2).is_zero()
    out = glue_all_legs(w2, w4)
    assert sorted(out.terms.values()) == [4, 8]
    theta = Combo.from_diagram(BPRIME, theta_diagram(), 2)
    assert glue_all_legs(w2, strut_diagram()) == theta


def test_glue_injection_count_is_falling_factorial():
    rng = random.Random(12)
    pool = [canonical_to_diagram(cd)
            for m in (1, 2) for cd in enumerate_diagrams(m, BPRIME)]
    for c, t in itertools.product(pool, pool):
        kc, kt = len(c.legs()), len(t.legs())
        count = sum(1 for _ in itertools.permutations(t.legs(), kc))
        expect = math.perm(kt, kc) if kc <= kt else 0
        assert count == expect


def test_glue_degree_bookkeeping():
    pool = [canonical_to_diagram(cd)
            for m in (1, 2) for cd in enumerate_diagrams(m, BPRIME)]
    for c, t in itertools.product(pool, pool):
        if len(c.legs()) > len(t.legs()):
            continue
        out = glue_all_legs(c, t)
        want = degree_of(t) + degree_of(c) - len(c.legs())
        for cd in out.terms:
            assert cd.degree == want


def test_glue_strut_into_strut_makes_circles():
    out = glue_all_legs(strut_diagram(), strut_diagram())
    assert len(out.terms) == 1
    cd, coeff = next(iter(out.terms.items()))
    assert coeff == 2
    assert cd.degree == 0
    assert b"c:1" in cd.bytes


def test_hat_of_empty_is_identity():
    rng = random.Random(13)
    one = Combo.from_diagram(BPRIME, empty_diagram())
    for m in (1, 2):
        combo = Combo(BPRIME)
        for cd in enumerate_diagrams(m, BPRIME):
            combo.add_term(cd, QQ(rng.randint(-3, 3), rng.randint(1, 3)))
        assert hat_apply(one, combo, m) == combo


def test_hat_omega_fixture():
    om = omega_series(2)
    s = Combo.from_diagram(BPRIME, strut_diagram())
    expected = s + Combo.from_diagram(BPRIME, theta_diagram(), QQ(1, 24))
    assert hat_apply(om, s, 2) == expected
    assert hat_apply(om, Combo.from_diagram(BPRIME, empty_diagram()), 0) \
        == Combo.from_diagram(BPRIME, empty_diagram())


def test_hat_omega_exponential_equals_bilinear():
    om = omega_series(6)
    t = Combo.from_diagram(
        BPRIME, disjoint_union(strut_diagram(),
                               disjoint_union(strut_diagram(),
                                              strut_diagram())))
    assert hat_apply(om, t, 3) == hat_apply(om.value, t, 3)


def test_hat_truncation_errors():
    om = omega_series(2)
    four_struts = empty_diagram()
    for _ in range(4):
        four_struts = disjoint_union(four_struts, strut_diagram())
    target = Combo.from_diagram(BPRIME, four_struts)
    with pytest.raises(TruncationError):
        hat_apply(om, target, 4)
    with pytest.raises(TruncationError):
        hat_apply(om.value, target, 4, c_truncation=2)


def test_verify_wheeling_degree2():
    report = verify_wheeling(2)
    assert report.ok
    assert report.summary["pass"] == len(report.checks)


def test_verify_wheeling_cap():
    with pytest.raises(ResourceLimitError):
        verify_wheeling(99)
