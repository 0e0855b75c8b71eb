import random

import pytest

from jdiag.errors import InvariantViolationError, TruncationError
from jdiag.rationals import QQ
from jdiag.series import XSeries


def random_series(rng, nvars, trunc, unit=False, hmax=0):
    s = XSeries(nvars, trunc, htrunc=trunc if hmax else None)
    for _ in range(8):
        exps = tuple(rng.randint(0, 2) for _ in range(nvars))
        if sum(exps) > trunc:
            continue
        h = rng.randint(0, hmax) if hmax else 0
        s._add_term(exps, h, QQ(rng.randint(-5, 5), rng.randint(1, 4)))
    if unit:
        key = ((0,) * nvars, 0)
        s.terms[key] = QQ(1)
    return s


def test_add_mul_ring_axioms():
    rng = random.Random(5)
    for _ in range(10):
        a = random_series(rng, 2, 4)
        b = random_series(rng, 2, 4)
        c = random_series(rng, 2, 4)
        assert a + b == b + a
        assert (a + b) * c == a * c + b * c
        assert (a * b) * c == a * (b * c)


def test_truncation_drops_high_degree():
    x = XSeries.variable(1, 3, 0)
    p = x * x * x * x
    assert p.is_zero()


def test_inverse():
    rng = random.Random(6)
    one = XSeries.const(2, 4, 1)
    for _ in range(8):
        f = random_series(rng, 2, 4, unit=True)
        assert f * f.inverse() == one


def test_inverse_pure_h():
    f = XSeries.const(0, 0, 1, htrunc=6)
    f._add_term((), 2, QQ(1, 3))
    inv = f.inverse()
    assert (f * inv).coefficient((), 0) == 1
    assert all(c == 0 for (e, h), c in (f * inv).terms.items() if h > 0)


def test_sqrt_squares_back():
    rng = random.Random(7)
    for _ in range(8):
        f = random_series(rng, 2, 4, unit=True)
        s = f.sqrt()
        assert s * s == f


def test_sqrt_needs_unit():
    f = XSeries.const(1, 3, 2)
    with pytest.raises(InvariantViolationError):
        f.sqrt()


def test_inverse_needs_h_truncation():
    f = XSeries.const(1, 3, 1)
    f._add_term((0,), 1, QQ(1))  # free h power, no cap
    with pytest.raises(TruncationError):
        f.inverse()


def test_substitute_composes():
    # f(x0, x1) = x0^2 + x1 with x0 -> y0 + y1, x1 -> y0*y1
    f = XSeries(2, 4)
    f._add_term((2, 0), 0, QQ(1))
    f._add_term((0, 1), 0, QQ(1))
    y0 = XSeries.variable(2, 4, 0)
    y1 = XSeries.variable(2, 4, 1)
    g = f.substitute([y0 + y1, y0 * y1], 2)
    expect = (y0 + y1) * (y0 + y1) + y0 * y1
    assert g == expect


def test_with_hbar_arg():
    f = XSeries(1, 4, htrunc=6)
    f._add_term((2,), 1, QQ(3))
    g = f.with_hbar_arg()
    assert g.coefficient((2,), 3) == 3


def test_hbar_slices_partition():
    rng = random.Random(8)
    f = random_series(rng, 2, 3, hmax=2)
    back = XSeries(2, 3, htrunc=3)
    for h, part in f.hbar_slices().items():
        for (exps, _z), c in part.terms.items():
            back._add_term(exps, h, c)
    assert back == f


def test_mixed_nvars_rejected():
    with pytest.raises(InvariantViolationError):
        XSeries.const(1, 2, 1) * XSeries.const(2, 2, 1)
