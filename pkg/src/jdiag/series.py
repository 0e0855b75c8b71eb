"""Truncated multivariate power series with exact rational coefficients.

Every term carries a monomial in the formal coordinates x_0..x_{n-1} and an
integer power of the deformation parameter h (which may be negative).
Truncation is by total x-degree, with an optional independent cap on the
h-power.  All arithmetic is exact; there is no floating point.
"""

from __future__ import annotations

from .errors import InvariantViolationError, TruncationError
from .rationals import QQ, rat_to_str

ZEROEXP = ()


def _mono_mul(e1, e2):
    return tuple(a + b for a, b in zip(e1, e2))


def _mono_deg(e):
    return sum(e)


class XSeries:
    """A truncated polynomial/series in n variables over exact rationals.

    terms maps (exponent tuple, h power) -> nonzero rational coefficient.
    """

    __slots__ = ("nvars", "trunc", "htrunc", "terms")

    def __init__(self, nvars, trunc, terms=None, htrunc=None):
        self.nvars = nvars
        self.trunc = trunc
        self.htrunc = htrunc
        self.terms = {}
        if terms:
            for (exps, h), c in terms.items():
                self._add_term(exps, h, c)

    # -- construction helpers ------------------------------------------------

    @classmethod
    def zero(cls, nvars, trunc, htrunc=None):
        return cls(nvars, trunc, None, htrunc)

    @classmethod
    def const(cls, nvars, trunc, value, htrunc=None, hpow=0):
        s = cls(nvars, trunc, None, htrunc)
        s._add_term((0,) * nvars, hpow, QQ(value))
        return s

    @classmethod
    def variable(cls, nvars, trunc, i, htrunc=None):
        s = cls(nvars, trunc, None, htrunc)
        exps = [0] * nvars
        exps[i] = 1
        s._add_term(tuple(exps), 0, QQ(1))
        return s

    def copy(self):
        s = XSeries(self.nvars, self.trunc, None, self.htrunc)
        s.terms = dict(self.terms)
        return s

    def _add_term(self, exps, h, c):
        if c == 0:
            return
        if _mono_deg(exps) > self.trunc:
            return
        if self.htrunc is not None and h > self.htrunc:
            return
        key = (exps, h)
        cur = self.terms.get(key)
        if cur is None:
            self.terms[key] = c
        else:
            cur = cur + c
            if cur == 0:
                del self.terms[key]
            else:
                self.terms[key] = cur

    # -- queries -------------------------------------------------------------

    def coefficient(self, exps, h=0):
        return self.terms.get((tuple(exps), h), QQ(0))

    def is_zero(self):
        return not self.terms

    def constant_term(self):
        return self.terms.get(((0,) * self.nvars, 0), QQ(0))

    def x_degree(self):
        return max((_mono_deg(e) for (e, _h) in self.terms), default=0)

    def hbar_slices(self):
        """Split into h-homogeneous parts: map h -> XSeries with h=0 terms."""
        out = {}
        for (exps, h), c in self.terms.items():
            s = out.get(h)
            if s is None:
                s = out[h] = XSeries(self.nvars, self.trunc)
            s._add_term(exps, 0, c)
        return out

    def __eq__(self, other):
        return (
            isinstance(other, XSeries)
            and self.nvars == other.nvars
            and self.terms == other.terms
        )

    def __hash__(self):
        raise TypeError("XSeries is mutable during construction; not hashable")

    # -- arithmetic ----------------------------------------------------------

    def _check_compat(self, other):
        if self.nvars != other.nvars:
            raise InvariantViolationError(
                "series mix %d and %d variables" % (self.nvars, other.nvars)
            )

    def __add__(self, other):
        self._check_compat(other)
        out = XSeries(self.nvars, min(self.trunc, other.trunc), None,
                      _min_opt(self.htrunc, other.htrunc))
        for key, c in self.terms.items():
            out._add_term(key[0], key[1], c)
        for key, c in other.terms.items():
            out._add_term(key[0], key[1], c)
        return out

    def __sub__(self, other):
        return self + other.scale(QQ(-1))

    def scale(self, c):
        c = QQ(c)
        out = XSeries(self.nvars, self.trunc, None, self.htrunc)
        if c != 0:
            out.terms = {k: v * c for k, v in self.terms.items()}
        return out

    def shift_h(self, dh):
        """Multiply by h**dh."""
        out = XSeries(self.nvars, self.trunc, None, self.htrunc)
        for (exps, h), c in self.terms.items():
            out._add_term(exps, h + dh, c)
        return out

    def __mul__(self, other):
        if not isinstance(other, XSeries):
            return self.scale(other)
        self._check_compat(other)
        trunc = min(self.trunc, other.trunc)
        htrunc = _min_opt(self.htrunc, other.htrunc)
        out = XSeries(self.nvars, trunc, None, htrunc)
        # group by degree so most over-truncation products are skipped early
        by_deg = {}
        for (exps, h), c in other.terms.items():
            by_deg.setdefault(_mono_deg(exps), []).append((exps, h, c))
        for (e1, h1), c1 in self.terms.items():
            d1 = _mono_deg(e1)
            for d2, lst in by_deg.items():
                if d1 + d2 > trunc:
                    continue
                for e2, h2, c2 in lst:
                    out._add_term(_mono_mul(e1, e2), h1 + h2, c1 * c2)
        return out

    __rmul__ = __mul__

    def power(self, k):
        if k < 0:
            raise InvariantViolationError("negative series power")
        out = XSeries.const(self.nvars, self.trunc, 1, self.htrunc)
        base = self
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return out

    def _weight_cap(self):
        if self.htrunc is not None:
            return self.trunc + max(self.htrunc, 0)
        if any(h != 0 for (_e, h) in self.terms):
            raise TruncationError(
                "series with free h powers needs an explicit h truncation"
            )
        return self.trunc

    def _split_unit(self):
        c0 = self.constant_term()
        if c0 == 0:
            raise InvariantViolationError("series has no invertible constant term")
        if any(h < 0 for (_e, h) in self.terms):
            raise InvariantViolationError("cannot invert a series with h poles")
        rest = self.copy()
        key = ((0,) * self.nvars, 0)
        del rest.terms[key]
        return c0, rest

    def inverse(self):
        """Multiplicative inverse; needs a nonzero constant term."""
        c0, rest = self._split_unit()
        cap = self._weight_cap()
        u = rest.scale(QQ(-1, 1) / c0)  # series = c0 * (1 - u)
        out = XSeries.const(self.nvars, self.trunc, 1, self.htrunc)
        p = XSeries.const(self.nvars, self.trunc, 1, self.htrunc)
        for _ in range(cap):
            p = p * u
            if p.is_zero():
                break
            out = out + p
        return out.scale(QQ(1) / c0)

    def sqrt(self):
        """Series square root; the constant term must be exactly 1."""
        c0, rest = self._split_unit()
        if c0 != 1:
            raise InvariantViolationError("series sqrt needs constant term 1")
        cap = self._weight_cap()
        out = XSeries.const(self.nvars, self.trunc, 1, self.htrunc)
        p = XSeries.const(self.nvars, self.trunc, 1, self.htrunc)
        binom = QQ(1)
        for k in range(1, cap + 1):
            binom = binom * (QQ(1, 2) - (k - 1)) / k  # C(1/2, k), exactly
            p = p * rest
            if p.is_zero():
                break
            out = out + p.scale(binom)
        return out

    # -- substitution --------------------------------------------------------

    def substitute(self, images, nvars_new, trunc_new=None, htrunc_new=None):
        """Compose: x_i -> images[i], an XSeries over the new variables."""
        if len(images) != self.nvars:
            raise InvariantViolationError("substitution needs one image per variable")
        trunc_new = self.trunc if trunc_new is None else trunc_new
        out = XSeries(nvars_new, trunc_new, None, htrunc_new)
        pow_cache = [dict() for _ in range(self.nvars)]

        def img_power(i, k):
            cache = pow_cache[i]
            if k not in cache:
                if k == 0:
                    cache[k] = XSeries.const(nvars_new, trunc_new, 1, htrunc_new)
                else:
                    cache[k] = img_power(i, k - 1) * images[i]
            return cache[k]

        for (exps, h), c in self.terms.items():
            term = XSeries.const(nvars_new, trunc_new, c, htrunc_new, hpow=h)
            for i, e in enumerate(exps):
                if e:
                    term = term * img_power(i, e)
            for (e2, h2), c2 in term.terms.items():
                out._add_term(e2, h2, c2)
        return out

    def with_hbar_arg(self):
        """Substitute x -> h*x: each term's h power grows by its x-degree."""
        out = XSeries(self.nvars, self.trunc, None, self.htrunc)
        for (exps, h), c in self.terms.items():
            out._add_term(exps, h + _mono_deg(exps), c)
        return out

    # -- output --------------------------------------------------------------

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: (_mono_deg(kv[0][0]), kv[0]))

    def __repr__(self):
        if not self.terms:
            return "XSeries(0)"
        bits = []
        for (exps, h), c in self.sorted_terms():
            mono = " ".join(
                "x%d" % i if e == 1 else "x%d^%d" % (i, e)
                for i, e in enumerate(exps)
                if e
            )
            part = rat_to_str(c)
            if mono:
                part += "*" + mono
            if h:
                part += "*h^%d" % h
            bits.append(part)
        return " + ".join(bits)


def _min_opt(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)
