"""Exact rational arithmetic helpers.

gmpy2.mpq is used when available (it is much faster for the elimination
and series workloads); fractions.Fraction is the fallback.  No floating
point is used anywhere in core computation.
"""

from __future__ import annotations

from fractions import Fraction

try:
    from gmpy2 import mpq as QQ
except ImportError:  # pragma: no cover
    QQ = Fraction

ZERO = QQ(0)
ONE = QQ(1)


def rat(num, den=1):
    """Exact rational from integers (or an existing rational)."""
    return QQ(num, den) if den != 1 else QQ(num)


def rat_from_str(s: str):
    """Parse 'p' or 'p/q' with decimal integers."""
    s = s.strip()
    if "/" in s:
        p, q = s.split("/", 1)
        return QQ(int(p), int(q))
    return QQ(int(s))


def rat_to_str(x) -> str:
    """Serialize as 'p/q' (or 'p' when the denominator is 1)."""
    q = x.denominator
    if q == 1:
        return str(x.numerator)
    return "%d/%d" % (x.numerator, q)
