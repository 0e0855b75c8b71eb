"""The two products (disjoint union and skeleton concatenation) and the
leg-averaging isomorphism between characters and interval diagrams."""

from __future__ import annotations

import itertools
import math

from .diagrams import (
    APRIME,
    BPRIME,
    Diagram,
    S_VERT,
    canonical_to_diagram,
    disjoint_union,
    legs_to_skeleton,
    relabel_shift,
)
from .errors import (
    InvariantViolationError,
    KindMismatchError,
    ResourceLimitError,
)
from .rationals import QQ
from .spaces import Combo, build_quotient, reduce_combo

CHI_LEGS_CAP = 10

_CHI_MEMO = {}


def union_product(a: Combo, b: Combo) -> Combo:
    """Bilinear extension of disjoint union on characters."""
    if a.kind.skeleton or b.kind.skeleton:
        raise KindMismatchError("the union product lives on characters")
    out = Combo(a.kind)
    for cd1, c1 in a.terms.items():
        d1 = canonical_to_diagram(cd1)
        for cd2, c2 in b.terms.items():
            out.insert_diagram(disjoint_union(d1, canonical_to_diagram(cd2)),
                               c1 * c2)
    return out


def _concatenate(d1: Diagram, d2: Diagram) -> Diagram:
    hmax = max((h for h in d1.pairing), default=-1) + 1
    k2, s2, p2, skel2 = relabel_shift(d2, d1.n_vertices, hmax)
    pairs = [(a, b) for a, b in d1.pairing.items() if a < b] + p2
    return Diagram(d1.kinds + k2, d1.slots + s2, pairs,
                   skeleton=tuple(d1.skeleton) + skel2,
                   circles=d1.circles + d2.circles)


def times_product(a: Combo, b: Combo) -> Combo:
    """Bilinear extension of interval concatenation (a's skeleton first)."""
    if not (a.kind.skeleton and b.kind.skeleton):
        raise KindMismatchError("the concatenation product needs skeletons")
    out = Combo(a.kind)
    for cd1, c1 in a.terms.items():
        d1 = canonical_to_diagram(cd1)
        for cd2, c2 in b.terms.items():
            out.insert_diagram(_concatenate(d1, canonical_to_diagram(cd2)),
                               c1 * c2)
    return out


def chi_diagram(cd) -> Combo:
    """Average of all arrangements of a character's legs on an interval."""
    hit = _CHI_MEMO.get(cd.bytes)
    if hit is not None:
        return hit
    if cd.legs > CHI_LEGS_CAP:
        raise ResourceLimitError(
            "%d legs exceed the %d! enumeration cap" % (cd.legs, CHI_LEGS_CAP))
    char = canonical_to_diagram(cd)
    legs = char.legs()
    out = Combo(APRIME)
    weight = QQ(1, math.factorial(len(legs)))
    for order in itertools.permutations(legs):
        out.insert_diagram(legs_to_skeleton(char, order), weight)
    _CHI_MEMO[cd.bytes] = out
    return out


def chi_map(c: Combo) -> Combo:
    """Characters to interval diagrams, averaging over leg orderings."""
    if c.kind.skeleton:
        raise KindMismatchError("chi_map expects characters")
    out = Combo(APRIME)
    for cd, coeff in c.terms.items():
        img = chi_diagram(cd)
        out = out + img.scale(coeff)
    return out


_SIGMA_MEMO = {}


def _sigma_system(degree, cap):
    """Columns of the averaging map from the character basis into interval
    coordinates, plus both bases; cached per degree."""
    if degree in _SIGMA_MEMO:
        return _SIGMA_MEMO[degree]
    space_b = build_quotient(degree, BPRIME, cap)
    space_a = build_quotient(degree, APRIME, cap)
    cols = []
    for idx in space_b.basis:
        cd = space_b.spanning[idx]
        combo = Combo(BPRIME, {cd: QQ(1)})
        cols.append(reduce_combo(chi_map(combo), space_a))
    _SIGMA_MEMO[degree] = (space_b, space_a, cols)
    return _SIGMA_MEMO[degree]


def _solve_exact(cols, rhs, nrows):
    """Solve sum_j x_j * cols[j] = rhs over the rationals, exactly."""
    ncols = len(cols)
    rows = [[QQ(0)] * (ncols + 1) for _ in range(nrows)]
    for j, col in enumerate(cols):
        for i, v in col.items():
            rows[i][j] = v
    for i, v in rhs.items():
        rows[i][ncols] = v
    rank = 0
    for j in range(ncols):
        piv = None
        for i in range(rank, nrows):
            if rows[i][j] != 0:
                piv = i
                break
        if piv is None:
            raise InvariantViolationError(
                "averaging map is not injective in degree system")
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = QQ(1) / rows[rank][j]
        rows[rank] = [x * inv for x in rows[rank]]
        for i in range(nrows):
            if i != rank and rows[i][j] != 0:
                f = rows[i][j]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[rank])]
        rank += 1
    for i in range(rank, nrows):
        if rows[i][ncols] != 0:
            raise InvariantViolationError(
                "interval combo is outside the image of the averaging map")
    return [rows[j][ncols] for j in range(ncols)]


def sigma_map(a: Combo, max_degree, cap=6) -> Combo:
    """Inverse of chi_map, degree by degree, by exact linear solve."""
    if not a.kind.skeleton:
        raise KindMismatchError("sigma_map expects interval combos")
    out = Combo(BPRIME)
    for degree in a.degrees():
        if degree > max_degree:
            raise ResourceLimitError(
                "input degree %d above requested maximum %d"
                % (degree, max_degree))
        space_b, space_a, cols = _sigma_system(degree, cap)
        rhs = reduce_combo(a.homogeneous_part(degree), space_a)
        sol = _solve_exact(cols, rhs, space_a.dimension)
        for j, coeff in enumerate(sol):
            if coeff != 0:
                out.add_term(space_b.spanning[space_b.basis[j]], coeff)
    return out


def b_times_product(a: Combo, b: Combo, max_degree, cap=6) -> Combo:
    """The concatenation product pulled back to characters."""
    prod = times_product(chi_map(a), chi_map(b))
    truncated = Combo(APRIME)
    for cd, c in prod.terms.items():
        if cd.degree <= max_degree:
            truncated.add_term(cd, c)
    return sigma_map(truncated, max_degree, cap)
