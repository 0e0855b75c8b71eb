"""Modified Bernoulli numbers, wheels, the wheels element, the all-legs
gluing operator, and the desk-scale wheeling verifier."""

from __future__ import annotations

import itertools
import math
import time
import warnings
from dataclasses import dataclass

from .diagrams import (
    APRIME,
    BPRIME,
    Diagram,
    T_VERT,
    U_VERT,
    canonical_to_diagram,
    empty_diagram,
    disjoint_union,
)
from .errors import (
    KindMismatchError,
    MalformedDiagramError,
    ResourceLimitError,
    TruncationError,
)
from .rationals import QQ
from .reports import FAIL, PASS, CheckRecord, Report
from .series import XSeries
from .spaces import Combo, build_quotient, reduce_combo
from .algebra_maps import chi_map, times_product, union_product

OMEGA_DEGREE_CAP = 16
WHEELING_DEGREE_CAP = 5
DEFAULT_WHEELING_DEGREE = 4

_MB_CACHE = {}


def modified_bernoulli(two_n):
    """Coefficient of x^{2n} in (1/2) log(sinh(x/2)/(x/2)), exactly."""
    if two_n <= 0 or two_n % 2 != 0:
        raise MalformedDiagramError(
            "modified Bernoulli numbers are indexed by positive even integers")
    if two_n not in _MB_CACHE:
        f = XSeries(1, two_n)
        for k in range(1, two_n // 2 + 1):
            f._add_term((2 * k,), 0,
                        QQ(1, 4 ** k * math.factorial(2 * k + 1)))
        # log(1+f) = sum (-1)^(j+1) f^j / j, f starts in degree 2
        log = XSeries(1, two_n)
        p = XSeries.const(1, two_n, 1)
        for j in range(1, two_n // 2 + 1):
            p = p * f
            if p.is_zero():
                break
            log = log + p.scale(QQ((-1) ** (j + 1), j))
        for k in range(1, two_n // 2 + 1):
            _MB_CACHE[2 * k] = log.coefficient((2 * k,)) / 2
    return _MB_CACHE[two_n]


def wheel_diagram(n) -> Diagram:
    """The n-gon with n legs; rotations are (previous edge, next edge, leg)."""
    if n < 2:
        raise MalformedDiagramError("a wheel needs at least 2 spokes")
    if n % 2 != 0:
        warnings.warn("odd wheels vanish in the quotient and do not enter "
                      "the wheels element", stacklevel=2)
    kinds = [T_VERT] * n + [U_VERT] * n
    slots = [(3 * i, 3 * i + 1, 3 * i + 2) for i in range(n)]
    slots += [(3 * n + i,) for i in range(n)]
    pairs = [(3 * i + 1, 3 * ((i + 1) % n)) for i in range(n)]
    pairs += [(3 * i + 2, 3 * n + i) for i in range(n)]
    return Diagram(kinds, slots, pairs)


@dataclass
class OmegaElement:
    """Truncated wheels element: the union-exponential of the modified
    Bernoulli combination of even wheels.

    presentation lists (wheel multiset, coefficient) in the wheel-drawing
    convention; value stores the same element over canonical diagrams, where
    a representative may absorb an orientation sign.
    """

    max_degree: int
    value: Combo
    presentation: list


def _even_partitions(total, largest):
    """Multisets of even parts >= 2 summing to total, parts descending."""
    if total == 0:
        yield ()
        return
    for part in range(min(largest, total), 1, -1):
        if part % 2 != 0:
            continue
        for rest in _even_partitions(total - part, part):
            yield (part,) + rest


def omega_series(max_degree, cap=OMEGA_DEGREE_CAP) -> OmegaElement:
    """All unions of even wheels up to the degree, with the exponential's
    multiset coefficients."""
    if max_degree > cap:
        raise ResourceLimitError(
            "wheels element degree %d above cap %d" % (max_degree, cap))
    combo = Combo(BPRIME)
    combo.insert_diagram(empty_diagram(), 1)
    presentation = [((), QQ(1))]
    for total in range(2, max_degree + 1, 2):
        for parts in _even_partitions(total, total):
            coeff = QQ(1)
            for part, mult in _multiplicities(parts).items():
                coeff *= modified_bernoulli(part) ** mult
                coeff /= math.factorial(mult)
            d = empty_diagram()
            for part in parts:
                d = disjoint_union(d, wheel_diagram(part))
            combo.insert_diagram(d, coeff)
            presentation.append((parts, coeff))
    return OmegaElement(max_degree, combo, presentation)


def _multiplicities(parts):
    out = {}
    for p in parts:
        out[p] = out.get(p, 0) + 1
    return out


def glue_all_legs(c: Diagram, cp: Diagram) -> Combo:
    """Sum over all ways of gluing every leg of c to a distinct leg of cp.

    Gluing joins the two legs' half-edges into one internal edge; a chain
    that closes with no vertex left becomes a circle component.  Zero when
    c has more legs than cp.  Each term has degree
    deg(cp) + deg(c) - legs(c).
    """
    if c.skeleton is not None or cp.skeleton is not None:
        raise KindMismatchError("gluing is defined on characters")
    out = Combo(BPRIME)
    legs_c = c.legs()
    legs_cp = cp.legs()
    if len(legs_c) > len(legs_cp):
        return out
    for image in itertools.permutations(legs_cp, len(legs_c)):
        out.insert_diagram(_glue_once(c, cp, legs_c, image), 1)
    return out


def _glue_once(c, cp, legs_c, image):
    vshift = c.n_vertices
    hshift = max((h for h in c.pairing), default=-1) + 1
    pairing = dict(c.pairing)
    for a, b in cp.pairing.items():
        pairing[a + hshift] = b + hshift
    glue_pairs = [
        (c.slots[lc][0], cp.slots[lt][0] + hshift)
        for lc, lt in zip(legs_c, image)
    ]
    circles = c.circles + cp.circles
    for h, k in glue_pairs:
        p = pairing.pop(h)
        if p == k:
            # the two half-edges to merge are already each other's partner:
            # the chain closes into a vertexless loop
            pairing.pop(k)
            circles += 1
            continue
        q = pairing.pop(k)
        pairing.pop(p, None)
        pairing.pop(q, None)
        pairing[p] = q
        pairing[q] = p
    dead = set(legs_c) | {lt + vshift for lt in image}
    keep = [v for v in range(vshift + cp.n_vertices) if v not in dead]
    kinds = []
    slots = []
    for v in keep:
        if v < vshift:
            kinds.append(c.kinds[v])
            slots.append(c.slots[v])
        else:
            kinds.append(cp.kinds[v - vshift])
            slots.append(tuple(h + hshift for h in cp.slots[v - vshift]))
    pairs = [(a, b) for a, b in pairing.items() if a < b]
    return Diagram(kinds, slots, pairs, circles=circles)


_GLUE_MEMO = {}


def _glue_cached(c_cd, target_cd) -> Combo:
    key = (c_cd.bytes, target_cd.bytes)
    hit = _GLUE_MEMO.get(key)
    if hit is None:
        hit = glue_all_legs(canonical_to_diagram(c_cd),
                            canonical_to_diagram(target_cd))
        _GLUE_MEMO[key] = hit
    return hit


def hat_apply(c, target: Combo, max_degree, c_truncation=None) -> Combo:
    """Bilinear extension of glue_all_legs, truncated at max_degree.

    c is a Combo, or an OmegaElement (then the union-exponential structure
    is used: the hat of a union is the composition of the hats, so the
    wheels operator is applied as exp of the single-wheel operators).
    A finite combo is exact; a combo standing for a truncated series must
    declare its truncation via c_truncation.
    """
    if isinstance(c, OmegaElement):
        return _hat_wheels(c, target, max_degree)
    if c_truncation is not None and c_truncation < max_degree:
        raise TruncationError(
            "operator truncated at degree %d cannot serve degree %d"
            % (c_truncation, max_degree))
    out = Combo(BPRIME)
    for cd_c, coeff_c in c.terms.items():
        for cd_t, coeff_t in target.terms.items():
            glued = _glue_cached(cd_c, cd_t)
            for cd, v in glued.terms.items():
                if cd.degree <= max_degree:
                    out.add_term(cd, coeff_c * coeff_t * v)
    return out


def _hat_wheels(omega: OmegaElement, target: Combo, max_degree) -> Combo:
    """Apply the wheels operator through its exponential structure: the hat
    of a disjoint union is the composition of the hats, so exp of the
    single-wheel layer reproduces the full operator while consuming at
    least two legs per round."""
    need = target.max_legs()
    if omega.max_degree < min(need, 2 * max_degree):
        raise TruncationError(
            "wheels element truncated at degree %d cannot act on %d legs"
            % (omega.max_degree, need))
    log_combo = Combo(BPRIME)
    for n in range(1, omega.max_degree // 2 + 1):
        log_combo.insert_diagram(wheel_diagram(2 * n), modified_bernoulli(2 * n))
    total = Combo(BPRIME)
    for cd, coeff in target.terms.items():
        if cd.degree <= max_degree:
            total.add_term(cd, coeff)
    layer = total
    j = 0
    while not layer.is_zero():
        j += 1
        layer = hat_apply(log_combo, layer, max_degree).scale(QQ(1, j))
        total = total + layer
    return total


def verify_wheeling(max_degree=DEFAULT_WHEELING_DEGREE,
                    cap=DEFAULT_WHEELING_DEGREE) -> Report:
    """Check that the wheels operator intertwines the two products on all
    basis pairs with total degree up to max_degree, in reduced interval
    coordinates.  A failing pair would indicate an implementation bug, not
    a mathematical discovery; the report says so in its residual."""
    if max_degree > cap:
        raise ResourceLimitError(
            "wheeling sweep degree %d above cap %d" % (max_degree, cap))
    report = Report(command="verify wheeling",
                    config={"max_degree": max_degree,
                            "omega_truncation": 2 * max_degree})
    omega = omega_series(2 * max_degree)
    hat_memo = {}

    def hat_of_basis(cd):
        hit = hat_memo.get(cd.bytes)
        if hit is None:
            single = Combo(BPRIME, {cd: QQ(1)})
            hit = chi_map(hat_apply(omega, single, max_degree))
            hat_memo[cd.bytes] = hit
        return hit

    bases = {d: build_quotient(d, BPRIME).basis_diagrams()
             for d in range(0, max_degree + 1)}
    for d1 in range(0, max_degree + 1):
        for d2 in range(d1, max_degree + 1):
            if d1 + d2 > max_degree:
                continue
            for i, c1 in enumerate(bases[d1]):
                for c2 in bases[d2][i if d1 == d2 else 0:]:
                    t0 = time.time()
                    target = union_product(Combo(BPRIME, {c1: QQ(1)}),
                                           Combo(BPRIME, {c2: QQ(1)}))
                    space = build_quotient(d1 + d2, APRIME)
                    lhs = reduce_combo(
                        chi_map(hat_apply(omega, target, max_degree)), space)
                    rhs = reduce_combo(
                        times_product(hat_of_basis(c1), hat_of_basis(c2)),
                        space)
                    ok = lhs == rhs
                    residual = ""
                    if not ok:
                        diff = {k: lhs.get(k, QQ(0)) - rhs.get(k, QQ(0))
                                for k in set(lhs) | set(rhs)}
                        residual = ("nonzero residual %r; this indicates an "
                                    "implementation bug, not a counterexample"
                                    % {k: str(v) for k, v in diff.items() if v})
                    report.add(CheckRecord(
                        name="wheeling pair",
                        inputs={"deg1": d1, "deg2": d2,
                                "c1": c1.bytes.decode(),
                                "c2": c2.bytes.decode()},
                        status=PASS if ok else FAIL,
                        wall_time=time.time() - t0,
                        residual=residual,
                    ))
    return report
