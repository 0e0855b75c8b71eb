"""Metrized Lie algebras and the diagrams-to-Lie-algebras weight system.

Special linear algebras carry the trace form of the defining representation
(long roots of squared length 2), optionally rescaled by a global rational
factor; all verification identities are covariant under that rescaling.
Weight images live in exact truncated series: polynomials on the algebra
use the x-variables (coordinates of X over the chosen basis), polynomials
on its dual use the xi-variables, and series over a Cartan subalgebra use
one variable per simple root pairing.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

from .diagrams import (
    BPRIME,
    Diagram,
    T_VERT,
    U_VERT,
    canonical_to_diagram,
)
from .errors import (
    InvariantViolationError,
    KindMismatchError,
    MalformedDiagramError,
    ResourceLimitError,
    UnsupportedAlgebraError,
)
from .rationals import QQ
from .reports import FAIL, PASS, CheckRecord, Report
from .series import XSeries
from .spaces import Combo

MAKE_SL_DIM_CAP = 35


# ---------------------------------------------------------------------------
# structure data


@dataclass
class MetrizedLie:
    """Structure tensor with all indices lowered by an invariant form."""

    name: str
    dim: int
    metric: list          # dim x dim rational matrix
    metric_inv: list
    structure: dict       # (a, b, c) -> rational, totally antisymmetric
    form_scale: object    # rational multiplier applied to the trace form
    n: int                # the N of sl(N)
    basis: list           # matrices over QQ, used by root data and tests

    def structure_items(self):
        return self._items

    def finish(self):
        self._items = sorted(self.structure.items())
        # f[a][b] -> list of (c, coeff) with [B_a, B_b] = sum coeff * B_c
        f = [[[] for _ in range(self.dim)] for _ in range(self.dim)]
        for (a, b, c), val in self._items:
            for cc in range(self.dim):
                g = self.metric_inv[c][cc]
                if g:
                    f[a][b].append((cc, val * g))
        self._f = [[_merge_pairs(cell) for cell in row] for row in f]
        return self

    def bracket_coeffs(self, a, b):
        return self._f[a][b]


def _merge_pairs(pairs):
    acc = {}
    for c, v in pairs:
        acc[c] = acc.get(c, QQ(0)) + v
    return tuple((c, v) for c, v in sorted(acc.items()) if v != 0)


def _mat_mul(A, B):
    n = len(A)
    return [[sum((A[i][k] * B[k][j] for k in range(n)), QQ(0))
             for j in range(n)] for i in range(n)]


def _mat_trace_product(A, B):
    n = len(A)
    return sum((A[i][j] * B[j][i] for i in range(n) for j in range(n)), QQ(0))


def _mat_inverse(M):
    n = len(M)
    aug = [[QQ(x) for x in row] + [QQ(1) if i == j else QQ(0)
                                   for j in range(n)]
           for i, row in enumerate(M)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            raise InvariantViolationError("metric is singular")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = QQ(1) / aug[col][col]
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def _sl_basis(n):
    """Cartan generators diag(0..1,-1..0) first, then off-diagonal units."""
    basis = []
    for k in range(n - 1):
        m = [[QQ(0)] * n for _ in range(n)]
        m[k][k] = QQ(1)
        m[k + 1][k + 1] = QQ(-1)
        basis.append(m)
    for i in range(n):
        for j in range(n):
            if i != j:
                m = [[QQ(0)] * n for _ in range(n)]
                m[i][j] = QQ(1)
                basis.append(m)
    return basis


_SL_CACHE = {}


def make_sl(n, form_scale=1) -> MetrizedLie:
    """sl(n) with the (optionally rescaled) defining-representation trace
    form and the structure tensor lowered by it."""
    scale = QQ(form_scale)
    key = (n, scale)
    if key in _SL_CACHE:
        return _SL_CACHE[key]
    if n < 2:
        raise UnsupportedAlgebraError("sl(n) needs n >= 2")
    dim = n * n - 1
    if dim > MAKE_SL_DIM_CAP:
        raise ResourceLimitError("dimension %d above cap %d"
                                 % (dim, MAKE_SL_DIM_CAP))
    basis = _sl_basis(n)
    metric = [[scale * _mat_trace_product(basis[a], basis[b])
               for b in range(dim)] for a in range(dim)]
    structure = {}
    for a in range(dim):
        for b in range(a + 1, dim):
            ab = _mat_mul(basis[a], basis[b])
            ba = _mat_mul(basis[b], basis[a])
            comm = [[x - y for x, y in zip(r1, r2)] for r1, r2 in zip(ab, ba)]
            for c in range(dim):
                val = scale * _mat_trace_product(comm, basis[c])
                if val != 0:
                    # fill the whole antisymmetric orbit of (a, b, c)
                    for (i, j, k), sgn in (
                        ((a, b, c), 1), ((b, c, a), 1), ((c, a, b), 1),
                        ((b, a, c), -1), ((a, c, b), -1), ((c, b, a), -1),
                    ):
                        structure[(i, j, k)] = val * sgn
    lie = MetrizedLie(
        name="sl%d" % n, dim=dim, metric=metric,
        metric_inv=_mat_inverse(metric), structure=structure,
        form_scale=scale, n=n, basis=basis,
    ).finish()
    _SL_CACHE[key] = lie
    return lie


def check_metrized_lie(lie: MetrizedLie):
    """Violations of total antisymmetry, Jacobi, or metric invertibility."""
    out = []
    d = lie.dim
    s = lie.structure

    def c(a, b, cc):
        return s.get((a, b, cc), QQ(0))

    for (a, b, cc), val in list(s.items())[: 50000]:
        if c(b, a, cc) != -val or c(a, cc, b) != -val or c(b, cc, a) != val:
            out.append("structure tensor not totally antisymmetric at "
                       "(%d,%d,%d)" % (a, b, cc))
            break
    try:
        _mat_inverse(lie.metric)
    except InvariantViolationError:
        out.append("metric is not invertible")
    # Jacobi via the raised bracket coefficients
    for a in range(d):
        for b in range(d):
            for cc in range(d):
                acc = {}
                for m, v in lie.bracket_coeffs(a, b):
                    for e, w in lie.bracket_coeffs(m, cc):
                        acc[e] = acc.get(e, QQ(0)) + v * w
                for m, v in lie.bracket_coeffs(b, cc):
                    for e, w in lie.bracket_coeffs(m, a):
                        acc[e] = acc.get(e, QQ(0)) + v * w
                for m, v in lie.bracket_coeffs(cc, a):
                    for e, w in lie.bracket_coeffs(m, b):
                        acc[e] = acc.get(e, QQ(0)) + v * w
                if any(x != 0 for x in acc.values()):
                    out.append("Jacobi identity fails at (%d,%d,%d)"
                               % (a, b, cc))
                    return out
    return out


# ---------------------------------------------------------------------------
# the weight system


def _tg_component(lie: MetrizedLie, d: Diagram, verts, trunc):
    """Contract one connected component: one structure tensor per internal
    vertex, one inverse metric per internal edge, legs evaluated at X.
    Returns the resulting polynomial in the x-variables (h power 0)."""
    dim = lie.dim
    ginv = lie.metric_inv
    g = lie.metric
    tset = [v for v in verts if d.kinds[v] == T_VERT]
    legs = {v for v in verts if d.kinds[v] == U_VERT}

    if not tset:
        # a lone strut: the invariant form evaluated at (X, X)
        poly = XSeries(dim, trunc)
        for a in range(dim):
            for b in range(dim):
                if g[a][b]:
                    e = [0] * dim
                    e[a] += 1
                    e[b] += 1
                    poly._add_term(tuple(e), 0, g[a][b])
        return poly

    # greedy order: grow along shared edges to keep the open boundary small
    order = [tset[0]]
    remaining = set(tset[1:])
    while remaining:
        nxt = None
        best = -1
        chosen = sorted(remaining)
        done = set(order)
        for v in chosen:
            shared = sum(
                1 for h in d.slots[v]
                if d.endpoint(d.pairing[h])[0] in done)
            if shared > best:
                best = shared
                nxt = v
        order.append(nxt)
        remaining.discard(nxt)

    # partial: map (tuple of (half_edge, index) for open bonds) -> poly
    partial = {(): XSeries.const(dim, trunc, 1)}
    done = set()
    sparse_c = lie.structure_items()
    for v in order:
        hs = d.slots[v]
        mates = [d.pairing[h] for h in hs]
        mate_vert = [d.endpoint(m)[0] for m in mates]
        new_partial = {}
        for key, poly in partial.items():
            bound = dict(key)
            for (i, j, k), cval in sparse_c:
                idx = (i, j, k)
                coeff = cval
                evec = None
                okay = True
                new_bonds = dict(bound)
                for slot in range(3):
                    h = hs[slot]
                    m = mates[slot]
                    w = mate_vert[slot]
                    want = idx[slot]
                    if w == v and m in (hs[0], hs[1], hs[2]):
                        # self-loop at this vertex: match within idx
                        other = hs.index(m)
                        if other < slot:
                            # contract idx[slot] with idx[other] via g^-1
                            val = ginv[idx[other]][want]
                            if val == 0:
                                okay = False
                                break
                            coeff *= val
                        continue
                    if w in legs:
                        if evec is None:
                            evec = [0] * dim
                        evec[want] += 1
                        continue
                    if m in new_bonds:
                        val = ginv[new_bonds.pop(m)][want]
                        if val == 0:
                            okay = False
                            break
                        coeff *= val
                    else:
                        new_bonds[h] = want
                if not okay or coeff == 0:
                    continue
                term_poly = poly.scale(coeff)
                if evec is not None:
                    mono = XSeries(dim, trunc)
                    mono._add_term(tuple(evec), 0, QQ(1))
                    term_poly = term_poly * mono
                nk = tuple(sorted(new_bonds.items()))
                cur = new_partial.get(nk)
                new_partial[nk] = term_poly if cur is None else cur + term_poly
        partial = {k: p for k, p in new_partial.items() if not p.is_zero()}
        if not partial:
            return XSeries(dim, trunc)
        done.add(v)
    if list(partial) != [()]:
        raise InvariantViolationError("unresolved bonds after contraction")
    return partial[()]


def _tg_diagram(lie: MetrizedLie, d: Diagram, trunc):
    """Full contraction: product over components times dim per circle."""
    n = d.n_vertices
    seen = set()
    poly = XSeries.const(lie.dim, trunc, 1)
    for v0 in range(n):
        if v0 in seen:
            continue
        comp = [v0]
        seen.add(v0)
        queue = [v0]
        while queue:
            v = queue.pop()
            for h in d.slots[v]:
                w = d.endpoint(d.pairing[h])[0]
                if w not in seen:
                    seen.add(w)
                    comp.append(w)
                    queue.append(w)
        poly = poly * _tg_component(lie, d, comp, trunc)
    if d.circles:
        poly = poly.scale(QQ(lie.dim) ** d.circles)
    return poly


_TG_MEMO = {}


def tg_weight(lie: MetrizedLie, combo: Combo, trunc=None) -> XSeries:
    """Weight-system image as a polynomial on the algebra: a degree-m term
    with k legs contributes its contraction polynomial times h^(m-k)."""
    if combo.kind.skeleton:
        raise KindMismatchError("weight systems act on characters here")
    if trunc is None:
        trunc = max((cd.legs for cd in combo.terms), default=0)
    out = XSeries(lie.dim, trunc)
    for cd, coeff in combo.terms.items():
        key = (lie.name, lie.form_scale, cd.bytes, trunc)
        poly = _TG_MEMO.get(key)
        if poly is None:
            poly = _tg_diagram(lie, canonical_to_diagram(cd), trunc)
            _TG_MEMO[key] = poly
        shifted = poly.scale(coeff).shift_h(cd.degree - cd.legs)
        out = out + shifted
    return out


def tg_weight_dual(lie: MetrizedLie, combo: Combo, trunc=None) -> XSeries:
    """Weight-system image as a polynomial on the dual: indices raised with
    the inverse form and h equal to the full degree of each term."""
    if trunc is None:
        trunc = max((cd.legs for cd in combo.terms), default=0)
    images = [XSeries(lie.dim, trunc) for _ in range(lie.dim)]
    for a in range(lie.dim):
        for b in range(lie.dim):
            v = lie.metric_inv[a][b]
            if v:
                e = [0] * lie.dim
                e[b] = 1
                images[a]._add_term(tuple(e), 0, v)
    out = XSeries(lie.dim, trunc)
    for cd, coeff in combo.terms.items():
        single = Combo(combo.kind, {cd: QQ(1)})
        poly = tg_weight(lie, single, trunc)          # h = m - k
        dual = poly.substitute(images, lie.dim, trunc)
        out = out + dual.scale(coeff).shift_h(cd.legs)  # h becomes m
    return out


def ad_endomorphism(lie: MetrizedLie):
    """The matrix of ad X with entries linear in the x-variables."""
    d = lie.dim
    mat = [[XSeries(d, 1) for _ in range(d)] for _ in range(d)]
    for ell in range(d):
        e = [0] * d
        e[ell] = 1
        mono = tuple(e)
        for b in range(d):
            for a, v in lie.bracket_coeffs(ell, b):
                mat[a][b]._add_term(mono, 0, v)
    return mat


def _mat_series_mul(A, B, trunc):
    n = len(A)
    out = [[XSeries(A[0][0].nvars, trunc) for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for k in range(n):
            if A[i][k].is_zero():
                continue
            for j in range(n):
                if B[k][j].is_zero():
                    continue
                out[i][j] = out[i][j] + A[i][k] * B[k][j]
    return out


def _series_determinant(M, nvars, trunc):
    """Gaussian elimination over the truncated series ring; every pivot is
    a unit because the matrix is the identity plus higher order."""
    n = len(M)
    M = [[x.copy() for x in row] for row in M]
    det = XSeries.const(nvars, trunc, 1)
    for col in range(n):
        piv = M[col][col]
        if piv.constant_term() == 0:
            raise InvariantViolationError("non-unit pivot in series matrix")
        det = det * piv
        inv = piv.inverse()
        for r in range(col + 1, n):
            if M[r][col].is_zero():
                continue
            f = M[r][col] * inv
            for cc in range(col, n):
                if not M[col][cc].is_zero():
                    M[r][cc] = M[r][cc] - f * M[col][cc]
    return det


_JHALF_MEMO = {}


def j_half_series(lie: MetrizedLie, x_degree) -> XSeries:
    """Square root of det(sinh(ad X/2)/(ad X/2)), via the honest route:
    matrix power series, determinant over the series ring, then a series
    square root.  (The trace-of-powers route is reserved for the weight
    system side, so the two stay independent.)"""
    key = (lie.name, lie.form_scale, x_degree)
    if key in _JHALF_MEMO:
        return _JHALF_MEMO[key]
    d = lie.dim
    ad = [[x.copy() for x in row] for row in ad_endomorphism(lie)]
    for row in ad:
        for x in row:
            x.trunc = x_degree
    ad2 = _mat_series_mul(ad, ad, x_degree)
    mat = [[XSeries.const(d, x_degree, 1) if i == j else XSeries(d, x_degree)
            for j in range(d)] for i in range(d)]
    power = None
    for k in range(1, x_degree // 2 + 1):
        power = ad2 if power is None else _mat_series_mul(power, ad2, x_degree)
        coeff = QQ(1, 4 ** k * math.factorial(2 * k + 1))
        for i in range(d):
            for j in range(d):
                if not power[i][j].is_zero():
                    mat[i][j] = mat[i][j] + power[i][j].scale(coeff)
    det = _series_determinant(mat, d, x_degree)
    res = det.sqrt()
    _JHALF_MEMO[key] = res
    return res


def duflo_apply(f: XSeries, p: XSeries, dim) -> XSeries:
    """Constant-coefficient differential operator built from f: each
    x-monomial of f differentiates the matching dual coordinates of p."""
    if f.nvars != dim or p.nvars != dim:
        raise MalformedDiagramError(
            "operator and argument dimensions differ (%d, %d, want %d)"
            % (f.nvars, p.nvars, dim))
    out = XSeries(dim, p.trunc, htrunc=p.htrunc)
    for (ef, hf), cf in f.terms.items():
        for (ep, hp), cp in p.terms.items():
            coeff = cf * cp
            ok = True
            res = []
            for a, b in zip(ef, ep):
                if a > b:
                    ok = False
                    break
                res.append(b - a)
                for step in range(a):
                    coeff *= (b - step)
            if ok:
                out._add_term(tuple(res), hf + hp, coeff)
    return out


# ---------------------------------------------------------------------------
# root data and Cartan series


@dataclass
class RootData:
    rank: int
    positive_roots: list      # integer coefficient vectors over simple roots
    rho_pairings: list        # (rho, alpha) for each positive root
    root_norms: dict          # (alpha, alpha) on the positive roots
    rho_rho: object           # (rho, rho)
    cartan_coords: list       # x-coordinates of the dual of each fundamental
    lambda_xi: list           # xi-coordinates of each fundamental weight
    weight_gram: list         # (omega_i, omega_j) under the scaled form


def root_data(lie: MetrizedLie) -> RootData:
    n = lie.n
    if n > 3:
        raise UnsupportedAlgebraError(
            "root data is built in for rank <= 2 only")
    rank = n - 1
    s = lie.form_scale
    positive = []
    for i in range(rank):
        for j in range(i, rank):
            vec = [0] * rank
            for k in range(i, j + 1):
                vec[k] = 1
            positive.append(tuple(vec))
    rho_pairings = [QQ(sum(vec), 1) / s for vec in positive]
    cartan_std = [[2, -1], [-1, 2]] if rank == 2 else [[2]]
    cartan_inv = _mat_inverse([[QQ(x) for x in row[:rank]]
                               for row in cartan_std[:rank]])
    weight_gram = [[cartan_inv[i][j] / s for j in range(rank)]
                   for i in range(rank)]  # scaling the form shrinks the dual
    root_norms = {}
    for vec in positive:
        val = QQ(0)
        for i in range(rank):
            for j in range(rank):
                if vec[i] and vec[j]:
                    val += QQ(cartan_std[i][j])
        root_norms[vec] = val / s
    rho_rho = QQ(n ** 3 - n, 12) / s

    # dual fundamental weights as x-coordinate vectors (scale free)
    coweights = []
    for i in range(1, n):
        diag = [QQ(1) if k < i else QQ(0) for k in range(n)]
        shift = QQ(i, n)
        diag = [x - shift for x in diag]
        coeffs = [QQ(0)] * lie.dim
        acc = QQ(0)
        for k in range(n - 1):
            acc += diag[k]
            coeffs[k] = acc
        coweights.append(coeffs)

    lambda_xi = []
    for i in range(rank):
        w = coweights[i]
        xi = []
        for b in range(lie.dim):
            xi.append(sum((w[a] * lie.metric[a][b] / s for a in range(lie.dim)
                           if w[a]), QQ(0)))
        lambda_xi.append(xi)
    return RootData(rank, positive, rho_pairings, root_norms, rho_rho,
                    coweights, lambda_xi, weight_gram)


def _sinhc_series(linear: XSeries, x_degree):
    """sinh(h*u/2)/(h*u/2) for a linear form u, as an exact series."""
    nv = linear.nvars
    out = XSeries.const(nv, x_degree, 1, htrunc=x_degree)
    power = XSeries.const(nv, x_degree, 1, htrunc=x_degree)
    lin2 = linear * linear
    for k in range(1, x_degree // 2 + 1):
        power = power * lin2
        if power.is_zero():
            break
        term = power.scale(QQ(1, 4 ** k * math.factorial(2 * k + 1)))
        out = out + term.shift_h(2 * k)
    return out


def _sinhc_scalar(value, x_degree, nvars):
    """sinh(h*v/2)/(h*v/2) for a rational v: a pure series in h."""
    out = XSeries.const(nvars, x_degree, 1, htrunc=x_degree)
    for k in range(1, x_degree // 2 + 1):
        c = QQ(value) ** (2 * k) / QQ(4 ** k * math.factorial(2 * k + 1))
        out._add_term((0,) * nvars, 2 * k, c)
    return out


def _root_linear(rd: RootData, vec, x_degree):
    lin = XSeries(rd.rank, x_degree, htrunc=x_degree)
    for i, c in enumerate(vec):
        if c:
            e = [0] * rd.rank
            e[i] = 1
            lin._add_term(tuple(e), 0, QQ(c))
    return lin


def unknot_rt_series(lie: MetrizedLie, x_degree) -> XSeries:
    """Character value of the trivial knot's quantum invariant as a function
    of the (shifted) highest weight: a product over positive roots of
    one inverted scalar factor at rho and one sinh factor at lambda."""
    rd = root_data(lie)
    out = XSeries.const(rd.rank, x_degree, 1, htrunc=x_degree)
    for vec, rho_a in zip(rd.positive_roots, rd.rho_pairings):
        rho_factor = _sinhc_scalar(rho_a, x_degree, rd.rank).inverse()
        lam_factor = _sinhc_series(_root_linear(rd, vec, x_degree), x_degree)
        out = out * rho_factor * lam_factor
    return out


def restrict_j_to_cartan(lie: MetrizedLie, x_degree) -> XSeries:
    """j^(1/2)(h*lambda) on a Cartan subalgebra: the product over positive
    roots of the sinh factors (the paired negative roots supply the square)."""
    rd = root_data(lie)
    out = XSeries.const(rd.rank, x_degree, 1, htrunc=x_degree)
    for vec in rd.positive_roots:
        out = out * _sinhc_series(_root_linear(rd, vec, x_degree), x_degree)
    return out


def cartan_substitution(lie: MetrizedLie, series: XSeries, x_degree) -> XSeries:
    """Restrict a polynomial on the algebra to the Cartan slice written in
    the weight coordinates, then scale the argument by h."""
    rd = root_data(lie)
    images = []
    for b in range(lie.dim):
        img = XSeries(rd.rank, x_degree, htrunc=x_degree)
        for i in range(rd.rank):
            v = rd.cartan_coords[i][b]
            if v:
                e = [0] * rd.rank
                e[i] = 1
                img._add_term(tuple(e), 0, v)
        images.append(img)
    restricted = series.substitute(images, rd.rank, x_degree, x_degree)
    return restricted.with_hbar_arg()


def evaluate_at_rho(lie: MetrizedLie, series: XSeries) -> XSeries:
    """Evaluate a weight-coordinate series at lambda = rho (all simple-root
    pairings equal to (rho, alpha_i))."""
    rd = root_data(lie)
    val = QQ(1) / lie.form_scale
    images = [XSeries.const(rd.rank, series.trunc, val,
                            htrunc=series.htrunc) for _ in range(rd.rank)]
    return series.substitute(images, rd.rank, series.trunc, series.htrunc)


# ---------------------------------------------------------------------------
# invariant extension from the Cartan and the orbit average


def _lambda_quadratic(lie: MetrizedLie, trunc, htrunc):
    """(lambda, lambda) as a polynomial in the xi-variables."""
    d = lie.dim
    q = XSeries(d, trunc, htrunc=htrunc)
    for a in range(d):
        for b in range(d):
            v = lie.metric_inv[a][b]
            if v:
                e = [0] * d
                e[a] += 1
                e[b] += 1
                q._add_term(tuple(e), 0, v)
    return q


def _cubic_invariant(lie: MetrizedLie, trunc, htrunc):
    """tr(X_lambda^3) with X_lambda the metric dual of lambda, in xi."""
    d = lie.dim
    n = lie.n
    xmats = []
    for a in range(d):
        coeffs = [
            sum((lie.metric_inv[a][b] * QQ(lie.basis[b][i][j])
                 for b in range(d)), QQ(0))
            for i in range(n) for j in range(n)
        ]
        xmats.append(coeffs)
    out = XSeries(d, trunc, htrunc=htrunc)
    for a in range(d):
        for b in range(d):
            for c in range(d):
                val = QQ(0)
                for i in range(n):
                    for j in range(n):
                        for k in range(n):
                            val += (xmats[a][i * n + j] * xmats[b][j * n + k]
                                    * xmats[c][k * n + i])
                if val != 0:
                    e = [0] * d
                    e[a] += 1
                    e[b] += 1
                    e[c] += 1
                    out._add_term(tuple(e), 0, val)
    return out


def _basic_invariants_on_cartan(lie: MetrizedLie, x_degree):
    rd = root_data(lie)
    rank = rd.rank
    p2 = XSeries(rank, x_degree, htrunc=x_degree)
    scale2 = lie.form_scale ** 2  # lambda = sum (s a_i) omega_i
    for i in range(rank):
        for j in range(rank):
            v = rd.weight_gram[i][j] * scale2
            if v:
                e = [0] * rank
                e[i] += 1
                e[j] += 1
                p2._add_term(tuple(e), 0, v)
    if rank == 1:
        return [(2, p2)]
    w = rd.cartan_coords
    n = lie.n
    diag = []
    for k in range(n):
        # diagonal entries of a*W1 + b*W2 in terms of the weight coordinates
        entries = []
        for i in range(rank):
            coweight_diag = _coweight_diag(n, i + 1)
            entries.append(coweight_diag[k])
        diag.append(entries)
    p3 = XSeries(rank, x_degree, htrunc=x_degree)
    for k in range(n):
        lin = XSeries(rank, x_degree, htrunc=x_degree)
        for i in range(rank):
            if diag[k][i]:
                e = [0] * rank
                e[i] = 1
                lin._add_term(tuple(e), 0, diag[k][i])
        p3 = p3 + lin * lin * lin
    return [(2, p2), (3, p3)]


def _coweight_diag(n, i):
    return [QQ(1) - QQ(i, n) if k < i else -QQ(i, n) for k in range(n)]


def invariant_extension(lie: MetrizedLie, series: XSeries, x_degree) -> XSeries:
    """Extend a Weyl-invariant weight-coordinate series to a polynomial in
    the xi-variables by expressing each slice in the basic invariants."""
    rd = root_data(lie)
    basics = _basic_invariants_on_cartan(lie, x_degree)
    if rd.rank == 1:
        gens_xi = [_lambda_quadratic(lie, x_degree, series.htrunc)]
    else:
        gens_xi = [_lambda_quadratic(lie, x_degree, series.htrunc),
                   _cubic_invariant(lie, x_degree, series.htrunc)]
    out = XSeries(lie.dim, x_degree, htrunc=series.htrunc)
    for h, slice_series in sorted(series.hbar_slices().items()):
        by_degree = {}
        for (exps, _h0), c in slice_series.terms.items():
            by_degree.setdefault(sum(exps), {})[exps] = c
        for deg, terms in sorted(by_degree.items()):
            coeffs = _solve_invariant_combination(rd.rank, basics, deg, terms,
                                                  x_degree)
            for powers, m in coeffs:
                if m == 0:
                    continue
                piece = XSeries.const(lie.dim, x_degree, m,
                                      htrunc=series.htrunc, hpow=h)
                for gen, power in zip(gens_xi, powers):
                    piece = piece * gen.power(power)
                out = out + piece
    return out


def _solve_invariant_combination(rank, basics, deg, terms, x_degree):
    """Write a homogeneous invariant as a polynomial in the basic ones by
    exact linear algebra on monomial coefficients."""
    degrees = [d for d, _s in basics]
    combos = []

    def rec(idx, left, acc):
        if idx == len(degrees):
            if left == 0:
                combos.append(tuple(acc))
            return
        step = degrees[idx]
        for k in range(left // step + 1):
            rec(idx + 1, left - step * k, acc + [k])

    rec(0, deg, [])
    if not combos and deg != 0:
        raise InvariantViolationError(
            "degree %d is not generated by the basic invariants" % deg)
    products = []
    for powers in combos:
        p = XSeries.const(rank, x_degree, 1)
        for (dg, gen), k in zip(basics, powers):
            p = p * gen.power(k)
        products.append(p)
    monomials = sorted({exps for p in products
                        for (exps, _h) in p.terms} | set(terms))
    rows = []
    rhs = []
    for mono in monomials:
        rows.append([p.coefficient(mono) for p in products])
        rhs.append(terms.get(mono, QQ(0)))
    sol = _dense_solve(rows, rhs)
    if sol is None:
        raise InvariantViolationError(
            "series slice is not Weyl invariant: no invariant expression")
    return list(zip(combos, sol))


def _dense_solve(rows, rhs):
    m = len(rows)
    n = len(rows[0]) if rows else 0
    aug = [list(map(QQ, rows[i])) + [QQ(rhs[i])] for i in range(m)]
    pivots = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, m) if aug[i][c] != 0), None)
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        inv = QQ(1) / aug[r][c]
        aug[r] = [x * inv for x in aug[r]]
        for i in range(m):
            if i != r and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[r])]
        pivots.append(c)
        r += 1
    for i in range(r, m):
        if aug[i][n] != 0:
            return None
    sol = [QQ(0)] * n
    for i, c in enumerate(pivots):
        sol[c] = aug[i][n]
    return sol


def restrict_to_cartan_xi(lie: MetrizedLie, series: XSeries, x_degree) -> XSeries:
    """Substitute the Cartan slice (in weight coordinates) into a polynomial
    in the xi-variables."""
    rd = root_data(lie)
    s = lie.form_scale
    images = []
    for b in range(lie.dim):
        img = XSeries(rd.rank, x_degree, htrunc=series.htrunc)
        for i in range(rd.rank):
            v = rd.lambda_xi[i][b] * s
            if v:
                e = [0] * rd.rank
                e[i] = 1
                img._add_term(tuple(e), 0, v)
        images.append(img)
    return series.substitute(images, rd.rank, x_degree, series.htrunc)


def sg_integrate(p: XSeries, lie: MetrizedLie) -> XSeries:
    """Average a polynomial on the dual over the coadjoint orbit of the
    half-sum-of-positive-roots functional, with total mass one.

    The orbit consists of imaginary points: the real picture is averaging
    p over a Euclidean sphere of squared radius (rho, rho) centered at the
    argument, so even moments enter with a positive sign.  Only sl2 has the
    closed-form sphere moments used here.
    """
    if lie.n != 2:
        raise UnsupportedAlgebraError(
            "closed-form orbit moments are implemented for sl2 only")
    if p.nvars != lie.dim:
        raise MalformedDiagramError("polynomial has %d variables, want %d"
                                    % (p.nvars, lie.dim))
    rd = root_data(lie)
    r2 = rd.rho_rho
    d = lie.dim
    gram = lie.metric
    # moments on the dual: E[s_a s_b] = (r2/3) * (dual form)^{-1} = metric
    out = XSeries(d, p.trunc, htrunc=p.htrunc)
    for (exps, h), c in p.terms.items():
        support = [a for a, e in enumerate(exps) for _ in range(e)]
        for split in _binary_splits(exps):
            svars = [a for a, e in enumerate(split) for _ in range(e)]
            if len(svars) % 2:
                continue
            weight = QQ(1)
            for a in range(d):
                weight *= math.comb(exps[a], split[a])
            moment = _sphere_moment(svars, gram, r2)
            if moment == 0:
                continue
            rem = tuple(e - s for e, s in zip(exps, split))
            out._add_term(rem, h, c * weight * moment)
    return out


def _binary_splits(exps):
    ranges = [range(e + 1) for e in exps]
    out = [()]
    for r in ranges:
        out = [t + (k,) for t in out for k in r]
    return out


def _sphere_moment(svars, gram, r2):
    k2 = len(svars)
    if k2 == 0:
        return QQ(1)
    k = k2 // 2
    denom = 1
    for i in range(k):
        denom *= (2 * i + 3)  # 3 * 5 * ... * (2k+1)
    total = QQ(0)
    for pairing in _pairings_of(list(range(k2))):
        prod = QQ(1)
        for i, j in pairing:
            prod *= gram[svars[i]][svars[j]]
        total += prod
    return total * QQ(r2) ** k / denom


def _pairings_of(items):
    if not items:
        yield []
        return
    first = items[0]
    for i in range(1, len(items)):
        rest = items[1:i] + items[i + 1:]
        for sub in _pairings_of(rest):
            yield [(first, items[i])] + sub


# ---------------------------------------------------------------------------
# verifiers

X_DEGREE_CAP = 8
FACE_CE_DEGREE_CAP = 6


def verify_face_ce(lie=None, max_degree=FACE_CE_DEGREE_CAP) -> Report:
    """Check that the differential operator built from j^(1/2) agrees with
    the orbit average on invariant polynomials up to the degree."""
    if max_degree > FACE_CE_DEGREE_CAP:
        raise ResourceLimitError("face check degree %d above cap %d"
                                 % (max_degree, FACE_CE_DEGREE_CAP))
    if lie is None:
        lie = make_sl(2)
    if lie.n != 2:
        raise UnsupportedAlgebraError("the orbit-average side needs sl2")
    report = Report(command="verify face-ce",
                    config={"algebra": lie.name, "max_degree": max_degree,
                            "form_scale": str(lie.form_scale)})
    jh = j_half_series(lie, max_degree)
    q = _lambda_quadratic(lie, max_degree, max_degree)
    rd = root_data(lie)
    for k in range(0, max_degree // 2 + 1):
        t0 = time.time()
        p = q.power(k)
        lhs = duflo_apply(jh, p, lie.dim)
        rhs = sg_integrate(p, lie)
        ok = lhs == rhs
        report.add(CheckRecord(
            name="duflo operator equals orbit average",
            inputs={"p": "(lambda,lambda)^%d" % k},
            status=PASS if ok else FAIL,
            wall_time=time.time() - t0,
            residual="" if ok else repr(lhs - rhs),
        ))
    t0 = time.time()
    shift = sg_integrate(q, lie) - q
    expected = XSeries.const(lie.dim, max_degree, rd.rho_rho,
                             htrunc=max_degree)
    ok = shift == expected
    report.add(CheckRecord(
        name="orbit average shifts the invariant quadratic by (rho,rho)",
        inputs={"rho_rho": str(rd.rho_rho)},
        status=PASS if ok else FAIL,
        wall_time=time.time() - t0,
        residual="" if ok else repr(shift - expected),
    ))
    return report


def verify_wheels_theorem(lie: MetrizedLie, x_degree=None,
                          omega_element=None) -> Report:
    """Three exact checks of the wheels identity on the algebra level:

    (a) the weight image of the wheels element equals j^(1/2), computed by
        diagram contraction on the left and determinant plus series square
        root on the right;
    (b) the unknot character series equals j^(-1/2) at rho times j^(1/2)
        on the Cartan, with the Cartan restriction cross-checked against
        the full series;
    (c) averaging the series of (b) over the coadjoint orbit returns
        j^(1/2); for sl3 the orbit average is replaced by the equivalent
        differential operator.
    """
    from .wheeling import omega_series

    if x_degree is None:
        x_degree = 8 if lie.n == 2 else 6
    if x_degree > X_DEGREE_CAP:
        raise ResourceLimitError("x-degree %d above cap %d"
                                 % (x_degree, X_DEGREE_CAP))
    report = Report(command="verify wheels",
                    config={"algebra": lie.name, "x_degree": x_degree,
                            "form_scale": str(lie.form_scale)})
    if omega_element is None:
        omega_element = omega_series(x_degree)
    if omega_element.max_degree < x_degree:
        raise TruncationError(
            "wheels element truncated at %d cannot reach x-degree %d"
            % (omega_element.max_degree, x_degree))

    # (a) weight image of the wheels element vs the determinant route
    t0 = time.time()
    truncated = Combo(BPRIME)
    for cd, c in omega_element.value.terms.items():
        if cd.degree <= x_degree:
            truncated.add_term(cd, c)
    lhs = tg_weight(lie, truncated, x_degree)
    rhs = j_half_series(lie, x_degree)
    ok = lhs == rhs
    report.add(CheckRecord(
        name="(a) wheels weight image equals j^(1/2)",
        inputs={"x_degree": x_degree},
        status=PASS if ok else FAIL,
        wall_time=time.time() - t0,
        residual="" if ok else repr(lhs - rhs),
    ))

    # (b) unknot series equals the rho-shifted j^(1/2) on the Cartan
    t0 = time.time()
    restricted = cartan_substitution(lie, rhs, x_degree)
    direct = restrict_j_to_cartan(lie, x_degree)
    ok_restrict = restricted == direct
    report.add(CheckRecord(
        name="(b1) Cartan restriction matches the root-product form",
        inputs={"x_degree": x_degree},
        status=PASS if ok_restrict else FAIL,
        wall_time=time.time() - t0,
        residual="" if ok_restrict else repr(restricted - direct),
    ))
    t0 = time.time()
    rt = unknot_rt_series(lie, x_degree)
    j_rho = evaluate_at_rho(lie, direct)
    shifted = j_rho.inverse() * direct
    ok_rt = rt == shifted
    report.add(CheckRecord(
        name="(b2) unknot character series equals shifted j^(1/2)",
        inputs={"x_degree": x_degree},
        status=PASS if ok_rt else FAIL,
        wall_time=time.time() - t0,
        residual="" if ok_rt else repr(rt - shifted),
    ))

    # (c) averaging the unknot series over the orbit recovers j^(1/2)
    t0 = time.time()
    extension = invariant_extension(lie, rt, x_degree)
    if lie.n == 2:
        averaged = sg_integrate(extension, lie)
        route = "orbit average"
    else:
        averaged = duflo_apply(j_half_series(lie, x_degree), extension,
                               lie.dim)
        route = "duflo substitute"
    back = restrict_to_cartan_xi(lie, averaged, x_degree)
    ok_c = back == direct
    report.add(CheckRecord(
        name="(c) averaged unknot series returns j^(1/2)",
        inputs={"x_degree": x_degree, "route": route},
        status=PASS if ok_c else FAIL,
        wall_time=time.time() - t0,
        residual="" if ok_c else repr(back - direct),
    ))
    return report
