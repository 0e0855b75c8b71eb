"""Graded quotient spaces of diagrams modulo the local relations.

Relations are generated site-by-site over a spanning set of canonical
diagrams and row-reduced over exact rationals with a fixed pivot rule
(lowest canonical-bytes column eliminated first), so bases and reduction
tables are reproducible across runs and platforms.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass

from .diagrams import (
    CanonicalDiagram,
    DEFAULT_DEGREE_CAP,
    Diagram,
    S_VERT,
    SpaceKind,
    T_VERT,
    canonical_form,
    canonical_to_diagram,
    enumerate_diagrams,
)
from .errors import (
    CacheIntegrityError,
    CacheVersionError,
    InvariantViolationError,
    KindMismatchError,
    MalformedDiagramError,
)
from .rationals import QQ, rat_from_str, rat_to_str

CACHE_FORMAT = "jdiag-space-v1"


class Combo:
    """Finite formal linear combination of canonical diagrams, graded."""

    __slots__ = ("kind", "terms")

    def __init__(self, kind: SpaceKind, terms=None):
        self.kind = kind
        self.terms = {}
        if terms:
            for cd, c in terms.items():
                self.add_term(cd, c)

    @classmethod
    def zero(cls, kind):
        return cls(kind)

    @classmethod
    def from_diagram(cls, kind, d: Diagram, coeff=1):
        out = cls(kind)
        out.insert_diagram(d, coeff)
        return out

    def add_term(self, cd: CanonicalDiagram, c):
        if cd.skeleton != self.kind.skeleton:
            raise KindMismatchError(
                "diagram skeleton does not match kind %s" % self.kind.name)
        c = QQ(c)
        if c == 0:
            return
        cur = self.terms.get(cd)
        if cur is None:
            self.terms[cd] = c
        else:
            cur = cur + c
            if cur == 0:
                del self.terms[cd]
            else:
                self.terms[cd] = cur

    def insert_diagram(self, d: Diagram, coeff=1):
        res = canonical_form(d)
        if res is None:
            return
        sign, cd = res
        self.add_term(cd, QQ(coeff) * sign)

    def is_zero(self):
        return not self.terms

    def __add__(self, other):
        if self.kind != other.kind:
            raise KindMismatchError("cannot add %s and %s combos"
                                    % (self.kind.name, other.kind.name))
        out = Combo(self.kind)
        out.terms = dict(self.terms)
        for cd, c in other.terms.items():
            out.add_term(cd, c)
        return out

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        c = QQ(c)
        out = Combo(self.kind)
        if c != 0:
            out.terms = {cd: v * c for cd, v in self.terms.items()}
        return out

    def __eq__(self, other):
        return (isinstance(other, Combo) and self.kind == other.kind
                and self.terms == other.terms)

    def degrees(self):
        return sorted({cd.degree for cd in self.terms})

    def homogeneous_part(self, degree):
        out = Combo(self.kind)
        out.terms = {cd: c for cd, c in self.terms.items() if cd.degree == degree}
        return out

    def max_legs(self):
        return max((cd.legs for cd in self.terms), default=0)

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: kv[0].bytes)

    def signature(self):
        """Scale-normalized hashable form, used to deduplicate relations."""
        items = self.sorted_terms()
        if not items:
            return ()
        lead = items[0][1]
        return tuple((cd.bytes, rat_to_str(c / lead)) for cd, c in items)

    def __repr__(self):
        if not self.terms:
            return "Combo(0)"
        return " + ".join("%s*[%s]" % (rat_to_str(c), cd.bytes.decode())
                          for cd, c in self.sorted_terms())


# ---------------------------------------------------------------------------
# relation generation


def _swap_far_ends(d: Diagram, x, y):
    """Exchange what half-edges x and y connect to (no-op if they pair)."""
    px, py = d.pairing[x], d.pairing[y]
    if px == y:
        return d
    dropped = {x, y, px, py}
    pairs = [(a, b) for a, b in d.pairing.items()
             if a < b and a not in dropped and b not in dropped]
    pairs.append((x, py))
    pairs.append((y, px))
    return Diagram(d.kinds, d.slots, pairs, d.skeleton, d.circles)


def _cyclic_from(slots, h):
    i = slots.index(h)
    return slots[i], slots[(i + 1) % 3], slots[(i + 2) % 3]


def ihx_generators_for(d: Diagram, kind: SpaceKind):
    """One three-term generator per edge joining two distinct internal
    vertices; each generator reduces to zero in the quotient."""
    gens = []
    for h in sorted(d.pairing):
        h2 = d.pairing[h]
        if h > h2:
            continue
        v, _ = d.endpoint(h)
        w, _ = d.endpoint(h2)
        if d.kinds[v] != T_VERT or d.kinds[w] != T_VERT or v == w:
            continue
        _, a, b = _cyclic_from(d.slots[v], h)
        _, c, _e = _cyclic_from(d.slots[w], h2)
        combo = Combo(kind)
        combo.insert_diagram(d, 1)
        combo.insert_diagram(_swap_far_ends(d, a, c), -1)
        combo.insert_diagram(_swap_far_ends(d, b, c), -1)
        if not combo.is_zero():
            gens.append(combo)
    return gens


def _resolve_skeleton_vertex(d: Diagram, sv, first_target, second_target):
    """Remove skeleton vertex sv and its internal neighbor, re-attaching the
    neighbor's two other edges to two fresh consecutive skeleton vertices."""
    h = d.slots[sv][0]
    h2 = d.pairing[h]
    u, _ = d.endpoint(h2)
    px, py = d.pairing[first_target], d.pairing[second_target]
    keep = [v for v in range(d.n_vertices) if v not in (sv, u)]
    vmap = {v: i for i, v in enumerate(keep)}
    fresh = max(d.pairing) + 1 if d.pairing else 0
    hs1, hs2 = fresh, fresh + 1
    s1, s2 = len(keep), len(keep) + 1
    kinds = [d.kinds[v] for v in keep] + [S_VERT, S_VERT]
    slots = [d.slots[v] for v in keep] + [(hs1,), (hs2,)]
    dropped = {h, h2, first_target, second_target, px, py}
    pairs = [(a, b) for a, b in d.pairing.items()
             if a < b and a not in dropped and b not in dropped]
    if px == second_target:
        pairs.append((hs1, hs2))
    else:
        pairs.append((hs1, px))
        pairs.append((hs2, py))
    skeleton = []
    for v in d.skeleton:
        if v == sv:
            skeleton.extend((s1, s2))
        else:
            skeleton.append(vmap[v])
    return Diagram(kinds, slots, pairs, skeleton=skeleton, circles=d.circles)


def stu_generators_for(d: Diagram, kind: SpaceKind):
    """One generator per skeleton vertex whose edge ends on an internal
    vertex: the vertex resolves into the difference of its two skeleton
    attachment orders."""
    gens = []
    if d.skeleton is None:
        return gens
    for sv in d.skeleton:
        h = d.slots[sv][0]
        h2 = d.pairing[h]
        u, _ = d.endpoint(h2)
        if d.kinds[u] != T_VERT:
            continue
        _, x, y = _cyclic_from(d.slots[u], h2)
        combo = Combo(kind)
        combo.insert_diagram(d, 1)
        combo.insert_diagram(_resolve_skeleton_vertex(d, sv, x, y), -1)
        combo.insert_diagram(_resolve_skeleton_vertex(d, sv, y, x), 1)
        if not combo.is_zero():
            gens.append(combo)
    return gens


def relation_generators(degree, kind: SpaceKind, cap=DEFAULT_DEGREE_CAP):
    """Deduplicated IHX (and, on interval kinds, STU) generators over the
    spanning set of the degree."""
    spanning = enumerate_diagrams(degree, kind, cap)
    seen = {}
    for cd in spanning:
        d = canonical_to_diagram(cd)
        for combo in ihx_generators_for(d, kind) + stu_generators_for(d, kind):
            seen.setdefault(combo.signature(), combo)
    return [seen[k] for k in sorted(seen)]


# ---------------------------------------------------------------------------
# exact reduction


@dataclass
class DiagramSpace:
    """Per-degree quotient: spanning diagrams, chosen basis, reduction table.

    reduction[i] expresses spanning[i] in the basis as a sparse map from
    basis position to rational coefficient.
    """

    kind: SpaceKind
    degree: int
    spanning: list
    basis: list            # indices into spanning
    reduction: list        # per spanning index: {basis position: QQ}

    @property
    def dimension(self):
        return len(self.basis)

    def index_of(self, cd: CanonicalDiagram):
        return self._index().get(cd.bytes)

    def _index(self):
        idx = getattr(self, "_idx", None)
        if idx is None:
            idx = {cd.bytes: i for i, cd in enumerate(self.spanning)}
            self._idx = idx
        return idx

    def basis_diagrams(self):
        return [self.spanning[i] for i in self.basis]


def _sparse_rref(rows, ncols):
    """Reduced row echelon form of sparse rational rows; unique given the
    column order, hence deterministic."""
    pivots = {}
    for row in rows:
        row = dict(row)
        while row:
            lead = min(row)
            p = pivots.get(lead)
            if p is None:
                inv = QQ(1) / row[lead]
                pivots[lead] = {c: v * inv for c, v in row.items()}
                break
            f = row.pop(lead)
            for c, v in p.items():
                if c == lead:
                    continue
                nv = row.get(c, QQ(0)) - f * v
                if nv == 0:
                    row.pop(c, None)
                else:
                    row[c] = nv
    for lead in sorted(pivots, reverse=True):
        row = pivots[lead]
        for c in sorted(k for k in row if k != lead and k in pivots):
            f = row.pop(c)
            for c2, v in pivots[c].items():
                if c2 == c:
                    continue
                nv = row.get(c2, QQ(0)) - f * v
                if nv == 0:
                    row.pop(c2, None)
                else:
                    row[c2] = nv
    return pivots


_SPACE_MEMO = {}


def build_quotient(degree, kind: SpaceKind, cap=DEFAULT_DEGREE_CAP):
    """Quotient of the degree-homogeneous span by all relation instances."""
    memo_key = (kind.name, degree)
    if memo_key in _SPACE_MEMO:
        return _SPACE_MEMO[memo_key]
    spanning = enumerate_diagrams(degree, kind, cap)
    index = {cd.bytes: i for i, cd in enumerate(spanning)}
    rows = []
    for combo in relation_generators(degree, kind, cap):
        row = {}
        for cd, c in combo.terms.items():
            i = index.get(cd.bytes)
            if i is None:
                raise InvariantViolationError(
                    "relation term outside the spanning set: %s" % cd)
            row[i] = c
        rows.append(row)
    pivots = _sparse_rref(rows, len(spanning))
    basis = [i for i in range(len(spanning)) if i not in pivots]
    pos = {i: p for p, i in enumerate(basis)}
    reduction = []
    for i in range(len(spanning)):
        if i in pos:
            reduction.append({pos[i]: QQ(1)})
        else:
            row = pivots[i]
            reduction.append({pos[c]: -v for c, v in row.items() if c != i})
    space = DiagramSpace(kind, degree, spanning, basis, reduction)
    _SPACE_MEMO[memo_key] = space
    return space


def reduce_combo(combo: Combo, space: DiagramSpace):
    """Coordinates of a degree-homogeneous combo over the space basis."""
    if combo.kind != space.kind:
        raise KindMismatchError("combo kind %s does not match space kind %s"
                                % (combo.kind.name, space.kind.name))
    out = {}
    for cd, c in combo.terms.items():
        if cd.degree != space.degree:
            raise MalformedDiagramError(
                "degree %d term in a degree-%d space" % (cd.degree, space.degree))
        i = space.index_of(cd)
        if i is None:
            raise MalformedDiagramError("diagram not in spanning set: %r" % cd)
        for p, v in space.reduction[i].items():
            nv = out.get(p, QQ(0)) + c * v
            if nv == 0:
                out.pop(p, None)
            else:
                out[p] = nv
    return out


def reduce_combo_graded(combo: Combo, cap=DEFAULT_DEGREE_CAP):
    """Reduce a non-homogeneous combo degree by degree."""
    return {m: reduce_combo(combo.homogeneous_part(m), build_quotient(m, combo.kind, cap))
            for m in combo.degrees()}


def space_dimension(degree, kind: SpaceKind, cap=DEFAULT_DEGREE_CAP,
                    cache_dir=None):
    """Dimension of the quotient; optionally recorded as a fixture file."""
    space = _load_or_build(degree, kind, cap, cache_dir)
    dim = space.dimension
    if cache_dir is not None:
        fixture = os.path.join(cache_dir, "dimensions.json")
        table = {}
        if os.path.exists(fixture):
            with open(fixture) as fh:
                table = json.load(fh)
        key = "%s:%d" % (kind.name, degree)
        if key in table and table[key] != dim:
            raise InvariantViolationError(
                "dimension fixture mismatch for %s: %s vs %s"
                % (key, table[key], dim))
        table[key] = dim
        with open(fixture, "w") as fh:
            json.dump(table, fh, indent=0, sort_keys=True)
    return dim


def _load_or_build(degree, kind, cap, cache_dir):
    if cache_dir is not None:
        path = cache_path(cache_dir, degree, kind)
        if os.path.exists(path):
            space = cache_load(degree, kind, path)
            _SPACE_MEMO[(kind.name, degree)] = space
            return space
    space = build_quotient(degree, kind, cap)
    if cache_dir is not None:
        os.makedirs(cache_dir, exist_ok=True)
        cache_store(space, cache_path(cache_dir, degree, kind))
    return space


# ---------------------------------------------------------------------------
# cache files


def cache_path(cache_dir, degree, kind):
    return os.path.join(cache_dir, "space-%s-%d.json" % (kind.name, degree))


def _space_payload(space: DiagramSpace):
    return {
        "format": CACHE_FORMAT,
        "kind": space.kind.name,
        "degree": space.degree,
        "spanning": [cd.bytes.decode() for cd in space.spanning],
        "basis": list(space.basis),
        "reduction": [
            sorted([p, rat_to_str(v)] for p, v in row.items())
            for row in space.reduction
        ],
    }


def cache_store(space: DiagramSpace, path):
    payload = _space_payload(space)
    body = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha256(body.encode()).hexdigest()
    with open(path, "w") as fh:
        json.dump({"payload": payload, "sha256": digest}, fh,
                  sort_keys=True, separators=(",", ":"))


def cache_load(degree, kind: SpaceKind, path) -> DiagramSpace:
    with open(path) as fh:          # missing file raises FileNotFoundError
        wrapper = json.load(fh)
    payload = wrapper.get("payload", {})
    body = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    if hashlib.sha256(body.encode()).hexdigest() != wrapper.get("sha256"):
        raise CacheIntegrityError("cache file %s fails its content hash" % path)
    if payload.get("format") != CACHE_FORMAT:
        raise CacheVersionError(
            "cache file %s has format %r, expected %s; rebuild with "
            "'cache rebuild'" % (path, payload.get("format"), CACHE_FORMAT))
    if payload["kind"] != kind.name or payload["degree"] != degree:
        raise CacheIntegrityError(
            "cache file %s stores %s degree %s, expected %s degree %s"
            % (path, payload["kind"], payload["degree"], kind.name, degree))
    from .diagrams import decode_bytes  # local import to avoid cycle noise

    spanning = []
    for txt in payload["spanning"]:
        d = decode_bytes(txt.encode())
        res = canonical_form(d)
        spanning.append(res[1])
    reduction = [
        {int(p): rat_from_str(v) for p, v in row}
        for row in payload["reduction"]
    ]
    return DiagramSpace(kind, degree, spanning, list(payload["basis"]), reduction)
