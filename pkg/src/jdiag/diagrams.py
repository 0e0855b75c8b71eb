"""Uni-trivalent diagram model: validation, canonical forms, enumeration.

Diagrams are graphs whose vertices are univalent legs (U), internal oriented
trivalent vertices (T), or skeleton attachment points (S) living on a totally
ordered oriented interval.  Trivalent orientation is a cyclic order of the
three incident half-edges; reversing it negates the diagram, and that sign is
absorbed into canonicalization.  A diagram may also carry vertexless circle
components (integer count); these arise when gluing operations close a chain
of edges with no vertex left on it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import KindMismatchError, MalformedDiagramError, ResourceLimitError

S_VERT = "S"
T_VERT = "T"
U_VERT = "U"

ENCODING_VERSION = "J1"

DEFAULT_DEGREE_CAP = 6


@dataclass(frozen=True)
class SpaceKind:
    """One of the four diagram-space flavors.

    skeleton: True for interval-skeleton diagrams, False for free characters.
    connectivity: 'connected' (one piece including the skeleton),
    'legs' (every component carries at least one leg), or 'any'.
    """

    name: str
    skeleton: bool
    connectivity: str

    def __repr__(self):
        return "SpaceKind(%s)" % self.name


A = SpaceKind("A", True, "connected")
APRIME = SpaceKind("Aprime", True, "any")
B = SpaceKind("B", False, "legs")
BPRIME = SpaceKind("Bprime", False, "any")

KINDS = {k.name: k for k in (A, APRIME, B, BPRIME)}


class Diagram:
    """Concrete labeled diagram; immutable after construction.

    kinds[v] is one of 'S', 'T', 'U'; slots[v] lists the half-edge ids at v
    in rotation order (3 for T, 1 for S and U); pairs is a perfect matching
    of half-edge ids; skeleton totally orders the S vertices (None for
    characters); circles counts vertexless loop components.
    """

    __slots__ = ("kinds", "slots", "pairing", "skeleton", "circles",
                 "_endpoint", "_key")

    def __init__(self, kinds, slots, pairs, skeleton=None, circles=0):
        self.kinds = tuple(kinds)
        self.slots = tuple(tuple(s) for s in slots)
        pairing = {}
        for a, b in pairs:
            pairing[a] = b
            pairing[b] = a
        self.pairing = pairing
        self.skeleton = None if skeleton is None else tuple(skeleton)
        self.circles = circles
        endpoint = {}
        for v, hs in enumerate(self.slots):
            for pos, h in enumerate(hs):
                endpoint[h] = (v, pos)
        self._endpoint = endpoint
        self._key = None

    @property
    def n_vertices(self):
        return len(self.kinds)

    def vertices_of_kind(self, kind):
        return [v for v, k in enumerate(self.kinds) if k == kind]

    def legs(self):
        return self.vertices_of_kind(U_VERT)

    def endpoint(self, h):
        """(vertex, slot position) carrying half-edge h."""
        return self._endpoint[h]

    def key(self):
        """Hashable structural identity of this labeled diagram."""
        if self._key is None:
            pairs = tuple(sorted((a, b) for a, b in self.pairing.items() if a < b))
            self._key = (self.kinds, self.slots, pairs, self.skeleton, self.circles)
        return self._key

    def __eq__(self, other):
        return isinstance(other, Diagram) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return "Diagram(S=%d,T=%d,U=%d,circles=%d)" % (
            len(self.vertices_of_kind(S_VERT)),
            len(self.vertices_of_kind(T_VERT)),
            len(self.vertices_of_kind(U_VERT)),
            self.circles,
        )


def empty_diagram(interval=False):
    return Diagram((), (), (), skeleton=() if interval else None)


def strut_diagram():
    """Single edge joining two legs; degree 1."""
    return Diagram((U_VERT, U_VERT), ((0,), (1,)), ((0, 1),))


def theta_diagram():
    """Two trivalent vertices joined by three parallel edges; degree 1.

    The two rotations are mirror images, as in the planar drawing with both
    vertices oriented counterclockwise.
    """
    return Diagram(
        (T_VERT, T_VERT),
        ((0, 1, 2), (3, 4, 5)),
        ((0, 5), (1, 4), (2, 3)),
    )


# ---------------------------------------------------------------------------
# validation and grading


def structure_violations(d: Diagram):
    """Invariant violations of the raw structure, as human-readable strings."""
    out = []
    seen = {}
    for v, k in enumerate(d.kinds):
        want = 3 if k == T_VERT else 1
        if len(d.slots[v]) != want:
            out.append("vertex %d (%s) has %d half-edges, wants %d"
                       % (v, k, len(d.slots[v]), want))
        for h in d.slots[v]:
            if h in seen:
                out.append("half-edge %d used at vertices %d and %d" % (h, seen[h], v))
            seen[h] = v
    for h in seen:
        mate = d.pairing.get(h)
        if mate is None:
            out.append("half-edge %d is unpaired" % h)
        elif mate == h:
            out.append("half-edge %d pairs with itself" % h)
        elif mate not in seen:
            out.append("half-edge %d pairs with unknown %d" % (h, mate))
        elif d.pairing.get(mate) != h:
            out.append("pairing of %d is not an involution" % h)
    for h in d.pairing:
        if h not in seen:
            out.append("pairing mentions unknown half-edge %d" % h)
    svs = d.vertices_of_kind(S_VERT)
    if d.skeleton is None:
        if svs:
            out.append("skeleton-attached vertices present but no skeleton order")
    else:
        if sorted(d.skeleton) != sorted(svs):
            out.append("skeleton order does not list the S vertices exactly")
    if d.circles < 0:
        out.append("negative circle count")
    return out


def _components(d: Diagram):
    """Connected components of the graph; with a skeleton, all S vertices
    (and the bare interval itself) count as one piece."""
    n = d.n_vertices
    parent = list(range(n + 1))  # extra node n = the skeleton line

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[rx] = ry

    for a, b in d.pairing.items():
        if a < b:
            union(d.endpoint(a)[0], d.endpoint(b)[0])
    has_skeleton = d.skeleton is not None
    if has_skeleton:
        for v in d.vertices_of_kind(S_VERT):
            union(v, n)
    roots = {find(v) for v in range(n)}
    if has_skeleton:
        roots.add(find(n))
    comps = {}
    for v in range(n):
        comps.setdefault(find(v), []).append(v)
    return roots, comps, find, n


def component_count(d: Diagram):
    roots, _comps, _find, _skel = _components(d)
    return len(roots) + d.circles


def validate_diagram(d: Diagram, kind: SpaceKind):
    """Full validity report for d as an element of the given space kind.

    Returns a list of violation strings; empty means valid.
    """
    out = structure_violations(d)
    if out:
        return out
    has_s = bool(d.vertices_of_kind(S_VERT)) or d.skeleton is not None
    has_u = bool(d.vertices_of_kind(U_VERT))
    if kind.skeleton:
        if d.skeleton is None:
            out.append("kind %s needs an interval skeleton" % kind.name)
        if has_u:
            out.append("kind %s forbids univalent legs" % kind.name)
    else:
        if has_s:
            out.append("kind %s forbids skeleton vertices" % kind.name)
    nv = d.n_vertices
    if nv % 2 != 0:
        out.append("odd vertex count %d has no integer degree" % nv)
    if out:
        return out
    if kind.connectivity == "connected":
        if component_count(d) != 1 and not (nv == 0 and d.circles == 0):
            out.append("diagram is not connected (kind %s)" % kind.name)
    elif kind.connectivity == "legs":
        if d.circles:
            out.append("circle component has no leg (kind %s)" % kind.name)
        _roots, comps, find, _skel = _components(d)
        for root, verts in comps.items():
            if not any(d.kinds[v] == U_VERT for v in verts):
                out.append(
                    "component of vertex %d has no leg (kind %s)"
                    % (min(verts), kind.name)
                )
    return out


def degree_of(d: Diagram):
    """Half the number of vertices (S+T with a skeleton, U+T without)."""
    nv = d.n_vertices
    if nv % 2 != 0:
        raise MalformedDiagramError("odd vertex count %d" % nv)
    return nv // 2


# ---------------------------------------------------------------------------
# canonical forms


@dataclass(frozen=True, order=True)
class CanonicalDiagram:
    """Canonical serialized diagram plus cheap metadata."""

    bytes: bytes
    degree: int
    legs: int
    components: int
    skeleton: bool

    def __repr__(self):
        return self.bytes.decode()


_LEG_TOKEN = 1 << 22
_FUTURE_TOKEN = _LEG_TOKEN + 1
_ROWBASE = _FUTURE_TOKEN + 1

_CANON_MEMO = {}
_WORD_MEMO = {}
_PREP_MEMO = {}


class _ZeroDetected(Exception):
    pass


class _Found(Exception):
    pass


def _has_self_loop(d: Diagram):
    for a, b in d.pairing.items():
        if a < b and d.endpoint(a)[0] == d.endpoint(b)[0]:
            return True
    return False


def _wl_colors(d, tvs, partner_vertex):
    """Isomorphism-invariant refinement colors for the internal vertices.

    Seeded with per-vertex distance and multiplicity profiles (these break
    up regular graphs that plain neighbor refinement cannot), then refined
    with rank compression.  Colors are stable across relabelings, so they
    can safely steer (and be folded into) the canonical search order.
    """
    if not tvs:
        return {}
    adj = {v: [] for v in range(d.n_vertices)}
    for a, b in d.pairing.items():
        if a < b:
            u = partner_vertex[a]
            w = partner_vertex[b]
            adj[u].append(w)
            adj[w].append(u)

    def far_key(w):
        k = d.kinds[w]
        if k == T_VERT:
            return 0
        if k == U_VERT:
            return 1
        return 2 + d.skeleton.index(w)

    seeds = {}
    for v in tvs:
        dist = {v: 0}
        frontier = [v]
        while frontier:
            nxt = []
            for x in frontier:
                for y in adj[x]:
                    if y not in dist:
                        dist[y] = dist[x] + 1
                        nxt.append(y)
            frontier = nxt
        reach = tuple(sorted((dd, far_key(w)) for w, dd in dist.items()))
        mults = {}
        for w in adj[v]:
            mults[w] = mults.get(w, 0) + 1
        loops = mults.pop(v, 0)
        seeds[v] = (loops, tuple(sorted(mults.values())), reach)
    ranks = {key: i for i, key in enumerate(sorted(set(seeds.values())))}
    colors = {v: ranks[seeds[v]] for v in tvs}

    for _round in range(len(tvs)):
        profiles = {}
        for v in tvs:
            prof = []
            for h in d.slots[v]:
                w = partner_vertex[d.pairing[h]]
                if w == v:
                    prof.append((0,))
                elif d.kinds[w] == U_VERT:
                    prof.append((1,))
                elif d.kinds[w] == S_VERT:
                    prof.append((2, d.skeleton.index(w)))
                else:
                    prof.append((3, colors[w]))
            profiles[v] = (colors[v], tuple(sorted(prof)))
        ranks = {key: i for i, key in enumerate(sorted(set(profiles.values())))}
        new = {v: ranks[profiles[v]] for v in tvs}
        if new == colors:
            break
        colors = new
    return colors


class _Engine:
    """Shared state for the canonical-word search and word identification.

    Labels are assigned in blocks: skeleton vertices first (their order is
    fixed), then internal vertices (searched), then legs (forced).  A word
    is one packed integer row per skeleton/internal vertex plus a final leg
    block; rows carry the vertex refinement color so ties break early.
    """

    def __init__(self, d: Diagram):
        self.d = d
        self.svs = list(d.skeleton) if d.skeleton is not None else []
        self.tvs = d.vertices_of_kind(T_VERT)
        self.uvs = d.vertices_of_kind(U_VERT)
        self.ns = len(self.svs)
        self.nt = len(self.tvs)
        self.kinds = d.kinds
        self.pairing = d.pairing
        self.slots = d.slots
        pv = {}
        pp = {}
        for v, hs in enumerate(d.slots):
            for pos, h in enumerate(hs):
                pv[h] = v
                pp[h] = pos
        self.partner_vertex = pv
        self.partner_pos = pp
        self.colors = _wl_colors(d, self.tvs, pv)
        self.colorbase = {v: self.colors[v] * _ROWBASE ** 3 for v in self.tvs}
        self.adjacency = {
            v: sorted({pv[d.pairing[h]] for h in d.slots[v]}) for v in self.tvs
        }
        self.has_selfloop = {
            v: any(pv[d.pairing[h]] == v for h in d.slots[v]) for v in self.tvs
        }
        self.label = [None] * d.n_vertices
        self.variant_of = [None] * d.n_vertices
        for i, v in enumerate(self.svs):
            self.label[v] = i
        self.srows = [self.token(d.slots[v][0]) for v in self.svs]

    def variant_tuple(self, v, k):
        s = self.slots[v]
        if k < 3:
            return (s[k], s[(k + 1) % 3], s[(k + 2) % 3])
        r = k - 3
        return (s[r], s[(r - 1) % 3], s[(r - 2) % 3])

    def pos_in_variant(self, w, orig_pos):
        k = self.variant_of[w]
        if k is None:
            return orig_pos
        if k < 3:
            return (orig_pos - k) % 3
        return (k - 3 - orig_pos) % 3

    def token(self, h):
        h2 = self.pairing[h]
        w = self.partner_vertex[h2]
        lw = self.label[w]
        if lw is None:
            return _LEG_TOKEN if self.kinds[w] == U_VERT else _FUTURE_TOKEN
        return lw * 4 + self.pos_in_variant(w, self.partner_pos[h2])

    def vertex_rows(self, v, lbl):
        """The six (row, variant) pairs for labeling v next."""
        label = self.label
        label[v] = lbl
        out = []
        cb = self.colorbase[v]
        b = _ROWBASE
        if self.has_selfloop[v]:
            for k in range(6):
                variant = self.variant_tuple(v, k)
                self.variant_of[v] = k
                row = cb + ((self.token(variant[0]) * b
                             + self.token(variant[1])) * b
                            + self.token(variant[2]))
                out.append((row, k))
            self.variant_of[v] = None
        else:
            s = self.slots[v]
            t0, t1, t2 = self.token(s[0]), self.token(s[1]), self.token(s[2])
            out.append((cb + (t0 * b + t1) * b + t2, 0))
            out.append((cb + (t1 * b + t2) * b + t0, 1))
            out.append((cb + (t2 * b + t0) * b + t1, 2))
            out.append((cb + (t0 * b + t2) * b + t1, 3))
            out.append((cb + (t1 * b + t0) * b + t2, 4))
            out.append((cb + (t2 * b + t1) * b + t0, 5))
        label[v] = None
        return out

    def leg_block(self):
        attached = []
        nstruts = 0
        for u in self.uvs:
            h2 = self.pairing[self.slots[u][0]]
            w = self.partner_vertex[h2]
            if self.kinds[w] == U_VERT:
                nstruts += 1
            else:
                attached.append(self.label[w] * 4
                                + self.pos_in_variant(w, self.partner_pos[h2]))
        attached.sort()
        return tuple(attached) + (_ROWBASE + nstruts // 2,)

    def build_edges(self):
        base = self.ns + self.nt
        items = []
        for u in self.uvs:
            h2 = self.pairing[self.slots[u][0]]
            w = self.partner_vertex[h2]
            if self.kinds[w] == U_VERT:
                items.append(((1, min(u, w)), u))
            else:
                items.append(((0, self.label[w],
                               self.pos_in_variant(w, self.partner_pos[h2])), u))
        items.sort()
        leg_label = {u: base + i for i, (_key, u) in enumerate(items)}

        def ep(h):
            w = self.partner_vertex[h]
            if self.kinds[w] == U_VERT:
                return (leg_label[w], 0)
            return (self.label[w], self.pos_in_variant(w, self.partner_pos[h]))

        edges = []
        for a, b in self.pairing.items():
            if a < b:
                e1, e2 = ep(a), ep(b)
                edges.append((e1, e2) if e1 <= e2 else (e2, e1))
        edges.sort()
        return tuple(edges)

    def buckets(self, unassigned):
        """Unassigned vertices grouped by the best token class they can
        lead a row with: adjacent-to-labeled (or self-loop) vertices can
        start with a concrete reference, then leg-adjacent, then the rest."""
        bucket_a, bucket_leg, bucket_rest = [], [], []
        label = self.label
        kinds = self.kinds
        for v in unassigned:
            hit = False
            for w in self.adjacency[v]:
                if w == v or label[w] is not None:
                    hit = True
                    break
            if hit:
                bucket_a.append(v)
            elif any(kinds[w] == U_VERT for w in self.adjacency[v]):
                bucket_leg.append(v)
            else:
                bucket_rest.append(v)
        return bucket_a, bucket_leg, bucket_rest

    # -- canonical search ---------------------------------------------------

    def canonical(self, track_signs=True):
        """('zero', word) or (sign, word, edges); the word is the minimum
        over labelings, restricting the first internal vertex to the least
        color class (an isomorphism-invariant restriction).  With
        track_signs=False the orientation-sign quotient is ignored: the
        search returns a plain isomorphism-class representative (sign +1)
        even for diagrams that would be zero under the sign rule."""
        state = {"best": None, "signs": None, "edges": None, "version": 0}
        trows = [None] * self.nt
        unassigned = list(self.tvs)
        min_color = min(self.colors.values()) if self.colors else 0
        start_class = ({v for v in self.tvs if self.colors[v] == min_color}
                       if (self.ns == 0 and self.nt > 0) else None)
        ns, nt = self.ns, self.nt
        srows = tuple(self.srows)

        def complete(sign):
            word = srows + tuple(trows) + (self.leg_block(),)
            best = state["best"]
            if best is None or word < best:
                state["best"] = word
                state["signs"] = {sign}
                state["edges"] = self.build_edges()
                state["version"] += 1
            elif word == best and track_signs:
                signs = state["signs"]
                signs.add(sign)
                if len(signs) == 2:
                    raise _ZeroDetected

        def search(pos, sign, rel_eq):
            if pos == nt:
                complete(sign)
                return
            lbl = ns + pos
            if pos == 0 and start_class is not None:
                cvs = [v for v in unassigned if v in start_class]
            else:
                a, leg, rest = self.buckets(unassigned)
                cvs = a or leg or rest
            cands = []
            for v in cvs:
                for row, k in self.vertex_rows(v, lbl):
                    cands.append((row, v, k))
            cands.sort()
            word_pos = ns + pos
            for row, v, k in cands:
                child_eq = False
                best = state["best"]
                if best is not None:
                    if rel_eq:
                        ref = best[word_pos]
                        if row > ref:
                            break
                        child_eq = row == ref
                else:
                    child_eq = True
                version_before = state["version"]
                self.label[v] = lbl
                self.variant_of[v] = k
                trows[pos] = row
                unassigned.remove(v)
                search(pos + 1, -sign if k >= 3 else sign, child_eq)
                unassigned.append(v)
                self.variant_of[v] = None
                self.label[v] = None
                trows[pos] = None
                if state["version"] != version_before:
                    rel_eq = True  # the new best extends our current prefix

        try:
            search(0, 1, True)
        except _ZeroDetected:
            return ("zero", state["best"])
        if not track_signs:
            return (1, state["best"], state["edges"])
        sign = 1 if 1 in state["signs"] else -1
        return (sign, state["best"], state["edges"])

    # -- identification -----------------------------------------------------

    def identify(self, word):
        """True iff some labeling of this diagram realizes the given word.

        Any achievable word of a class works as a key: only equal-row
        branches are explored, a full match certifies isomorphism, and a
        non-isomorphic diagram can never complete the whole word.
        """
        if len(word) != self.ns + self.nt + 1:
            return False
        if tuple(self.srows) != word[:self.ns]:
            return False
        unassigned = list(self.tvs)
        ns, nt = self.ns, self.nt

        def search(pos):
            if pos == nt:
                if self.leg_block() == word[-1]:
                    raise _Found
                return
            ref = word[ns + pos]
            lbl = ns + pos
            first = (ref // (_ROWBASE ** 2)) % _ROWBASE
            bucket_a, bucket_leg, bucket_rest = self.buckets(unassigned)
            if first < _LEG_TOKEN:
                cvs = bucket_a
            elif first == _LEG_TOKEN:
                cvs = bucket_a + bucket_leg
            else:
                cvs = bucket_a + bucket_leg + bucket_rest
            for v in cvs:
                hits = [k for row, k in self.vertex_rows(v, lbl) if row == ref]
                if not hits:
                    continue
                self.label[v] = lbl
                unassigned.remove(v)
                for k in hits:
                    self.variant_of[v] = k
                    search(pos + 1)
                unassigned.append(v)
                self.variant_of[v] = None
                self.label[v] = None

        try:
            search(0)
        except _Found:
            return True
        return False


def _prep(d: Diagram) -> _Engine:
    key = d.key()
    eng = _PREP_MEMO.get(key)
    if eng is None:
        eng = _Engine(d)
        _PREP_MEMO[key] = eng
    return eng


def canonical_form(d: Diagram):
    """Canonicalize up to orientation-preserving isomorphism.

    Returns (sign, CanonicalDiagram), or None when the diagram admits an
    automorphism whose total rotation-reversal sign is -1 (so it is zero in
    any quotient that imposes the orientation sign rule).  The sign reports
    the reversal parity needed to reach the canonical representative.
    """
    memo_key = d.key()
    hit = _CANON_MEMO.get(memo_key)
    if hit is not None:
        return hit if hit != 0 else None
    bad = structure_violations(d)
    if bad:
        raise MalformedDiagramError("; ".join(bad))
    if _has_self_loop(d):
        # swapping the two loop half-edges reverses that vertex's cyclic
        # order and fixes everything else: a sign -1 automorphism
        _CANON_MEMO[memo_key] = 0
        return None
    res = _prep(d).canonical()
    _PREP_MEMO.pop(memo_key, None)
    if res[0] == "zero":
        _CANON_MEMO[memo_key] = 0
        return None
    sign, word, edges = res
    enc = _encode(d, edges, len(d.skeleton or ()) if d.skeleton is not None
                  else 0, len(d.vertices_of_kind(T_VERT)),
                  len(d.vertices_of_kind(U_VERT)))
    cd = CanonicalDiagram(
        bytes=enc,
        degree=degree_of(d),
        legs=len(d.vertices_of_kind(U_VERT)),
        components=component_count(d),
        skeleton=d.skeleton is not None,
    )
    _WORD_MEMO[enc] = word
    _CANON_MEMO[memo_key] = (sign, cd)
    return sign, cd


def _certificate(eng: _Engine):
    """Cheap isomorphism invariant used to bucket identification candidates."""
    d = eng.d

    def vkey(v):
        k = d.kinds[v]
        if k == T_VERT:
            return (2, eng.colors[v])
        if k == S_VERT:
            return (0, d.skeleton.index(v))
        return (1, 0)

    edges = sorted(
        tuple(sorted((vkey(eng.partner_vertex[a]), vkey(eng.partner_vertex[b]))))
        for a, b in d.pairing.items() if a < b
    )
    return (
        d.skeleton is not None,
        d.circles,
        eng.ns,
        eng.nt,
        len(eng.uvs),
        tuple(sorted(eng.colors.values())),
        tuple(edges),
    )


class CanonicalSet:
    """Collects the distinct canonical classes of a stream of diagrams,
    identifying repeats (including repeats of zero classes) against stored
    words instead of re-canonicalizing them.

    With signed=True (the default) classes that are zero under the sign
    rule are dropped from the result.  With signed=False plain isomorphism
    classes are collected.  Either way diagrams with a self-loop are
    skipped: every embedding and ordering of such a diagram stays zero.
    """

    def __init__(self, signed=True):
        self.signed = signed
        self._buckets = {}
        self.found = {}

    def add(self, d: Diagram):
        if _has_self_loop(d):
            return
        eng = _prep(d)
        cert = _certificate(eng)
        bucket = self._buckets.setdefault(cert, [])
        for word in bucket:
            if eng.identify(word):
                _PREP_MEMO.pop(d.key(), None)
                return
        res = eng.canonical(track_signs=self.signed)
        _PREP_MEMO.pop(d.key(), None)
        if res[0] == "zero":
            _CANON_MEMO[d.key()] = 0
            if res[1] is not None:
                bucket.append(res[1])
            return
        sign, word, edges = res
        enc = _encode(d, edges, eng.ns, eng.nt, len(eng.uvs))
        cd = CanonicalDiagram(
            bytes=enc, degree=degree_of(d), legs=len(eng.uvs),
            components=component_count(d), skeleton=d.skeleton is not None,
        )
        _WORD_MEMO[enc] = word
        if self.signed:
            _CANON_MEMO[d.key()] = (sign, cd)
        if cd.bytes not in self.found:
            self.found[cd.bytes] = cd
            bucket.append(word)

    def sorted_diagrams(self):
        return [self.found[b] for b in sorted(self.found)]


def _encode(d, edges, ns, nt, nu):
    estr = ",".join("%d.%d-%d.%d" % (e[0][0], e[0][1], e[1][0], e[1][1])
                    for e in edges)
    txt = "%s|k:%s|c:%d|S:%d|T:%d|U:%d|E:%s" % (
        ENCODING_VERSION,
        "I" if d.skeleton is not None else "N",
        d.circles, ns, nt, nu, estr,
    )
    return txt.encode()


def canonical_to_diagram(cd: CanonicalDiagram) -> Diagram:
    """Decode canonical bytes back into a concrete labeled diagram."""
    return decode_bytes(cd.bytes)


def decode_bytes(enc: bytes) -> Diagram:
    txt = enc.decode()
    fields = txt.split("|")
    if fields[0] != ENCODING_VERSION:
        raise MalformedDiagramError("unknown encoding version %r" % fields[0])
    vals = {}
    for f in fields[1:]:
        k, _, v = f.partition(":")
        vals[k] = v
    interval = vals["k"] == "I"
    circles = int(vals["c"])
    ns, nt, nu = int(vals["S"]), int(vals["T"]), int(vals["U"])
    kinds = [S_VERT] * ns + [T_VERT] * nt + [U_VERT] * nu
    slots = []
    h = 0
    for k in kinds:
        width = 3 if k == T_VERT else 1
        slots.append(tuple(range(h, h + width)))
        h += width
    pairs = []
    if vals["E"]:
        for part in vals["E"].split(","):
            a, b = part.split("-")
            v1, p1 = (int(x) for x in a.split("."))
            v2, p2 = (int(x) for x in b.split("."))
            pairs.append((slots[v1][p1], slots[v2][p2]))
    return Diagram(kinds, slots, pairs,
                   skeleton=tuple(range(ns)) if interval else None,
                   circles=circles)


# ---------------------------------------------------------------------------
# disjoint union and relabeling helpers


def relabel_shift(d: Diagram, vshift, hshift):
    slots = tuple(tuple(h + hshift for h in hs) for hs in d.slots)
    pairs = [(a + hshift, b + hshift) for a, b in d.pairing.items() if a < b]
    skel = None if d.skeleton is None else tuple(v + vshift for v in d.skeleton)
    return d.kinds, slots, pairs, skel


def disjoint_union(d1: Diagram, d2: Diagram) -> Diagram:
    """Disjoint union of two characters (no skeleton on either side)."""
    if d1.skeleton is not None or d2.skeleton is not None:
        raise KindMismatchError("disjoint union is defined on characters only")
    hmax = max((h for h in d1.pairing), default=-1) + 1
    k2, s2, p2, _ = relabel_shift(d2, d1.n_vertices, hmax)
    pairs = [(a, b) for a, b in d1.pairing.items() if a < b] + p2
    return Diagram(d1.kinds + k2, d1.slots + s2, pairs,
                   circles=d1.circles + d2.circles)


# ---------------------------------------------------------------------------
# enumeration


def _gen_connected_characters(nu, nt):
    """All connected characters with nu legs and nt trivalent vertices,
    one labeled representative per raw pairing; rotations are fixed by
    construction since opposite orientations merge under canonicalization."""
    if nt == 0:
        if nu == 2:
            yield strut_diagram()
        return
    if nu > 0 and nt == 0:
        return

    kinds = [T_VERT]
    slots = [(0, 1, 2)]
    unpaired = [0, 1, 2]
    pairs = []
    state = {"next_h": 3, "u_left": nu, "t_left": nt - 1}

    def emit():
        yield Diagram(tuple(kinds), tuple(slots), tuple(pairs))

    def rec():
        if not unpaired:
            if state["u_left"] == 0 and state["t_left"] == 0:
                yield from emit()
            return
        h = unpaired[0]
        rest = unpaired[1:]
        # pair with an existing unpaired half-edge
        for i, h2 in enumerate(rest):
            unpaired[:] = rest[:i] + rest[i + 1:]
            pairs.append((h, h2))
            yield from rec()
            pairs.pop()
            unpaired[:] = [h] + rest
        # pair with a fresh trivalent vertex
        if state["t_left"] > 0:
            state["t_left"] -= 1
            base = state["next_h"]
            state["next_h"] += 3
            kinds.append(T_VERT)
            slots.append((base, base + 1, base + 2))
            pairs.append((h, base))
            unpaired[:] = rest + [base + 1, base + 2]
            yield from rec()
            unpaired[:] = [h] + rest
            pairs.pop()
            slots.pop()
            kinds.pop()
            state["next_h"] -= 3
            state["t_left"] += 1
        # pair with a fresh leg
        if state["u_left"] > 0:
            state["u_left"] -= 1
            base = state["next_h"]
            state["next_h"] += 1
            kinds.append(U_VERT)
            slots.append((base,))
            pairs.append((h, base))
            unpaired[:] = rest
            yield from rec()
            unpaired[:] = [h] + rest
            pairs.pop()
            slots.pop()
            kinds.pop()
            state["next_h"] -= 1
            state["u_left"] += 1

    yield from rec()


_CONNECTED_CACHE = {}


def connected_character_classes(degree):
    """Isomorphism classes of connected characters of the degree (without
    the orientation-sign quotient, so classes that are zero under the sign
    rule are still listed; self-loop classes are omitted since every use of
    them vanishes)."""
    if degree in _CONNECTED_CACHE:
        return _CONNECTED_CACHE[degree]
    collector = CanonicalSet(signed=False)
    for nu in range(2 * degree + 1):
        nt = 2 * degree - nu
        for d in _gen_connected_characters(nu, nt):
            collector.add(d)
    out = collector.sorted_diagrams()
    _CONNECTED_CACHE[degree] = out
    return out


_CLASSES_CACHE = {}


def _character_classes(degree, kind):
    """Isomorphism classes of characters of the degree under the kind's
    component policy (disjoint unions of connected classes)."""
    cache_key = (degree, kind.connectivity)
    if cache_key in _CLASSES_CACHE:
        return _CLASSES_CACHE[cache_key]
    pieces_by_degree = {
        m: [c for c in connected_character_classes(m)
            if kind.connectivity != "legs" or c.legs > 0]
        for m in range(1, degree + 1)
    }
    out = {}

    def register(d):
        eng = _prep(d)
        res = eng.canonical(track_signs=False)
        _PREP_MEMO.pop(d.key(), None)
        _sign, word, edges = res
        enc = _encode(d, edges, eng.ns, eng.nt, len(eng.uvs))
        cd = CanonicalDiagram(
            bytes=enc, degree=degree_of(d), legs=len(eng.uvs),
            components=component_count(d), skeleton=False,
        )
        _WORD_MEMO[enc] = word
        out[enc] = cd

    def rec(m_left, min_degree, chosen_piece_idx, acc):
        if m_left == 0:
            register(acc if acc is not None else empty_diagram(False))
            return
        for m in range(min_degree, m_left + 1):
            pieces = pieces_by_degree[m]
            start = chosen_piece_idx if m == min_degree else 0
            for i in range(start, len(pieces)):
                dpiece = canonical_to_diagram(pieces[i])
                nxt = dpiece if acc is None else disjoint_union(acc, dpiece)
                rec(m_left - m, m, i, nxt)

    rec(degree, 1, 0, None)
    result = [out[b] for b in sorted(out)]
    _CLASSES_CACHE[cache_key] = result
    return result


def _character_spanning(degree, kind):
    """Nonzero canonical characters of the degree under the kind's policy."""
    out = []
    for cd in _character_classes(degree, kind):
        res = canonical_form(canonical_to_diagram(cd))
        if res is not None:
            out.append(res[1])
    return sorted(out, key=lambda c: c.bytes)


def legs_to_skeleton(d: Diagram, order) -> Diagram:
    """Turn a character into an interval diagram by turning its legs into
    skeleton vertices arranged in the given order (a sequence of the leg
    vertex ids)."""
    kinds = tuple(S_VERT if k == U_VERT else k for k in d.kinds)
    pairs = [(a, b) for a, b in d.pairing.items() if a < b]
    return Diagram(kinds, d.slots, pairs, skeleton=tuple(order),
                   circles=d.circles)


def _matchings(points):
    if not points:
        yield []
        return
    first = points[0]
    for i in range(1, len(points)):
        rest = points[1:i] + points[i + 1:]
        for sub in _matchings(rest):
            yield [(first, points[i])] + sub


def _chord_diagrams(nchords):
    """All interval diagrams with nchords chords and no internal vertex;
    the skeleton is rigid, so every matching is already canonical."""
    n = 2 * nchords
    kinds = (S_VERT,) * n
    slots = tuple((i,) for i in range(n))
    for match in _matchings(list(range(n))):
        yield Diagram(kinds, slots, match, skeleton=tuple(range(n)))


def _interval_spanning(degree, kind):
    """Interval diagrams of the degree: every one is some character of the
    same degree with its legs arranged along the skeleton.  The characters
    run over plain isomorphism classes: a character killed by its own leg
    symmetry can still have nonzero orderings."""
    source = B if kind.connectivity == "connected" else BPRIME
    collector = CanonicalSet()
    for cd in _character_classes(degree, source):
        char = canonical_to_diagram(cd)
        if cd.legs and not char.vertices_of_kind(T_VERT) and not char.circles:
            for d in _chord_diagrams(cd.legs // 2):
                collector.add(d)
            continue
        for order in itertools.permutations(char.legs()):
            collector.add(legs_to_skeleton(char, order))
    return collector.sorted_diagrams()


def enumerate_diagrams(degree, kind: SpaceKind, cap=DEFAULT_DEGREE_CAP):
    """Distinct nonzero canonical diagrams of the degree and kind, sorted."""
    if degree < 0:
        raise MalformedDiagramError("negative degree")
    if degree > cap:
        raise ResourceLimitError(
            "degree %d above configured cap %d" % (degree, cap))
    if degree == 0:
        res = canonical_form(empty_diagram(kind.skeleton))
        return [res[1]]
    if kind.skeleton:
        return _interval_spanning(degree, kind)
    return _character_spanning(degree, kind)


# ---------------------------------------------------------------------------
# text format


def format_diagram(d: Diagram) -> str:
    lines = ["skeleton: %s" % ("interval" if d.skeleton is not None else "none")]
    for v, k in enumerate(d.kinds):
        lines.append("%s %d: %s" % (k, v, " ".join(str(h) for h in d.slots[v])))
    for a, b in sorted((a, b) for a, b in d.pairing.items() if a < b):
        lines.append("E: %d %d" % (a, b))
    if d.skeleton is not None and d.skeleton:
        lines.append("order: %s" % " ".join(str(v) for v in d.skeleton))
    if d.circles:
        lines.append("circles: %d" % d.circles)
    return "\n".join(lines) + "\n"


def parse_diagram(text: str) -> Diagram:
    """Parse the diagram text format (see format_diagram); '#' comments."""
    skeleton_mode = None
    verts = {}
    pairs = []
    order = None
    circles = 0
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("skeleton:"):
            mode = line.split(":", 1)[1].strip()
            if mode not in ("interval", "none"):
                raise MalformedDiagramError("bad skeleton mode %r" % mode)
            skeleton_mode = mode
            continue
        if line.startswith("order:"):
            order = [int(x) for x in line.split(":", 1)[1].split()]
            continue
        if line.startswith("circles:"):
            circles = int(line.split(":", 1)[1])
            continue
        if line.startswith("E:"):
            a, b = (int(x) for x in line.split(":", 1)[1].split())
            pairs.append((a, b))
            continue
        head, _, rest = line.partition(":")
        parts = head.split()
        if len(parts) != 2 or parts[0] not in (S_VERT, T_VERT, U_VERT):
            raise MalformedDiagramError("cannot parse line %r" % raw)
        kind, vid = parts[0], int(parts[1])
        hs = tuple(int(x) for x in rest.split())
        if vid in verts:
            raise MalformedDiagramError("duplicate vertex id %d" % vid)
        verts[vid] = (kind, hs)
    if skeleton_mode is None:
        raise MalformedDiagramError("missing 'skeleton:' header")
    vids = sorted(verts)
    remap = {vid: i for i, vid in enumerate(vids)}
    kinds = [verts[v][0] for v in vids]
    slots = [verts[v][1] for v in vids]
    skeleton = None
    if skeleton_mode == "interval":
        svs = [v for v in vids if verts[v][0] == S_VERT]
        if order is None:
            order = svs
        skeleton = tuple(remap[v] for v in order)
    d = Diagram(kinds, slots, pairs, skeleton=skeleton, circles=circles)
    bad = structure_violations(d)
    if bad:
        raise MalformedDiagramError("; ".join(bad))
    return d
