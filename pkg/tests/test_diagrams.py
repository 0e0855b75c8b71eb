import itertools
import random

import pytest

from jdiag.diagrams import (
    A,
    APRIME,
    B,
    BPRIME,
    Diagram,
    S_VERT,
    T_VERT,
    U_VERT,
    canonical_form,
    canonical_to_diagram,
    component_count,
    degree_of,
    disjoint_union,
    empty_diagram,
    enumerate_diagrams,
    format_diagram,
    legs_to_skeleton,
    parse_diagram,
    strut_diagram,
    structure_violations,
    theta_diagram,
    validate_diagram,
)
from jdiag.errors import KindMismatchError, ResourceLimitError


def wheel(n):
    """n-gon with n legs, rotations (previous edge, next edge, leg)."""
    kinds = [T_VERT] * n + [U_VERT] * n
    slots = [(3 * i, 3 * i + 1, 3 * i + 2) for i in range(n)]
    slots += [(3 * n + i,) for i in range(n)]
    pairs = [(3 * i + 1, 3 * ((i + 1) % n)) for i in range(n)]
    pairs += [(3 * i + 2, 3 * n + i) for i in range(n)]
    return Diagram(kinds, slots, pairs)


def tadpole():
    return Diagram((T_VERT, U_VERT), ((0, 1, 2), (3,)), ((0, 1), (2, 3)))


# ---------------------------------------------------------------------------
# a tiny independent canonicalizer used as a sign/zero oracle


def brute_canonical(d):
    """Min-encoding over all labelings and rotations; totally naive."""
    n = d.n_vertices
    tvs = d.vertices_of_kind(T_VERT)
    uvs = d.vertices_of_kind(U_VERT)
    svs = list(d.skeleton) if d.skeleton is not None else []
    rest = tvs + uvs
    best = None
    signs = set()
    for perm in itertools.permutations(rest):
        order = svs + list(perm)
        label = {v: i for i, v in enumerate(order)}
        rot_choices = []
        for v in order:
            if d.kinds[v] == T_VERT:
                s = d.slots[v]
                rot_choices.append([
                    ((s[0], s[1], s[2]), 1), ((s[1], s[2], s[0]), 1),
                    ((s[2], s[0], s[1]), 1), ((s[0], s[2], s[1]), -1),
                    ((s[2], s[1], s[0]), -1), ((s[1], s[0], s[2]), -1),
                ])
            else:
                rot_choices.append([(tuple(d.slots[v]), 1)])
        for combo in itertools.product(*rot_choices):
            slot_order = {v: combo[i][0] for i, v in enumerate(order)}
            sign = 1
            for c in combo:
                sign *= c[1]
            pos = {}
            for v in order:
                for p, h in enumerate(slot_order[v]):
                    pos[h] = (label[v], p)
            edges = sorted(
                tuple(sorted((pos[a], pos[b])))
                for a, b in d.pairing.items() if a < b
            )
            key = tuple(edges)
            if best is None or key < best:
                best = key
                signs = {sign}
            elif key == best:
                signs.add(sign)
    if 1 in signs and -1 in signs:
        return None
    return (1 if 1 in signs else -1), best


# ---------------------------------------------------------------------------
# validation and grading


def test_empty_diagram_valid_everywhere():
    for kind in (APRIME, BPRIME):
        assert validate_diagram(empty_diagram(kind.skeleton), kind) == []


def test_theta_violates_leg_policy():
    errs = validate_diagram(theta_diagram(), B)
    assert errs and "no leg" in errs[0]
    assert validate_diagram(theta_diagram(), BPRIME) == []


def test_incomplete_pairing_is_reported():
    d = Diagram((T_VERT, U_VERT), ((0, 1, 2), (3,)), ((0, 3),))
    errs = structure_violations(d)
    assert any("unpaired" in e for e in errs)


def test_degrees():
    assert degree_of(strut_diagram()) == 1
    assert degree_of(theta_diagram()) == 1
    assert degree_of(wheel(4)) == 4
    chord = parse_diagram("skeleton: interval\nS 0: 0\nS 1: 1\nE: 0 1\n")
    assert degree_of(chord) == 1


def test_wheel_shape():
    for n in (2, 4, 6):
        w = wheel(n)
        assert validate_diagram(w, BPRIME) == []
        assert degree_of(w) == n
        assert len(w.legs()) == n
        assert component_count(w) == 1


# ---------------------------------------------------------------------------
# canonical forms


def test_as_sign_flip():
    t = theta_diagram()
    # aligned rotations at both ends differ from the mirror pair by one
    # reversal, so the sign flips
    flipped = Diagram((T_VERT, T_VERT), ((0, 1, 2), (3, 4, 5)),
                      ((0, 3), (1, 4), (2, 5)))
    r1 = canonical_form(t)
    r2 = canonical_form(flipped)
    assert r1[1].bytes == r2[1].bytes
    assert r1[0] == -r2[0]


def test_tadpole_is_zero_and_oracle_agrees():
    assert canonical_form(tadpole()) is None
    assert brute_canonical(tadpole()) is None


def test_two_wheel_edge_swap_keeps_sign():
    w = wheel(2)
    # exchanging the two parallel edges reverses the rotation at both ends:
    # two reversals, so the canonical form and the sign both survive
    swapped = Diagram(w.kinds, ((1, 0, 2), (4, 3, 5)) + w.slots[2:],
                      [(0, 4), (1, 3), (2, 6), (5, 7)])
    r1, r2 = canonical_form(w), canonical_form(swapped)
    assert r1[1].bytes == r2[1].bytes
    assert r1[0] == r2[0]
    # rewiring just one end is a single reversal and flips the sign
    half = Diagram(w.kinds, w.slots, [(0, 3), (1, 4), (2, 6), (5, 7)])
    r3 = canonical_form(half)
    assert r3[1].bytes == r1[1].bytes
    assert r3[0] == -r1[0]
    assert brute_canonical(w) is not None
    assert brute_canonical(half) is not None


def test_brute_oracle_matches_on_small_diagrams():
    cases = [strut_diagram(), theta_diagram(), wheel(2), tadpole(),
             disjoint_union(strut_diagram(), strut_diagram())]
    for d in cases:
        ours = canonical_form(d)
        oracle = brute_canonical(d)
        assert (ours is None) == (oracle is None)


def test_canonical_idempotent():
    for kind in (BPRIME, APRIME):
        for cd in enumerate_diagrams(2, kind):
            sign, again = canonical_form(canonical_to_diagram(cd))
            assert sign == 1
            assert again.bytes == cd.bytes


def test_relabeling_invariance():
    rng = random.Random(7)
    pool = enumerate_diagrams(2, BPRIME) + enumerate_diagrams(2, APRIME)
    for cd in pool:
        d = canonical_to_diagram(cd)
        perm = list(range(d.n_vertices))
        rng.shuffle(perm)
        # relabel vertices by perm (skeleton order follows its vertices)
        kinds = [None] * d.n_vertices
        slots = [None] * d.n_vertices
        for v in range(d.n_vertices):
            kinds[perm[v]] = d.kinds[v]
            slots[perm[v]] = d.slots[v]
        skel = None if d.skeleton is None else tuple(perm[v] for v in d.skeleton)
        shuffled = Diagram(kinds, slots,
                           [(a, b) for a, b in d.pairing.items() if a < b],
                           skeleton=skel)
        sign, cd2 = canonical_form(shuffled)
        assert cd2.bytes == cd.bytes
        assert sign == 1  # rotations untouched, so no reversal parity


def test_rotation_cycling_keeps_sign():
    w = wheel(2)
    s = w.slots
    cycled = Diagram(w.kinds, ((s[0][1], s[0][2], s[0][0]),) + w.slots[1:],
                     [(a, b) for a, b in w.pairing.items() if a < b])
    assert canonical_form(cycled) == canonical_form(w)


# ---------------------------------------------------------------------------
# enumeration


def brute_degree1_characters():
    """Independent oracle: all pairings on <=2 vertices of each profile."""
    found = set()
    # two legs: single pairing
    found.add("strut")
    # two trivalent vertices, no legs: pairings of {0,1,2}x{3,4,5}
    # (any pairing with a self-loop is zero; the only loop-free one is theta)
    return {"strut", "theta"}


def test_enumerate_degree0():
    for kind in (A, APRIME, B, BPRIME):
        lst = enumerate_diagrams(0, kind)
        assert len(lst) == 1
        assert lst[0].degree == 0


def test_enumerate_degree1():
    bprime = enumerate_diagrams(1, BPRIME)
    assert {(cd.legs, cd.components) for cd in bprime} == {(2, 1), (0, 1)}
    assert len(bprime) == len(brute_degree1_characters())
    b = enumerate_diagrams(1, B)
    assert len(b) == 1 and b[0].legs == 2


def test_enumerate_sorted_and_stable():
    lst1 = enumerate_diagrams(2, BPRIME)
    lst2 = enumerate_diagrams(2, BPRIME)
    assert lst1 == lst2
    assert [cd.bytes for cd in lst1] == sorted(cd.bytes for cd in lst1)


def test_enumerate_cap():
    with pytest.raises(ResourceLimitError):
        enumerate_diagrams(7, BPRIME)


# ---------------------------------------------------------------------------
# disjoint union


def test_union_unit():
    s = strut_diagram()
    u = disjoint_union(s, empty_diagram())
    assert canonical_form(u) == canonical_form(s)


def test_union_degree_additive():
    w = wheel(2)
    u = disjoint_union(w, w)
    assert degree_of(u) == 4
    assert component_count(u) == 2


def test_union_strut_theta():
    u = disjoint_union(strut_diagram(), theta_diagram())
    assert degree_of(u) == 2
    assert len(u.legs()) == 2
    assert component_count(u) == 2


def test_union_rejects_skeleton():
    chord = parse_diagram("skeleton: interval\nS 0: 0\nS 1: 1\nE: 0 1\n")
    with pytest.raises(KindMismatchError):
        disjoint_union(chord, strut_diagram())


# ---------------------------------------------------------------------------
# text format


def test_text_roundtrip():
    for cd in enumerate_diagrams(2, APRIME)[:6]:
        d = canonical_to_diagram(cd)
        again = parse_diagram(format_diagram(d))
        assert canonical_form(again)[1].bytes == cd.bytes


def test_parse_comments_and_order():
    text = """
    # a single chord
    skeleton: interval
    S 10: 4
    S 11: 9
    E: 4 9
    order: 10 11
    """
    d = parse_diagram(text)
    assert degree_of(d) == 1
    assert validate_diagram(d, APRIME) == []


def test_legs_to_skeleton_roundtrip_shape():
    w = wheel(2)
    sk = legs_to_skeleton(w, w.legs())
    assert sk.skeleton is not None
    assert validate_diagram(sk, APRIME) == []
    assert degree_of(sk) == 2
