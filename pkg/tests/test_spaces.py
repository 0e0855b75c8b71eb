import random

import pytest

from jdiag.diagrams import (
    A,
    APRIME,
    B,
    BPRIME,
    canonical_to_diagram,
    enumerate_diagrams,
)
from jdiag.errors import (
    CacheIntegrityError,
    CacheVersionError,
    MalformedDiagramError,
    ResourceLimitError,
)
from jdiag.rationals import QQ
from jdiag.spaces import (
    Combo,
    build_quotient,
    cache_load,
    cache_store,
    reduce_combo,
    relation_generators,
    space_dimension,
)

MAXDEG = 3


def random_combo(rng, degree, kind):
    c = Combo(kind)
    for cd in enumerate_diagrams(degree, kind):
        if rng.random() < 0.5:
            c.add_term(cd, QQ(rng.randint(-4, 4), rng.randint(1, 5)))
    return c


def test_degree1_generator_counts():
    # no STU site needs resolving at degree 1 (the lollipop is already zero)
    assert relation_generators(1, APRIME) == []
    assert relation_generators(1, BPRIME) == []


def test_generators_reduce_to_zero():
    for m in range(1, MAXDEG + 1):
        for kind in (A, APRIME, B, BPRIME):
            space = build_quotient(m, kind)
            for gen in relation_generators(m, kind):
                assert reduce_combo(gen, space) == {}


def test_dimension_table():
    # regression fixtures computed by this tool; the cross-check is the
    # equality of the two independently built primed columns
    expect = {
        A: [1, 1, 2, 3],
        B: [1, 1, 2, 3],
        APRIME: [1, 2, 5, 10],
        BPRIME: [1, 2, 5, 10],
    }
    for kind, dims in expect.items():
        got = [space_dimension(m, kind) for m in range(MAXDEG + 1)]
        assert got == dims


def test_primed_dimensions_agree_up_to_4():
    for m in range(5):
        assert space_dimension(m, APRIME) == space_dimension(m, BPRIME)


def test_basis_elements_reduce_to_units():
    space = build_quotient(2, BPRIME)
    for pos, idx in enumerate(space.basis):
        combo = Combo(BPRIME, {space.spanning[idx]: QQ(1)})
        assert reduce_combo(combo, space) == {pos: QQ(1)}


def test_reduction_is_linear():
    rng = random.Random(11)
    space = build_quotient(MAXDEG, BPRIME)
    for _ in range(10):
        x = random_combo(rng, MAXDEG, BPRIME)
        y = random_combo(rng, MAXDEG, BPRIME)
        a = QQ(rng.randint(-3, 3), rng.randint(1, 4))
        b = QQ(rng.randint(-3, 3), rng.randint(1, 4))
        lhs = reduce_combo(x.scale(a) + y.scale(b), space)
        rx = reduce_combo(x, space)
        ry = reduce_combo(y, space)
        rhs = {}
        for pos, v in rx.items():
            rhs[pos] = rhs.get(pos, QQ(0)) + a * v
        for pos, v in ry.items():
            rhs[pos] = rhs.get(pos, QQ(0)) + b * v
        rhs = {k: v for k, v in rhs.items() if v != 0}
        assert lhs == rhs


def test_reduce_rejects_wrong_degree():
    space = build_quotient(1, BPRIME)
    combo = Combo(BPRIME)
    combo.add_term(enumerate_diagrams(2, BPRIME)[0], QQ(1))
    with pytest.raises(MalformedDiagramError):
        reduce_combo(combo, space)


def test_rebuild_is_deterministic():
    import jdiag.spaces as spaces

    s1 = build_quotient(2, APRIME)
    spaces._SPACE_MEMO.clear()
    s2 = build_quotient(2, APRIME)
    assert [cd.bytes for cd in s1.spanning] == [cd.bytes for cd in s2.spanning]
    assert s1.basis == s2.basis
    assert s1.reduction == s2.reduction


def test_degree_cap():
    with pytest.raises(ResourceLimitError):
        build_quotient(9, BPRIME)


def test_cache_roundtrip(tmp_path):
    space = build_quotient(2, BPRIME)
    path = tmp_path / "space.json"
    cache_store(space, path)
    loaded = cache_load(2, BPRIME, path)
    assert [cd.bytes for cd in loaded.spanning] == [cd.bytes for cd in space.spanning]
    assert loaded.basis == space.basis
    assert loaded.reduction == space.reduction


def test_cache_truncated_file(tmp_path):
    space = build_quotient(1, BPRIME)
    path = tmp_path / "space.json"
    cache_store(space, path)
    body = path.read_text()
    path.write_text(body[: len(body) // 2])
    with pytest.raises(Exception):  # a parse failure, not a silent load
        cache_load(1, BPRIME, path)


def test_cache_hash_mismatch(tmp_path):
    space = build_quotient(1, BPRIME)
    path = tmp_path / "space.json"
    cache_store(space, path)
    body = path.read_text().replace('"degree":1', '"degree":2')
    path.write_text(body)
    with pytest.raises(CacheIntegrityError):
        cache_load(1, BPRIME, path)


def test_cache_version_mismatch(tmp_path):
    import hashlib
    import json

    space = build_quotient(1, BPRIME)
    path = tmp_path / "space.json"
    cache_store(space, path)
    wrapper = json.loads(path.read_text())
    wrapper["payload"]["format"] = "jdiag-space-v0"
    body = json.dumps(wrapper["payload"], sort_keys=True, separators=(",", ":"))
    wrapper["sha256"] = hashlib.sha256(body.encode()).hexdigest()
    path.write_text(json.dumps(wrapper))
    with pytest.raises(CacheVersionError):
        cache_load(1, BPRIME, path)


def test_cache_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        cache_load(1, BPRIME, tmp_path / "absent.json")


def test_dimension_fixture_file(tmp_path):
    d1 = space_dimension(1, BPRIME, cache_dir=str(tmp_path))
    d2 = space_dimension(1, BPRIME, cache_dir=str(tmp_path))
    assert d1 == d2
    assert (tmp_path / "dimensions.json").exists()
