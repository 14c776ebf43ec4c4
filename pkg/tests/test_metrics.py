"""Distance maps against a pure-python breadth-first oracle."""

from collections import deque

import numpy as np
import pytest

from nilcayley.errors import NotGeneratingError
from nilcayley.groups import (
    IDENTITY,
    GeneratingSet,
    GroupSpec,
    decode,
    encode,
    inv,
    lcs_member,
    mul,
)
from nilcayley.metrics import (
    bfs_distance_map,
    diameter,
    filtration_report,
    load_distance_map,
    quotient_diameter,
    save_distance_map,
    shortest_word,
    subgroup_diameter,
)
from nilcayley.words import word_eval


def oracle_distances(spec, gens):
    """Textbook BFS with a deque; shares no code with the fast path."""
    dist = {IDENTITY: 0}
    queue = deque([IDENTITY])
    while queue:
        g = queue.popleft()
        for s in gens.symmetric:
            h = mul(spec, s, g)
            if h not in dist:
                dist[h] = dist[g] + 1
                queue.append(h)
    return dist


def random_gens(spec, k, rng):
    while True:
        draw = tuple(int(x) for x in rng.integers(0, spec.order, size=k))
        gens = GeneratingSet.from_positives(spec, draw)
        if len(oracle_distances(spec, gens)) == spec.order:
            return gens


CASES = [
    (GroupSpec.abelian((30,)), 2),
    (GroupSpec.abelian((6, 8)), 2),
    (GroupSpec.unitriangular(3, 3), 2),
    (GroupSpec.unitriangular(5, 3), 3),
    (GroupSpec.unitriangular(7, 3), 3),
    (GroupSpec.unitriangular(2, 4), 3),
    (GroupSpec.unitriangular(3, 4), 4),
]


@pytest.mark.parametrize("spec,k", CASES, ids=lambda v: str(v))
def test_bfs_matches_oracle(spec, k):
    rng = np.random.default_rng(spec.order)
    for _ in range(3):
        gens = random_gens(spec, k, rng)
        dm = bfs_distance_map(spec, gens)
        oracle = oracle_distances(spec, gens)
        for g, d in oracle.items():
            assert int(dm.dist[g]) == d
        assert diameter(dm) == max(oracle.values())


def test_worked_cycle_distances():
    spec = GroupSpec.abelian((5,))
    gens = GeneratingSet.from_positives(spec, (1,))
    dm = bfs_distance_map(spec, gens)
    assert list(dm.dist) == [0, 1, 2, 2, 1]
    assert diameter(dm) == 2


def test_incomplete_map_raises():
    spec = GroupSpec.abelian((4,))
    gens = GeneratingSet.from_positives(spec, (2,))
    dm = bfs_distance_map(spec, gens)
    assert not dm.complete
    with pytest.raises(NotGeneratingError):
        diameter(dm)


def test_worked_heisenberg_diameters():
    spec = GroupSpec.unitriangular(3, 3)
    gens = GeneratingSet.from_positives(
        spec, (encode(spec, (1, 0, 0)), encode(spec, (0, 1, 0)))
    )
    dm = bfs_distance_map(spec, gens)
    assert diameter(dm) == 4
    assert int(dm.dist[encode(spec, (0, 0, 1))]) == 4
    assert subgroup_diameter(dm, 2) == 4
    assert quotient_diameter(dm, 1) == 2


def test_subgroup_and_quotient_against_oracle():
    rng = np.random.default_rng(9)
    for spec, k in [(GroupSpec.unitriangular(5, 3), 3), (GroupSpec.unitriangular(3, 4), 3)]:
        gens = random_gens(spec, k, rng)
        dm = bfs_distance_map(spec, gens)
        oracle = oracle_distances(spec, gens)
        c = spec.nil_class
        for i in range(2, c + 1):
            members = [g for g in range(spec.order) if lcs_member(spec, i, g)]
            assert subgroup_diameter(dm, i) == max(oracle[g] for g in members)
            # quotient: bucket members of G^(i) by coset modulo G^(i+1),
            # keyed by the superdiagonal-i entries
            from nilcayley.groups import layer_coords

            buckets = {}
            for g in members:
                buckets.setdefault(layer_coords(spec, i, g), []).append(oracle[g])
            assert quotient_diameter(dm, i) == max(min(v) for v in buckets.values())


def test_sandwich_inequalities():
    rng = np.random.default_rng(11)
    for spec, k in [(GroupSpec.unitriangular(5, 3), 3), (GroupSpec.unitriangular(3, 4), 4)]:
        for _ in range(5):
            gens = random_gens(spec, k, rng)
            dm = bfs_distance_map(spec, gens)
            c = spec.nil_class
            for i in range(1, c + 1):
                q = quotient_diameter(dm, i)
                s = subgroup_diameter(dm, i)
                nxt = subgroup_diameter(dm, i + 1)
                assert q <= s <= q + nxt


def test_filtration_report_consistency():
    spec = GroupSpec.unitriangular(5, 3)
    rng = np.random.default_rng(13)
    gens = random_gens(spec, 3, rng)
    rep = filtration_report(spec, gens)
    dm = bfs_distance_map(spec, gens)
    assert rep.diam == diameter(dm)
    assert rep.subgroup_diams[0] == rep.diam
    assert rep.diam_ab <= rep.diam
    # the abelianisation diameter equals the layer-1 quotient diameter
    assert rep.quotient_diams[0] == rep.diam_ab


def test_shortest_word_is_geodesic():
    spec = GroupSpec.unitriangular(5, 3)
    rng = np.random.default_rng(17)
    gens = random_gens(spec, 3, rng)
    dm = bfs_distance_map(spec, gens)
    for target in rng.integers(0, spec.order, size=40):
        target = int(target)
        w = shortest_word(dm, target)
        assert len(w) == int(dm.dist[target])
        assert word_eval(spec, gens, w) == target


def test_triangle_inequality_locally():
    spec = GroupSpec.unitriangular(5, 3)
    rng = np.random.default_rng(19)
    gens = random_gens(spec, 3, rng)
    dm = bfs_distance_map(spec, gens)
    # left-invariance: d(id, ab) <= d(id, a) + d(id, b)
    for _ in range(200):
        a, b = (int(x) for x in rng.integers(0, spec.order, size=2))
        assert dm.dist[mul(spec, a, b)] <= dm.dist[a] + dm.dist[b]


def test_distance_map_dump_round_trip(tmp_path):
    spec = GroupSpec.unitriangular(5, 3)
    rng = np.random.default_rng(23)
    gens = random_gens(spec, 3, rng)
    dm = bfs_distance_map(spec, gens)
    path = tmp_path / "map.ncdm"
    save_distance_map(dm, path)
    loaded = load_distance_map(path, spec, gens)
    assert np.array_equal(loaded.dist, dm.dist)
    assert diameter(loaded) == diameter(dm)
