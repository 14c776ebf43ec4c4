"""BFS word-metric distance maps and the three diameters.

A DistanceMap holds the distance from the identity to every element of G as
a dense array indexed by element code.  By left-invariance of the word
metric all pairwise distances reduce to distances from the identity, so the
eccentricity of the identity equals the graph diameter.

The BFS core is a level-synchronous scan compiled with numba.  Cells start
at 8 bits and the run escapes to 16 and then 32 bits if the diameter
overflows the sentinel.  A coarse block bitmap limits each level's scan to
blocks that actually contain frontier nodes, which keeps deep-diameter runs
from paying a full array scan per level.
"""

from __future__ import annotations

import struct
import time
import zlib
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from numba import njit

from .words import Word
from .errors import (
    InvalidElementError,
    NotGeneratingError,
    PreconditionError,
    ResourceLimitError,
)
from .groups import (
    ABELIAN,
    GeneratingSet,
    GroupSpec,
    _ut_layout,
    inv,
    layer_slice,
    mul,
    validate,
)

_BLOCK_SHIFT = 13  # 8192-element scan blocks

DEFAULT_MEM_CAP = 2_500_000_000  # bytes; binding constraint on a 5 GB box


@njit(cache=True, nogil=True)
def _bfs_scan(dist, radices, places, gen_digits, term_ptr, term_u, term_v, sentinel):
    """Level-synchronous BFS over a mixed-radix coded group.

    gen_digits[g, t] holds the t-th digit of generator g; term lists encode
    the extra bilinear contributions of the unitriangular product (empty for
    abelian specs).  Returns (diameter, relaxations); diameter -1 signals a
    cell-width overflow and asks for a wider re-run.
    """
    n = dist.shape[0]
    ndig = places.shape[0]
    ngens = gen_digits.shape[0]
    nblocks = ((n - 1) >> _BLOCK_SHIFT) + 1
    cur_blocks = np.zeros(nblocks, np.uint8)
    nxt_blocks = np.zeros(nblocks, np.uint8)
    dist[0] = 0
    cur_blocks[0] = 1
    level = 0
    relax = 0
    db = np.empty(ndig, np.int64)
    while True:
        if level + 1 >= sentinel:
            return -1, relax
        advanced = 0
        for blk in range(nblocks):
            if cur_blocks[blk] == 0:
                continue
            lo = blk << _BLOCK_SHIFT
            hi = min(lo + (1 << _BLOCK_SHIFT), n)
            for idx in range(lo, hi):
                if dist[idx] != level:
                    continue
                x = idx
                for t in range(ndig):
                    db[t] = x % radices[t]
                    x //= radices[t]
                for g in range(ngens):
                    nbr = 0
                    for t in range(ndig):
                        v = gen_digits[g, t] + db[t]
                        for p in range(term_ptr[t], term_ptr[t + 1]):
                            v += gen_digits[g, term_u[p]] * db[term_v[p]]
                        nbr += (v % radices[t]) * places[t]
                    if dist[nbr] == sentinel:
                        dist[nbr] = level + 1
                        nxt_blocks[nbr >> _BLOCK_SHIFT] = 1
                        advanced += 1
                relax += ngens
        if advanced == 0:
            return level, relax
        level += 1
        # Nodes at the new level are exactly those assigned in this pass, so
        # the marked blocks are a complete cover; swap and clear.
        tmp = cur_blocks
        cur_blocks = nxt_blocks
        nxt_blocks = tmp
        nxt_blocks[:] = 0


@njit(cache=True, nogil=True)
def _relax_h3(dist, frontier, q, gen_a, gen_b, gen_c, twist, new_level, sentinel):
    """Relax one BFS level of the d = 3 unitriangular (Heisenberg) family.

    Digits (a, b, c) with product
    (a1, b1, c1) * (a2, b2, c2) = (a1 + a2, b1 + b2, c1 + c2 + a1 * b2);
    twist[g, b] = (gen_c[g] + gen_a[g] * b) % q is precomputed so the hot
    loop has one division pair per node and none per edge.
    """
    q2 = q * q
    ngens = gen_a.shape[0]
    advanced = 0
    tile = 2048
    buf = np.empty(tile * ngens, np.int64)
    m = frontier.shape[0]
    # Two phases per tile: neighbour indices into an L2-resident buffer, then
    # a dependence-free gather/claim loop; the split roughly doubles the
    # memory-level parallelism the CPU can extract from the random accesses.
    for start in range(0, m, tile):
        end = min(start + tile, m)
        cnt = 0
        for f in range(start, end):
            idx = frontier[f]
            c = idx // q2
            r = idx - c * q2
            b = r // q
            a = r - b * q
            for g in range(ngens):
                na = a + gen_a[g]
                if na >= q:
                    na -= q
                nb = b + gen_b[g]
                if nb >= q:
                    nb -= q
                nc = c + twist[g, b]
                if nc >= q:
                    nc -= q
                buf[cnt] = na + q * nb + q2 * nc
                cnt += 1
        for t in range(cnt):
            nbr = buf[t]
            if dist[nbr] == sentinel:
                dist[nbr] = new_level
                advanced += 1
    return advanced


@njit(cache=True, nogil=True)
def _claim_h3(dist, unvisited, q, gen_a, gen_b, gen_c, twist, level, sentinel):
    """Bottom-up step: each unvisited node probes its neighbours for one at
    the current level and claims level + 1 on the first hit.  Valid because
    the generator set is symmetric, so in- and out-neighbours coincide."""
    q2 = q * q
    ngens = gen_a.shape[0]
    advanced = 0
    probes = 0
    for f in range(unvisited.shape[0]):
        idx = unvisited[f]
        c = idx // q2
        r = idx - c * q2
        b = r // q
        a = r - b * q
        for g in range(ngens):
            na = a + gen_a[g]
            if na >= q:
                na -= q
            nb = b + gen_b[g]
            if nb >= q:
                nb -= q
            nc = c + twist[g, b]
            if nc >= q:
                nc -= q
            probes += 1
            if dist[na + q * nb + q2 * nc] == level:
                dist[idx] = level + 1
                advanced += 1
                break
    return advanced, probes


_SCAN_CHUNK = 1 << 24


def _bfs_h3(dist, q, gen_a, gen_b, gen_c, sentinel):
    """Level loop for the Heisenberg kernel: numpy finds each frontier,
    numba relaxes it; switches to bottom-up probing once the frontier is a
    sizeable fraction of the group.  Same return contract as _bfs_scan."""
    n = dist.shape[0]
    ngens = gen_a.shape[0]
    twist = (gen_c[:, None] + gen_a[:, None] * np.arange(q, dtype=np.int64)[None, :]) % q
    marker = dist.dtype.type
    dist[0] = 0
    level = 0
    relax = 0
    frontier_size = 1
    unvisited = n - 1
    while True:
        if level + 1 >= sentinel:
            return -1, relax
        advanced = 0
        bottom_up = frontier_size > 2 * unvisited
        for lo in range(0, n, _SCAN_CHUNK):
            chunk = dist[lo : lo + _SCAN_CHUNK]
            if bottom_up:
                cand = np.flatnonzero(chunk == marker(np.iinfo(dist.dtype).max))
            else:
                cand = np.flatnonzero(chunk == marker(level))
            if cand.size == 0:
                continue
            idxs = cand.astype(np.int64) + lo
            if bottom_up:
                adv, probes = _claim_h3(
                    dist, idxs, q, gen_a, gen_b, gen_c, twist, level, sentinel
                )
                advanced += adv
                relax += probes
            else:
                advanced += _relax_h3(
                    dist, idxs, q, gen_a, gen_b, gen_c, twist, level + 1, sentinel
                )
                relax += idxs.size * ngens
        if advanced == 0:
            return level, relax
        level += 1
        frontier_size = advanced
        unvisited -= advanced


def _kernel_inputs(spec: GroupSpec, gens: GeneratingSet):
    radices = np.array(spec.radices, dtype=np.int64)
    places = np.empty(len(radices), dtype=np.int64)
    acc = 1
    for t, m in enumerate(spec.radices):
        places[t] = acc
        acc *= m
    if spec.family == ABELIAN:
        term_ptr = np.zeros(len(radices) + 1, dtype=np.int64)
        term_u = np.zeros(0, dtype=np.int64)
        term_v = np.zeros(0, dtype=np.int64)
    else:
        _, _, terms, _ = _ut_layout(spec.d)
        term_ptr = np.zeros(len(terms) + 1, dtype=np.int64)
        flat_u: List[int] = []
        flat_v: List[int] = []
        for t, pairs in enumerate(terms):
            for (u, v) in pairs:
                flat_u.append(u)
                flat_v.append(v)
            term_ptr[t + 1] = len(flat_u)
        term_u = np.array(flat_u, dtype=np.int64)
        term_v = np.array(flat_v, dtype=np.int64)
    gen_digits = np.empty((len(gens.symmetric), len(radices)), dtype=np.int64)
    for g, code in enumerate(gens.symmetric):
        x = code
        for t, m in enumerate(spec.radices):
            gen_digits[g, t] = x % m
            x //= m
    return radices, places, gen_digits, term_ptr, term_u, term_v


@dataclass
class DistanceMap:
    """Dense word-metric distances from the identity over all of G."""

    spec: GroupSpec
    gens: GeneratingSet
    dist: np.ndarray
    relaxations: int = 0
    seconds: float = 0.0
    _diameter: int = field(default=-1, repr=False)

    @property
    def sentinel(self) -> int:
        return int(np.iinfo(self.dist.dtype).max)

    @property
    def complete(self) -> bool:
        return self._diameter >= 0

    @property
    def relaxations_per_second(self) -> float:
        return self.relaxations / self.seconds if self.seconds > 0 else float("inf")


def bfs_distance_map(
    spec: GroupSpec,
    gens: GeneratingSet,
    mem_cap_bytes: int = DEFAULT_MEM_CAP,
) -> DistanceMap:
    """Single-source BFS from the identity over the whole group."""
    if not gens.symmetric:
        raise PreconditionError("empty generating set")
    n = spec.order
    h3 = spec.family != ABELIAN and spec.d == 3
    if h3:
        q = spec.q
        gen_digits = np.empty((len(gens.symmetric), 3), dtype=np.int64)
        for g, code in enumerate(gens.symmetric):
            gen_digits[g, 0] = code % q
            gen_digits[g, 1] = (code // q) % q
            gen_digits[g, 2] = code // (q * q)
        inputs = (q, gen_digits[:, 0].copy(), gen_digits[:, 1].copy(), gen_digits[:, 2].copy())
    else:
        inputs = _kernel_inputs(spec, gens)
    for dtype in (np.uint8, np.uint16, np.uint32):
        width = np.dtype(dtype).itemsize
        if n * width > mem_cap_bytes:
            raise ResourceLimitError(
                f"distance map needs {n * width} bytes "
                f"(|G|={n}, {8 * width}-bit cells), cap is {mem_cap_bytes}"
            )
        sentinel = np.iinfo(dtype).max
        dist = np.full(n, sentinel, dtype=dtype)
        t0 = time.perf_counter()
        if h3:
            diam, relax = _bfs_h3(dist, *inputs, sentinel)
        else:
            diam, relax = _bfs_scan(dist, *inputs, sentinel)
        dt = time.perf_counter() - t0
        if diam >= 0:
            dm = DistanceMap(spec=spec, gens=gens, dist=dist, relaxations=relax, seconds=dt)
            if int(dist.max()) == sentinel:
                dm._diameter = -1  # unreached elements: not generating
            else:
                dm._diameter = int(diam)
            return dm
        del dist
    raise ResourceLimitError("diameter exceeds 32-bit cells")  # pragma: no cover


def diameter(dm: DistanceMap) -> int:
    """Graph diameter (= eccentricity of the identity by left-invariance)."""
    if not dm.complete:
        raise NotGeneratingError(
            "distance map has unreached elements; the set does not generate"
        )
    return dm._diameter


def subgroup_diameter(dm: DistanceMap, i: int) -> int:
    """diam of the i-th lower-central-series term as a metric subspace."""
    if not dm.complete:
        raise NotGeneratingError("distance map incomplete")
    spec = dm.spec
    if not (1 <= i <= spec.nil_class + 1):
        raise PreconditionError(f"subgroup index {i} out of range 1..{spec.nil_class + 1}")
    if i == 1:
        return diameter(dm)
    if i == spec.nil_class + 1 or spec.family == ABELIAN:
        return 0
    lo, _ = layer_slice(spec, i)
    return int(dm.dist[:: spec.q ** lo].max())


def quotient_diameter(dm: DistanceMap, i: int) -> int:
    """diam of layer i (the i-th term modulo the next) in the induced metric.

    Elements of the i-th term are bucketed by their superdiagonal-i entries
    (the canonical coset key modulo the next term); the induced distance of
    a coset is the minimum distance over its members.
    """
    if not dm.complete:
        raise NotGeneratingError("distance map incomplete")
    spec = dm.spec
    if not (1 <= i <= spec.nil_class):
        raise PreconditionError(f"layer index {i} out of range 1..{spec.nil_class}")
    if spec.family == ABELIAN:
        return diameter(dm)
    if i == spec.nil_class:
        return subgroup_diameter(dm, i)
    lo, hi = layer_slice(spec, i)
    q = spec.q
    sub = dm.dist[:: q ** lo]
    per_key_min = sub.reshape(-1, q ** (hi - lo)).min(axis=0)
    return int(per_key_min.max())


@dataclass
class FiltrationReport:
    """Per-layer diameters of one (group, generating set) pair."""

    spec: GroupSpec
    diam: int
    diam_ab: int
    subgroup_diams: Tuple[int, ...]  # index i-1 -> diam(G^(i), S), i = 1..class
    quotient_diams: Tuple[int, ...]  # index i-1 -> diam(G^(i)/G^(i+1), S)


def filtration_report(
    spec: GroupSpec,
    gens: GeneratingSet,
    mem_cap_bytes: int = DEFAULT_MEM_CAP,
) -> FiltrationReport:
    dm = bfs_distance_map(spec, gens, mem_cap_bytes=mem_cap_bytes)
    ab_dm = bfs_distance_map(
        spec.abelianisation, gens.projected(), mem_cap_bytes=mem_cap_bytes
    )
    c = spec.nil_class
    return FiltrationReport(
        spec=spec,
        diam=diameter(dm),
        diam_ab=diameter(ab_dm),
        subgroup_diams=tuple(subgroup_diameter(dm, i) for i in range(1, c + 1)),
        quotient_diams=tuple(quotient_diameter(dm, i) for i in range(1, c + 1)),
    )


def _letter_table(gens: GeneratingSet) -> Dict[int, Tuple[int, int]]:
    table: Dict[int, Tuple[int, int]] = {}
    for idx, z in enumerate(gens.positives):
        table.setdefault(z, (idx, +1))
        table.setdefault(inv(gens.spec, z), (idx, -1))
    return table


def shortest_word(dm: DistanceMap, target: int) -> Word:
    """A geodesic word for target, by greedy descent on the distance map."""
    if not dm.complete:
        raise NotGeneratingError("distance map incomplete")
    spec = dm.spec
    validate(spec, target)
    table = _letter_table(dm.gens)
    letters: List[Tuple[int, int]] = []
    g = target
    d = int(dm.dist[g])
    while d > 0:
        for s in dm.gens.symmetric:
            h = mul(spec, inv(spec, s), g)
            if int(dm.dist[h]) == d - 1:
                letters.append(table[s])
                g = h
                d -= 1
                break
        else:  # pragma: no cover - impossible on a complete BFS map
            raise InvalidElementError("greedy descent stuck; corrupt distance map")
    return Word(letters=tuple(letters))


# --- binary cache ----------------------------------------------------------

_MAGIC = b"NCDM"


def save_distance_map(dm: DistanceMap, path) -> None:
    """16-byte header (magic, descriptor crc32, cell width, length) + cells."""
    width = dm.dist.dtype.itemsize
    header = struct.pack(
        "<4sIII",
        _MAGIC,
        zlib.crc32(dm.spec.descriptor().encode()) & 0xFFFFFFFF,
        width,
        len(dm.dist),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(dm.dist.astype(dm.dist.dtype.newbyteorder("<"), copy=False).tobytes())


def load_distance_map(path, spec: GroupSpec, gens: GeneratingSet) -> DistanceMap:
    with open(path, "rb") as fh:
        magic, crc, width, length = struct.unpack("<4sIII", fh.read(16))
        if magic != _MAGIC:
            raise PreconditionError(f"{path} is not a distance-map dump")
        if crc != zlib.crc32(spec.descriptor().encode()) & 0xFFFFFFFF:
            raise PreconditionError("distance-map dump is for a different group")
        dtype = {1: np.uint8, 2: np.uint16, 4: np.uint32}[width]
        dist = np.frombuffer(fh.read(), dtype=np.dtype(dtype).newbyteorder("<"))
    if len(dist) != length or length != spec.order:
        raise PreconditionError("distance-map dump is truncated")
    dist = dist.astype(dtype)  # native byte order, writable
    dm = DistanceMap(spec=spec, gens=gens, dist=dist)
    sentinel = np.iinfo(dtype).max
    dm._diameter = -1 if int(dist.max()) == sentinel else int(dist.max())
    return dm
