"""Congruence lattices and certified l1 torus diameters.

An integer lattice here is the kernel of x -> G x in a product of cyclic
groups: L = {x in Z^k : G x = 0 mod (m_1, ..., m_r)}.  Its covolume is the
product of the moduli when the columns of G generate the product group, the
coset diameter equals the word-metric diameter of the corresponding abelian
Cayley graph, and after rescaling to determinant one the l1 covering radius
models the limiting rescaled diameter.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    EnclosureBudgetError,
    NotGeneratingError,
    PreconditionError,
    ResourceLimitError,
)
from .intlinalg import det_int, generates_mod, kernel_basis, lll_reduce

COVOLUME_CAP = 100_000_000
DEFAULT_EVAL_BUDGET = 40_000_000

__all__ = [
    "IntegerLattice",
    "RescaledLattice",
    "lattice_from_generators",
    "coset_diameter_exact",
    "rescale",
    "torus_diameter_l1",
    "sample_haar_proxy",
    "lattice_from_descriptor",
    "lattice_descriptor",
]


@dataclass(frozen=True)
class IntegerLattice:
    """Full-rank sublattice of Z^k given by congruences G x = 0 mod m."""

    k: int
    moduli: Tuple[int, ...]
    gmatrix: Tuple[Tuple[int, ...], ...]  # r rows of k residues
    basis: Tuple[Tuple[int, ...], ...]  # k basis vectors as rows
    covolume: int


@dataclass(frozen=True)
class RescaledLattice:
    """Determinant-one copy of an integer lattice.

    The scale covolume^(-1/k) is kept symbolic (integer covolume plus the
    exponent) and only applied when a floating basis is requested.
    """

    k: int
    basis: Tuple[Tuple[int, ...], ...]
    covolume: int

    def float_basis(self) -> np.ndarray:
        scale = float(self.covolume) ** (-1.0 / self.k)
        return np.array(self.basis, dtype=np.float64) * scale


def lattice_from_generators(
    moduli: Sequence[int], gmatrix: Sequence[Sequence[int]]
) -> IntegerLattice:
    """Kernel lattice of the generator columns, with covolume check.

    gmatrix is r x k: column j holds the residues of generator j in the
    product of cyclic groups.
    """
    moduli = [int(m) for m in moduli]
    if any(m < 1 for m in moduli):
        raise PreconditionError("moduli must be >= 1")
    r = len(moduli)
    rows = [[int(x) % moduli[t] for x in gmatrix[t]] for t in range(r)]
    if not rows:
        raise PreconditionError("need at least one modulus row")
    k = len(rows[0])
    if any(len(row) != k for row in rows):
        raise PreconditionError("ragged generator matrix")
    columns = [[rows[t][j] for t in range(r)] for j in range(k)]
    if not generates_mod(columns, moduli):
        raise NotGeneratingError("generator columns do not generate the product group")

    # L is the projection to the x block of the kernel of [G | diag(m)];
    # the projection is injective because diag(m) has no kernel.
    aug = [rows[t] + [moduli[t] if s == t else 0 for s in range(r)] for t in range(r)]
    full = kernel_basis(aug)
    basis = [vec[:k] for vec in full]
    if len(basis) != k:
        raise PreconditionError("kernel basis has wrong rank")
    covolume = 1
    for m in moduli:
        covolume *= m
    if abs(det_int(basis)) != covolume:
        raise NotGeneratingError("lattice index does not match the covolume")
    return IntegerLattice(
        k=k,
        moduli=tuple(moduli),
        gmatrix=tuple(tuple(row) for row in rows),
        basis=tuple(tuple(v) for v in basis),
        covolume=covolume,
    )


def coset_diameter_exact(lat: IntegerLattice) -> int:
    """Max over cosets of Z^k / L of the minimal l1 norm of a representative.

    Computed by breadth-first search in the product of cyclic groups with
    the generator columns as steps.  This is a deliberately separate code
    path from the group-metric search so the two can cross-check each other.
    """
    n = lat.covolume
    if n > COVOLUME_CAP:
        raise ResourceLimitError(f"covolume {n} exceeds cap {COVOLUME_CAP}")
    moduli = lat.moduli
    r = len(moduli)
    places = np.ones(r, dtype=np.int64)
    for t in range(1, r):
        places[t] = places[t - 1] * moduli[t - 1]
    codes = np.arange(n, dtype=np.int64)
    digits = [(codes // places[t]) % moduli[t] for t in range(r)]

    steps: List[np.ndarray] = []
    for j in range(lat.k):
        col = [lat.gmatrix[t][j] for t in range(r)]
        for sign in (1, -1):
            nxt = np.zeros(n, dtype=np.int64)
            for t in range(r):
                nxt += ((digits[t] + sign * col[t]) % moduli[t]) * places[t]
            steps.append(nxt)

    dist = np.full(n, -1, dtype=np.int64)
    dist[0] = 0
    frontier = np.array([0], dtype=np.int64)
    level = 0
    while frontier.size:
        level += 1
        nxt_codes = np.concatenate([s[frontier] for s in steps])
        nxt_codes = nxt_codes[dist[nxt_codes] < 0]
        if nxt_codes.size == 0:
            break
        nxt_codes = np.unique(nxt_codes)
        dist[nxt_codes] = level
        frontier = nxt_codes
    if (dist < 0).any():
        raise NotGeneratingError("coset graph is not connected")
    return int(dist.max())


def rescale(lat: IntegerLattice) -> RescaledLattice:
    """Determinant-one version of the lattice, LLL-reduced for conditioning."""
    reduced = lll_reduce([list(row) for row in lat.basis])
    return RescaledLattice(
        k=lat.k,
        basis=tuple(tuple(v) for v in reduced),
        covolume=lat.covolume,
    )


def _nearest_l1(points: np.ndarray, basis: np.ndarray, binv: np.ndarray) -> np.ndarray:
    """Exact min_{v in L} ||x - v||_1 for a batch of points (rows).

    The Babai rounding residual bounds the coefficient box: if z is optimal
    then |t0_i - z_i| <= rho * max_j |binv[j, i]| with rho the rounded-point
    distance, because y -> (y @ binv)_i is l1-to-scalar bounded by the
    column sup norm.
    """
    k = basis.shape[0]
    t0 = points @ binv
    base = np.rint(t0)
    resid = points - base @ basis
    rho = np.abs(resid).sum(axis=1)
    col_norm = np.abs(binv).max(axis=0)
    width = np.floor(rho.max() * col_norm + 1e-9).astype(np.int64)
    ranges = [np.arange(-w, w + 1) for w in width]
    grids = np.meshgrid(*ranges, indexing="ij")
    offsets = np.stack([g.ravel() for g in grids], axis=1).astype(np.float64)
    off_vecs = offsets @ basis
    best = rho.copy()
    chunk = max(1, 4_000_000 // max(points.shape[0], 1))
    for s in range(0, off_vecs.shape[0], chunk):
        blk = off_vecs[s : s + chunk]
        cand = np.abs(resid[None, :, :] - blk[:, None, :]).sum(axis=2)
        np.minimum(best, cand.min(axis=0), out=best)
    return best


def torus_diameter_l1(
    rl: RescaledLattice,
    eps: float = 1e-2,
    eval_budget: int = DEFAULT_EVAL_BUDGET,
) -> Tuple[float, float]:
    """Certified enclosure [lo, hi] of the l1 covering radius of the lattice.

    Branch and bound over the fundamental parallelepiped in coefficient
    space: the distance-to-lattice function is 1-Lipschitz for l1, so a
    cell of coefficient half-width h is bounded by its centre value plus
    h * sum_i ||b_i||_1.  Cells that cannot beat the running lower bound
    are pruned; the rest are split until hi - lo <= eps.
    """
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    k = rl.k
    if k > 6:
        raise PreconditionError(f"torus diameter limited to k <= 6, got {k}")
    # the covering radius does not depend on the basis choice; reduce first
    # so the nearest-point enumeration boxes stay small
    reduced = RescaledLattice(
        k=k,
        basis=tuple(tuple(v) for v in lll_reduce([list(row) for row in rl.basis])),
        covolume=rl.covolume,
    )
    basis = reduced.float_basis()
    binv = np.linalg.inv(basis)
    row_l1 = np.abs(basis).sum(axis=1)  # slack per unit coefficient half-width

    # per-axis half-widths; cells split in two along the axis contributing
    # the most slack, which keeps anisotropic bases tractable
    m0 = 4
    h0 = 0.5 / m0
    axes = [np.linspace(h0, 1.0 - h0, m0) for _ in range(k)]
    grids = np.meshgrid(*axes, indexing="ij")
    centres = np.stack([g.ravel() for g in grids], axis=1)
    evals = 0
    lo = 0.0
    # heap of (-upper_bound, counter, centre, halfwidth vector)
    heap: List[Tuple[float, int, np.ndarray, np.ndarray]] = []
    counter = 0

    def push_batch(cen: np.ndarray, hws: np.ndarray) -> None:
        nonlocal evals, lo, counter
        vals = _nearest_l1(cen @ basis, basis, binv)
        evals += cen.shape[0]
        lo = max(lo, float(vals.max()))
        ubs = vals + hws @ row_l1
        for i in range(cen.shape[0]):
            if ubs[i] > lo:
                heapq.heappush(heap, (-float(ubs[i]), counter, cen[i], hws[i]))
                counter += 1

    push_batch(centres, np.full((centres.shape[0], k), h0))
    while heap:
        hi = -heap[0][0]
        if hi - lo <= eps:
            return (lo, hi + 1e-9)
        if evals > eval_budget:
            raise EnclosureBudgetError(lo, hi + 1e-9)
        # split the worst cells (two children along the axis with the most
        # slack); batching the evaluations keeps the per-point cost low
        child_cens: List[np.ndarray] = []
        child_hws: List[np.ndarray] = []
        while heap and len(child_cens) < 512 and -heap[0][0] > lo + eps:
            neg_ub, _, cen, hw = heapq.heappop(heap)
            if -neg_ub <= lo:
                continue
            axis = int(np.argmax(hw * row_l1))
            child_hw = hw.copy()
            child_hw[axis] /= 2.0
            left = cen.copy()
            left[axis] -= child_hw[axis]
            right = cen.copy()
            right[axis] += child_hw[axis]
            child_cens.extend((left, right))
            child_hws.extend((child_hw, child_hw))
        if child_cens:
            push_batch(np.stack(child_cens), np.stack(child_hws))
    return (lo, lo + 1e-9)


def sample_haar_proxy(k: int, q: int, rng: np.random.Generator) -> RescaledLattice:
    """Random determinant-one congruence lattice at large prime modulus.

    Draws a uniform residue row mod q and rescales the congruence lattice
    {x : g . x = 0 mod q}; as q grows these approach the natural measure on
    unimodular lattices of this shape.
    """
    if k < 2:
        raise PreconditionError("haar proxy needs k >= 2")
    while True:
        g = [int(v) for v in rng.integers(0, q, size=k)]
        if generates_mod([[v] for v in g], [q]):
            break
    return rescale(lattice_from_generators([q], [g]))


def lattice_descriptor(lat: IntegerLattice) -> str:
    mods = ",".join(str(m) for m in lat.moduli)
    g = ",".join(str(x) for row in lat.gmatrix for x in row)
    return f"lat:k={lat.k};mod={mods};g={g}"


def lattice_from_descriptor(text: str) -> IntegerLattice:
    """Parse "lat:k=K;mod=m1,..;g=row-major residues"."""
    if not text.startswith("lat:"):
        raise PreconditionError(f"bad lattice descriptor {text!r}")
    fields = {}
    for part in text[4:].split(";"):
        if "=" not in part:
            raise PreconditionError(f"bad lattice descriptor field {part!r}")
        key, val = part.split("=", 1)
        fields[key.strip()] = val.strip()
    try:
        k = int(fields["k"])
        moduli = [int(m) for m in fields["mod"].split(",")]
        flat = [int(x) for x in fields["g"].split(",")]
    except (KeyError, ValueError) as exc:
        raise PreconditionError(f"bad lattice descriptor {text!r}") from exc
    r = len(moduli)
    if len(flat) != r * k:
        raise PreconditionError("generator matrix size does not match k and moduli")
    gmatrix = [flat[t * k : (t + 1) * k] for t in range(r)]
    return lattice_from_generators(moduli, gmatrix)
