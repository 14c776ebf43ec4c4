"""Group arithmetic and structure for the two supported families.

Elements are dense integer codes in [0, |G|).  For the abelian family
``Z/m_1 x ... x Z/m_r`` the code is the little-endian mixed-radix index of
the residue vector.  For the unitriangular family ``H(q, d)`` (d x d upper
triangular matrices over Z/q with unit diagonal) the code is the base-q
index of the strictly-upper-triangular entries, enumerated superdiagonal by
superdiagonal starting next to the diagonal, left to right within each
superdiagonal.  With that ordering the abelianisation is a prefix slice of
the digits and membership in a lower-central-series term is a divisibility
test on the code.

Sign convention for nested commutators: [g1, g2, ..., gi] means
[g1, [g2, [..., [g_{i-1}, gi]...]]] with [x, y] = x y x^-1 y^-1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence, Tuple

from .errors import InvalidElementError, PreconditionError
from .intlinalg import generates_mod

ABELIAN = "abelian"
UNITRIANGULAR = "ut"


@dataclass(frozen=True)
class GroupSpec:
    """Description of one concrete finite group from the supported families."""

    family: str
    moduli: Tuple[int, ...] = ()  # abelian only
    q: int = 0  # unitriangular only
    d: int = 0  # unitriangular only

    @staticmethod
    def abelian(moduli: Iterable[int]) -> "GroupSpec":
        mods = tuple(int(m) for m in moduli)
        if not mods or any(m < 2 for m in mods):
            raise PreconditionError(f"abelian moduli must all be >= 2, got {mods}")
        return GroupSpec(family=ABELIAN, moduli=mods)

    @staticmethod
    def unitriangular(q: int, d: int) -> "GroupSpec":
        if q < 2 or d < 2:
            raise PreconditionError(f"unitriangular needs q >= 2 and d >= 2, got {(q, d)}")
        return GroupSpec(family=UNITRIANGULAR, q=int(q), d=int(d))

    @property
    def order(self) -> int:
        if self.family == ABELIAN:
            return math.prod(self.moduli)
        return self.q ** (self.d * (self.d - 1) // 2)

    @property
    def rank(self) -> int:
        if self.family == ABELIAN:
            return len(self.moduli)
        return self.d - 1

    @property
    def nil_class(self) -> int:
        if self.family == ABELIAN:
            return 1
        return self.d - 1

    @property
    def radices(self) -> Tuple[int, ...]:
        """Digit moduli of the mixed-radix element code."""
        if self.family == ABELIAN:
            return self.moduli
        return (self.q,) * (self.d * (self.d - 1) // 2)

    @property
    def abelianisation(self) -> "GroupSpec":
        if self.family == ABELIAN:
            return self
        return GroupSpec.abelian((self.q,) * (self.d - 1))

    def descriptor(self) -> str:
        if self.family == ABELIAN:
            return "abelian:" + ",".join(str(m) for m in self.moduli)
        return f"ut:{self.q},{self.d}"

    @staticmethod
    def from_descriptor(text: str) -> "GroupSpec":
        head, _, body = text.strip().partition(":")
        try:
            if head == ABELIAN:
                return GroupSpec.abelian(int(x) for x in body.split(","))
            if head == UNITRIANGULAR:
                q, d = (int(x) for x in body.split(","))
                return GroupSpec.unitriangular(q, d)
        except (ValueError, TypeError) as exc:
            raise PreconditionError(f"bad group descriptor {text!r}") from exc
        raise PreconditionError(f"unknown group descriptor {text!r}")


# --- unitriangular digit layout -------------------------------------------


@lru_cache(maxsize=None)
def _ut_layout(d: int):
    """Digit layout for H(q, d).

    Returns (positions, digit_of, terms, offsets) where positions[t] is the
    matrix position (i, j) of digit t, digit_of maps (i, j) -> t, terms[t]
    lists the digit pairs (u, v) contributing A[u] * B[v] to the product
    digit t, and offsets[s] is the first digit index of superdiagonal s
    (offsets has d entries; offsets[d - 1 + 1] would be the digit count).
    """
    positions = []
    for s in range(1, d):
        for i in range(d - s):
            positions.append((i, i + s))
    digit_of = {pos: t for t, pos in enumerate(positions)}
    terms = []
    for (i, j) in positions:
        terms.append(tuple((digit_of[(i, s)], digit_of[(s, j)]) for s in range(i + 1, j)))
    offsets = []
    acc = 0
    for s in range(1, d):
        offsets.append(acc)
        acc += d - s
    return positions, digit_of, tuple(terms), tuple(offsets) + (len(positions),)


def ut_offsets(d: int) -> Tuple[int, ...]:
    """offsets[s - 1] = first digit index of superdiagonal s; last = digit count."""
    return _ut_layout(d)[3]


def layer_slice(spec: GroupSpec, i: int) -> Tuple[int, int]:
    """Digit range [lo, hi) of superdiagonal i for a unitriangular spec."""
    if spec.family != UNITRIANGULAR:
        raise PreconditionError("layer_slice only applies to unitriangular specs")
    offs = ut_offsets(spec.d)
    if not (1 <= i <= spec.nil_class):
        raise PreconditionError(f"layer index {i} out of range 1..{spec.nil_class}")
    return offs[i - 1], offs[i]


# --- encode / decode -------------------------------------------------------


def decode(spec: GroupSpec, code: int) -> Tuple[int, ...]:
    """Entry vector of an element code."""
    validate(spec, code)
    digits = []
    x = code
    for m in spec.radices:
        x, r = divmod(x, m)
        digits.append(r)
    return tuple(digits)


def encode(spec: GroupSpec, entries: Sequence[int]) -> int:
    """Element code of an entry vector (entries reduced mod their radix)."""
    rad = spec.radices
    if len(entries) != len(rad):
        raise InvalidElementError(
            f"expected {len(rad)} entries for {spec.descriptor()}, got {len(entries)}"
        )
    code = 0
    place = 1
    for e, m in zip(entries, rad):
        code += (int(e) % m) * place
        place *= m
    return code


def validate(spec: GroupSpec, code: int) -> None:
    if not (0 <= code < spec.order):
        raise InvalidElementError(
            f"element code {code} out of range for {spec.descriptor()} (order {spec.order})"
        )


IDENTITY = 0


# --- group law -------------------------------------------------------------


def mul(spec: GroupSpec, a: int, b: int) -> int:
    """Product a * b."""
    validate(spec, a)
    validate(spec, b)
    if spec.family == ABELIAN:
        code = 0
        place = 1
        x, y = a, b
        for m in spec.moduli:
            x, ra = divmod(x, m)
            y, rb = divmod(y, m)
            code += ((ra + rb) % m) * place
            place *= m
        return code
    q = spec.q
    _, _, terms, _ = _ut_layout(spec.d)
    da = decode(spec, a)
    db = decode(spec, b)
    out = []
    for t, pairs in enumerate(terms):
        v = da[t] + db[t]
        for (u, w) in pairs:
            v += da[u] * db[w]
        out.append(v % q)
    return encode(spec, out)


def inv(spec: GroupSpec, a: int) -> int:
    """Inverse element."""
    validate(spec, a)
    if spec.family == ABELIAN:
        code = 0
        place = 1
        x = a
        for m in spec.moduli:
            x, r = divmod(x, m)
            code += ((-r) % m) * place
            place *= m
        return code
    q = spec.q
    _, _, terms, _ = _ut_layout(spec.d)
    da = decode(spec, a)
    # Solve A * X = I digit by digit; terms are ordered so that every digit
    # pair (u, w) feeding digit t has strictly smaller superdiagonal, hence
    # smaller index, so a single forward pass suffices.
    out = [0] * len(da)
    for t, pairs in enumerate(terms):
        v = -da[t]
        for (u, w) in pairs:
            v -= da[u] * out[w]
        out[t] = v % q
    return encode(spec, out)


def commutator(spec: GroupSpec, x: int, y: int) -> int:
    """[x, y] = x y x^-1 y^-1."""
    return mul(spec, mul(spec, mul(spec, x, y), inv(spec, x)), inv(spec, y))


def abelianise(spec: GroupSpec, a: int) -> int:
    """Image of a in the abelianisation, as a code of spec.abelianisation."""
    validate(spec, a)
    if spec.family == ABELIAN:
        return a
    return a % (spec.q ** (spec.d - 1))


def lcs_member(spec: GroupSpec, i: int, a: int) -> bool:
    """True iff a lies in the i-th lower-central-series term.

    For the unitriangular family this is the pattern predicate (all entries
    on superdiagonals below i vanish), validated elsewhere against the
    brute-force commutator-closure oracle.
    """
    if i < 1:
        raise PreconditionError(f"lcs index must be >= 1, got {i}")
    validate(spec, a)
    if i == 1:
        return True
    if i > spec.nil_class:
        return a == IDENTITY
    lo, _ = layer_slice(spec, i)
    return a % (spec.q ** lo) == 0


def generates(spec: GroupSpec, gens: Sequence[int]) -> bool:
    """True iff the symmetric closure of gens generates the whole group.

    Uses the abelianisation criterion: for a nilpotent group, a set
    generates iff its image generates the abelianisation.  Guarded at small
    scale by a BFS-reachability oracle in the test suite.
    """
    if not gens:
        raise PreconditionError("generates() needs a nonempty generator list")
    ab = spec.abelianisation
    vectors = [decode(ab, abelianise(spec, g)) for g in gens]
    return generates_mod(vectors, ab.moduli)


def canonical_lift(spec: GroupSpec, ab_code: int) -> int:
    """Lift of an abelianised element with all deeper entries zero."""
    if spec.family == ABELIAN:
        return ab_code
    validate(spec.abelianisation, ab_code)
    return ab_code


def nested_commutator(spec: GroupSpec, elements: Sequence[int]) -> int:
    """[e1, [e2, [..., [e_{n-1}, e_n]...]]] in G."""
    if not elements:
        raise PreconditionError("nested_commutator needs at least one element")
    acc = elements[-1]
    for e in reversed(elements[:-1]):
        acc = commutator(spec, e, acc)
    return acc


def multilinear_layer_map(spec: GroupSpec, i: int, ab_tuple: Sequence[int]) -> int:
    """Class of the nested commutator of canonical lifts in layer i.

    Input: i abelianised element codes.  Output: the canonical coset
    representative modulo the (i+1)-st term, i.e. the element whose only
    nonzero entries sit on superdiagonal i.
    """
    if not (1 <= i <= spec.nil_class):
        raise PreconditionError(f"layer index {i} out of range 1..{spec.nil_class}")
    if len(ab_tuple) != i:
        raise PreconditionError(f"expected {i} abelianised elements, got {len(ab_tuple)}")
    if spec.family == ABELIAN:
        return ab_tuple[0]
    lifts = [canonical_lift(spec, g) for g in ab_tuple]
    val = nested_commutator(spec, lifts)
    lo, hi = layer_slice(spec, i)
    if val % (spec.q ** lo) != 0:
        raise PreconditionError("nested commutator left the expected filtration term")
    return val % (spec.q ** hi)


def layer_coords(spec: GroupSpec, i: int, a: int) -> Tuple[int, ...]:
    """Entries of a on superdiagonal i (a must lie in the i-th term)."""
    lo, hi = layer_slice(spec, i)
    q = spec.q
    return tuple((a // q ** t) % q for t in range(lo, hi))


def element_from_layer_coords(spec: GroupSpec, i: int, coords: Sequence[int]) -> int:
    """Canonical layer-i representative with the given superdiagonal entries."""
    lo, hi = layer_slice(spec, i)
    if len(coords) != hi - lo:
        raise PreconditionError(f"layer {i} needs {hi - lo} coordinates")
    q = spec.q
    return sum((int(c) % q) * q ** (lo + t) for t, c in enumerate(coords))


# --- generating sets -------------------------------------------------------


@dataclass(frozen=True)
class GeneratingSet:
    """Chosen positive generators plus their materialized symmetric closure."""

    spec: GroupSpec
    positives: Tuple[int, ...]
    symmetric: Tuple[int, ...] = field(default=())

    @staticmethod
    def from_positives(spec: GroupSpec, positives: Iterable[int]) -> "GeneratingSet":
        pos = tuple(int(g) for g in positives)
        if not pos:
            raise PreconditionError("a generating set needs at least one generator")
        for g in pos:
            validate(spec, g)
        sym = []
        seen = set()
        for g in pos:
            for h in (g, inv(spec, g)):
                if h not in seen:
                    seen.add(h)
                    sym.append(h)
        return GeneratingSet(spec=spec, positives=pos, symmetric=tuple(sym))

    @property
    def k(self) -> int:
        return len(self.positives)

    def projected(self) -> "GeneratingSet":
        """The same generators pushed to the abelianisation (indices preserved)."""
        ab = self.spec.abelianisation
        pos = tuple(abelianise(self.spec, g) for g in self.positives)
        sym = []
        seen = set()
        for g in pos:
            for h in (g, inv(ab, g)):
                if h not in seen:
                    seen.add(h)
                    sym.append(h)
        return GeneratingSet(spec=ab, positives=pos, symmetric=tuple(sym))
