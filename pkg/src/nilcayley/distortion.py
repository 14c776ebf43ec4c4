"""Power decompositions and commutator-distortion word synthesis.

The synthesizer turns an element of a lower-central-series layer into a
short explicit word: coefficients over nested commutators of generators are
found by solving a linear congruence system, shortened through a geodesic
word in the abelianisation, and then compressed by writing each coefficient
as a sum of i-th powers so that a coefficient lambda costs O(lambda^(1/i))
letters instead of lambda.

Everything on the decomposition path is exact integer arithmetic; floats
appear only in the recorded length-bound constants.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

from .errors import NotGeneratingError, PreconditionError
from .groups import (
    ABELIAN,
    IDENTITY,
    GeneratingSet,
    GroupSpec,
    abelianise,
    generates,
    inv,
    layer_coords,
    lcs_member,
    mul,
    multilinear_layer_map,
    validate,
)
from .intlinalg import solve_mod
from .metrics import DistanceMap, diameter, shortest_word
from .words import Word, commutator_word, nested_commutator_word, word_eval

__all__ = [
    "PowerDecomposition",
    "Word",
    "word_eval",
    "n_required",
    "power_decompose",
    "proof_remainder_constant",
    "integer_root",
    "synthesize_layer_word",
    "full_synthesize",
    "SynthesisResult",
    "layer_length_bound_factor",
]


def n_required(i: int) -> int:
    """Minimal j with ((i-1)/i)^j < 1/i, in exact rational arithmetic."""
    if i < 1:
        raise PreconditionError(f"power decomposition index must be >= 1, got {i}")
    ratio = Fraction(i - 1, i)
    threshold = Fraction(1, i)
    j = 1
    power = ratio
    while power >= threshold:
        j += 1
        power *= ratio
    return j


def integer_root(x: int, i: int) -> int:
    """Exact floor(x^(1/i)) by binary search on integers."""
    if x < 0 or i < 1:
        raise PreconditionError("integer_root needs x >= 0 and i >= 1")
    if i == 1 or x in (0, 1):
        return x
    lo, hi = 0, 1
    while hi**i <= x:
        hi *= 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if mid**i <= x:
            lo = mid
        else:
            hi = mid
    return lo


def proof_remainder_constant(i: int) -> float:
    """The remainder constant tracked through the greedy iteration.

    One greedy step leaves at most D_i * lambda^((i-1)/i) with
    D_i = i * 2^(i-1); iterating n_i times compounds the constant to
    D_i^(sum of ((i-1)/i)^h) while pushing the exponent below 1/i.
    """
    d_i = i * 2 ** (i - 1)
    exp_sum = sum(((i - 1) / i) ** h for h in range(n_required(i)))
    return float(d_i) ** exp_sum


@dataclass(frozen=True)
class PowerDecomposition:
    """lambda = sum of n_i i-th powers plus a small remainder."""

    i: int
    lam: int
    parts: Tuple[int, ...]
    remainder: int

    @property
    def n_i(self) -> int:
        return len(self.parts)

    def check(self) -> None:
        assert self.lam == sum(a**self.i for a in self.parts) + self.remainder


def power_decompose(lam: int, i: int) -> PowerDecomposition:
    """Greedy decomposition: repeatedly remove floor(rest^(1/i))^i."""
    if lam < 0:
        raise PreconditionError(f"lambda must be >= 0, got {lam}")
    n_i = n_required(i)
    parts: List[int] = []
    rest = lam
    for _ in range(n_i):
        a = integer_root(rest, i)
        parts.append(a)
        rest -= a**i
    return PowerDecomposition(i=i, lam=lam, parts=tuple(parts), remainder=rest)


# --- word synthesis --------------------------------------------------------


@dataclass(frozen=True)
class SynthesisResult:
    """A synthesized word plus the construction's own length accounting."""

    word: Word
    diam_ab: int
    bound_factor: float  # guaranteed multiplier of diam_ab^(1/i) (layer) or sqrt (full)
    bound_const: float  # additive slack


def _unit_word(idx: int, sign: int = 1) -> Word:
    return Word(letters=((idx, sign),))


def nested_word_unit_length(i: int) -> int:
    """Letters in a depth-i nested commutator with single-letter slots."""
    return 3 * 2 ** (i - 1) - 2 if i >= 2 else 1


def layer_length_bound_factor(k: int, i: int) -> float:
    """Multiplier of diam_ab^(1/i) guaranteed by the layer construction.

    Accounting: at most k^(i-1) prefixes survive; per prefix the shortened
    coefficients satisfy sum |lambda| <= diam_ab, each coefficient costs
    (n_i + C_i) * lambda^(1/i) nested commutators of unit length
    3 * 2^(i-1) - 2, and the power-mean inequality bounds the sum of
    lambda^(1/i) by k^(1 - 1/i) * diam_ab^(1/i).
    """
    m_i = nested_word_unit_length(i)
    return (
        float(k ** (i - 1))
        * m_i
        * (n_required(i) + proof_remainder_constant(i))
        * float(k) ** (1.0 - 1.0 / i)
    )


def _abelian_combination(ab: GroupSpec, coeffs: Dict[int, int], gens_ab: Sequence[int]) -> int:
    """sum of coeff * generator in the abelianisation."""
    acc = IDENTITY
    for idx, lam in coeffs.items():
        g = gens_ab[idx]
        step = g if lam > 0 else inv(ab, g)
        for _ in range(abs(lam)):
            acc = mul(ab, acc, step)
    return acc


def _word_net_counts(w: Word) -> Dict[int, int]:
    counts: Dict[int, int] = {}
    for idx, sign in w.letters:
        counts[idx] = counts.get(idx, 0) + sign
    return {idx: c for idx, c in counts.items() if c != 0}


def _signed_nested_word(slots: Tuple[Word, ...], sign: int) -> Word:
    """Nested commutator word, inverted via [u, v]^-1 = [v, u] if sign < 0."""
    if len(slots) == 1:
        return slots[0] if sign > 0 else slots[0].inverse()
    if sign > 0:
        return nested_commutator_word(slots)
    inner = nested_commutator_word(slots[1:])
    return commutator_word(inner, slots[0])


def _layer_word(
    spec: GroupSpec,
    gens: GeneratingSet,
    target_coords: Tuple[int, ...],
    i: int,
    abmap: DistanceMap,
) -> Word:
    """Word whose layer-i class modulo the next term has the given
    superdiagonal-i coordinates; exact as a group element when i is the
    nilpotency class (the deeper term is then trivial)."""
    q = spec.q
    k = gens.k
    ab = spec.abelianisation
    gens_ab = [abelianise(spec, z) for z in gens.positives]

    # Step 1: coefficients over nested generator commutators, consuming
    # tuples in lexicographic order and stopping at the first solvable
    # system to keep the support small.
    tuples: List[Tuple[int, ...]] = []
    columns: List[List[int]] = []
    target = [int(c) for c in target_coords]
    lambdas = None

    def all_tuples():
        idx = [0] * i
        while True:
            yield tuple(idx)
            for pos in range(i - 1, -1, -1):
                idx[pos] += 1
                if idx[pos] < k:
                    break
                idx[pos] = 0
            else:
                return

    for f in all_tuples():
        val = multilinear_layer_map(spec, i, tuple(gens_ab[j] for j in f))
        col = list(layer_coords(spec, i, val))
        tuples.append(f)
        columns.append(col)
        if all(c == 0 for c in col):
            continue
        mat = [[columns[t][row] for t in range(len(columns))] for row in range(len(target))]
        lambdas = solve_mod(mat, target, q)
        if lambdas is not None:
            break
    if lambdas is None:
        raise NotGeneratingError(
            "nested generator commutators do not reach the requested layer element"
        )

    # Step 2: group by prefix and shorten each collected last-slot element
    # through a geodesic word in the abelianisation.
    prefix_last: Dict[Tuple[int, ...], Dict[int, int]] = {}
    for f, lam in zip(tuples, lambdas):
        if lam == 0:
            continue
        prefix = f[:-1]
        slot = prefix_last.setdefault(prefix, {})
        slot[f[-1]] = slot.get(f[-1], 0) + lam

    word = Word()
    for prefix, coeffs in prefix_last.items():
        y = _abelian_combination(ab, coeffs, gens_ab)
        if y == IDENTITY:
            continue
        short = shortest_word(abmap, y)
        for x, lam in sorted(_word_net_counts(short).items()):
            sign = 1 if lam > 0 else -1
            dec = power_decompose(abs(lam), i)
            prefix_words = tuple(_unit_word(j) for j in prefix)
            for a in dec.parts:
                if a == 0:
                    continue
                slots = tuple(w.repeat(a) for w in prefix_words) + (_unit_word(x).repeat(a),)
                word = word + _signed_nested_word(slots, sign)
            if dec.remainder:
                unit = _signed_nested_word(prefix_words + (_unit_word(x),), sign)
                word = word + unit.repeat(dec.remainder)
    return word


def synthesize_layer_word(
    spec: GroupSpec,
    gens: GeneratingSet,
    target: int,
    abmap: DistanceMap,
) -> Word:
    """Short word evaluating exactly to a top-layer (central) element."""
    validate(spec, target)
    c = spec.nil_class
    if not lcs_member(spec, c, target):
        raise PreconditionError("target must lie in the top lower-central-series term")
    if not generates(spec, list(gens.positives)):
        raise NotGeneratingError("generating set does not generate the group")
    if target == IDENTITY:
        return Word()
    if spec.family == ABELIAN:
        return shortest_word(abmap, target)
    w = _layer_word(spec, gens, layer_coords(spec, c, target), c, abmap)
    if word_eval(spec, gens, w) != target:  # pragma: no cover - construction bug guard
        raise PreconditionError("layer synthesis produced a wrong word")
    return w


def synthesize_layer_word_with_stats(
    spec: GroupSpec,
    gens: GeneratingSet,
    target: int,
    abmap: DistanceMap,
) -> SynthesisResult:
    w = synthesize_layer_word(spec, gens, target, abmap)
    c = spec.nil_class
    return SynthesisResult(
        word=w,
        diam_ab=diameter(abmap),
        bound_factor=layer_length_bound_factor(gens.k, c),
        bound_const=float(gens.k**c),
    )


def full_synthesize(
    spec: GroupSpec,
    gens: GeneratingSet,
    target: int,
    abmap: DistanceMap,
) -> Word:
    """Word for an arbitrary element: abelian geodesic prefix plus layer
    corrections, recursing down the filtration (classes up to 3)."""
    validate(spec, target)
    c = spec.nil_class
    if c > 3:
        raise PreconditionError(f"full synthesis supports class <= 3, got {c}")
    if not generates(spec, list(gens.positives)):
        raise NotGeneratingError("generating set does not generate the group")

    w1 = shortest_word(abmap, abelianise(spec, target))
    if spec.family == ABELIAN:
        return w1
    word = w1
    residual = mul(spec, inv(spec, word_eval(spec, gens, word)), target)
    # residual is in the second term; peel one layer at a time.
    for i in range(2, c + 1):
        if residual == IDENTITY:
            break
        assert lcs_member(spec, i, residual)
        wi = _layer_word(spec, gens, layer_coords(spec, i, residual), i, abmap)
        word = word + wi
        residual = mul(spec, inv(spec, word_eval(spec, gens, wi)), residual)
    if residual != IDENTITY:  # pragma: no cover - construction bug guard
        raise PreconditionError("full synthesis left a nontrivial residual")
    return word


def full_synthesize_with_stats(
    spec: GroupSpec,
    gens: GeneratingSet,
    target: int,
    abmap: DistanceMap,
) -> SynthesisResult:
    w = full_synthesize(spec, gens, target, abmap)
    c = spec.nil_class
    factor = sum(layer_length_bound_factor(gens.k, i) for i in range(2, c + 1)) if c >= 2 else 0.0
    return SynthesisResult(
        word=w,
        diam_ab=diameter(abmap),
        bound_factor=factor,
        bound_const=float(gens.k ** max(c, 1)),
    )
