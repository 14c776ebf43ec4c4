"""Words in a generating set: signed letter sequences and evaluation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

from .errors import PreconditionError
from .groups import IDENTITY, GeneratingSet, GroupSpec, inv, mul


@dataclass(frozen=True)
class Word:
    """Sequence of (generator index, sign) letters; sign -1 means inverted."""

    letters: Tuple[Tuple[int, int], ...] = ()

    def __len__(self) -> int:
        return len(self.letters)

    def __add__(self, other: "Word") -> "Word":
        return Word(letters=self.letters + other.letters)

    def inverse(self) -> "Word":
        return Word(letters=tuple((i, -s) for i, s in reversed(self.letters)))

    def repeat(self, n: int) -> "Word":
        if n < 0:
            return self.inverse().repeat(-n)
        return Word(letters=self.letters * n)

    def to_text(self) -> str:
        return " ".join(f"{'+' if s > 0 else '-'}{i}" for i, s in self.letters)

    @staticmethod
    def from_text(text: str) -> "Word":
        letters = []
        for tok in text.split():
            if tok[0] == "+":
                letters.append((int(tok[1:]), +1))
            elif tok[0] == "-":
                letters.append((int(tok[1:]), -1))
            else:
                raise PreconditionError(f"bad word token {tok!r}")
        return Word(letters=tuple(letters))


def word_eval(spec: GroupSpec, gens: GeneratingSet, w: Word) -> int:
    """Left-to-right product of the (possibly inverted) generators."""
    acc = IDENTITY
    for idx, sign in w.letters:
        if not (0 <= idx < len(gens.positives)):
            raise PreconditionError(f"letter index {idx} out of range")
        z = gens.positives[idx]
        if sign < 0:
            z = inv(spec, z)
        acc = mul(spec, acc, z)
    return acc


def commutator_word(u: Word, v: Word) -> Word:
    """[u, v] = u v u^-1 v^-1 as a literal word (no free reduction)."""
    return u + v + u.inverse() + v.inverse()


def nested_commutator_word(slots: Tuple[Word, ...]) -> Word:
    """[w1, [w2, [..., [w_{n-1}, wn]...]]] as a literal word."""
    if not slots:
        raise PreconditionError("need at least one slot word")
    acc = slots[-1]
    for w in reversed(slots[:-1]):
        acc = commutator_word(w, acc)
    return acc
