"""Weighted maximum base-pairing folder (Nussinov-style) with dot-bracket I/O.

Pair weights: G-C 3, A-T 2, G-T 1. Hairpin loops hold at least three
unpaired bases. Among optimal structures the one whose sorted pair list is
lexicographically smallest is returned, which makes output deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from srnaflow.errors import TooShort

MIN_LOOP = 3
MIN_FOLD_LENGTH = 5
PAIR_WEIGHTS = {
    ("G", "C"): 3, ("C", "G"): 3,
    ("A", "T"): 2, ("T", "A"): 2,
    ("G", "T"): 1, ("T", "G"): 1,
}
_CODE = {"A": 0, "C": 1, "G": 2, "T": 3}
_WEIGHT_TABLE = np.zeros((5, 5), dtype=np.int64)
for (a, b), w in PAIR_WEIGHTS.items():
    _WEIGHT_TABLE[_CODE[a], _CODE[b]] = w
_NEG = -(1 << 40)


@dataclass(frozen=True)
class SecondaryStructure:
    dot_bracket: str
    pair_table: tuple[int, ...]

    @classmethod
    def from_pairs(cls, length: int, pairs) -> "SecondaryStructure":
        table = [-1] * length
        chars = ["."] * length
        for i, j in pairs:
            if i > j:
                i, j = j, i
            table[i], table[j] = j, i
            chars[i], chars[j] = "(", ")"
        return cls("".join(chars), tuple(table))

    @classmethod
    def from_dot_bracket(cls, db: str) -> "SecondaryStructure":
        return cls.from_pairs(len(db), parse_dot_bracket(db))

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return [(i, j) for i, j in enumerate(self.pair_table) if j > i]

    def __len__(self) -> int:
        return len(self.dot_bracket)


def parse_dot_bracket(db: str) -> list[tuple[int, int]]:
    stack, pairs = [], []
    for i, ch in enumerate(db):
        if ch == "(":
            stack.append(i)
        elif ch == ")":
            if not stack:
                raise ValueError(f"unbalanced ')' at {i}")
            pairs.append((stack.pop(), i))
        elif ch != ".":
            raise ValueError(f"bad dot-bracket character {ch!r}")
    if stack:
        raise ValueError("unbalanced '('")
    return sorted(pairs)


def pair_weight(a: str, b: str) -> int:
    return PAIR_WEIGHTS.get((a, b), 0)


def structure_weight(seq: str, pairs) -> int:
    return sum(pair_weight(seq[i], seq[j]) for i, j in pairs)


def _weight_matrix(seq: str) -> np.ndarray:
    codes = np.array([_CODE.get(ch, 4) for ch in seq], dtype=np.int64)
    return _WEIGHT_TABLE[codes[:, None], codes[None, :]]


def _fill(w: np.ndarray) -> np.ndarray:
    """Optimal weights ``best[i, j]`` for every interval ``i..j`` (inclusive).

    ``best`` has ``n + 1`` rows; ``best[r, r - 1] = 0`` is the empty interval
    and entries with ``j < r - 1`` hold a large negative sentinel, so
    ``best[k + 1, j]`` is automatically invalid whenever ``k > j``.
    """
    n = w.shape[0]
    best = np.full((n + 1, n), _NEG, dtype=np.int64)
    for r in range(1, n + 1):
        best[r, r - 1] = 0
    for i in range(n - 1, -1, -1):
        row = best[i + 1].copy()
        row[i] = 0
        first = i + MIN_LOOP + 1
        if first < n:
            ks = first + np.nonzero(w[i, first:])[0]
            if ks.size:
                # pair (i, k): weight + inside(i+1..k-1) + right(k+1..j)
                gain = w[i, ks] + best[i + 1, ks - 1]
                k0 = int(ks[0])
                cand = gain[:, None] + best[ks + 1, k0:]
                np.maximum(row[k0:], cand.max(axis=0), out=row[k0:])
        row[:i] = _NEG
        if i > 0:
            row[i - 1] = 0
        best[i] = row
    return best


def _traceback(w: np.ndarray, best: np.ndarray) -> list[tuple[int, int]]:
    n = w.shape[0]
    pairs = []
    stack = [(0, n - 1)]
    while stack:
        i, j = stack.pop()
        while i < j and best[i, j] > 0:
            target = best[i, j]
            first = i + MIN_LOOP + 1
            k_found = -1
            if first <= j:
                ks = first + np.nonzero(w[i, first:j + 1])[0]
                if ks.size:
                    vals = w[i, ks] + best[i + 1, ks - 1] + best[ks + 1, j]
                    hit = np.nonzero(vals == target)[0]
                    if hit.size:
                        k_found = int(ks[hit[0]])
            if k_found < 0:
                i += 1
                continue
            pairs.append((i, k_found))
            stack.append((k_found + 1, j))
            i, j = i + 1, k_found - 1
    return sorted(pairs)


def fold_pairs(seq: str) -> list[tuple[int, int]]:
    if len(seq) < MIN_FOLD_LENGTH:
        raise TooShort(f"fold needs >= {MIN_FOLD_LENGTH} nt, got {len(seq)}")
    w = _weight_matrix(seq)
    return _traceback(w, _fill(w))


def fold(seq: str) -> SecondaryStructure:
    """Fold ``seq`` and return its dot-bracket structure and pair table."""
    return SecondaryStructure.from_pairs(len(seq), fold_pairs(seq))


def fold_weight(seq: str) -> int:
    return structure_weight(seq, fold_pairs(seq))


def is_valid_structure(seq: str, structure: SecondaryStructure) -> bool:
    """Balanced, nested, legal pairs and hairpin loops of at least three."""
    if len(seq) != len(structure.dot_bracket):
        return False
    try:
        pairs = parse_dot_bracket(structure.dot_bracket)
    except ValueError:
        return False
    table = structure.pair_table
    for i, j in pairs:
        if table[i] != j or table[j] != i:
            return False
        if pair_weight(seq[i], seq[j]) == 0:
            return False
        if j - i - 1 < MIN_LOOP:
            return False
    return sum(1 for x in table if x >= 0) == 2 * len(pairs)
