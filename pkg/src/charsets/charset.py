"""Leveled, duplicate-free sets of characters (B = union of B_n)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, List, Sequence, Tuple

from .torus import Character, format_character, parse_character


@dataclass(frozen=True)
class CharSet:
    """Characters grouped into levels; level ``start + i`` is ``levels[i]``.

    Construction drops any character already present at an earlier level (or
    earlier in the same level), so the flattened enumeration is one-to-one.
    """

    levels: Tuple[Tuple[Character, ...], ...]
    dim: int = 1
    start: int = 0
    provenance: str = ""

    def __post_init__(self):
        seen = set()
        clean = []
        for level in self.levels:
            row = []
            for phi in level:
                phi = tuple(int(v) for v in phi)
                if len(phi) != self.dim:
                    raise ValueError(f"character {phi} is not of dimension {self.dim}")
                if phi not in seen:
                    seen.add(phi)
                    row.append(phi)
            clean.append(tuple(row))
        object.__setattr__(self, "levels", tuple(clean))

    @classmethod
    def from_levels(cls, levels: Iterable[Iterable], dim: int = 1, start: int = 0,
                    provenance: str = "") -> "CharSet":
        return cls(tuple(tuple(parse_character(p) for p in lv) for lv in levels),
                   dim, start, provenance)

    def __iter__(self) -> Iterator[Character]:
        for level in self.levels:
            yield from level

    def __len__(self) -> int:
        return sum(len(lv) for lv in self.levels)

    def __contains__(self, phi) -> bool:
        phi = tuple(phi)
        return any(phi in lv for lv in self.levels)

    def leveled(self) -> Iterator[Tuple[int, Character]]:
        """(level number, character) in enumeration order."""
        for i, level in enumerate(self.levels):
            for phi in level:
                yield self.start + i, phi

    def level(self, n: int) -> Tuple[Character, ...]:
        return self.levels[n - self.start]

    @property
    def level_numbers(self) -> range:
        return range(self.start, self.start + len(self.levels))

    def prefix(self, n_levels: int) -> "CharSet":
        return CharSet(self.levels[:n_levels], self.dim, self.start, self.provenance)

    def take(self, count: int) -> List[Character]:
        out = []
        for phi in self:
            if len(out) == count:
                break
            out.append(phi)
        return out

    def to_json(self) -> dict:
        out = {"dim": self.dim,
               "levels": [[format_character(p) for p in lv] for lv in self.levels]}
        if self.start:
            out["start"] = self.start
        if self.provenance:
            out["provenance"] = self.provenance
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "CharSet":
        if "levels" not in obj:
            raise KeyError("levels")
        return cls.from_levels(obj["levels"], int(obj.get("dim", 1)),
                               int(obj.get("start", 0)), obj.get("provenance", ""))


def from_sequence(chars: Sequence, dim: int = 1) -> CharSet:
    """One character per level, in the given order."""
    return CharSet(tuple((parse_character(p),) for p in chars), dim)
