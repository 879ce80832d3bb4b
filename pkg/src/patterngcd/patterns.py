"""Mined class patterns and the per-round pattern store."""
from __future__ import annotations

from dataclasses import dataclass, field

NEW_CATEGORY = "New Category"


@dataclass
class Pattern:
    """A textual description of one class's defining behavior."""

    pattern_id: int
    owner: int
    text: str
    origin: str = "extracted"  # extracted | refined
    revisions: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "pattern_id": self.pattern_id,
            "owner": self.owner,
            "text": self.text,
            "origin": self.origin,
            "revisions": list(self.revisions),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Pattern":
        return cls(
            pattern_id=int(obj["pattern_id"]),
            owner=int(obj["owner"]),
            text=str(obj["text"]),
            origin=str(obj.get("origin", "extracted")),
            revisions=[str(r) for r in obj.get("revisions", [])],
        )


@dataclass(frozen=True)
class OracleVerdict:
    """One sample's match outcome: a pattern id or None for a new category."""

    sample_id: str
    pattern_id: int | None
    justification: str = ""

    @property
    def is_new_category(self) -> bool:
        return self.pattern_id is None


@dataclass(frozen=True)
class ExtractionReport:
    """Result of mining one cluster's samples for a dominant pattern."""

    pattern_text: str
    member_ids: tuple[str, ...]
    excluded_ids: tuple[str, ...]


class PatternStore:
    """At most one active pattern per owning class; revisions accrue in place."""

    def __init__(self):
        self._by_owner: dict[int, Pattern] = {}
        self._next_id = 0

    def __len__(self) -> int:
        return len(self._by_owner)

    def __contains__(self, owner: int) -> bool:
        return owner in self._by_owner

    def get(self, owner: int) -> Pattern | None:
        return self._by_owner.get(owner)

    def add(self, owner: int, text: str, origin: str = "extracted") -> Pattern:
        if owner in self._by_owner:
            raise ValueError(f"class {owner} already owns a pattern")
        p = Pattern(pattern_id=self._next_id, owner=owner, text=text, origin=origin)
        self._next_id += 1
        self._by_owner[owner] = p
        return p

    def revise(self, owner: int, new_text: str) -> Pattern:
        p = self._by_owner[owner]
        if new_text != p.text:
            p.revisions.append(p.text)
            p.text = new_text
            p.origin = "refined"
        return p

    def ordered(self) -> list[Pattern]:
        """Patterns by ascending pattern id; index i is prompt category i+1."""
        return sorted(self._by_owner.values(), key=lambda p: p.pattern_id)

    def by_pattern_id(self, pattern_id: int) -> Pattern:
        for p in self._by_owner.values():
            if p.pattern_id == pattern_id:
                return p
        raise KeyError(pattern_id)

    def to_json(self) -> list[dict]:
        return [p.to_json() for p in self.ordered()]

    @classmethod
    def from_json(cls, items: list[dict]) -> "PatternStore":
        store = cls()
        for obj in items:
            p = Pattern.from_json(obj)
            if p.owner in store._by_owner:
                raise ValueError(f"class {p.owner} already owns a pattern")
            store._by_owner[p.owner] = p
            store._next_id = max(store._next_id, p.pattern_id + 1)
        return store
