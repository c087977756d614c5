"""The five requirement keys and per-requirement slot state."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

KEYS = ("entity", "quantifier", "location", "time", "condition")

FILLED = "filled"
MISSING = "missing"
AMBIGUOUS = "ambiguous"
DEFAULTED = "defaulted"


@dataclass(frozen=True)
class Slot:
    text: str = ""
    span: Optional[Tuple[int, int]] = None
    status: str = MISSING
    reason: Optional[str] = None

    def __post_init__(self):
        if self.status == FILLED and not self.text:
            raise ValueError("filled slot must have non-empty text")
        if self.status == AMBIGUOUS and not self.reason:
            raise ValueError("ambiguous slot must record a reason")


@dataclass(frozen=True)
class SlotSet:
    entity: Slot = field(default_factory=Slot)
    quantifier: Slot = field(default_factory=Slot)
    location: Slot = field(default_factory=Slot)
    time: Slot = field(default_factory=Slot)
    condition: Slot = field(default_factory=Slot)

    def get(self, key: str) -> Slot:
        if key not in KEYS:
            raise KeyError(key)
        return getattr(self, key)

    def with_slot(self, key: str, slot: Slot) -> "SlotSet":
        if key not in KEYS:
            raise KeyError(key)
        return replace(self, **{key: slot})

    def items(self):
        for key in KEYS:
            yield key, self.get(key)

    @property
    def complete(self) -> bool:
        return all(s.status in (FILLED, DEFAULTED) for _, s in self.items())
