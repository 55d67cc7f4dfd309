"""Three-valued isomorphism verdicts with re-verifiable certificates."""

from __future__ import annotations

from dataclasses import dataclass, field

from .relations import ExtendedCount


@dataclass(frozen=True)
class Isomorphic:
    def to_json(self) -> dict:
        return {"verdict": "isomorphic"}


@dataclass(frozen=True)
class NonIsomorphic:
    """A refutation: one exactly-computed statistic differing on both sides."""

    witness: dict

    def to_json(self) -> dict:
        return {"verdict": "non_isomorphic", "witness": _jsonable(self.witness)}


@dataclass(frozen=True)
class ConsistentUpTo:
    """No difference found within the stated bounds; not a proof."""

    bounds: dict

    def to_json(self) -> dict:
        return {"verdict": "consistent_up_to", "bounds": _jsonable(self.bounds)}


Verdict = Isomorphic | NonIsomorphic | ConsistentUpTo


def _jsonable(value):
    if isinstance(value, ExtendedCount):
        return "inf" if value.is_infinite else value.value
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value
