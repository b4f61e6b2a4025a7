"""Comparison dataset model: users, vouches, comparisons, privacy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DataError

PUBLIC = "public"
PRIVATE = "private"


@dataclass(frozen=True)
class Comparison:
    """One judgment on an ordered entity pair; negative favors ``entity_a``."""

    entity_a: str
    entity_b: str
    value: float
    private: bool = False


@dataclass
class ComparisonDataset:
    """Raw pipeline input.

    ``pretrusted`` enumerates every known user (value: pretrust flag),
    ``vouches`` holds (voucher, vouchee) pairs and ``comparisons`` the
    per-user judgment lists. Comparisons are kept in canonical
    orientation (``entity_a < entity_b``); reporting (e, f, r) is
    equivalent to reporting (f, e, -r), so ingestion flips rows as
    needed. An entity counts as privately assessed by a user only if
    every one of that user's rows touching it is private.
    """

    pretrusted: dict[str, bool] = field(default_factory=dict)
    vouches: list[tuple[str, str]] = field(default_factory=list)
    comparisons: dict[str, list[Comparison]] = field(default_factory=dict)
    r_max: float = 10.0

    def add_user(self, user: str, pretrusted: bool = False) -> None:
        self.pretrusted[user] = bool(pretrusted) or self.pretrusted.get(user, False)

    def add_vouch(self, voucher: str, vouchee: str) -> None:
        if voucher == vouchee:
            raise DataError(f"self-vouch by {voucher!r}")
        self.add_user(voucher)
        self.add_user(vouchee)
        self.vouches.append((voucher, vouchee))

    def add_comparison(self, user: str, entity_a: str, entity_b: str,
                       value: float, private: bool = False) -> None:
        if entity_a == entity_b:
            raise DataError(f"comparison of {entity_a!r} with itself by {user!r}")
        value = float(value)
        if not math.isfinite(value) or abs(value) > self.r_max:
            raise DataError(
                f"comparison value {value} outside [-{self.r_max}, {self.r_max}]")
        if entity_a > entity_b:
            entity_a, entity_b, value = entity_b, entity_a, -value
        self.add_user(user)
        self.comparisons.setdefault(user, []).append(
            Comparison(entity_a, entity_b, value, bool(private)))

    def users(self) -> list[str]:
        known = set(self.pretrusted)
        for voucher, vouchee in self.vouches:
            known.add(voucher)
            known.add(vouchee)
        known.update(self.comparisons)
        return sorted(known)

    def entities(self) -> list[str]:
        seen = set()
        for rows in self.comparisons.values():
            for row in rows:
                seen.add(row.entity_a)
                seen.add(row.entity_b)
        return sorted(seen)

    def compared_entities(self, user: str) -> set[str]:
        seen = set()
        for row in self.comparisons.get(user, []):
            seen.add(row.entity_a)
            seen.add(row.entity_b)
        return seen

    def participation(self) -> dict[str, dict[str, str]]:
        """Per-user privacy status of every entity the user rated.

        A single public row on an entity makes the participation public.
        """
        flags: dict[str, dict[str, str]] = {}
        for user, rows in self.comparisons.items():
            per_user = flags.setdefault(user, {})
            for row in rows:
                status = PRIVATE if row.private else PUBLIC
                for entity in (row.entity_a, row.entity_b):
                    if status == PUBLIC or per_user.get(entity) is None:
                        per_user[entity] = status
        return flags

    def triples(self, user: str) -> list[tuple[str, str, float]]:
        return [(c.entity_a, c.entity_b, c.value)
                for c in self.comparisons.get(user, [])]
