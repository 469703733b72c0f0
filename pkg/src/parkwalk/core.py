"""Preference lists, the deterministic (Konheim-Weiss) protocol and Dyck paths.

Cars and spots are 1-indexed everywhere in the public API.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

EMPTY = 0


class ValidationError(ValueError):
    """Malformed input: a preference list or path that violates its own invariants."""


class DomainError(ValueError):
    """Well-formed input outside the domain of an operation."""


@dataclass(frozen=True)
class PreferenceList:
    prefs: tuple[int, ...]

    def __init__(self, prefs: Iterable[int]):
        prefs = tuple(int(a) for a in prefs)
        n = len(prefs)
        if n == 0:
            raise ValidationError("preference list must be non-empty")
        for i, a in enumerate(prefs, start=1):
            if not 1 <= a <= n:
                raise ValidationError(f"entry {i} is {a}, outside [1, {n}]")
        object.__setattr__(self, "prefs", prefs)

    @property
    def n(self) -> int:
        return len(self.prefs)

    def __len__(self):
        return len(self.prefs)

    def __iter__(self):
        return iter(self.prefs)

    def __getitem__(self, i):
        return self.prefs[i]

    def __repr__(self):
        return f"PreferenceList({self.prefs!r})"


def as_prefs(alpha) -> PreferenceList:
    return alpha if isinstance(alpha, PreferenceList) else PreferenceList(alpha)


@dataclass(frozen=True)
class Classification:
    is_pf: bool
    is_identity_outcome: bool
    is_weakly_increasing: bool


@dataclass(frozen=True)
class ClassicalResult:
    prefs: tuple[int, ...]
    outcome: tuple[int, ...]  # outcome[s-1] = car in spot s, or EMPTY
    lucky: tuple[int, ...]
    failed_cars: tuple[int, ...]
    spots: tuple[int, ...]  # spots[i-1] = spot of car i, or EMPTY

    @property
    def occupancy(self) -> tuple[int, ...]:
        return tuple(int(c != EMPTY) for c in self.outcome)

    @property
    def total_displacement(self) -> int:
        """Sum of (spot - preference) over parked cars."""
        return sum(s - a for s, a in zip(self.spots, self.prefs) if s != EMPTY)


def is_parking_function(alpha) -> bool:
    alpha = as_prefs(alpha)
    n = alpha.n
    counts = [0] * (n + 1)
    for a in alpha:
        counts[a] += 1
    running = 0
    for i in range(1, n + 1):
        running += counts[i]
        if running < i:
            return False
    return True


def is_identity_outcome(alpha) -> bool:
    return all(a <= i for i, a in enumerate(as_prefs(alpha), start=1))


def classify(alpha) -> Classification:
    alpha = as_prefs(alpha)
    pf = is_parking_function(alpha)
    ident = is_identity_outcome(alpha)
    monotone = all(x <= y for x, y in zip(alpha.prefs, alpha.prefs[1:]))
    return Classification(is_pf=pf, is_identity_outcome=ident, is_weakly_increasing=monotone and ident)


def classical_park(alpha) -> ClassicalResult:
    """Run the deterministic protocol: each car drives right to the first free spot."""
    alpha = as_prefs(alpha)
    n = alpha.n
    outcome = [EMPTY] * (n + 1)
    spots = []
    lucky, failed = [], []
    for car, a in enumerate(alpha, start=1):
        s = a
        while s <= n and outcome[s] != EMPTY:
            s += 1
        if s > n:
            failed.append(car)
            spots.append(EMPTY)
            continue
        outcome[s] = car
        spots.append(s)
        if s == a:
            lucky.append(car)
    return ClassicalResult(
        prefs=alpha.prefs,
        outcome=tuple(outcome[1:]),
        lucky=tuple(lucky),
        failed_cars=tuple(failed),
        spots=tuple(spots),
    )


def displacement(alpha) -> tuple[int, ...]:
    alpha = as_prefs(alpha)
    if not is_identity_outcome(alpha):
        raise DomainError(f"displacement needs alpha_i <= i for all i, got {alpha.prefs}")
    return tuple(i - a for i, a in enumerate(alpha, start=1))


def mirror(alpha) -> PreferenceList:
    """Entry-wise reflection a -> n - a + 1."""
    alpha = as_prefs(alpha)
    n = alpha.n
    return PreferenceList(n - a + 1 for a in alpha)


# -- Dyck paths ---------------------------------------------------------------


def validate_dyck(path: str) -> str:
    path = path.upper()
    height = 0
    for pos, step in enumerate(path, start=1):
        if step == "U":
            height += 1
        elif step == "D":
            height -= 1
        else:
            raise ValidationError(f"bad step {step!r} at position {pos}")
        if height < 0:
            raise ValidationError(f"path dips below the axis at step {pos}")
    if height != 0:
        raise ValidationError("path does not return to the axis")
    return path


def dyck_to_wipf(path: str) -> PreferenceList:
    """Entry i is one plus the number of down steps before the i-th up step."""
    path = validate_dyck(path)
    if not path:
        raise ValidationError("empty path")
    downs = 0
    out = []
    for step in path:
        if step == "U":
            out.append(downs + 1)
        else:
            downs += 1
    return PreferenceList(out)


def wipf_to_dyck(alpha) -> str:
    alpha = as_prefs(alpha)
    if not classify(alpha).is_weakly_increasing:
        raise DomainError(f"{alpha.prefs} is not a weakly increasing parking function")
    steps = []
    downs = 0
    for a in alpha:
        while downs < a - 1:
            steps.append("D")
            downs += 1
        steps.append("U")
    steps.extend("D" * (alpha.n - downs))
    return "".join(steps)


def dyck_returns(path: str) -> int:
    """Number of times the running height comes back to 0 after the start."""
    path = validate_dyck(path)
    if not path:
        raise DomainError("returns are undefined for the empty path")
    height = 0
    touches = 0
    for step in path:
        height += 1 if step == "U" else -1
        if height == 0:
            touches += 1
    return touches


def dyck_paths(n: int):
    """All Dyck paths of semilength n, in lexicographic order (D < U)."""

    def rec(prefix: list[str], ups: int, downs: int):
        if ups == n and downs == n:
            yield "".join(prefix)
            return
        if downs < ups:
            prefix.append("D")
            yield from rec(prefix, ups, downs + 1)
            prefix.pop()
        if ups < n:
            prefix.append("U")
            yield from rec(prefix, ups + 1, downs)
            prefix.pop()

    yield from rec([], 0, 0)


def weakly_increasing_pfs(n: int):
    """Every weakly increasing parking function of length n, via Dyck paths."""
    for path in dyck_paths(n):
        yield dyck_to_wipf(path)


def identity_outcome_pfs(n: int):
    """All n! preference lists with alpha_i <= i, lexicographic."""
    from itertools import product

    for t in product(*(range(1, i + 1) for i in range(1, n + 1))):
        yield t


def lucky_set(alpha) -> tuple[int, ...]:
    return classical_park(alpha).lucky


def parse_prefs(text: str | Sequence[int]) -> PreferenceList:
    if isinstance(text, str):
        parts = [t for t in text.replace(",", " ").split() if t]
        return PreferenceList(int(t) for t in parts)
    return PreferenceList(text)
