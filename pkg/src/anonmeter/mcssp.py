"""Exact counting and enumeration of single-meter selections hitting a billing total.

A selection picks one position per period; a selection is a solution when its
values sum to the target meter's total. The number of solutions can reach
n**t, so every count is an exact Python integer, never a float. Counting uses
a forward and a backward pass over the periods so that per-period marginals
fall out of one multiplication per (partial sum, position) pair instead of a
fresh solve.
"""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass

from .model import AnonymizedInstance


class NoSolutionsError(ValueError):
    """The instance admits no selection hitting the target total."""


class ResourceLimitError(RuntimeError):
    """A solve exceeded its table or wall-clock budget."""


# Rough CPython cost of one dict slot plus its key and count objects.
_TABLE_ENTRY_BYTES = 96


@dataclass
class ResourceGuard:
    """Budgets shared by the passes of one solve: table entries and wall-clock time."""

    max_entries: int | None = None
    deadline: float | None = None
    entries: int = 0

    @classmethod
    def from_budgets(cls, mem_budget_gib: float | None, time_budget_s: float | None) -> ResourceGuard:
        max_entries = None
        if mem_budget_gib is not None:
            max_entries = int(mem_budget_gib * 2**30 / _TABLE_ENTRY_BYTES)
        deadline = None
        if time_budget_s is not None:
            deadline = time.monotonic() + time_budget_s
        return cls(max_entries=max_entries, deadline=deadline)

    def charge(self, new_entries: int) -> None:
        self.entries += new_entries
        if self.max_entries is not None and self.entries > self.max_entries:
            raise ResourceLimitError(
                f"table budget exceeded: {self.entries} entries > {self.max_entries}"
            )

    def check_time(self) -> None:
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise ResourceLimitError("wall-clock budget exceeded")


@dataclass(frozen=True)
class CountTable:
    """Stage-by-stage solution counts keyed by achievable partial sum.

    Forward tables: stages[j] counts selections over periods 0..j-1, so
    stages[0] is {0: 1} and stages[t] holds the full count at the target.
    Backward tables: stages[j] counts selections over periods j..t-1, so
    stages[t] is {0: 1} and stages[0] holds the full count at the target.
    Keys never exceed the target; sums that cannot be extended to hit the
    target (given the min/max achievable over the remaining periods) are
    dropped, so no zero-count entries are stored.
    """

    direction: str  # "forward" | "backward"
    target: int
    stages: tuple[dict[int, int], ...]

    def total_solutions(self) -> int:
        full = self.stages[-1] if self.direction == "forward" else self.stages[0]
        return full.get(self.target, 0)


@dataclass(frozen=True)
class MarginalCounts:
    """Per-period, per-position solution counts for one target meter.

    counts[j][k] is the number of full solutions that select position k at
    period j; every row sums to total_solutions. Indices are 0-based.
    """

    target_meter: int
    target_total: int
    total_solutions: int
    counts: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class Enumeration:
    """Explicit solutions (0-based position per period) plus a truncation flag."""

    selections: tuple[tuple[int, ...], ...]
    truncated: bool


def _period_bounds(periods) -> tuple[list[int], list[int]]:
    return [min(p) for p in periods], [max(p) for p in periods]


def _suffix_sums(vals: list[int]) -> list[int]:
    out = [0] * (len(vals) + 1)
    for j in range(len(vals) - 1, -1, -1):
        out[j] = out[j + 1] + vals[j]
    return out


def _prefix_sums(vals: list[int]) -> list[int]:
    out = [0] * (len(vals) + 1)
    for j, v in enumerate(vals):
        out[j + 1] = out[j] + v
    return out


def forward_counts(
    inst: AnonymizedInstance, target_total: int, guard: ResourceGuard | None = None
) -> CountTable:
    """Count selections over growing period prefixes; stage t holds N at the target key."""
    if target_total < 0:
        raise ValueError(f"target total must be non-negative, got {target_total}")
    mins, maxs = _period_bounds(inst.periods)
    lo_rest = _suffix_sums(mins)
    hi_rest = _suffix_sums(maxs)
    stages: list[dict[int, int]] = [{0: 1}]
    for j in range(inst.t):
        prev = stages[-1]
        nxt: dict[int, int] = {}
        # keys s of stage j+1 survive only if target is still reachable:
        # s + lo_rest[j+1] <= target <= s + hi_rest[j+1]
        kmin = target_total - hi_rest[j + 1]
        kmax = target_total - lo_rest[j + 1]
        for v, mult in Counter(inst.periods[j]).items():
            if guard is not None:
                guard.check_time()
            for s, c in prev.items():
                s2 = s + v
                if kmin <= s2 <= kmax:
                    nxt[s2] = nxt.get(s2, 0) + c * mult
        if guard is not None:
            guard.charge(len(nxt))
        stages.append(nxt)
    return CountTable(direction="forward", target=target_total, stages=tuple(stages))


def backward_counts(
    inst: AnonymizedInstance, target_total: int, guard: ResourceGuard | None = None
) -> CountTable:
    """Mirror of forward_counts over shrinking period suffixes."""
    if target_total < 0:
        raise ValueError(f"target total must be non-negative, got {target_total}")
    mins, maxs = _period_bounds(inst.periods)
    lo_pre = _prefix_sums(mins)
    hi_pre = _prefix_sums(maxs)
    stages: list[dict[int, int] | None] = [None] * (inst.t + 1)
    stages[inst.t] = {0: 1}
    for j in range(inst.t - 1, -1, -1):
        prev = stages[j + 1]
        nxt: dict[int, int] = {}
        # keys b of stage j survive only if the prefix can supply target - b
        kmin = target_total - hi_pre[j]
        kmax = target_total - lo_pre[j]
        for v, mult in Counter(inst.periods[j]).items():
            if guard is not None:
                guard.check_time()
            for b, c in prev.items():
                b2 = b + v
                if kmin <= b2 <= kmax:
                    nxt[b2] = nxt.get(b2, 0) + c * mult
        if guard is not None:
            guard.charge(len(nxt))
        stages[j] = nxt
    return CountTable(direction="backward", target=target_total, stages=tuple(stages))


def marginal_counts(
    inst: AnonymizedInstance, target_meter: int, guard: ResourceGuard | None = None
) -> MarginalCounts:
    """Count, per period and position, the solutions selecting that position.

    counts[j][k] = sum over s of forward[j][s] * backward[j+1][target - s - v]
    where v is the value at position k of period j. Equal values within a
    period necessarily receive equal counts. Raises NoSolutionsError when the
    instance admits no solution at all, since the downstream probabilities
    would be undefined.
    """
    if not 0 <= target_meter < inst.n:
        raise ValueError(f"target meter must be in 0..{inst.n - 1}, got {target_meter}")
    target = inst.totals[target_meter]
    fwd = forward_counts(inst, target, guard=guard)
    bwd = backward_counts(inst, target, guard=guard)
    n_total = fwd.total_solutions()
    if n_total == 0:
        raise NoSolutionsError(
            f"no selection over {inst.t} periods sums to {target} (meter {target_meter})"
        )
    rows = []
    for j in range(inst.t):
        pre = fwd.stages[j]
        post = bwd.stages[j + 1]
        per_value: dict[int, int] = {}
        for v in set(inst.periods[j]):
            if guard is not None:
                guard.check_time()
            rem = target - v
            acc = 0
            for s, c in pre.items():
                b = post.get(rem - s)
                if b:
                    acc += c * b
            per_value[v] = acc
        row = tuple(per_value[v] for v in inst.periods[j])
        assert sum(row) == n_total, f"period {j} marginals do not sum to N"
        rows.append(row)
    return MarginalCounts(
        target_meter=target_meter,
        target_total=target,
        total_solutions=n_total,
        counts=tuple(rows),
    )


def enumerate_solutions(inst: AnonymizedInstance, target_meter: int, limit: int) -> Enumeration:
    """List solutions explicitly, in lexicographic (period, position) order.

    Emits at most `limit` selections; the truncated flag reports whether more
    exist. Intended for small solution sets — counting never needs it.
    """
    if limit < 1:
        raise ValueError(f"limit must be at least 1, got {limit}")
    if not 0 <= target_meter < inst.n:
        raise ValueError(f"target meter must be in 0..{inst.n - 1}, got {target_meter}")
    target = inst.totals[target_meter]
    mins, maxs = _period_bounds(inst.periods)
    lo_rest = _suffix_sums(mins)
    hi_rest = _suffix_sums(maxs)
    found: list[tuple[int, ...]] = []
    truncated = False
    sel = [0] * inst.t

    def walk(j: int, acc: int) -> None:
        nonlocal truncated
        if truncated:
            return
        if j == inst.t:
            if acc == target:
                if len(found) < limit:
                    found.append(tuple(sel))
                else:
                    truncated = True
            return
        for k, v in enumerate(inst.periods[j]):
            s2 = acc + v
            if s2 + lo_rest[j + 1] <= target <= s2 + hi_rest[j + 1]:
                sel[j] = k
                walk(j + 1, s2)
                if truncated:
                    return

    walk(0, 0)
    return Enumeration(selections=tuple(found), truncated=truncated)
