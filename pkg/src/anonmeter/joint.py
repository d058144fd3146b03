"""Exhaustive search for per-period permutations consistent with every billing total.

The search space is (n!)**t, so this solver is only for small instances; the
relaxed single-meter attack in mcssp is the scalable one. A node-expansion cap
makes infeasibility explicit instead of hanging.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .model import AnonymizedInstance

DEFAULT_WORK_LIMIT = 10**8


@dataclass(frozen=True)
class AgreedAssignment:
    """A (meter, period) cell on which every joint solution assigns the same value."""

    meter: int
    period: int
    value: int


@dataclass(frozen=True)
class JointSolutionSet:
    """Value-distinct solutions of the full problem.

    Each solution is a t-tuple of permutations in canonical period order;
    solutions[s][j][i] is the position meter i occupies at period j. Two
    permutation tuples that assign identical values to every meter (possible
    when a period repeats a value) are stored once; raw_count counts them
    all. exhausted is False when the work cap stopped the search early.
    """

    instance: AnonymizedInstance
    solutions: tuple[tuple[tuple[int, ...], ...], ...]
    raw_count: int
    exhausted: bool
    expansions: int

    def value_grid(self, index: int) -> tuple[tuple[int, ...], ...]:
        """Values assigned by solution `index`, as an n x t grid of Wh."""
        sol = self.solutions[index]
        inst = self.instance
        return tuple(
            tuple(inst.periods[j][sol[j][i]] for j in range(inst.t))
            for i in range(inst.n)
        )


def solve_joint(inst: AnonymizedInstance, work_limit: int = DEFAULT_WORK_LIMIT) -> JointSolutionSet:
    """Depth-first search over full per-period permutations, pruned per meter.

    A branch dies as soon as some meter's remaining budget falls outside the
    min/max achievable over the unassigned periods. Periods with fewer
    repeated values are searched first (repeats only multiply identical
    branches); this reorders the search, never the result set. One expansion
    is one permutation attempted at one node; when expansions exceed
    work_limit the partial set is returned with exhausted=False.
    """
    if work_limit < 1:
        raise ValueError(f"work limit must be at least 1, got {work_limit}")
    n, t = inst.n, inst.t
    order = sorted(range(t), key=lambda j: (n - len(set(inst.periods[j])), j))
    per = [inst.periods[j] for j in order]
    mins = [min(p) for p in per] if t else []
    maxs = [max(p) for p in per] if t else []
    lo_rest = [0] * (t + 1)
    hi_rest = [0] * (t + 1)
    for d in range(t - 1, -1, -1):
        lo_rest[d] = lo_rest[d + 1] + mins[d]
        hi_rest[d] = hi_rest[d + 1] + maxs[d]

    totals = inst.totals
    run = [0] * n
    chosen: list[tuple[int, ...]] = []
    raw: list[tuple[tuple[int, ...], ...]] = []
    expansions = 0
    stopped = False

    def walk(d: int) -> None:
        nonlocal expansions, stopped
        if stopped:
            return
        if d == t:
            canon = [None] * t
            for pos, p in zip(order, chosen):
                canon[pos] = p
            raw.append(tuple(canon))
            return
        vals = per[d]
        lo, hi = lo_rest[d + 1], hi_rest[d + 1]
        for p in itertools.permutations(range(n)):
            expansions += 1
            if expansions > work_limit:
                stopped = True
                return
            ok = True
            for i in range(n):
                rem = totals[i] - run[i] - vals[p[i]]
                if rem < lo or rem > hi:
                    ok = False
                    break
            if ok:
                for i in range(n):
                    run[i] += vals[p[i]]
                chosen.append(p)
                walk(d + 1)
                chosen.pop()
                for i in range(n):
                    run[i] -= vals[p[i]]
                if stopped:
                    return

    walk(0)

    # independent re-check of every total, then value-level deduplication
    dedup: dict[tuple, tuple[tuple[int, ...], ...]] = {}
    for sol in raw:
        grid = tuple(
            tuple(inst.periods[j][sol[j][i]] for j in range(t)) for i in range(n)
        )
        for i in range(n):
            if sum(grid[i]) != totals[i]:
                raise AssertionError(f"search produced a selection violating total {i}")
        dedup.setdefault(grid, sol)
    solutions = tuple(dedup[k] for k in sorted(dedup))
    return JointSolutionSet(
        instance=inst,
        solutions=solutions,
        raw_count=len(raw),
        exhausted=not stopped,
        expansions=expansions,
    )


def agreed_assignments(sols: JointSolutionSet) -> list[AgreedAssignment]:
    """The (meter, period) cells assigned one value by every solution in the set.

    Only meaningful over a complete set, so partial (non-exhausted) sets are
    rejected, as are empty ones.
    """
    if not sols.exhausted:
        raise ValueError("agreement over a partial solution set is meaningless")
    if not sols.solutions:
        raise ValueError("agreement requires at least one solution")
    inst = sols.instance
    grids = [sols.value_grid(s) for s in range(len(sols.solutions))]
    out = []
    for i in range(inst.n):
        for j in range(inst.t):
            vals = {g[i][j] for g in grids}
            if len(vals) == 1:
                out.append(AgreedAssignment(meter=i, period=j, value=vals.pop()))
    return out
