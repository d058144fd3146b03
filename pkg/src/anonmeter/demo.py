"""A bundled 3-meter, 9-period instance whose full solution structure is known.

Small enough for the exhaustive joint search, yet rich enough that the
relaxed attack on meter 1 still leaves 22 candidate selections — a compact
demonstration that shared-pseudonym anonymization leaks once billing totals
are published.
"""

from .model import AnonymizedInstance, GroundTruth, ReadingMatrix, build_ground_truth

READINGS = (
    (362, 64, 119, 23, 140, 36, 108, 83, 56),
    (117, 50, 25, 25, 49, 117, 42, 24, 24),
    (104, 89, 86, 149, 86, 87, 146, 92, 87),
)

PERIOD_VALUES = (
    (117, 104, 362),
    (89, 50, 64),
    (25, 119, 86),
    (23, 25, 149),
    (86, 140, 49),
    (36, 87, 117),
    (42, 146, 108),
    (24, 83, 92),
    (56, 24, 87),
)

TOTALS = (991, 473, 926)


def ground_truth() -> GroundTruth:
    return build_ground_truth(ReadingMatrix.from_rows(READINGS))


def instance() -> AnonymizedInstance:
    return AnonymizedInstance(n=3, t=9, periods=PERIOD_VALUES, totals=TOTALS)
