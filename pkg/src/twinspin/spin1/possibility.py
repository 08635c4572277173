"""Possibility relations derived from outcome probabilities.

A measurement setting paired with an outcome is *possible* when it occurs
with probability above a threshold. From the joint relation over both
parties we project the local relations and the extremal selections
``J_bot`` (smallest admitted outcome per setting) and ``J_top`` (largest).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Mapping

from ..measure import JointDistribution

__all__ = ["PossibilityRelations", "possibility_relation"]

Setting = Hashable
Outcome = Hashable


@dataclass(frozen=True)
class PossibilityRelations:
    QAB: frozenset[tuple[Setting, Outcome, Setting, Outcome]]
    QA: frozenset[tuple[Setting, Outcome]]
    QB: frozenset[tuple[Setting, Outcome]]
    jbot_A: dict[Setting, Outcome]
    jtop_A: dict[Setting, Outcome]
    jbot_B: dict[Setting, Outcome]
    jtop_B: dict[Setting, Outcome]
    binary_union_holds: bool | None  # None when outcomes are not binary

    def admits(self, v, a, w, b) -> bool:
        return (v, a, w, b) in self.QAB


def _extremes(rel: frozenset[tuple[Setting, Outcome]]):
    lo: dict = {}
    hi: dict = {}
    for s, o in rel:
        lo[s] = o if s not in lo else min(lo[s], o)
        hi[s] = o if s not in hi else max(hi[s], o)
    return lo, hi


def _union_check(rel, lo, hi) -> bool | None:
    if any(o not in (0, 1) for _, o in rel):
        return None
    union = {(s, o) for s, o in lo.items()} | {(s, o) for s, o in hi.items()}
    return union == set(rel)


def possibility_relation(
    tables: JointDistribution | Mapping[tuple[Setting, Setting], JointDistribution],
    threshold: float = 1e-12,
) -> PossibilityRelations:
    """Build ``Q_AB``, its projections ``Q_A``, ``Q_B`` and ``J_bot``/``J_top``.

    ``tables`` maps a pair of settings ``(v_A, w_B)`` to the joint outcome
    distribution for that pair; outcomes are the table labels. A single
    table is treated as the settings pair ``("A", "B")``.
    """
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    if isinstance(tables, JointDistribution):
        tables = {("A", "B"): tables}
    qab = set()
    for (v, w), dist in tables.items():
        for i, a in enumerate(dist.row_labels):
            for j, b in enumerate(dist.col_labels):
                if dist.probs[i, j] > threshold:
                    qab.add((v, a, w, b))
    QAB = frozenset(qab)
    QA = frozenset((v, a) for v, a, _, _ in QAB)
    QB = frozenset((w, b) for _, _, w, b in QAB)
    lo_a, hi_a = _extremes(QA)
    lo_b, hi_b = _extremes(QB)
    ua = _union_check(QA, lo_a, hi_a)
    ub = _union_check(QB, lo_b, hi_b)
    binary = None if ua is None or ub is None else (ua and ub)
    return PossibilityRelations(QAB, QA, QB, lo_a, hi_a, lo_b, hi_b, binary)
