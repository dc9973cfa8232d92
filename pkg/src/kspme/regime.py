"""Classification of (q, α) pairs into the existence / regularity regimes."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable

import numpy as np


def threshold_A(q: float) -> float:
    return 2 * q - 2


def threshold_B(q: float) -> float:
    return (9 * q - 8) / 6


def threshold_C(q: float) -> float:
    return (10 * q - 9) / 8


@dataclass(frozen=True)
class RegimeVerdict:
    """Membership flags and existence / regularity verdicts for one parameter pair.

    ``binding_threshold`` is the largest of the weak / Hölder thresholds
    that α strictly exceeds, or the weak threshold when α exceeds neither.
    """

    q: float
    alpha: float
    p2: bool
    in_A: bool
    in_B: bool
    in_C: bool
    weak_threshold: float
    holder_threshold: float
    weak_exists: bool
    holder_exists: bool
    binding_threshold: float
    assumptions_used: tuple[str, ...]

    def as_row(self) -> dict:
        row = asdict(self)
        row["assumptions_used"] = "+".join(self.assumptions_used)
        return row


ROW_FIELDS = tuple(RegimeVerdict.__dataclass_fields__)


def classify(q: float, alpha: float, p2: bool = False) -> RegimeVerdict:
    q = float(q)
    alpha = float(alpha)
    if not np.isfinite(q) or q < 1:
        raise ValueError(f"q must be a finite number >= 1, got {q}")
    if not np.isfinite(alpha) or alpha < 0:
        raise ValueError(f"alpha must be a finite number >= 0, got {alpha}")
    a, b, c = threshold_A(q), threshold_B(q), threshold_C(q)
    if p2:
        weak_thr = min(a, b)
        holder_thr = max(min(a, b), c)
        used = ("P1", "P2")
    else:
        weak_thr = b
        holder_thr = max(a, b)
        used = ("P1",)
    weak = alpha > weak_thr
    holder = alpha > holder_thr
    binding = holder_thr if holder else weak_thr
    return RegimeVerdict(
        q=q,
        alpha=alpha,
        p2=bool(p2),
        in_A=alpha > a,
        in_B=alpha > b,
        in_C=alpha > c,
        weak_threshold=weak_thr,
        holder_threshold=holder_thr,
        weak_exists=weak,
        holder_exists=holder,
        binding_threshold=binding,
        assumptions_used=used,
    )


def sweep(qs: Iterable[float], alphas: Iterable[float], p2_values: Iterable[bool] = (False, True)) -> list[RegimeVerdict]:
    """Lattice of verdicts, ordered by p2, then q, then α."""
    qs, alphas = list(qs), list(alphas)
    return [classify(q, a, p2) for p2 in p2_values for q in qs for a in alphas]
