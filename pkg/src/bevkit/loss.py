"""Total training-signal assembly from the three loss components."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import NonFiniteInput


@dataclass(frozen=True)
class LossReport:
    """The three loss components, their weights, and the weighted total."""

    l_apprentice: float
    l_td: float
    l_or: float
    lambda1: float
    lambda2: float
    l_total: float

    def to_dict(self) -> dict:
        return asdict(self)


def total_loss(
    l_apprentice: float,
    l_td: float,
    l_or: float,
    lambda1: float = 1.0,
    lambda2: float = 1.0,
) -> LossReport:
    """Combine the supervision terms: total = base + l1 * td + l2 * or.

    ``l_apprentice`` is the apprentice's own task loss, supplied by the
    caller; the trajectory and occupancy terms come from this package.
    Raises :class:`NonFiniteInput` when any input is NaN or infinite.
    """
    parts = {
        "l_apprentice": l_apprentice,
        "l_td": l_td,
        "l_or": l_or,
        "lambda1": lambda1,
        "lambda2": lambda2,
    }
    for name, value in parts.items():
        if not math.isfinite(value):
            raise NonFiniteInput(f"{name} is not finite: {value}")
    total = l_apprentice + lambda1 * l_td + lambda2 * l_or
    return LossReport(
        l_apprentice=float(l_apprentice),
        l_td=float(l_td),
        l_or=float(l_or),
        lambda1=float(lambda1),
        lambda2=float(lambda2),
        l_total=float(total),
    )
