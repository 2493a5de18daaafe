"""Pure-DP budget bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass, field

_TOL = 1e-12


class OverBudgetError(RuntimeError):
    pass


@dataclass
class BudgetLedger:
    """Running sum of epsilon charges against an optional cap.

    Advisory only: it never changes any noise scale, it just refuses to let
    an implementation quietly spend more than it declared.
    """

    cap: float | None = None
    entries: list[tuple[str, float]] = field(default_factory=list)

    @property
    def total(self) -> float:
        return float(sum(e for _, e in self.entries))

    def by_label(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for label, e in self.entries:
            out[label] = out.get(label, 0.0) + e
        return out

    def charge(self, eps: float, label: str) -> "BudgetLedger":
        if eps < 0:
            raise ValueError("cannot charge a negative epsilon")
        self.entries.append((label, float(eps)))
        if self.cap is not None and self.total > self.cap * (1 + _TOL) + _TOL:
            raise OverBudgetError(f"ledger total {self.total!r} exceeds cap {self.cap!r} after {label!r}")
        return self


def compose(ledger: BudgetLedger, eps: float, label: str) -> BudgetLedger:
    return ledger.charge(eps, label)


def amplified(p: float, eps: float) -> float:
    """Privacy of an eps-DP step run on a p-subsample: ``2 p eps`` (for eps <= 1)."""
    if not 0 < p <= 1:
        raise ValueError(f"sampling probability must lie in (0, 1], got {p}")
    if not 0 < eps <= 1:
        raise ValueError(f"amplification bound needs eps in (0, 1], got {eps}")
    return 2.0 * p * eps


def geometric_amplified_bound(eps: float, eta: float) -> float:
    """Closed form of the sum over all r >= 0 of ``amplified((1+eta)**-r, eps)``."""
    return 2.0 * eps * (1.0 + eta) / eta
