"""Per-run metrics and tidy CSV output."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Sequence


@dataclass
class RunMetrics:
    alg: str
    seed: int
    decoded_size: int
    opt: int | None = None
    b: float | None = None
    implicit_degree: int | None = None
    rounds: int | None = None
    ledger_total: float | None = None
    eps: float | None = None
    wall_time: float | None = None
    conditional_utility: bool = False
    params: dict[str, Any] = field(default_factory=dict)

    @property
    def ratio(self) -> float | None:
        if self.opt is None:
            return None
        return 1.0 if self.opt == 0 else self.decoded_size / self.opt

    def to_dict(self, with_time: bool = True) -> dict[str, Any]:
        d = asdict(self)
        d["ratio"] = self.ratio
        if not with_time:
            d.pop("wall_time")
        return d

    def row(self) -> dict[str, Any]:
        d = self.to_dict()
        params = d.pop("params")
        d.update({f"param.{k}": v for k, v in sorted(params.items())})
        return d


BASE_COLUMNS = [f.name for f in fields(RunMetrics) if f.name != "params"] + ["ratio"]


def emit_plot_data(metrics: Sequence[RunMetrics], axes: Sequence[str] | None = None) -> str:
    """One CSV row per metrics record. All records must carry the same parameter keys."""
    rows = [m.row() for m in metrics]
    cols = list(rows[0]) if rows else list(BASE_COLUMNS)
    for i, r in enumerate(rows):
        if list(r) != cols:
            raise ValueError(f"record {i} has fields {sorted(set(r) ^ set(cols))} that do not match the first record")
    if axes is not None:
        missing = [a for a in axes if a not in cols]
        if missing:
            raise ValueError(f"unknown columns {missing}")
        cols = list(axes)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()
