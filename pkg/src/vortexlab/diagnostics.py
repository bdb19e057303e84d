"""Diagnostic records, CSV persistence, and scaling-law fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

__all__ = ["DiagRecord", "write_csv", "read_csv", "loglog_slope"]


@dataclass
class DiagRecord:
    """One row of per-solve diagnostics; NaN marks quantities not measured."""

    eps: float = math.nan
    energy: float = math.nan
    energy_top: float = math.nan
    sup_mu: float = math.nan
    l2_mu: float = math.nan
    residual: float = math.nan
    dbar_fs: float = math.nan
    nullity: float = math.nan
    correction_norm_1: float = math.nan
    correction_norm_2: float = math.nan
    iterations: int = 0
    wall_time: float = math.nan
    converged: bool = False
    note: str = ""

    UNITS = {
        "eps": "1",
        "energy": "area",
        "energy_top": "area",
        "sup_mu": "area",
        "l2_mu": "area",
        "residual": "mixed (0,2,eps)-norm",
        "dbar_fs": "area",
        "nullity": "count",
        "correction_norm_1": "(1,2,eps)-norm",
        "correction_norm_2": "(2,2,eps)-norm",
        "iterations": "count",
        "wall_time": "s",
        "converged": "bool",
        "note": "text",
    }

    @classmethod
    def columns(cls) -> list:
        return [f.name for f in fields(cls)]

    def as_row(self) -> list:
        out = []
        for name in self.columns():
            v = getattr(self, name)
            if isinstance(v, bool):
                out.append("1" if v else "0")
            elif isinstance(v, float):
                out.append(f"{v:.17g}")
            else:
                out.append(str(v))
        return out


def write_csv(path, records, summary_lines=()) -> None:
    """CSV with a '#'-prefixed schema header and optional summary block."""
    cols = DiagRecord.columns()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# vortexlab diagnostics v1\n")
        for name in cols:
            fh.write(f"# column {name} [{DiagRecord.UNITS[name]}]\n")
        fh.write(",".join(cols) + "\n")
        for rec in records:
            fh.write(",".join(rec.as_row()) + "\n")
        for line in summary_lines:
            fh.write(f"# {line}\n")


def read_csv(path) -> list:
    records = []
    cols = DiagRecord.columns()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("eps,"):
                continue
            parts = line.split(",")
            kw = {}
            for name, raw in zip(cols, parts):
                if name == "note":
                    kw[name] = raw
                elif name == "iterations":
                    kw[name] = int(raw)
                elif name == "converged":
                    kw[name] = raw == "1"
                else:
                    kw[name] = float(raw)
            records.append(DiagRecord(**kw))
    return records


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x), ignoring nonpositive data."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    keep = (xs > 0) & (ys > 0) & np.isfinite(ys)
    if keep.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(xs[keep]), np.log(ys[keep]), 1)[0])
