"""Aggregate tables over a corpus: scaled lower bounds and approximation ratios.

Per-instance quality figures are aggregated with the geometric mean, which is
well defined only for strictly positive values; any nonpositive entry raises
with the offending instance named rather than silently skewing the average.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field


def geometric_mean(values, labels=None) -> float:
    vals = list(values)
    if not vals:
        raise ValueError("geometric mean of an empty collection")
    total = 0.0
    for i, v in enumerate(vals):
        if v <= 0 or not math.isfinite(v):
            name = labels[i] if labels is not None else f"index {i}"
            raise ValueError(f"geometric mean needs positive finite values; "
                             f"got {v!r} for {name}")
        total += math.log(v)
    return math.exp(total / len(vals))


@dataclass
class ReportTable:
    """A small rectangular table: row labels x column labels of floats."""
    row_labels: list[str]
    col_labels: list[str]
    cells: dict[tuple[str, str], float] = field(default_factory=dict)
    corner: str = ""

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow([self.corner] + self.col_labels)
            for r in self.row_labels:
                w.writerow([r] + [_cell_str(self.cells.get((r, c))) for c in self.col_labels])

    def to_text(self) -> str:
        header = [self.corner] + self.col_labels
        rows = [header]
        for r in self.row_labels:
            rows.append([r] + [_cell_str(self.cells.get((r, c))) for c in self.col_labels])
        widths = [max(len(row[j]) for row in rows) for j in range(len(header))]
        lines = []
        for i, row in enumerate(rows):
            lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
            if i == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


def _cell_str(v) -> str:
    return "" if v is None else f"{v:.4f}"


def scaled_bound_table(best_values: dict[tuple[str, int], float],
                       bounds: dict[tuple[str, int, str], float],
                       methods: list[str]) -> tuple[ReportTable, list[str]]:
    """Geometric mean of bound / best-known-solution per (k, method).

    Adds a ``best-available`` row taking, per instance, the max bound over
    all methods that reported one. Instances missing from ``best_values`` or
    with no bound for a given method are excluded from that cell's mean and
    reported in the returned notes list.
    """
    ks = sorted({k for (_, k) in best_values})
    notes: list[str] = []
    table = ReportTable(row_labels=methods + ["best-available"],
                        col_labels=[f"k={k}" for k in ks], corner="method")
    for k in ks:
        insts = sorted(g for (g, kk) in best_values if kk == k)
        per_method: dict[str, list[float]] = {m: [] for m in methods}
        best_avail: list[float] = []
        for g in insts:
            best = best_values[(g, k)]
            if best <= 0:
                notes.append(f"{g} k={k}: nonpositive best value, excluded")
                continue
            avail = []
            for m in methods:
                b = bounds.get((g, k, m))
                if b is None:
                    notes.append(f"{g} k={k}: no {m} bound")
                    continue
                per_method[m].append(b / best)
                avail.append(b / best)
            if avail:
                best_avail.append(max(avail))
            else:
                notes.append(f"{g} k={k}: no bounds at all")
        col = f"k={k}"
        for m in methods:
            if per_method[m]:
                table.cells[(m, col)] = geometric_mean(per_method[m])
        if best_avail:
            table.cells[("best-available", col)] = geometric_mean(best_avail)
    return table, notes


def approximation_ratio_table(values: dict[tuple[str, int, str], float],
                              simple_bounds: dict[tuple[str, int], float],
                              algos: list[str]) -> tuple[ReportTable, list[str]]:
    """Geometric mean of heuristic value / simple lower bound per (k, algo)."""
    ks = sorted({k for (_, k, _) in values})
    notes: list[str] = []
    table = ReportTable(row_labels=list(algos),
                        col_labels=[f"k={k}" for k in ks], corner="algorithm")
    for k in ks:
        col = f"k={k}"
        for a in algos:
            ratios, labels = [], []
            for (g, kk, aa), v in sorted(values.items()):
                if kk != k or aa != a:
                    continue
                lb = simple_bounds.get((g, k))
                if lb is None or lb <= 0:
                    notes.append(f"{g} k={k}: unusable simple bound {lb!r}")
                    continue
                ratios.append(v / lb)
                labels.append(g)
            if ratios:
                table.cells[(a, col)] = geometric_mean(ratios, labels)
            else:
                notes.append(f"no values for algo {a} at k={k}")
    return table, notes
