"""Result tables and their CSV form.

One row per (x, metric) pair. The first column is named snr_db because that
is what it means for every curve kind except the condition-number PDFs, which
reuse it for the histogram bin center (see docs/spec-format.md).
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError

HEADER = ("snr_db", "metric", "value", "std_error", "trials")


@dataclass(frozen=True)
class ResultRow:
    snr_db: float
    metric: str
    value: float
    std_error: float
    trials: int


@dataclass
class ResultTable:
    rows: list = field(default_factory=list)

    def add(self, snr_db, metric, value, std_error=0.0, trials=0):
        for name, v in (("value", value), ("std_error", std_error), ("snr_db", snr_db)):
            if not np.isfinite(v):
                raise DomainError(f"non-finite {name} for metric {metric!r}: {v}")
        self.rows.append(ResultRow(float(snr_db), str(metric), float(value),
                                   float(std_error), int(trials)))

    def sorted_rows(self):
        return sorted(self.rows, key=lambda r: (r.snr_db, r.metric))

    def metrics(self):
        return sorted({r.metric for r in self.rows})

    def column(self, metric):
        """(x, value, std_error) arrays for one metric, ascending in x."""
        rs = [r for r in self.sorted_rows() if r.metric == metric]
        if not rs:
            raise DomainError(f"no rows for metric {metric!r}")
        return (np.array([r.snr_db for r in rs]),
                np.array([r.value for r in rs]),
                np.array([r.std_error for r in rs]))


def emit_csv(table, path):
    """Write the table, sorted, with round-trip float formatting."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HEADER)
        for r in table.sorted_rows():
            w.writerow([repr(r.snr_db), r.metric, repr(r.value),
                        repr(r.std_error), r.trials])


def load_csv(path):
    table = ResultTable()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != HEADER:
            raise DomainError(f"unexpected CSV header {header}")
        for row in reader:
            table.add(float(row[0]), row[1], float(row[2]), float(row[3]), int(row[4]))
    return table
