# Common utilities: error types, number formatting and CSV emission

import csv
import logging
import math
from typing import Any, Dict, Iterable, List, Mapping, Optional, TextIO

logger = logging.getLogger(__name__)

# Relative slack a strict inequality a < b must clear before a formula is evaluated.
STABILITY_SLACK = 1e-9


class AoiLabError(ValueError):
    """Base class for every domain error raised by aoi-lab."""


class InvalidDistributionError(AoiLabError):
    """A DistributionSpec was built with invalid parameters."""


class StabilityError(AoiLabError):
    """A queue is outside its stability region."""


class DegenerateParameterError(AoiLabError):
    """Coincident rates were passed to a distinct-rate closed form."""


class InconsistentInputsError(AoiLabError):
    """Correction-term inputs that cannot come from a real system."""


class InsufficientDataError(AoiLabError):
    """A packet log is too short to estimate anything."""


class ConfigError(AoiLabError):
    """Malformed configuration, scenario or command-line value."""


def strictly_less(a: float, b: float) -> bool:
    """True when a < b holds with relative slack STABILITY_SLACK."""
    return b - a > STABILITY_SLACK * max(abs(a), abs(b), 1.0)


def require_stable(a: float, b: float, condition: str) -> None:
    """Raises StabilityError unless a < b with slack; `condition` names the constraint."""
    if not strictly_less(a, b):
        raise StabilityError(f"requires {condition} (got {a:.6g} vs {b:.6g})")


def require_positive(**rates: float) -> None:
    for name, value in rates.items():
        if value is None or not math.isfinite(value) or value <= 0:
            raise ConfigError(f"{name} must be a positive finite number (got {value})")


def fmt_pretty(value: Any) -> str:
    """6 significant digits for terminal output."""
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def fmt_csv(value: Any) -> str:
    """12 significant digits for CSV output."""
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def comment_header(version: str, seed: Optional[int], params: Mapping[str, Any]) -> str:
    """Comment line echoing the version, the seed (when the run draws random numbers) and every parameter."""
    fields = [] if seed is None else [f"seed={seed}"]
    fields += [f"{k}={fmt_csv(v)}" for k, v in params.items()]
    return " ".join([f"# aoi-lab {version}", *fields])


class CsvEmitter:
    """
    Writes rows to a text stream as CSV with a leading comment header.
    Each row is flushed immediately so interrupted runs keep what they produced.
    """

    def __init__(self, stream: TextIO, fieldnames: List[str], header: Optional[str] = None):
        self.stream = stream
        self.fieldnames = fieldnames
        if header:
            stream.write(header + "\n")
        self.writer = csv.DictWriter(stream, fieldnames=fieldnames, lineterminator="\n")
        self.writer.writeheader()
        self.rows_written = 0

    def write(self, row: Dict[str, Any]) -> None:
        self.writer.writerow({k: fmt_csv(row.get(k, "")) for k in self.fieldnames})
        self.stream.flush()
        self.rows_written += 1

    def write_all(self, rows: Iterable[Dict[str, Any]]) -> None:
        for row in rows:
            self.write(row)


def pretty_table(rows: List[Dict[str, Any]], fieldnames: List[str]) -> str:
    """Renders rows as an aligned plain-text table."""
    cells = [[fmt_pretty(r.get(k, "")) for k in fieldnames] for r in rows]
    widths = [max([len(k)] + [len(c[i]) for c in cells]) for i, k in enumerate(fieldnames)]
    lines = ["  ".join(k.rjust(w) for k, w in zip(fieldnames, widths))]
    for c in cells:
        lines.append("  ".join(v.rjust(w) for v, w in zip(c, widths)))
    return "\n".join(lines)
