"""
Text formats for noisy_choice.

Truth tables travel as `bf:v1:n=<n>:<hex>` strings, spectra as `mask,coefficient`
CSV, sweep results as CSV or JSON with a fixed column order, and analysis
results as flat JSON records. Floats are always written with repr so that
reading a file back and writing it again reproduces it byte for byte.
"""

import csv
import json
import logging
from dataclasses import asdict, dataclass
from io import StringIO
from typing import Any, Iterable, Optional

from noisy_choice.bf_core import FourierSpectrum, TruthTable, packed_length

logger = logging.getLogger(__name__)

TABLE_PREFIX = "bf:v1:n="
SPECTRUM_COLUMNS = ("mask", "coefficient")
SWEEP_COLUMNS = (
    "family", "n", "rho", "method", "accuracy", "stability",
    "lower_bound", "upper_bound", "ci_halfwidth",
)
SWEEP_FORMATS = ("csv", "json")


class TableFormatError(ValueError):
    """A `bf:v1` string could not be parsed; position is the 0-based character offset."""

    def __init__(self, message: str, position: int):
        self.position = position
        super().__init__(f"{message} (at position {position})")


def _hex_digits(n: int) -> int:
    return -(-(1 << n) // 4)


def to_table_string(f: TruthTable) -> str:
    """Encode f as bf:v1, the packed table written as one big-endian hex integer."""
    value = int.from_bytes(f.values, "little")
    return f"{TABLE_PREFIX}{f.n}:{value:0{_hex_digits(f.n)}x}"


def parse_table_string(text: str) -> TruthTable:
    """
    Decode a bf:v1 string.

    Raises:
        TableFormatError: With the offending character position
    """
    text = text.strip()
    if not text.startswith(TABLE_PREFIX):
        mismatch = next(
            (k for k, (a, b) in enumerate(zip(text, TABLE_PREFIX)) if a != b),
            min(len(text), len(TABLE_PREFIX)),
        )
        raise TableFormatError(f"Expected prefix '{TABLE_PREFIX}'", mismatch)

    colon = text.find(":", len(TABLE_PREFIX))
    if colon < 0:
        raise TableFormatError("Missing ':' after the voter count", len(text))
    n_text = text[len(TABLE_PREFIX):colon]
    if not n_text.isdigit():
        raise TableFormatError(f"Voter count '{n_text}' is not a positive integer", len(TABLE_PREFIX))
    n = int(n_text)
    if n < 1:
        raise TableFormatError("Voter count must be at least 1", len(TABLE_PREFIX))

    hex_start = colon + 1
    hex_text = text[hex_start:]
    expected = _hex_digits(n)
    for k, char in enumerate(hex_text):
        if char not in "0123456789abcdefABCDEF":
            raise TableFormatError(f"Invalid hex digit '{char}'", hex_start + k)
    if len(hex_text) != expected:
        raise TableFormatError(
            f"Table for n={n} needs {expected} hex digits, got {len(hex_text)}",
            hex_start + min(len(hex_text), expected),
        )

    value = int(hex_text, 16)
    if value >> (1 << n):
        raise TableFormatError(f"Table sets bits beyond index {(1 << n) - 1}", hex_start)
    return TruthTable(n=n, values=value.to_bytes(packed_length(n), "little"))


def spectrum_to_csv(spectrum: FourierSpectrum) -> str:
    buffer = StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SPECTRUM_COLUMNS)
    for mask, coefficient in enumerate(spectrum.coeffs):
        writer.writerow([mask, repr(float(coefficient))])
    return buffer.getvalue()


def spectrum_from_csv(text: str) -> FourierSpectrum:
    rows = list(csv.DictReader(StringIO(text)))
    size = len(rows)
    if size < 2 or size & (size - 1):
        raise ValueError(f"Spectrum CSV must have a power-of-two number of rows, got {size}")
    coeffs = [0.0] * size
    for row in rows:
        coeffs[int(row["mask"])] = float(row["coefficient"])
    return FourierSpectrum(size.bit_length() - 1, coeffs)


@dataclass(frozen=True)
class SweepRow:
    """One (family, n, ρ, engine) cell of a sweep."""
    family: str
    n: int
    rho: float
    method: str
    accuracy: float
    stability: float
    lower_bound: Optional[float] = None
    upper_bound: Optional[float] = None
    ci_halfwidth: Optional[float] = None

    def to_record(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> "SweepRow":
        missing = [name for name in SWEEP_COLUMNS if name not in record]
        if missing:
            raise KeyError(f"Sweep record is missing columns: {', '.join(missing)}")
        return cls(**{name: record[name] for name in SWEEP_COLUMNS})


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _optional_float(text: str) -> Optional[float]:
    return None if text == "" else float(text)


def sweep_to_csv(rows: Iterable[SweepRow]) -> str:
    buffer = StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        record = row.to_record()
        writer.writerow([_cell(record[name]) for name in SWEEP_COLUMNS])
    return buffer.getvalue()


def sweep_from_csv(text: str) -> list[SweepRow]:
    reader = csv.DictReader(StringIO(text))
    if tuple(reader.fieldnames or ()) != SWEEP_COLUMNS:
        raise ValueError(
            f"Sweep CSV header must be {','.join(SWEEP_COLUMNS)}, got {','.join(reader.fieldnames or ())}"
        )
    rows = []
    for record in reader:
        rows.append(SweepRow(
            family=record["family"],
            n=int(record["n"]),
            rho=float(record["rho"]),
            method=record["method"],
            accuracy=float(record["accuracy"]),
            stability=float(record["stability"]),
            lower_bound=_optional_float(record["lower_bound"]),
            upper_bound=_optional_float(record["upper_bound"]),
            ci_halfwidth=_optional_float(record["ci_halfwidth"]),
        ))
    return rows


def sweep_to_json(rows: Iterable[SweepRow]) -> str:
    return json.dumps([row.to_record() for row in rows], indent=2) + "\n"


def sweep_from_json(text: str) -> list[SweepRow]:
    data = json.loads(text)
    if not isinstance(data, list):
        raise ValueError("Sweep JSON must be a list of records")
    return [SweepRow.from_record(record) for record in data]


def dump_sweep(rows: Iterable[SweepRow], fmt: str) -> str:
    if fmt == "csv":
        return sweep_to_csv(rows)
    if fmt == "json":
        return sweep_to_json(rows)
    raise ValueError(f"Unknown sweep format '{fmt}'. Available formats: {', '.join(SWEEP_FORMATS)}")


def load_sweep(text: str, fmt: str) -> list[SweepRow]:
    if fmt == "csv":
        return sweep_from_csv(text)
    if fmt == "json":
        return sweep_from_json(text)
    raise ValueError(f"Unknown sweep format '{fmt}'. Available formats: {', '.join(SWEEP_FORMATS)}")


def metric_record(
    function: str,
    n: int,
    rho: Optional[float],
    metric: str,
    value: Any,
    method: str,
) -> dict[str, Any]:
    """A flat analysis result: {function, n, rho, metric, value, method}."""
    return {
        "function": function,
        "n": n,
        "rho": rho,
        "metric": metric,
        "value": value,
        "method": method,
    }


def records_to_json(records: list[dict[str, Any]]) -> str:
    return json.dumps(records, indent=2)
