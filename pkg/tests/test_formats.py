"""
Tests for the table string, spectrum CSV and sweep file formats.
"""

import json

import pytest

from noisy_choice.bf_core import make_family, wht
from noisy_choice.formats import (
    SWEEP_COLUMNS,
    SweepRow,
    TableFormatError,
    dump_sweep,
    load_sweep,
    metric_record,
    parse_table_string,
    spectrum_from_csv,
    spectrum_to_csv,
    sweep_from_csv,
    to_table_string,
)


def test_known_table_strings():
    assert to_table_string(make_family("majority", 3)) == "bf:v1:n=3:e8"
    assert to_table_string(make_family("dictator", 1, i=1)) == "bf:v1:n=1:2"
    assert to_table_string(make_family("and", 2)) == "bf:v1:n=2:8"


def test_parse_table_string():
    assert parse_table_string("bf:v1:n=3:e8") == make_family("majority", 3)
    assert parse_table_string("  bf:v1:n=2:8\n") == make_family("and", 2)
    assert parse_table_string("bf:v1:n=3:E8") == make_family("majority", 3)


def test_table_string_survives_larger_n():
    f = make_family("threshold", 6, theta=2)

    assert parse_table_string(to_table_string(f)) == f
    assert len(to_table_string(f)) == len("bf:v1:n=6:") + 16


def test_parse_reports_bad_hex_position():
    with pytest.raises(TableFormatError) as exc_info:
        parse_table_string("bf:v1:n=2:g")

    assert exc_info.value.position == 10
    assert "Invalid hex digit" in str(exc_info.value)


def test_parse_reports_bad_version_position():
    with pytest.raises(TableFormatError) as exc_info:
        parse_table_string("bf:v2:n=2:8")

    assert exc_info.value.position == 4


def test_parse_rejects_bits_beyond_table():
    with pytest.raises(TableFormatError) as exc_info:
        parse_table_string("bf:v1:n=1:4")

    assert "beyond" in str(exc_info.value)


def test_parse_rejects_wrong_length():
    with pytest.raises(TableFormatError) as exc_info:
        parse_table_string("bf:v1:n=3:e")

    assert exc_info.value.position == 11
    assert "needs 2 hex digits" in str(exc_info.value)


def test_parse_rejects_bad_voter_count():
    for text in ("bf:v1:n=x:2", "bf:v1:n=0:2", "bf:v1:n=3"):
        with pytest.raises(TableFormatError):
            parse_table_string(text)


def test_spectrum_csv():
    text = spectrum_to_csv(wht(make_family("majority", 3)))
    lines = text.splitlines()

    assert lines[0] == "mask,coefficient"
    assert lines[1] == "0,0.0"
    assert lines[8] == "7,-0.5"
    assert spectrum_to_csv(spectrum_from_csv(text)) == text


def test_spectrum_csv_rejects_bad_row_count():
    with pytest.raises(ValueError):
        spectrum_from_csv("mask,coefficient\n0,1.0\n1,0.0\n2,0.0\n")


def _rows() -> list[SweepRow]:
    return [
        SweepRow("majority", 3, 0.9, "dp_memo", 0.8564, 0.7128, 0.85643, 0.9),
        SweepRow("majority", 5, 0.1, "monte_carlo", 0.1 + 0.2, -0.4, None, None, 0.012),
        SweepRow("and", 2, 0.5, "closed_form", 0.78125, 0.5625),
    ]


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_sweep_files_reemit_identically(fmt):
    text = dump_sweep(_rows(), fmt)
    rows = load_sweep(text, fmt)

    assert rows == _rows()
    assert dump_sweep(rows, fmt) == text


def test_sweep_csv_layout():
    text = dump_sweep(_rows(), "csv")
    lines = text.splitlines()

    assert lines[0] == ",".join(SWEEP_COLUMNS)
    assert lines[2] == "majority,5,0.1,monte_carlo,0.30000000000000004,-0.4,,,0.012"


def test_sweep_csv_rejects_wrong_header():
    with pytest.raises(ValueError) as exc_info:
        sweep_from_csv("family,n\nmajority,3\n")

    assert "header" in str(exc_info.value)


def test_sweep_json_requires_every_column():
    with pytest.raises(KeyError):
        load_sweep(json.dumps([{"family": "and", "n": 2}]), "json")


def test_unknown_sweep_format():
    with pytest.raises(ValueError):
        dump_sweep(_rows(), "xml")


def test_metric_record():
    record = metric_record("majority_3", 3, 0.5, "accuracy", 0.703125, "exact_spectral")

    assert list(record) == ["function", "n", "rho", "metric", "value", "method"]
