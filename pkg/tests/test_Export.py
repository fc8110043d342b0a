import csv
import json
import math
import struct

import numpy as np
import pytest

from Export import (QNDM_MAGIC, QNDM_VERSION, ExportError, ensure_dir, write_csv, write_json, write_qndm,
                    read_qndm, write_snapshot_csv, write_auxiliary_csv, write_phase_csv, write_wigner_csv)
from Multimode import Grid1D, FieldPS, FieldA
from Tomography import PhaseSpaceGrid, WignerMap
from Utils import format_float, format_value


def read_rows(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


@pytest.mark.parametrize("value", [0.1, 1 / 3, -2.5e-17, 6.02214076e23, math.pi])
def test_floats_round_trip(value):
    assert float(format_float(value)) == value


@pytest.mark.parametrize("value, text", [(None, ""), (True, "true"), (4, "4"), (float("nan"), "nan"),
                                         (float("-inf"), "-inf"), (np.float64(0.5), "0.5"), ("ideal", "ideal")])
def test_cell_formatting(value, text):
    assert format_value(value) == text


def test_csv_layout(tmp_path):
    path = str(tmp_path / "table.csv")
    assert write_csv(path, ("a", "b", "c"), [(1, 0.1, None), (2, 1 / 3, "x")]) == 2
    with open(path, "rb") as f:
        raw = f.read()
    assert raw.startswith(b"a,b,c\r\n1,0.1,\r\n")
    rows = read_rows(path)
    assert float(rows[2][1]) == 1 / 3


def test_json_is_sorted_and_has_no_nan(tmp_path):
    path = str(tmp_path / "report.json")
    write_json(path, {"b": float("nan"), "a": 1j, "c": [np.float64(2.0), (1, 2)]})
    with open(path) as f:
        text = f.read()
    data = json.loads(text)
    assert data == {"a": {"re": 0.0, "im": 1.0}, "b": None, "c": [2.0, [1, 2]]}
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')


def test_qndm_header_and_contents(tmp_path):
    grid = Grid1D(-1.0, 1.0, 64)
    rng = np.random.default_rng(3)
    ps = rng.normal(size=(64, 64)) + 1j * rng.normal(size=(64, 64))
    a = rng.normal(size=64) + 1j * rng.normal(size=64)
    path = str(tmp_path / "snapshot.qndm")
    write_qndm(path, grid, 2.5, [ps, a])

    with open(path, "rb") as f:
        raw = f.read()
    assert raw[:4] == QNDM_MAGIC
    assert struct.unpack("<II", raw[4:12]) == (QNDM_VERSION, 2)
    assert len(raw) == 4 + 8 + 2 * 20 + 12 + 4 + 64 * 64 * 16 + 4 + 64 * 16

    dump = read_qndm(path)
    assert dump["axes"] == [(-1.0, 1.0, 64), (-1.0, 1.0, 64)]
    assert dump["time"] == 2.5
    assert np.array_equal(dump["fields"][0], ps)
    assert np.array_equal(dump["fields"][1], a)


def test_qndm_rejects_foreign_files(tmp_path):
    path = tmp_path / "foreign.qndm"
    path.write_bytes(b"PNG\x00" + bytes(32))
    with pytest.raises(ExportError):
        read_qndm(str(path))
    truncated = tmp_path / "truncated.qndm"
    truncated.write_bytes(QNDM_MAGIC + struct.pack("<II", QNDM_VERSION, 1))
    with pytest.raises(ExportError):
        read_qndm(str(truncated))


def test_qndm_rejects_wrong_shapes(tmp_path):
    with pytest.raises(ExportError):
        write_qndm(str(tmp_path / "bad.qndm"), Grid1D(-1.0, 1.0, 64), 0.0, [np.zeros(65)])


def test_field_writers(tmp_path):
    grid = Grid1D(-1.0, 1.0, 64)
    ps = np.zeros((64, 64), dtype=complex)
    ps[3, 5] = -1.0
    assert write_snapshot_csv(str(tmp_path / "ps.csv"), FieldPS(ps, grid)) == 64 * 64
    rows = read_rows(str(tmp_path / "ps.csv"))
    assert rows[0] == ["z_p", "z_s", "re", "im", "abs2", "arg"]
    row = rows[1 + 3 * 64 + 5]
    assert float(row[2]) == -1.0 and float(row[4]) == 1.0 and float(row[5]) == pytest.approx(math.pi)

    assert write_auxiliary_csv(str(tmp_path / "a.csv"), FieldA.zeros(grid)) == 64
    phase = np.full((64, 64), np.nan)
    write_phase_csv(str(tmp_path / "phase.csv"), grid, phase)
    assert read_rows(str(tmp_path / "phase.csv"))[1][2] == "nan"


def test_wigner_writer(tmp_path):
    grid = PhaseSpaceGrid.uniform(-1.0, 1.0, 3)
    assert write_wigner_csv(str(tmp_path / "w.csv"), WignerMap(grid, np.zeros((3, 3)))) == 9


def test_ensure_dir(tmp_path):
    target = tmp_path / "a" / "b"
    assert ensure_dir(str(target)) == str(target)
    assert target.is_dir()
    ensure_dir(str(target))
