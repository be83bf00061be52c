import numpy as np
import pytest

from nlwave.errors import FieldFormatError
from nlwave.fieldio import read_array, read_csv, read_field, write_array, write_csv, write_field
from nlwave.grid import SpaceTimeScalarField


def test_array_roundtrip_is_bitwise(tmp_path, rng):
    a = rng.standard_normal((5, 4, 3))
    write_array(tmp_path / "a.nlwf", a)
    b = read_array(tmp_path / "a.nlwf")
    assert np.array_equal(a, b)


def test_field_roundtrip_with_grid(tmp_path, small_grid, rng):
    f = SpaceTimeScalarField(small_grid, rng.standard_normal(small_grid.shape))
    write_field(tmp_path / "f.nlwf", f)
    g = read_field(tmp_path / "f.nlwf", small_grid)
    assert np.array_equal(f.values, g.values)


def test_bad_files_rejected(tmp_path):
    p = tmp_path / "bad.nlwf"
    p.write_bytes(b"XXXX" + bytes(20))
    with pytest.raises(FieldFormatError):
        read_array(p)
    write_array(p, np.zeros((4, 5, 5)))
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(FieldFormatError):
        read_array(p)


def test_csv_full_precision(tmp_path):
    write_csv(tmp_path / "c.csv", ["x"], [(0.1 + 0.2,)])
    header, rows = read_csv(tmp_path / "c.csv")
    assert header == ["x"] and float(rows[0][0]) == 0.1 + 0.2
