import numpy as np
import pytest
from src.lattice.grid import TorusGrid, ScalarField, VectorField, SkewField
from src.lattice.io import write_field, read_field, encode_field, decode_field, MAGIC
from src.errors import ParameterError


def test_field_file_roundtrip(tmp_path, rng):
    grid = TorusGrid(3, 4)
    sigma = SkewField(grid, rng.normal(size=(3,) + grid.shape))
    path = str(tmp_path / "sigma.hlf")
    write_field(path, sigma)
    loaded = read_field(path, kind='skew')
    assert isinstance(loaded, SkewField)
    assert np.array_equal(loaded.values, sigma.values)


def test_header_layout(grid8):
    payload = encode_field(grid8, np.zeros((2,) + grid8.shape))
    assert payload[:4] == MAGIC
    assert len(payload) == 16 + 2 * 64 * 8
    header, values = decode_field(payload)
    assert (header.d, header.L, header.components) == (2, 8, 2)
    assert values.shape == (2, 8, 8)


def test_auto_kind(tmp_path, grid8, rng):
    path = str(tmp_path / "q.hlf")
    write_field(path, VectorField(grid8, rng.normal(size=(2, 8, 8))))
    assert isinstance(read_field(path), VectorField)
    write_field(path, ScalarField(grid8, rng.normal(size=(8, 8))))
    assert isinstance(read_field(path), ScalarField)


def test_corrupt_payloads(grid8):
    payload = encode_field(grid8, np.zeros(grid8.shape))
    with pytest.raises(ParameterError):
        decode_field(b"XXXX" + payload[4:])
    with pytest.raises(ParameterError):
        decode_field(payload[:-8])
