import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from wavelab import io
from wavelab.manifold import Grid, minkowski_cylinder


def field(rng, shape, complex_=True):
    v = rng.normal(size=shape)
    return v + 1j * rng.normal(size=shape) if complex_ else v


@pytest.mark.parametrize("shape", [(5, 8, 1), (4, 6, 3), (3, 4, 5, 2)])
def test_roundtrip_both_formats(tmp_path, rng, shape):
    v = field(rng, shape)
    paths = io.write_field(tmp_path / "u", v, ("csv", "bin"))
    assert {p.suffix for p in paths} == {".csv", ".bin"}
    for p in paths:
        assert np.array_equal(io.read_field(p), v)


def test_real_field_roundtrip(tmp_path, rng):
    v = field(rng, (4, 6, 1), complex_=False)
    for p in io.write_field(tmp_path / "r", v, ("csv", "bin")):
        assert np.array_equal(io.read_field(p).real, v)


def test_csv_header(tmp_path, rng):
    p = io.write_csv(tmp_path / "u.csv", field(rng, (2, 3, 1)))
    assert p.read_text().splitlines()[0] == io.CSV_MAGIC


def test_rejects_foreign_files(tmp_path):
    (tmp_path / "x.bin").write_bytes(b"nope" * 10)
    (tmp_path / "x.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        io.read_bin(tmp_path / "x.bin")
    with pytest.raises(ValueError):
        io.read_csv(tmp_path / "x.csv")
    with pytest.raises(ValueError):
        io.write_bin(tmp_path / "y.bin", np.zeros(4))


def test_slices_written(tmp_path, rng):
    g = Grid(minkowski_cylinder(0, 1), 11, (8,), eta=1.0)
    paths = io.write_slices(tmp_path / "s", field(rng, g.shape + (1,)), g, count=3)
    assert len(paths) == 3 and all(p.exists() for p in paths)


@settings(max_examples=30, deadline=None)
@given(v=hnp.arrays(np.complex128, hnp.array_shapes(min_dims=3, max_dims=4, max_side=4),
                    elements=st.complex_numbers(allow_nan=False, allow_infinity=False, max_magnitude=1e300)))
def test_roundtrip_is_exact(tmp_path_factory, v):
    d = tmp_path_factory.mktemp("rt")
    for p in io.write_field(d / "u", v, ("csv", "bin")):
        assert np.array_equal(io.read_field(p), v)
