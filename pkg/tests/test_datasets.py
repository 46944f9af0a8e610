import numpy as np
import pytest

from ldpfreq.datasets import (
    Dataset,
    load_csv,
    load_mapping,
    parse_synth,
    synth_uniform,
    write_csv,
    write_mapping,
)
from ldpfreq.errors import InvalidParameterError, LoadError

ADULT_SIZES = [7, 16, 7, 14, 6, 5, 2, 41, 2]


def _write(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_load_first_appearance_order(tmp_path):
    p = _write(tmp_path, "color,size\nred,S\nblue,M\nred,L\ngreen,S\n")
    ds = load_csv(p)
    assert ds.names == ["color", "size"]
    assert ds.sizes == [3, 3]
    assert ds.rows.tolist() == [[0, 0], [1, 1], [0, 2], [2, 0]]
    assert ds.mapping == [["red", "blue", "green"], ["S", "M", "L"]]
    assert ds.n == 4 and ds.d == 2


def test_frequencies(tmp_path):
    ds = load_csv(_write(tmp_path, "a,b\nx,1\ny,1\nx,2\nx,1\n"))
    f = ds.frequencies()
    assert np.allclose(f[0], [0.75, 0.25])
    assert np.allclose(f[1], [0.75, 0.25])


def test_single_value_column_widened(tmp_path):
    ds = load_csv(_write(tmp_path, "a,b\nx,k\ny,k\n"))
    assert ds.sizes == [2, 2]
    assert np.allclose(ds.frequencies()[1], [1.0, 0.0])


@pytest.mark.parametrize("text, row", [
    ("a,b\nx,1\ny\n", 3),
    ("a,b\nx,1\ny,\n", 3),
    ("a,b\nx,1\nx,1\nx,1,2\n", 4),
    ("a,\nx,1\n", 1),
])
def test_load_errors_report_row(tmp_path, text, row):
    with pytest.raises(LoadError) as err:
        load_csv(_write(tmp_path, text))
    assert err.value.row == row
    assert f"row {row}" in str(err.value)


@pytest.mark.parametrize("text", ["", "a,b\n"])
def test_load_errors_empty(tmp_path, text):
    with pytest.raises(LoadError):
        load_csv(_write(tmp_path, text))


def test_missing_file(tmp_path):
    with pytest.raises(LoadError):
        load_csv(tmp_path / "nope.csv")


def test_mapping_round_trip(tmp_path):
    ds = load_csv(_write(tmp_path, "a,b\nx,1\ny,2\n"))
    mp = tmp_path / "map.json"
    write_mapping(ds, mp)
    assert load_mapping(mp) == ds.mapping
    # a second file with values in another order keeps the known numbering
    other = load_csv(_write(tmp_path, "a,b\ny,2\nx,1\nz,3\n", "other.csv"), mapping=mp)
    assert other.rows.tolist() == [[1, 1], [0, 0], [2, 2]]
    assert other.mapping[0] == ["x", "y", "z"]


def test_bad_mapping(tmp_path):
    mp = _write(tmp_path, "{not json", "map.json")
    with pytest.raises(LoadError):
        load_csv(_write(tmp_path, "a\nx\n"), mapping=mp)


def test_csv_round_trip(tmp_path):
    ds = load_csv(_write(tmp_path, "a,b\nx,1\ny,2\nx,2\n"))
    out = tmp_path / "back.csv"
    write_csv(ds, out)
    again = load_csv(out)
    assert again == ds


def test_adult_shaped_synthetic(tmp_path):
    ds = synth_uniform(3000, 9, ADULT_SIZES, seed=1)
    assert ds.sizes == ADULT_SIZES
    assert all(ds.rows[:, j].max() == c - 1 for j, c in enumerate(ADULT_SIZES))
    out = tmp_path / "adult.csv"
    write_csv(ds, out)
    assert load_csv(out).sizes == ADULT_SIZES


def test_synth_deterministic_and_uniform():
    a = synth_uniform(100_000, 2, [4, 10], seed=3)
    b = synth_uniform(100_000, 2, [4, 10], seed=3)
    assert np.array_equal(a.rows, b.rows)
    assert not np.array_equal(a.rows, synth_uniform(100_000, 2, [4, 10], seed=4).rows)
    for f, c in zip(a.frequencies(), [4, 10]):
        sd = np.sqrt((1 / c) * (1 - 1 / c) / 100_000)
        assert np.all(np.abs(f - 1 / c) <= 5 * sd)


def test_parse_synth():
    assert parse_synth("100,3,5") == (100, 3, [5, 5, 5])
    assert parse_synth("10,2,3,4") == (10, 2, [3, 4])
    for bad in ("10,2", "a,b,c", "10,3,2,2"):
        with pytest.raises(InvalidParameterError):
            parse_synth(bad)


def test_dataset_validation():
    with pytest.raises(InvalidParameterError):
        Dataset(["a"], [1], np.zeros((2, 1)))
    with pytest.raises(InvalidParameterError):
        Dataset(["a"], [2], np.array([[2]]))
    with pytest.raises(InvalidParameterError):
        Dataset(["a", "b"], [2], np.zeros((2, 1)))
    with pytest.raises(InvalidParameterError):
        synth_uniform(0, 1, [2], 0)
