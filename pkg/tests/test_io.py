import csv

import numpy as np
import pytest

from mvcca.cca import ViewDataset
from mvcca.exceptions import ConfigError, DimensionError
from mvcca.hermite import mode_spectrum
from mvcca.io import (load_views, read_target_spectra, read_view_binary, read_views_csv,
                      write_mode_spectrum_csv, write_target_spectra, write_view_binary,
                      write_views_csv)
from mvcca.spectra import TargetSpectra


@pytest.fixture
def datasets():
    rng = np.random.default_rng(0)
    return [ViewDataset(rng.standard_normal((7, 3)) * 1e3, 0),
            ViewDataset(rng.standard_normal((7, 2)), 1)]


def test_binary_round_trip_is_exact(tmp_path, datasets):
    path = tmp_path / "v.bin"
    write_view_binary(datasets[0], path)
    back = read_view_binary(path)
    assert back.view_index == 0
    assert back.Z.tobytes() == datasets[0].Z.tobytes()
    assert path.stat().st_size == 32 + 7 * 3 * 8


def test_binary_layout_is_column_major(tmp_path):
    path = tmp_path / "v.bin"
    write_view_binary(ViewDataset(np.array([[1.0, 2.0], [3.0, 4.0]]), 5), path)
    raw = path.read_bytes()
    assert raw[:8] == b"MVCCA001"
    np.testing.assert_array_equal(np.frombuffer(raw[8:32], "<u8"), [2, 2, 5])
    np.testing.assert_array_equal(np.frombuffer(raw[32:], "<f8"), [1.0, 3.0, 2.0, 4.0])


def test_binary_rejects_bad_files(tmp_path, datasets):
    path = tmp_path / "v.bin"
    write_view_binary(datasets[0], path)
    raw = path.read_bytes()
    (tmp_path / "magic.bin").write_bytes(b"NOTMVCCA" + raw[8:])
    with pytest.raises(ConfigError, match="magic"):
        read_view_binary(tmp_path / "magic.bin")
    (tmp_path / "short.bin").write_bytes(raw[:-8])
    with pytest.raises(ConfigError):
        read_view_binary(tmp_path / "short.bin")
    (tmp_path / "head.bin").write_bytes(raw[:10])
    with pytest.raises(ConfigError, match="truncated"):
        read_view_binary(tmp_path / "head.bin")


def test_csv_round_trip_is_exact(tmp_path, datasets):
    path = tmp_path / "views.csv"
    write_views_csv(datasets, path)
    back = read_views_csv(path)
    assert [d.view_index for d in back] == [0, 1]
    for a, b in zip(datasets, back):
        np.testing.assert_array_equal(a.Z, b.Z)
    assert path.read_text().splitlines()[0] == "view,sample,coord,value"


def test_csv_rejects_bad_content(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b,c,d\n")
    with pytest.raises(ConfigError):
        read_views_csv(bad)
    bad.write_text("view,sample,coord,value\n0,0,0,x\n")
    with pytest.raises(ConfigError):
        read_views_csv(bad)
    bad.write_text("view,sample,coord,value\n0,0,0,1\n0,1,1,2\n")
    with pytest.raises(DimensionError):
        read_views_csv(bad)


def test_load_views_dispatches_on_extension(tmp_path, datasets):
    write_views_csv(datasets, tmp_path / "v.CSV")
    write_view_binary(datasets[1], tmp_path / "v.dat")
    assert len(load_views(tmp_path / "v.CSV")) == 2
    assert load_views(tmp_path / "v.dat")[0].view_index == 1


def test_target_spectra_json_round_trip(tmp_path):
    t = TargetSpectra((0.9, 0.5), (0.8, 0.4), (0.85, 0.45), (3, 4, 5))
    write_target_spectra(t, tmp_path / "t.json")
    assert read_target_spectra(tmp_path / "t.json") == t


def test_mode_spectrum_csv(tmp_path):
    path = tmp_path / "modes.csv"
    write_mode_spectrum_csv(mode_spectrum((0.9, 0.6), 2), path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["index", "degree", "t_n"]
    assert rows[1] == ["1;0", "1", "0.90000000000000002"]
    assert len(rows) == 1 + 5
    assert {r[0] for r in rows[1:]} == {"1;0", "0;1", "2;0", "1;1", "0;2"}
