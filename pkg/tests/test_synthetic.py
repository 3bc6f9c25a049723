from __future__ import annotations

import numpy as np
import pytest

from vnnet.data import (
    SYNTHETIC_PRESETS,
    CalibrationTable,
    DatasetLayout,
    SyntheticSpec,
    generate_synthetic,
    prepare_data,
    read_station_npy,
    synthesize_dataset,
)
from vnnet.errors import ConfigurationError
from vnnet.training import train


def _tree(root):
    return {path.relative_to(root): path.read_bytes() for path in sorted(root.rglob("*")) if path.is_file()}


def test_same_seed_same_bytes(tmp_path):
    spec = SYNTHETIC_PRESETS["synthetic-tiny"]
    synthesize_dataset(tmp_path / "a", spec, seed=5)
    synthesize_dataset(tmp_path / "b", spec, seed=5)
    assert _tree(tmp_path / "a") == _tree(tmp_path / "b")


def test_different_seed_different_values():
    spec = SyntheticSpec(nodes=2, steps=30, channels=4, height=2, width=2, bands=1)
    first = generate_synthetic(spec, seed=1)
    second = generate_synthetic(spec, seed=2)
    assert not np.array_equal(first.series.values, second.series.values)


def test_temperature_has_a_daily_cycle():
    data = generate_synthetic(SYNTHETIC_PRESETS["synthetic-micro"], seed=0)
    temperature = data.series.values[..., data.series.schema.index("air_temperature")]
    for station in temperature.T:
        assert np.corrcoef(station[:-24], station[24:])[0, 1] > 0.5


def test_statics_are_constant_per_station():
    data = generate_synthetic(SyntheticSpec(nodes=4, steps=20, channels=5, height=2, width=2), seed=3)
    statics = data.series.values[..., list(data.series.schema.static_indices)]
    assert np.array_equal(statics, np.broadcast_to(statics[:1], statics.shape))


def test_counts_stay_in_sensor_range():
    data = generate_synthetic(SYNTHETIC_PRESETS["synthetic-tiny"], seed=4)
    assert data.counts.shape == (72, 1, 8, 8)
    assert data.counts.min() >= 1 and data.counts.max() <= 4096


def test_ingest_writes_one_frame_per_hour(tmp_path):
    spec = SyntheticSpec(nodes=2, steps=12, channels=4, height=4, width=2, bands=2)
    summary = synthesize_dataset(tmp_path, spec, seed=0)
    assert (summary.stations, summary.hours, summary.frames, summary.skipped_hours) == (2, 12, 12, 0)
    layout = DatasetLayout(tmp_path)
    series = read_station_npy(layout.numerical_npy)
    frame = np.load(layout.frame_path(series.timestamps[5]))
    assert frame.shape == (4, 2, 2)
    assert np.all((frame > 150.0) & (frame < 340.0))
    assert isinstance(CalibrationTable.from_file(layout.calibration_path(spec.band_list[0])), CalibrationTable)


def test_missing_tile_skips_the_hour(tmp_path, micro_config, caplog):
    spec = SyntheticSpec(nodes=2, steps=12, channels=4, height=2, width=2, bands=1)
    synthesize_dataset(tmp_path / "source", spec, seed=0)
    layout = DatasetLayout(tmp_path / "source")
    series = read_station_npy(layout.numerical_npy)
    layout.find_tile(series.timestamps[3], spec.band_list[0]).unlink()
    layout.frame_path(series.timestamps[3]).unlink()
    layout.numerical_npy.unlink()
    data = prepare_data(tmp_path / "source", micro_config)
    assert data.bands == 0
    assert "training without the vision branch" in caplog.text


def test_single_station_end_to_end(tmp_path, micro_config):
    spec = SyntheticSpec(nodes=1, steps=60, channels=4, height=4, width=4, bands=1)
    synthesize_dataset(tmp_path / "data", spec, seed=2)
    data = prepare_data(tmp_path / "data", micro_config)
    assert data.nodes == 1
    result = train(micro_config.replace(epochs=1), data, tmp_path / "run")
    assert np.isfinite(result.test.mae) and np.isfinite(result.validation.mae)


def test_invalid_spec():
    with pytest.raises(ConfigurationError):
        SyntheticSpec(nodes=0)
    with pytest.raises(ConfigurationError):
        SyntheticSpec(bands=7)
    with pytest.raises(ConfigurationError):
        SyntheticSpec(channels=3)
