from __future__ import annotations

from collections.abc import Callable, Iterator
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
import torch

from vnnet.config import TrainConfig
from vnnet.data import NumericalSchema, StationSeries, SyntheticSpec, WindowedDataset, prepare_data, synthesize_dataset

TINY_SPEC = SyntheticSpec(nodes=3, steps=60, channels=4, height=4, width=4, bands=1)


@pytest.fixture(autouse=True)
def _double_precision() -> Iterator[None]:
    previous = torch.get_default_dtype()
    torch.set_default_dtype(torch.float64)
    yield
    torch.set_default_dtype(previous)


@pytest.fixture
def generator() -> torch.Generator:
    return torch.Generator().manual_seed(0)


@pytest.fixture
def micro_config() -> TrainConfig:
    return TrainConfig(
        history=3,
        horizon=2,
        hidden=4,
        embed_dim=2,
        num_layers=1,
        vision_layers=1,
        batch_size=8,
        epochs=2,
        dtype="float64",
        seed=3,
        ig_steps=4,
    )


@pytest.fixture(scope="session")
def tiny_root(tmp_path_factory: pytest.TempPathFactory) -> Path:
    root = tmp_path_factory.mktemp("tiny")
    synthesize_dataset(root, TINY_SPEC, seed=11)
    return root


@pytest.fixture
def tiny_data(tiny_root: Path, micro_config: TrainConfig) -> WindowedDataset:
    return prepare_data(tiny_root, micro_config)


@pytest.fixture
def make_series() -> Callable[..., StationSeries]:
    def build(steps: int = 48, nodes: int = 2, channels: int = 4, seed: int = 0) -> StationSeries:
        rng = np.random.default_rng(seed)
        schema = NumericalSchema.synthetic(channels)
        values = rng.normal(10.0, 3.0, (steps, nodes, channels))
        timestamps = pd.date_range("2021-03-01", periods=steps, freq="h")
        return StationSeries(values, timestamps, tuple(f"S{index}" for index in range(nodes)), schema)

    return build
