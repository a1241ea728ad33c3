import numpy as np
import pytest

from config.run_config import RunConfig
from config.settings.base import configure_logging
from msnet.data.serializers import ManifestSerializer
from msnet.data.services import SynthService

configure_logging("WARNING")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_config():
    """A run configuration small enough for unit tests."""
    return RunConfig(
        seed=3,
        coarse_size=16,
        fine_resize=32,
        crop_size=16,
        hidden_units=8,
        blocks=(4, 6, 8),
        batch_size=6,
        stage1_updates=3,
        stage1_lr=0.01,
        stage2_updates=3,
        stage2_lr=0.001,
    )


@pytest.fixture(scope="session")
def toy_dataset(tmp_path_factory):
    """4 train / 2 test images per class."""
    return SynthService.synth_dataset(tmp_path_factory.mktemp("toy"), 4, 2, seed=11)


@pytest.fixture
def toy_manifest(toy_dataset):
    return ManifestSerializer.load(toy_dataset.train_manifest)
