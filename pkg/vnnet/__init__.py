"""Vision-numerical fusion graph network for station weather forecasting."""

__version__ = "0.1.0"

from .config import TrainConfig, load_config  # noqa: E402
from .models import ModelSettings, VNNet, create_model  # noqa: E402

__all__ = ["ModelSettings", "TrainConfig", "VNNet", "__version__", "create_model", "load_config"]
