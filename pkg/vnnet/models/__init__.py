"""Model components and the assembled forecaster."""

from .decoder import GraphDecoder, SamplingSchedule, decode, draw_teacher_mask, scheduled_sampling_prob
from .factory import create_model, settings_from_config
from .fusion import DoubleQueryAttention, dqam
from .numerical import NumericalEncoder, SDGRUCell, encode_numerical, sdgru_step
from .vision import (
    MSCSM,
    ChannelAttention,
    ConvLSTMCell,
    FeaturePyramid,
    SpatialAttention,
    VisionEncoder,
    VLSTMCell,
    VlstmState,
    encode_vision,
    vlstm_step,
)
from .vnnet import Forecaster, ModelSettings, VNNet, count_parameters

__all__ = [
    "ChannelAttention",
    "ConvLSTMCell",
    "DoubleQueryAttention",
    "FeaturePyramid",
    "Forecaster",
    "GraphDecoder",
    "MSCSM",
    "ModelSettings",
    "NumericalEncoder",
    "SDGRUCell",
    "SamplingSchedule",
    "SpatialAttention",
    "VLSTMCell",
    "VNNet",
    "VisionEncoder",
    "VlstmState",
    "count_parameters",
    "create_model",
    "decode",
    "dqam",
    "draw_teacher_mask",
    "encode_numerical",
    "encode_vision",
    "scheduled_sampling_prob",
    "sdgru_step",
    "settings_from_config",
]
