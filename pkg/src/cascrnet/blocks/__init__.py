"""Shared Channel Residual and ASPP blocks, and the CASCRNet graph."""

from .config import DESK, PAPER_SCALE, SUPPORTED_INPUT_SIZES, ASPPConfig, ModelConfig, SCRConfig
from .graph import ModelGraph, ParamRow, build_cascrnet, model_forward, param_count, param_table
from .layers import ASPPBlock, Conv, Dense, SCRBlock, aspp_forward, scr_forward

__all__ = [
    "ASPPBlock", "ASPPConfig", "Conv", "DESK", "Dense", "ModelConfig", "ModelGraph",
    "PAPER_SCALE", "ParamRow", "SCRBlock", "SCRConfig", "SUPPORTED_INPUT_SIZES",
    "aspp_forward", "build_cascrnet", "model_forward", "param_count", "param_table",
    "scr_forward",
]
