"""Conversion of 360-degree images between equirectangular (ERP) and cubemap
(CMP) projections with viewport-adaptive resampling."""
from .image import ImageBuffer
from .metrics import psnr, ssim, ws_psnr
from .pipeline import VarConfig, classical_resample, roundtrip, var_resample
from .projections import ProjectionFormat, default_face_size
from .resamplers import FsmrParams, ResamplerKind

__version__ = "0.1.0"

__all__ = [
    "FsmrParams",
    "ImageBuffer",
    "ProjectionFormat",
    "ResamplerKind",
    "VarConfig",
    "classical_resample",
    "default_face_size",
    "psnr",
    "roundtrip",
    "ssim",
    "var_resample",
    "ws_psnr",
]
