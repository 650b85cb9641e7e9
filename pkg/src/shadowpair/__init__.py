"""Single-image shadow detection by segment pairing, with relighting removal."""
from .classify import ClassifierConfig, PairVerdict, classify_pair, reflectance_angle
from .detect import Detection, DetectionConfig, PairLinks, detect_shadows
from .errors import (BothNearBlack, DecodeError, DegenerateDifference, DegenerateResponses,
                     DimensionMismatch, EmptySegment, ImageTooSmall, InvalidGroundMatrix,
                     MissingClass, MissingMask, MissingPartner, ShadowPairError,
                     UnsupportedFormat, ZeroReference)
from .evalbench import ConfusionMatrix, EvalReport, ber, confusion, run_dataset
from .kernels import BACKEND
from .quickshift import QuickshiftParams, SegmentMap, quickshift_segment
from .raster import load_image, load_mask, otsu_threshold, save_image, save_mask
from .relight import relight_coefficients, remove_shadows
from .texture import emd

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BothNearBlack", "ClassifierConfig", "ConfusionMatrix", "DecodeError",
    "DegenerateDifference", "DegenerateResponses", "Detection", "DetectionConfig",
    "DimensionMismatch", "EmptySegment", "EvalReport", "ImageTooSmall", "InvalidGroundMatrix",
    "MissingClass", "MissingMask", "MissingPartner", "PairLinks", "PairVerdict", "QuickshiftParams",
    "SegmentMap", "ShadowPairError", "UnsupportedFormat", "ZeroReference", "ber", "classify_pair",
    "confusion", "detect_shadows", "emd", "load_image", "load_mask", "otsu_threshold",
    "quickshift_segment", "reflectance_angle", "relight_coefficients", "remove_shadows",
    "run_dataset", "save_image", "save_mask",
]
