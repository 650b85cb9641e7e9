"""Exception types raised across the package."""


class ShadowPairError(Exception):
    pass


class UnsupportedFormat(ShadowPairError):
    pass


class DecodeError(ShadowPairError):
    pass


class ImageTooSmall(ShadowPairError):
    pass


class DegenerateResponses(ShadowPairError):
    pass


class EmptySegment(ShadowPairError):
    pass


class DimensionMismatch(ShadowPairError, ValueError):
    pass


class InvalidGroundMatrix(ShadowPairError, ValueError):
    pass


class DegenerateDifference(ShadowPairError):
    """Shadow and non-shadow medians coincide, so there is no color difference vector."""


class ZeroReference(ShadowPairError):
    pass


class BothNearBlack(ShadowPairError):
    pass


class MissingPartner(ShadowPairError):
    pass


class MissingClass(ShadowPairError):
    """Ground truth lacks one of the two classes; BER is undefined."""


class MissingMask(ShadowPairError):
    pass
