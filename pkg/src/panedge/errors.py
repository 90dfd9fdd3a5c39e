"""Exception hierarchy. Everything derives from ``PanEdgeError`` (a ``ValueError``)."""


class PanEdgeError(ValueError):
    pass


class CategoryOutOfRange(PanEdgeError):
    pass


class InstanceIdOverflow(PanEdgeError):
    pass


class StuffWithNonzeroInstance(PanEdgeError):
    pass


class MalformedLabel(PanEdgeError):
    pass


class InvalidTaxonomy(PanEdgeError):
    pass


class InvalidSegmentLabel(PanEdgeError):
    pass


class ShapeMismatch(PanEdgeError):
    pass


class NonPositiveSigma(PanEdgeError):
    pass


class MissingCenter(PanEdgeError):
    pass


class NonPositiveTemperature(PanEdgeError):
    pass


class NegativeComponent(PanEdgeError):
    pass


class DimensionMismatch(PanEdgeError):
    pass


class NonPositiveEps(PanEdgeError):
    pass


class InvalidThreshold(PanEdgeError):
    pass


class TaxonomyMismatch(PanEdgeError):
    pass


class InfeasibleParams(PanEdgeError):
    pass


class UnknownSourceId(PanEdgeError):
    pass


class TensorFormatError(PanEdgeError):
    pass


class BadMagic(TensorFormatError):
    pass


class TruncatedPayload(TensorFormatError):
    pass


class DimOverflow(TensorFormatError):
    pass
