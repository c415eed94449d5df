"""Exception types shared across the package."""


class TopomapError(Exception):
    """Base class for all package errors."""


class DatasetError(TopomapError):
    """Raised for malformed or invalid dataset input.

    ``where`` carries a position hint (line/column or the offending field)
    suitable for surfacing in CLI diagnostics and HTTP 400 bodies.
    """

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(message if where is None else f"{message} ({where})")


class UnknownSegmentError(TopomapError):
    def __init__(self, segment_id):
        self.segment_id = segment_id
        super().__init__(f"unknown segment id {segment_id}")


class PlanarityError(TopomapError):
    """Two segment geometries cross away from a shared intersection."""

    def __init__(self, segment_a, segment_b):
        self.segment_a = segment_a
        self.segment_b = segment_b
        super().__init__(
            f"segments {segment_a} and {segment_b} intersect away from a shared intersection"
        )


class ViewportError(TopomapError):
    """Invalid raster viewport (non-positive dimensions or over the pixel cap)."""


class ScenarioError(TopomapError):
    """Dangling references in edits or mismatched scenario lineage."""
