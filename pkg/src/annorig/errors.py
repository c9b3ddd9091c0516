"""Exception types raised across the rig.

Everything derives from AnnorigError so callers (CLI, HTTP service) can map
library failures to user-facing error payloads in one place.
"""


class AnnorigError(Exception):
    """Base class for all rig errors."""


# --- geometry ---------------------------------------------------------------

class FrameMismatch(AnnorigError):
    """Transform/point frame ids do not chain."""


class BehindCamera(AnnorigError):
    """Point has non-positive depth in the sensor frame."""


class RayParallelToPlane(AnnorigError):
    """Back-projected pixel ray does not intersect the target plane."""


# --- pivot calibration ------------------------------------------------------

class InsufficientSamples(AnnorigError):
    """Fewer than three valid tracker samples."""


class DegenerateMotion(AnnorigError):
    """Pivot poses do not constrain the tip offset (single-axis or no rotation)."""


# --- camera / projector calibration -----------------------------------------

class DegenerateConfiguration(AnnorigError):
    """Point configuration cannot determine a homography (collinear or < 4)."""


class InsufficientViews(AnnorigError):
    """Fewer planar views than the intrinsic solver needs."""


class DegenerateOrientations(AnnorigError):
    """All calibration views share an orientation; absolute-conic system is rank-deficient."""


class InsufficientCorrespondences(AnnorigError):
    """Too few 3D-2D correspondences for pose estimation."""


class ConvergenceFailure(AnnorigError):
    """Iterative refinement exhausted its iteration budget without converging."""


class NonPlanarTouches(AnnorigError):
    """Touched grid points do not lie on a common plane within tolerance."""


class OutOfRange(AnnorigError):
    """Index outside the encodable range of a code sequence."""


class DimensionMismatch(AnnorigError):
    """Image frames in one operation have differing dimensions."""


class InsufficientDecodablePixels(AnnorigError):
    """Too few decoded correspondences inside a local patch."""


class NoSharedViews(AnnorigError):
    """Stereo averaging received no view observed by both sensors."""


# --- annotation pipeline ----------------------------------------------------

class InvalidSample(AnnorigError):
    """Tracker sample flagged invalid; nothing was appended."""


class StaleCalibration(AnnorigError):
    """Calibration bundle is missing parts the operation needs."""


class TooFewPoints(AnnorigError):
    """Trajectory has too few points for the requested operation."""


class OpenContour(AnnorigError):
    """Polygon requested but trajectory endpoints are too far apart to close."""


class EmptyTrajectory(AnnorigError):
    """No pen-down points available to finalize."""


class AnnotationOutOfFrame(AnnorigError):
    """Annotation points start outside the trackable image area."""


# --- simulator / export -----------------------------------------------------

class PathOutOfWorkArea(AnnorigError):
    """Requested pointer path leaves the calibrated work area."""


class EmptyLabelCatalog(AnnorigError):
    """Dataset has annotations but no label catalog to assign class ids."""


class ParseError(AnnorigError):
    """Malformed serialized document; message carries line/element context."""
