"""Exception types raised across the package.

Every error that callers are expected to handle derives from
:class:`WindaeError`, so CLI code can catch one base class.
"""


class WindaeError(Exception):
    """Base class for all windae errors."""


class MissingColumn(WindaeError):
    """A required column is absent from a file, frame or pipeline input."""


class BadTimestamp(WindaeError):
    """Timestamp is unparseable, duplicated, or off the 10-minute grid."""


class EmptyFile(WindaeError):
    """Input file contains no data rows."""


class EmptyResult(WindaeError):
    """An operation that requires at least one row produced none."""


class NoFeaturesLeft(WindaeError):
    """Feature pruning removed every column."""


class ShapeMismatch(WindaeError):
    """Array shapes are inconsistent with each other or with the model."""


class BadArchitecture(WindaeError):
    """Requested network layout is not a valid bottleneck autoencoder."""


class SchemaMismatch(WindaeError):
    """Column schemas are invalid or disagree between inputs."""


class BadArtifact(WindaeError):
    """Model artifact file is malformed or has an unsupported version."""


class IoFailure(WindaeError):
    """Underlying file read/write failed."""


class EmptyInput(WindaeError):
    """An operation received an empty sequence where values are required."""


class LengthMismatch(WindaeError):
    """Aligned sequences have different lengths."""


class BadSpec(WindaeError):
    """Generator or configuration parameters violate their constraints."""


class BadWindow(WindaeError):
    """A requested time window does not fit inside the data span."""
