"""Ghost-imaging photon statistics: analytic SNR of four reconstruction
protocols for twin-beam and thermal light, plus a Monte-Carlo frame simulator."""

__version__ = "0.1.0"

from .composition import (  # noqa: E402
    JointMomentTable,
    bucket_from_pixel,
    central_views,
    pixel_from_single,
)
from .geometry import DetectionGeometry, ExperimentParams, derive_params  # noqa: E402
from .moments import (  # noqa: E402
    SingleModeJointMoments,
    SourceKind,
    difference_variance,
    thermal_single_mode,
    twin_single_mode,
)
from .protocols import (  # noqa: E402
    ProtocolKind,
    SnrResult,
    asymptotic_exponent,
    protocol_mean,
    protocol_variance,
    pump_instability_cov,
    snr,
    table1_closed_form,
)

__all__ = [
    "DetectionGeometry",
    "ExperimentParams",
    "JointMomentTable",
    "ProtocolKind",
    "SingleModeJointMoments",
    "SnrResult",
    "SourceKind",
    "asymptotic_exponent",
    "bucket_from_pixel",
    "central_views",
    "derive_params",
    "difference_variance",
    "pixel_from_single",
    "protocol_mean",
    "protocol_variance",
    "pump_instability_cov",
    "snr",
    "table1_closed_form",
    "thermal_single_mode",
    "twin_single_mode",
]
