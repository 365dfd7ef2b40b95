"""Single-anchor mmWave 6DoF drone localization: simulator and DSP library."""
from .aoa import Fix3D, RadarDetection, angle_from_phase, combine, detect, filter_outliers, pair_detections
from .channel import BasebandFrame, simulate_frame, simulate_scenario
from .config import (
    SPEED_OF_LIGHT,
    AnchorConfig,
    AoaAxis,
    FilterConfig,
    NoiseModel,
    Polarization,
    RadarConfig,
    RadarPair,
    SearchBand,
    default_bands,
    max_unambiguous_range,
)
from .evaluation import ErrorReport, cdf_points, error_vs_time, evaluate, monte_carlo_sweep, percentile
from .exceptions import (
    AmbiguousDetection,
    AnchorLocError,
    CalibrationFailed,
    ConfigurationError,
    DomainError,
    ExtrapolationError,
    NoDetection,
    PairingError,
    SchemaError,
)
from .fusion import ClockOffset, ImuSample, ImuTrack, Pose6DoF, calibrate_offset, fuse, interpolate_attitude
from .geometry import (
    EulerAngles,
    SphericalFix,
    anchor_in_flight_frame,
    euler_to_rotation,
    point_to_spherical,
    rotation_to_euler,
    spherical_to_point,
    wrap_angle,
)
from .pipeline import SingleAnchorLocalizer, run_pipeline
from .scenario import GroundTruthTrack, MeasurementLog, Scenario, Trajectory, calibration_maneuver
from .spectrum import PeakPair, Spectrum, compute_spectrum, find_peak_pair, range_from_beat, separate_dual_frequency

__version__ = "0.1.0"
