"""Subject-specific muscle fatigue rates from timed static strength measurements."""

from .biomech import (
    Anthropometry,
    MarkerFrame,
    MomentResult,
    PostureAngles,
    SegmentForces,
    joint_moment_from_measured_force,
    moment_load,
    posture_angles,
    segment_forces_from_anthropometry,
)
from .config import RunConfig
from .estimation import FitResult, SessionMeasurement, fit_fatigue_rate, fit_subject, linearize
from .model import (
    ConstantLoad,
    FatigueParameters,
    SampledLoad,
    Unit,
    endurance_time,
    integrate_capacity,
    remaining_capacity_static,
)
from .records import SubjectRecord, parse_subjects
from .stats import correlation_matrix, split_by_strength, summarize, t_test, t_test_from_summary
from .synth import (
    ProtocolSchedule,
    SyntheticSubjectSpec,
    generate_cohort,
    generate_marker_trace,
    generate_sessions,
)

__version__ = "0.1.0"
