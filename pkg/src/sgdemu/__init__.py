"""sgdemu: smart gateway diversity emulation for satellite feeder links.

Replays or synthesizes multi-site rain-attenuation time series, runs the
N-active + P-redundant switching state machine over them, and computes
the availability, outage and switching statistics of the network.
"""

from ._kernel import BACKEND as kernel_backend_name
from ._kernel import available_backends
from .errors import (
    ConfigError,
    ConfigValidationError,
    DataError,
    FormatError,
    FrequencyDomainError,
    PlanError,
    SgdemuError,
    SpanError,
    SpecError,
    StatisticError,
)
from .propstats import (
    ExceedanceCurve,
    FadeEvent,
    FadeSummary,
    JointExceedanceTable,
    exceedance,
    fade_duration_distribution,
    fade_events,
    frequency_scale,
    joint_exceedance,
)
from .scenario import (
    BaselineTable,
    ClusterPlan,
    DailyBreakdown,
    PairResult,
    SweepResult,
    daily_breakdown,
    enumerate_combinations,
    evaluate_cluster_plan,
    no_sgd_baseline,
    sst_sweep,
)
from .sgd_engine import (
    EmulationResult,
    GatewayConfig,
    NetworkConfig,
    SwitchEvent,
    availability_count_oracle,
    availability_no_sgd,
    emulate,
    standby_margin_time,
)
from .timeseries import (
    AttenuationSeries,
    SeriesSet,
    SiteMeta,
    SiteSynthSpec,
    SynthSpec,
    TimeGrid,
    harmonize,
    load_series,
    synthesize,
    synthesize_events,
)

__version__ = "0.1.0"
SCHEMA_VERSION = 1


def kernel_backend() -> str:
    """Which switching-core implementation is active: 'compiled' or 'python'."""
    return kernel_backend_name
