"""Temporal passing-network analysis of basketball possessions."""

__version__ = "0.1.0"

from .data import (  # noqa: E402
    POSITIONS,
    AnalysisSet,
    Dataset,
    Outcome,
    PassEvent,
    PlayerRef,
    Position,
    Possession,
    PossessionType,
    StartBall,
    StartHalf,
    classify_outcome,
    filter_and_categorize,
    load_outcome_map,
    parse_dataset,
)
from .errors import (  # noqa: E402
    ChiSquareError,
    ClassificationError,
    ConfigError,
    DataError,
    MappingError,
    RosterError,
    SchemaError,
    TemporalFlowError,
    UndefinedMetricError,
    WindowError,
)
from .graphlets import (  # noqa: E402
    GRAPHLET_ORDER,
    GraphletClass,
    GraphletProfile,
    build_profile,
    classify,
    classify_sequence,
    entropy_bits,
    individual_profiles,
    state_entropy,
)
from .metrics import (  # noqa: E402
    Level,
    Metric,
    adapted_metric,
    fb_fc_ratio,
    flow_betweenness_play,
    flow_centrality_play,
    game_aggregate,
)
from .stats import (  # noqa: E402
    TestResult,
    chi2_independence,
    eta_squared_h,
    kruskal_wallis,
    odds_ratio,
    sequential_profile_scan,
)
from .synthgen import SynthConfig, generate  # noqa: E402
from .windowing import Snapshot, TemporalGraph, WindowConfig, build_windows  # noqa: E402
