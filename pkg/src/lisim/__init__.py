"""Uplink detection simulator and implementation-cost toolkit for a
panelized large intelligent surface."""

from .errors import ConfigError, LisimError, NumericalError
from .geometry import (
    ChannelMatrix,
    ScenarioConfig,
    SurfaceLayout,
    UserSet,
    build_surface,
    captured_power_fraction,
    channel_matrix,
    estimate_antenna_count,
    los_gain,
    panel_channel,
    place_users,
)
from .numerics import SvdResult, inv_sqrt_singular, logdet_hermitian_pd, svd
from .equalizers import (
    IICState,
    PanelEqualizer,
    baseline_centralized,
    iic_chain,
    iic_formulate_step,
    rmf_formulate,
)
from .pipeline import (
    BYPASS,
    COMBINE,
    EffectiveChannel,
    FilteredBlock,
    PsuTree,
    aggregate_tree,
    centralized_rate,
    detect_and_ser,
    effective_channel,
    panel_filter,
    psu_process,
    sum_rate,
)
from .costmodel import CostParams, CostReport, cost_report, raw_backplane_rate
from .harness import (
    IsoRatePoint,
    SweepRow,
    SweepSpec,
    iso_rate_points,
    read_sweep_csv,
    run_scenario,
    run_sweep,
    write_sweep_csv,
)

__version__ = "0.1.0"
