"""Closed-form implementation costs: computational complexity per panel
area, backplane bandwidth, and processing latency.

Conventions (all constants exposed so alternative accountings are a
config edit away):
  - one complex multiply-accumulate = one MAC;
  - a complex value costs 2 * w_filt bits on a link (w_filt per I and Q);
  - filters are recomputed once per group of N_cs coherent subcarriers,
    every coherence time.
"""
import csv
import json
import math
from dataclasses import dataclass, asdict


@dataclass(frozen=True)
class CostParams:
    """Rates, bit-widths, and timing constants feeding the cost formulas."""

    signal_bandwidth: float          # f_B [Hz]
    bits_per_component: int          # w_filt
    coherent_subcarriers: int        # N_cs
    subcarrier_spacing: float        # [Hz]
    coherence_time: float            # T_c [s]
    filter_time: float               # T_Filter [s]
    psu_time: float                  # T_PSU [s]
    iic_compute_time: float          # T_compute,IIC [s]
    panel_panel_time: float          # T_panel-panel [s]
    clock_frequency: float           # f_clk [Hz]
    parallel_macs: int
    psu_fan_in: int = 4

    def __post_init__(self):
        for name, v in asdict(self).items():
            if v <= 0:
                raise ValueError(f"CostParams.{name} must be positive, got {v}")

    @classmethod
    def from_config(cls, config):
        return cls(
            signal_bandwidth=config.signal_bandwidth,
            bits_per_component=config.bits_per_component,
            coherent_subcarriers=config.coherent_subcarriers,
            subcarrier_spacing=config.subcarrier_spacing,
            coherence_time=config.coherence_time,
            filter_time=config.filter_time,
            psu_time=config.psu_time,
            iic_compute_time=config.iic_compute_time,
            panel_panel_time=config.panel_panel_time,
            clock_frequency=config.clock_frequency,
            parallel_macs=config.parallel_macs,
            psu_fan_in=config.psu_fan_in,
        )


# Field names carry units; they double as CSV/JSON column names.
COST_FIELDS = (
    "c_filt_mac_per_s_per_m2",
    "c_form_mac_per_s_per_m2",
    "r_global_bps_per_m2",
    "r_local_bps_per_m2",
    "l_filtering_s",
    "l_form_s",
    "macs_per_filter_sample",
    "macs_per_formulation",
)


@dataclass(frozen=True)
class CostReport:
    """One algorithm's cost figures for a given panelization."""

    algorithm: str
    c_filt_mac_per_s_per_m2: float
    c_form_mac_per_s_per_m2: float
    r_global_bps_per_m2: float
    r_local_bps_per_m2: float
    l_filtering_s: float
    l_form_s: float
    macs_per_filter_sample: int
    macs_per_formulation: int

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @staticmethod
    def write_csv(reports, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("algorithm",) + COST_FIELDS)
            for r in reports:
                d = r.to_dict()
                writer.writerow([d["algorithm"]] + [repr(d[f]) for f in COST_FIELDS])


def formulation_rate(params: CostParams):
    """Filter formulations per second per panel.

    Subcarriers are grouped by N_cs (floor division, matching discrete
    groups) and every group is reformulated each coherence time.
    """
    subcarriers = int(params.signal_bandwidth / params.subcarrier_spacing)
    groups = subcarriers // params.coherent_subcarriers
    return groups / params.coherence_time


def complexity_filt(Mp, Np, Ap, f_B):
    """Filtering-phase MAC/s/m^2: an Np x Mp filter at f_B samples/s."""
    return Np * Mp * f_B / Ap


def rmf_macs_per_formulation(Mp, K):
    """Column-norm computation for every user's local channel."""
    return Mp * K


def complexity_form_rmf(Mp, K, Ap, U_form):
    """Formulation-phase MAC/s/m^2 for the reduced matched filter."""
    return rmf_macs_per_formulation(Mp, K) * U_form / Ap


def iic_macs_per_formulation(Mp, K, Np):
    """MACs for one cancellation-chain step: 30 K^3 + b K^2 + c K.

    b = Mp + Np + 1 and c = 4 Mp^2 + Mp Np; equal, term by term, to the
    per-step costs: K x K SVD (17 K^3), whitening ((Mp+1) K^2), the
    Mp x K SVD (4 Mp^2 K + 13 K^3), and the filter/update (Mp K Np + Np K^2).
    """
    b = Mp + Np + 1
    c = 4 * Mp ** 2 + Mp * Np
    return 30 * K ** 3 + b * K ** 2 + c * K


def complexity_form_iic(Mp, K, Np, Ap, U_form):
    """Formulation-phase MAC/s/m^2 for the cancellation chain."""
    return iic_macs_per_formulation(Mp, K, Np) * U_form / Ap


def bandwidth_global(Np, w_filt, f_B, Ap):
    """Tree-interconnect bps/m^2: Np complex outputs per sample."""
    return 2 * w_filt * Np * f_B / Ap


def bandwidth_local(K, w_filt, U_form, Ap):
    """Panel-to-panel bps/m^2: one K x K complex matrix per formulation."""
    return 2 * w_filt * K ** 2 * U_form / Ap


def tree_levels(P, fan_in=4):
    """PSU levels needed for P panels; a partial level still counts."""
    levels = 0
    n = P
    while n > 1:
        n = math.ceil(n / fan_in)
        levels += 1
    return levels


def latency_filtering(P, T_filter, T_psu, fan_in=4):
    """Filtering-phase latency: filter time plus one PSU hop per level."""
    return T_filter + tree_levels(P, fan_in) * T_psu


def latency_form_iic(P, T_compute, T_panel_panel):
    """Worst-case chain latency: P computations, P-1 hand-offs."""
    return P * T_compute + (P - 1) * T_panel_panel


def latency_form_rmf(macs_per_formulation, parallel_units, f_clk):
    """Parallel formulation latency at the panel clock."""
    return macs_per_formulation / (parallel_units * f_clk)


def raw_backplane_rate(M, w_filt, f_B):
    """Aggregate bps shipped with no panel processing at all (sanity figure)."""
    return M * 2 * w_filt * f_B


def cost_report(algorithm, Mp, K, Np, Ap, P, params: CostParams) -> CostReport:
    """Assemble the full cost figure set for one design point."""
    algorithm = algorithm.lower()
    U_form = formulation_rate(params)
    c_filt = complexity_filt(Mp, Np, Ap, params.signal_bandwidth)
    l_filt = latency_filtering(P, params.filter_time, params.psu_time, params.psu_fan_in)
    macs_filter = Np * Mp
    if algorithm == "rmf":
        macs_form = rmf_macs_per_formulation(Mp, K)
        c_form = complexity_form_rmf(Mp, K, Ap, U_form)
        r_local = 0.0
        l_form = latency_form_rmf(macs_form, params.parallel_macs, params.clock_frequency)
    elif algorithm == "iic":
        macs_form = iic_macs_per_formulation(Mp, K, Np)
        c_form = complexity_form_iic(Mp, K, Np, Ap, U_form)
        r_local = bandwidth_local(K, params.bits_per_component, U_form, Ap)
        l_form = latency_form_iic(P, params.iic_compute_time, params.panel_panel_time)
    else:
        raise ValueError(f"unknown algorithm {algorithm!r} (use 'rmf' or 'iic')")
    return CostReport(
        algorithm=algorithm,
        c_filt_mac_per_s_per_m2=c_filt,
        c_form_mac_per_s_per_m2=c_form,
        r_global_bps_per_m2=bandwidth_global(Np, params.bits_per_component,
                                             params.signal_bandwidth, Ap),
        r_local_bps_per_m2=r_local,
        l_filtering_s=l_filt,
        l_form_s=l_form,
        macs_per_filter_sample=macs_filter,
        macs_per_formulation=macs_form,
    )
