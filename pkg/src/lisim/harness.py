"""Scenario runner, Monte-Carlo design-space sweeps, and iso-rate point
extraction, with CSV emission of the gridded results.
"""
import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import costmodel, equalizers, geometry, pipeline
from .errors import ConfigError, LisimError

log = logging.getLogger(__name__)

DEFAULT_MODES = {"rmf": pipeline.COMBINE, "iic": pipeline.BYPASS}


@dataclass(frozen=True)
class ScenarioResult:
    algorithm: str
    sum_rate_bps_hz: float
    cost: costmodel.CostReport
    surface: geometry.SurfaceLayout
    users: geometry.UserSet


def _stage(name):
    """Context tag for error messages; which stage of the run failed."""
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and isinstance(exc, LisimError):
                exc.args = (f"[{name}] {exc.args[0]}",) + exc.args[1:]
            return False
    return _Ctx()


def formulate(algorithm, H_slices, Np):
    """Build per-panel equalizers with the requested algorithm."""
    algorithm = algorithm.lower()
    if algorithm == "rmf":
        return [equalizers.rmf_formulate(H_i, Np, panel_index=i)
                for i, H_i in enumerate(H_slices)]
    if algorithm == "iic":
        eqs, _ = equalizers.iic_chain(H_slices, Np)
        return eqs
    raise ConfigError(f"unknown algorithm {algorithm!r} (use 'rmf' or 'iic')")


def evaluate_rate(algorithm, H_slices, Np, rho, mode=None):
    """Formulate, assemble the effective channel, and score its sum rate."""
    algorithm = algorithm.lower()
    if algorithm not in DEFAULT_MODES:
        raise ConfigError(f"unknown algorithm {algorithm!r} (use 'rmf' or 'iic')")
    mode = mode or DEFAULT_MODES[algorithm]
    eqs = formulate(algorithm, H_slices, Np)
    K = H_slices[0].shape[1]
    eff = pipeline.effective_channel(eqs, H_slices, mode, num_users=K)
    return pipeline.sum_rate(eff, rho)


def run_scenario(config, algorithm, seed=None, mode=None) -> ScenarioResult:
    """One full pass: geometry, channel, formulation, rate, and costs."""
    with _stage("geometry"):
        surface = geometry.build_surface(config)
        users = geometry.place_users(config, seed=seed)
    with _stage("channel"):
        channel = geometry.channel_matrix(surface, users, config.wavelength)
        H_slices = [geometry.panel_channel(channel, surface, i)
                    for i in range(surface.P)]
    with _stage("equalization"):
        rate = evaluate_rate(algorithm, H_slices, config.outputs_per_panel,
                             config.snr, mode=mode)
    with _stage("costmodel"):
        params = costmodel.CostParams.from_config(config)
        cost = costmodel.cost_report(algorithm, surface.Mp, config.num_users,
                                     config.outputs_per_panel, surface.Ap,
                                     surface.P, params)
    return ScenarioResult(algorithm=algorithm.lower(), sum_rate_bps_hz=rate,
                          cost=cost, surface=surface, users=users)


@dataclass
class SweepSpec:
    """Cartesian (algorithm, panel_side, Np) grid averaged over user drops."""

    base: geometry.ScenarioConfig
    panel_sides: list
    np_values: list
    algorithms: list = field(default_factory=lambda: ["rmf", "iic"])
    n_drops: int = 10
    seeds: list = None

    def __post_init__(self):
        pitch = self.base.wavelength / 2.0
        for side in self.panel_sides:
            if not geometry._divides(self.base.surface_height, side) or \
               not geometry._divides(self.base.surface_width, side) or \
               not geometry._divides(side, pitch):
                raise ConfigError(
                    f"panel_side={side} does not tile the surface on the "
                    f"lambda/2 grid; valid sides include "
                    f"{geometry.valid_panel_sides(self.base.surface_height, self.base.surface_width, pitch)}"
                )
        for Np in self.np_values:
            if not 1 <= Np <= self.base.num_users:
                raise ConfigError(f"Np={Np} must be in [1, K={self.base.num_users}]")
        if self.seeds is None:
            self.seeds = [self.base.rng_seed + d for d in range(self.n_drops)]
        if len(self.seeds) < self.n_drops:
            raise ConfigError("need at least n_drops seeds")
        self.algorithms = [a.lower() for a in self.algorithms]

    @classmethod
    def from_json(cls, path, base):
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        known = {"panel_sides", "np_values", "algorithms", "n_drops", "seeds"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown sweep keys: {sorted(unknown)}")
        return cls(base=base, **data)


SWEEP_COLUMNS = (
    "algorithm",
    "ap_m2",
    "mp",
    "np",
    "p",
    "mean_rate_bps_hz",
    "rate_std_bps_hz",
    "c_filt_mac_per_s_per_m2",
    "c_form_mac_per_s_per_m2",
    "r_global_bps_per_m2",
    "r_local_bps_per_m2",
    "l_filtering_s",
    "l_form_s",
)

_INT_COLUMNS = {"mp", "np", "p"}


@dataclass(frozen=True)
class SweepRow:
    algorithm: str
    ap_m2: float
    mp: int
    np: int
    p: int
    mean_rate_bps_hz: float
    rate_std_bps_hz: float
    c_filt_mac_per_s_per_m2: float
    c_form_mac_per_s_per_m2: float
    r_global_bps_per_m2: float
    r_local_bps_per_m2: float
    l_filtering_s: float
    l_form_s: float

    def to_dict(self):
        return asdict(self)


def _drop_task(args):
    """Rates for every (algorithm, Np) of one (panel_side, drop) cell.

    Runs in a worker process; regenerates the channel from the seed so
    nothing heavyweight crosses the process boundary.
    """
    base_dict, panel_side, seed, algorithms, np_values = args
    base_dict = dict(base_dict, panel_side=panel_side, carrier_frequency=None)
    config = geometry.ScenarioConfig(**base_dict)
    surface = geometry.build_surface(config)
    users = geometry.place_users(config, seed=seed)
    channel = geometry.channel_matrix(surface, users, config.wavelength)
    H_slices = [geometry.panel_channel(channel, surface, i) for i in range(surface.P)]
    out = {}
    for algorithm in algorithms:
        for Np in np_values:
            key = (algorithm, Np)
            try:
                out[key] = evaluate_rate(algorithm, H_slices, Np, config.snr)
            except LisimError as exc:
                out[key] = f"error: {exc}"
    return panel_side, seed, out


def run_sweep(spec: SweepSpec, jobs=1):
    """Evaluate the sweep grid; returns (rows, failures).

    failures maps (algorithm, panel_side, Np) to an error string for
    cells that could not be evaluated; surviving rows are still returned.
    """
    seeds = spec.seeds[: spec.n_drops]
    tasks = [(spec.base.to_dict(), side, seed, spec.algorithms, spec.np_values)
             for side in spec.panel_sides for seed in seeds]
    results = {}
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for side, seed, out in pool.map(_drop_task, tasks):
                results[(side, seed)] = out
    else:
        for t in tasks:
            side, seed, out = _drop_task(t)
            results[(side, seed)] = out

    params = costmodel.CostParams.from_config(spec.base)
    pitch = spec.base.wavelength / 2.0
    rows, failures = [], {}
    for side in spec.panel_sides:
        per_side = int(round(side / pitch))
        Mp = per_side * per_side
        nx = int(round(spec.base.surface_width / pitch)) // per_side
        ny = int(round(spec.base.surface_height / pitch)) // per_side
        P = nx * ny
        Ap = side * side
        for algorithm in spec.algorithms:
            for Np in spec.np_values:
                samples = [results[(side, s)][(algorithm, Np)] for s in seeds]
                errs = [s for s in samples if isinstance(s, str)]
                if errs:
                    failures[(algorithm, side, Np)] = errs[0]
                    continue
                cost = costmodel.cost_report(algorithm, Mp, spec.base.num_users,
                                             Np, Ap, P, params)
                rates = np.array(samples)
                rows.append(SweepRow(
                    algorithm=algorithm,
                    ap_m2=Ap,
                    mp=Mp,
                    np=Np,
                    p=P,
                    mean_rate_bps_hz=float(rates.mean()),
                    rate_std_bps_hz=float(rates.std(ddof=1)) if rates.size > 1 else 0.0,
                    c_filt_mac_per_s_per_m2=cost.c_filt_mac_per_s_per_m2,
                    c_form_mac_per_s_per_m2=cost.c_form_mac_per_s_per_m2,
                    r_global_bps_per_m2=cost.r_global_bps_per_m2,
                    r_local_bps_per_m2=cost.r_local_bps_per_m2,
                    l_filtering_s=cost.l_filtering_s,
                    l_form_s=cost.l_form_s,
                ))
    rows.sort(key=lambda r: (r.algorithm, r.ap_m2, r.np))
    return rows, failures


def write_sweep_csv(rows, path):
    """Emit rows in declared column order; floats use repr for round-trip."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            d = row.to_dict()
            out = []
            for col in SWEEP_COLUMNS:
                v = d[col]
                out.append(v if isinstance(v, (str, int)) else repr(v))
            writer.writerow(out)


def read_sweep_csv(path):
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames) != SWEEP_COLUMNS:
            raise ConfigError(f"{path}: unexpected CSV header {reader.fieldnames}")
        for rec in reader:
            kwargs = {}
            for col in SWEEP_COLUMNS:
                if col == "algorithm":
                    kwargs[col] = rec[col]
                elif col in _INT_COLUMNS:
                    kwargs[col] = int(rec[col])
                else:
                    kwargs[col] = float(rec[col])
            rows.append(SweepRow(**kwargs))
    return rows


@dataclass(frozen=True)
class IsoRatePoint:
    algorithm: str
    ap_m2: float
    np: int
    c_filt_mac_per_s_per_m2: float
    r_global_bps_per_m2: float
    mean_rate_bps_hz: float


def iso_rate_points(rows, target_rate):
    """Smallest Np reaching the target rate, per (algorithm, panel area).

    Returns (points, notices); panel areas that never reach the target
    are reported in notices rather than silently dropped.
    """
    groups = {}
    for row in rows:
        groups.setdefault((row.algorithm, row.ap_m2), []).append(row)
    points, notices = [], []
    for (algorithm, ap), group in sorted(groups.items()):
        group.sort(key=lambda r: r.np)
        hit = next((r for r in group if r.mean_rate_bps_hz >= target_rate), None)
        if hit is None:
            notices.append(
                f"{algorithm} Ap={ap} m^2: target {target_rate} bps/Hz "
                f"unreachable (best {max(r.mean_rate_bps_hz for r in group):.1f})"
            )
            continue
        points.append(IsoRatePoint(
            algorithm=algorithm,
            ap_m2=ap,
            np=hit.np,
            c_filt_mac_per_s_per_m2=hit.c_filt_mac_per_s_per_m2,
            r_global_bps_per_m2=hit.r_global_bps_per_m2,
            mean_rate_bps_hz=hit.mean_rate_bps_hz,
        ))
    return points, notices
