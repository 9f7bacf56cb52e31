"""Surface geometry, user placement, and the near-field LOS channel.

Coordinate frame: the surface lies in the z=0 plane, x spans its width
(centered at 0), y spans its height starting at 0, and users are at
z > 0 in front of it. Antennas sit on a half-wavelength grid; panels are
square tiles of that grid, indexed in raster order (left-to-right along
x, then upward in y).
"""
import json
from dataclasses import dataclass, field, fields, asdict

import numpy as np

from .errors import ConfigError, NumericalError

SPEED_OF_LIGHT = 299_792_458.0

_GRID_TOL = 1e-9


@dataclass
class ScenarioConfig:
    """Physical and system parameters for one scenario.

    Exactly one of wavelength / carrier_frequency is given in a config
    file; the other is derived via lambda = c / f_c.
    """

    wavelength: float = None
    carrier_frequency: float = None
    surface_height: float = 2.25
    surface_width: float = 22.5
    panel_side: float = 2.25
    num_users: int = 50
    snr: float = 1.0                     # linear power ratio rho
    signal_bandwidth: float = 100e6      # f_B [Hz]
    bits_per_component: int = 8          # w_filt, per I and per Q
    coherent_subcarriers: int = 12       # N_cs
    subcarrier_spacing: float = 15e3     # [Hz]
    coherence_time: float = 1e-3         # T_c [s]
    service_depth: float = 40.0          # box depth, mapped to z
    service_width: float = 45.0          # box width, mapped to x
    service_standoff: float = 0.5        # z_min of the service box
    rng_seed: int = 1
    outputs_per_panel: int = 16          # Np
    psu_fan_in: int = 4
    # Latency/clock parameters consumed by the cost model.
    filter_time: float = 1e-6            # T_Filter [s]
    psu_time: float = 0.5e-6             # T_PSU [s]
    iic_compute_time: float = 2e-6       # T_compute,IIC [s]
    panel_panel_time: float = 1e-6       # T_panel-panel [s]
    clock_frequency: float = 500e6       # f_clk [Hz]
    parallel_macs: int = 16

    def __post_init__(self):
        if self.wavelength is None and self.carrier_frequency is None:
            raise ConfigError("give exactly one of wavelength / carrier_frequency")
        if self.wavelength is not None and self.carrier_frequency is not None:
            # Both keys appear in resolved dumps; accept only if consistent.
            if abs(self.wavelength * self.carrier_frequency / SPEED_OF_LIGHT - 1.0) > 1e-9:
                raise ConfigError(
                    "wavelength and carrier_frequency disagree; give exactly one")
        if self.wavelength is None:
            if self.carrier_frequency <= 0:
                raise ConfigError("carrier_frequency must be positive")
            self.wavelength = SPEED_OF_LIGHT / self.carrier_frequency
        else:
            self.carrier_frequency = SPEED_OF_LIGHT / self.wavelength
        if self.wavelength <= 0:
            raise ConfigError("wavelength must be positive")
        if self.signal_bandwidth <= 0:
            raise ConfigError("signal_bandwidth must be positive")
        if self.num_users < 1:
            raise ConfigError("num_users must be >= 1")
        if self.outputs_per_panel < 1 or self.outputs_per_panel > self.num_users:
            raise ConfigError("outputs_per_panel must satisfy 1 <= Np <= K")
        if self.snr <= 0:
            raise ConfigError("snr must be a positive linear ratio")
        pitch = self.wavelength / 2.0
        if not _divides(self.panel_side, pitch):
            raise ConfigError(
                f"panel_side={self.panel_side} must be an integer multiple of "
                f"lambda/2 = {pitch}"
            )
        for name, dim in (("surface_height", self.surface_height),
                          ("surface_width", self.surface_width)):
            if not _divides(dim, self.panel_side):
                sides = valid_panel_sides(self.surface_height, self.surface_width, pitch)
                raise ConfigError(
                    f"{name}={dim} is not an integer multiple of "
                    f"panel_side={self.panel_side}; valid panel sides for this "
                    f"surface include {sides}"
                )

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self):
        return asdict(self)

    def dump_json(self, path):
        """Write the fully resolved config (all defaults filled in)."""
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def replace(self, **kwargs):
        data = self.to_dict()
        data.update(kwargs)
        # Keep only one of the wavelength pair so __post_init__ re-derives.
        if "wavelength" in kwargs:
            data["carrier_frequency"] = None
        elif "carrier_frequency" in kwargs:
            data["wavelength"] = None
        else:
            data["carrier_frequency"] = None
        return ScenarioConfig(**data)


def _divides(a, b):
    """True if a is an integer multiple of b (within rounding)."""
    ratio = a / b
    return abs(ratio - round(ratio)) < _GRID_TOL * max(ratio, 1.0) and round(ratio) >= 1


def valid_panel_sides(height, width, pitch, limit=8):
    """A few panel sides that tile both surface dimensions exactly."""
    out = []
    n = 1
    while len(out) < limit and n * pitch <= min(height, width) + _GRID_TOL:
        side = n * pitch
        if _divides(height, side) and _divides(width, side):
            out.append(round(side, 12))
        n += 1
    return out


@dataclass(frozen=True)
class SurfaceLayout:
    """Antenna grid plus its partition into square panels."""

    positions: np.ndarray        # (M, 2) antenna (x, y), z = 0
    M: int
    P: int
    Mp: int
    Ap: float                    # panel area [m^2]
    panel_of_antenna: np.ndarray  # (M,) panel index per antenna
    panel_rows: tuple            # per panel: index array into positions/H rows
    panel_order: tuple           # raster sequence for the IIC chain
    pitch: float


def build_surface(config: ScenarioConfig) -> SurfaceLayout:
    """Lay out the half-wavelength antenna grid and its panel tiling."""
    pitch = config.wavelength / 2.0
    nx = int(round(config.surface_width / pitch))
    ny = int(round(config.surface_height / pitch))
    per_side = int(round(config.panel_side / pitch))
    panels_x = nx // per_side
    panels_y = ny // per_side

    ix = np.arange(nx)
    iy = np.arange(ny)
    x = (ix + 0.5) * pitch - config.surface_width / 2.0
    y = (iy + 0.5) * pitch
    gx, gy = np.meshgrid(x, y)           # row-major: y varies by row
    positions = np.column_stack([gx.ravel(), gy.ravel()])
    M = nx * ny

    px = ix // per_side
    py = iy // per_side
    panel_grid = py[:, None] * panels_x + px[None, :]
    panel_of_antenna = panel_grid.ravel()

    P = panels_x * panels_y
    order = np.arange(M)
    panel_rows = tuple(order[panel_of_antenna == p] for p in range(P))
    return SurfaceLayout(
        positions=positions,
        M=M,
        P=P,
        Mp=per_side * per_side,
        Ap=config.panel_side ** 2,
        panel_of_antenna=panel_of_antenna,
        panel_rows=panel_rows,
        panel_order=tuple(range(P)),
        pitch=pitch,
    )


@dataclass(frozen=True)
class UserSet:
    """K user positions (x, y, z), all strictly in front of the surface."""

    positions: np.ndarray        # (K, 3)

    def __post_init__(self):
        if np.any(self.positions[:, 2] <= 0):
            raise ConfigError("all users must have z > 0")

    @property
    def K(self):
        return self.positions.shape[0]


def place_users(config: ScenarioConfig, seed=None) -> UserSet:
    """Drop K users uniformly over the service box.

    Draw order (documented for reproducibility): per user, three uniforms
    in [0,1) mapped to x (width), z (depth), and a reserved height draw;
    user height is fixed at mid-surface.
    """
    rng = np.random.default_rng(config.rng_seed if seed is None else seed)
    y_user = config.surface_height / 2.0
    pos = np.empty((config.num_users, 3))
    for k in range(config.num_users):
        u = rng.random(3)
        pos[k, 0] = (u[0] - 0.5) * config.service_width
        pos[k, 2] = config.service_standoff + u[1] * config.service_depth
        pos[k, 1] = y_user               # u[2] reserved for height models
    return UserSet(positions=pos)


def los_gain(user, antenna, wavelength):
    """Near-field LOS channel coefficient between one user and one antenna.

    h = sqrt(z) / (2 sqrt(pi) d^{3/2}) * exp(-2 pi j d / lambda), with d
    the Euclidean user-antenna distance.
    """
    xk, yk, zk = user
    x, y = antenna
    d = np.sqrt(zk ** 2 + (xk - x) ** 2 + (yk - y) ** 2)
    return np.sqrt(zk) / (2.0 * np.sqrt(np.pi) * d ** 1.5) * np.exp(-2j * np.pi * d / wavelength)


@dataclass(frozen=True)
class ChannelMatrix:
    """Normalized M x K channel with ||H||_F^2 = M K."""

    H: np.ndarray
    raw_H: np.ndarray
    scale: float

    @property
    def M(self):
        return self.H.shape[0]

    @property
    def K(self):
        return self.H.shape[1]


def _raw_channel(positions, users, wavelength):
    x = positions[:, 0][:, None]
    y = positions[:, 1][:, None]
    xk = users[:, 0][None, :]
    yk = users[:, 1][None, :]
    zk = users[:, 2][None, :]
    d = np.sqrt(zk ** 2 + (xk - x) ** 2 + (yk - y) ** 2)
    return np.sqrt(zk) / (2.0 * np.sqrt(np.pi) * d ** 1.5) * np.exp(-2j * np.pi * d / wavelength)


def channel_matrix(surface: SurfaceLayout, users: UserSet, wavelength) -> ChannelMatrix:
    """Evaluate the LOS channel on the full grid and normalize its power."""
    raw = _raw_channel(surface.positions, users.positions, wavelength)
    fro = np.linalg.norm(raw)
    if fro == 0 or not np.isfinite(fro):
        raise NumericalError("degenerate raw channel (zero or non-finite norm)")
    M, K = raw.shape
    scale = np.sqrt(M * K) / fro
    return ChannelMatrix(H=scale * raw, raw_H=raw, scale=float(scale))


def panel_channel(channel: ChannelMatrix, surface: SurfaceLayout, i):
    """Row slice of H seen by panel i (Mp x K)."""
    if not 0 <= i < surface.P:
        raise ConfigError(f"panel index {i} out of range [0, {surface.P})")
    return channel.H[surface.panel_rows[i]]


def captured_power_fraction(user, width, height, wavelength):
    """Fraction of a user's radiated power impinging on a rectangular surface.

    Riemann sum of |h|^2 over a half-wavelength grid centered at the
    origin, cell area (lambda/2)^2; the infinite-surface limit is 1/2.
    """
    pitch = wavelength / 2.0
    nx = int(round(width / pitch))
    ny = int(round(height / pitch))
    x = (np.arange(nx) + 0.5) * pitch - width / 2.0
    y = (np.arange(ny) + 0.5) * pitch - height / 2.0
    xk, yk, zk = user
    d2 = zk ** 2 + (xk - x[None, :]) ** 2 + (yk - y[:, None]) ** 2
    # |h|^2 = z / (4 pi d^3)
    power = zk / (4.0 * np.pi * d2 ** 1.5)
    return float(np.sum(power) * pitch ** 2)


def estimate_antenna_count(height, width, wavelength):
    """Floor-to-grid antenna count for surfaces that need not tile exactly."""
    pitch = wavelength / 2.0
    return int(height / pitch) * int(width / pitch)
