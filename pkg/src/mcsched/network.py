"""Synthetic multi-cloud network instances, SINR and per-association utility.

Array conventions: power is indexed ``[c, b, z]`` and channel gains /
utilities are indexed ``[c, u, b, z]`` (cloud, user, base-station, power-zone),
all zero-based.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .errors import ConfigurationError, UsageError

INSTANCE_FORMAT = "mcsched.instance"
INSTANCE_VERSION = 1

_SPEED_OF_LIGHT = 299_792_458.0

# spawn_key tags for the independent random streams of generate_instance
_STREAM_BS = 1
_STREAM_USER = 2
_STREAM_LINK = 3


@dataclass(frozen=True)
class Dimensions:
    """Network size: ``clouds`` (C), ``bs_per_cloud`` (B), ``pzs_per_bs`` (Z), ``users`` (U)."""

    clouds: int
    bs_per_cloud: int
    pzs_per_bs: int
    users: int

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise UsageError(f"{f.name} must be a positive integer, got {value!r}")
            object.__setattr__(self, f.name, int(value))

    @property
    def total_pzs(self) -> int:
        """Z_tot = C * B * Z, the number of power zones in the network."""
        return self.clouds * self.bs_per_cloud * self.pzs_per_bs

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.clouds, self.users, self.bs_per_cloud, self.pzs_per_bs)

    def is_schedulable(self) -> bool:
        """True when U >= C * B, the condition for a complete schedule to exist."""
        return self.users >= self.clouds * self.bs_per_cloud

    def check_index(self, c: int, u: int, b: int, z: int) -> None:
        for name, value, bound in (
            ("cloud", c, self.clouds),
            ("user", u, self.users),
            ("bs", b, self.bs_per_cloud),
            ("pz", z, self.pzs_per_bs),
        ):
            if not 0 <= value < bound:
                raise UsageError(f"{name} index {value} out of range [0, {bound})")


@dataclass(frozen=True)
class ChannelParams:
    """Channel and layout parameters; defaults follow the simulated deployment."""

    cell_distance_m: float = 500.0
    psd_dbm_hz: float = -42.60
    noise_dbm_hz: float = -168.60
    sinr_gap_db: float = 0.0
    bandwidth_hz: float = 10e6
    pathloss_exponent: float = 3.5
    shadowing_db: float = 8.0
    reference_distance_m: float = 100.0
    carrier_hz: float = 1.9e9
    min_distance_m: float = 10.0
    users_per_cloud: bool = False

    def __post_init__(self) -> None:
        positive = ("cell_distance_m", "bandwidth_hz", "pathloss_exponent",
                    "reference_distance_m", "carrier_hz", "min_distance_m")
        for name in positive:
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ConfigurationError(f"{name} must be positive and finite, got {value!r}")
        if not math.isfinite(self.shadowing_db) or self.shadowing_db < 0:
            raise ConfigurationError(f"shadowing_db must be >= 0, got {self.shadowing_db!r}")
        if not math.isfinite(self.sinr_gap_db) or self.sinr_gap_db < 0:
            raise ConfigurationError(f"sinr_gap_db must be >= 0 (gap >= 1), got {self.sinr_gap_db!r}")
        for name in ("psd_dbm_hz", "noise_dbm_hz"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(f"{name} must be finite")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "ChannelParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown channel parameter(s): {sorted(unknown)}")
        try:
            return cls(**{k: (bool(v) if k == "users_per_cloud" else float(v)) for k, v in data.items()})
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(str(exc)) from exc

    def to_mapping(self) -> dict[str, Any]:
        return asdict(self)

    @property
    def sinr_gap(self) -> float:
        return 10.0 ** (self.sinr_gap_db / 10.0)

    def pz_power_w(self, pzs_per_bs: int) -> float:
        """Transmit power of one power zone: the PSD over a ``bandwidth / Z`` block."""
        return _dbm_to_w(self.psd_dbm_hz) * self.bandwidth_hz / pzs_per_bs

    def pz_noise_w(self, pzs_per_bs: int) -> float:
        return _dbm_to_w(self.noise_dbm_hz) * self.bandwidth_hz / pzs_per_bs

    def pathloss_db(self, distance_m: np.ndarray) -> np.ndarray:
        """Log-distance path loss anchored at free-space loss at the reference distance."""
        d = np.maximum(np.asarray(distance_m, dtype=float), self.min_distance_m)
        wavelength = _SPEED_OF_LIGHT / self.carrier_hz
        anchor = 20.0 * math.log10(4.0 * math.pi * self.reference_distance_m / wavelength)
        return anchor + 10.0 * self.pathloss_exponent * np.log10(d / self.reference_distance_m)


def load_config(path: str | Path) -> tuple[ChannelParams, int | None]:
    """Read channel parameters (and an optional ``seed``) from a YAML or JSON file."""
    import yaml

    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: expected a mapping at top level")
    data = dict(data)
    seed = data.pop("seed", None)
    return ChannelParams.from_mapping(data), (None if seed is None else int(seed))


def _dbm_to_w(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class NetworkInstance:
    """An immutable network snapshot: powers, channel gains, noise and geometry."""

    dims: Dimensions
    power: np.ndarray
    gain: np.ndarray
    noise_variance: float
    sinr_gap: float = 1.0
    bs_xy: np.ndarray | None = None
    user_xy: np.ndarray | None = None
    seed: int | None = None
    params: ChannelParams | None = field(default=None)

    def __post_init__(self) -> None:
        d = self.dims
        power = np.asarray(self.power, dtype=float)
        gain = np.asarray(self.gain, dtype=complex)
        if power.shape != (d.clouds, d.bs_per_cloud, d.pzs_per_bs):
            raise UsageError(f"power shape {power.shape} does not match {d}")
        if gain.shape != d.shape:
            raise UsageError(f"gain shape {gain.shape} does not match {d}")
        if not np.all(np.isfinite(power)) or np.any(power <= 0):
            raise UsageError("all PZ powers must be positive and finite")
        if not np.all(np.isfinite(gain)):
            raise UsageError("channel gains must be finite")
        if not math.isfinite(self.noise_variance) or self.noise_variance <= 0:
            raise UsageError("noise variance must be positive")
        if not math.isfinite(self.sinr_gap) or self.sinr_gap < 1:
            raise UsageError("SINR gap must be >= 1 (linear)")
        object.__setattr__(self, "power", _readonly(power))
        object.__setattr__(self, "gain", _readonly(gain))
        object.__setattr__(self, "noise_variance", float(self.noise_variance))
        object.__setattr__(self, "sinr_gap", float(self.sinr_gap))
        for name in ("bs_xy", "user_xy"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, _readonly(np.asarray(value, dtype=float)))

    def received_power(self) -> np.ndarray:
        """P[c, b, z] * |h[c, u, b, z]|^2 for every association, shape (C, U, B, Z)."""
        return self.power[:, None, :, :] * np.abs(self.gain) ** 2

    def to_dict(self) -> dict[str, Any]:
        return {
            "format": INSTANCE_FORMAT,
            "version": INSTANCE_VERSION,
            "dims": asdict(self.dims),
            "noise_variance": self.noise_variance,
            "sinr_gap": self.sinr_gap,
            "seed": self.seed,
            "params": None if self.params is None else self.params.to_mapping(),
            "power": self.power.tolist(),
            "gain_re": self.gain.real.tolist(),
            "gain_im": self.gain.imag.tolist(),
            "bs_xy": None if self.bs_xy is None else self.bs_xy.tolist(),
            "user_xy": None if self.user_xy is None else self.user_xy.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "NetworkInstance":
        if data.get("format") != INSTANCE_FORMAT:
            raise UsageError(f"not an instance file (format={data.get('format')!r})")
        if data.get("version") != INSTANCE_VERSION:
            raise UsageError(f"unsupported instance version {data.get('version')!r}")
        params = data.get("params")
        return cls(
            dims=Dimensions(**data["dims"]),
            power=np.array(data["power"], dtype=float),
            gain=np.array(data["gain_re"], dtype=float) + 1j * np.array(data["gain_im"], dtype=float),
            noise_variance=data["noise_variance"],
            sinr_gap=data["sinr_gap"],
            bs_xy=None if data.get("bs_xy") is None else np.array(data["bs_xy"]),
            user_xy=None if data.get("user_xy") is None else np.array(data["user_xy"]),
            seed=data.get("seed"),
            params=None if params is None else ChannelParams.from_mapping(params),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path: str | Path) -> "NetworkInstance":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True, eq=False)
class UtilityTensor:
    """Benefit pi[c, u, b, z] of every association, in bits/s/Hz for sum-rate."""

    pi: np.ndarray

    def __post_init__(self) -> None:
        pi = np.asarray(self.pi, dtype=float)
        if pi.ndim != 4:
            raise UsageError(f"utility tensor must be 4-D (C, U, B, Z), got shape {pi.shape}")
        if not np.all(np.isfinite(pi)):
            raise UsageError("utility tensor contains non-finite values")
        object.__setattr__(self, "pi", _readonly(pi))

    @property
    def dims(self) -> Dimensions:
        c, u, b, z = self.pi.shape
        return Dimensions(clouds=c, bs_per_cloud=b, pzs_per_bs=z, users=u)

    def __getitem__(self, key):
        return self.pi[key]

    def value(self, c: int, u: int, b: int, z: int) -> float:
        return float(self.pi[c, u, b, z])


def compute_sinr(inst: NetworkInstance, c: int, u: int, b: int, z: int) -> float:
    """SINR of user ``u`` on PZ ``z`` of BS ``b`` in cloud ``c``.

    Interference is collected from every other (cloud, BS) pair transmitting on
    the same PZ index, clouds included.
    """
    inst.dims.check_index(c, u, b, z)
    rx = inst.power[:, :, z] * np.abs(inst.gain[:, u, :, z]) ** 2
    signal = float(rx[c, b])
    interference = math.fsum(
        float(rx[cc, bb])
        for cc in range(inst.dims.clouds)
        for bb in range(inst.dims.bs_per_cloud)
        if (cc, bb) != (c, b)
    )
    return signal / (inst.sinr_gap * (inst.noise_variance + interference))


def sinr_tensor(inst: NetworkInstance) -> np.ndarray:
    """Vectorised SINR for every association, shape (C, U, B, Z)."""
    d = inst.dims
    rx = inst.received_power()  # (C, U, B, Z)
    n_tx = d.clouds * d.bs_per_cloud
    flat = rx.transpose(1, 3, 0, 2).reshape(d.users, d.pzs_per_bs, n_tx)
    # explicit exclusive sum; "total - own" loses precision when one link dominates
    others = np.ones((n_tx, n_tx)) - np.eye(n_tx)
    interference = flat @ others
    sinr = flat / (inst.sinr_gap * (inst.noise_variance + interference))
    return sinr.reshape(d.users, d.pzs_per_bs, d.clouds, d.bs_per_cloud).transpose(2, 0, 3, 1)


def compute_utilities(inst: NetworkInstance) -> UtilityTensor:
    """Sum-rate utility log2(1 + SINR) for every association."""
    return UtilityTensor(np.log2(1.0 + sinr_tensor(inst)))


def hex_centers(n: int, spacing: float) -> np.ndarray:
    """First ``n`` cell centres of a hexagonal grid, ring by ring from the origin."""
    directions = [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)]
    axial = [(0, 0)]
    ring = 1
    while len(axial) < n:
        q, r = -ring, ring
        for dq, dr in directions:
            for _ in range(ring):
                axial.append((q, r))
                q, r = q + dq, r + dr
        ring += 1
    axial = axial[:n]
    xy = [(spacing * (q + r / 2.0), spacing * (r * math.sqrt(3.0) / 2.0)) for q, r in axial]
    return np.array(xy, dtype=float).reshape(n, 2)


_HEX_NORMALS = np.array([[math.cos(a), math.sin(a)] for a in (0.0, math.pi / 3, 2 * math.pi / 3)])


def _in_cell(point: np.ndarray, spacing: float) -> bool:
    return bool(np.all(np.abs(_HEX_NORMALS @ point) <= spacing / 2.0))


def _uniform_in_cell(rng: np.random.Generator, center: np.ndarray, spacing: float) -> np.ndarray:
    radius = spacing / math.sqrt(3.0)  # circumradius
    while True:
        p = rng.uniform(-radius, radius, size=2)
        if _in_cell(p, spacing):
            return center + p


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def generate_instance(seed: int, dims: Dimensions, params: ChannelParams | None = None) -> NetworkInstance:
    """Draw a random network instance, deterministic in ``(seed, dims, params)``.

    Every BS, user and (cloud, user, BS) link has its own random stream keyed by
    its indices, so enlarging any dimension keeps the already-drawn entities
    unchanged (common random numbers across parameter sweeps).
    """
    params = params or ChannelParams()
    if seed < 0:
        raise ConfigurationError("seed must be non-negative")
    C, B, Z, U = dims.clouds, dims.bs_per_cloud, dims.pzs_per_bs, dims.users
    spacing = params.cell_distance_m
    centers = hex_centers(C, spacing)

    bs_xy = np.empty((C, B, 2))
    for c in range(C):
        for b in range(B):
            bs_xy[c, b] = _uniform_in_cell(_stream(seed, _STREAM_BS, c, b), centers[c], spacing)

    user_xy = np.empty((U, 2))
    for u in range(U):
        rng = _stream(seed, _STREAM_USER, u)
        cell = (u * C) // U if params.users_per_cloud else int(rng.integers(C))
        user_xy[u] = _uniform_in_cell(rng, centers[cell], spacing)

    dist = np.linalg.norm(bs_xy[:, None, :, :] - user_xy[None, :, None, :], axis=-1)  # (C, U, B)
    pl_db = params.pathloss_db(dist)
    gain = np.empty((C, U, B, Z), dtype=complex)
    for c in range(C):
        for u in range(U):
            for b in range(B):
                rng = _stream(seed, _STREAM_LINK, c, u, b)
                # per PZ: shadowing draw, then real and imaginary fading parts
                draws = rng.normal(size=(Z, 3))
                shadow = params.shadowing_db * draws[:, 0]
                fading = draws[:, 1:] / math.sqrt(2.0)
                amplitude = 10.0 ** (-(pl_db[c, u, b] + shadow) / 20.0)
                gain[c, u, b] = amplitude * (fading[:, 0] + 1j * fading[:, 1])

    return NetworkInstance(
        dims=dims,
        power=np.full((C, B, Z), params.pz_power_w(Z)),
        gain=gain,
        noise_variance=params.pz_noise_w(Z),
        sinr_gap=params.sinr_gap,
        bs_xy=bs_xy,
        user_xy=user_xy,
        seed=seed,
        params=params,
    )
