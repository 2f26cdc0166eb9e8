"""Workload definitions shared by protocol-level and detailed hosts."""

from __future__ import annotations

import zlib
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from ..adapters.codec import ETH_MAX, ETH_MIN
from ..errors import ConfigError
from ..simtime import SEC, parse_time

ROLES = ("client", "server", "bulk", "sink")


@dataclass(frozen=True)
class AppSpec:
    """What a host runs.

    ``client`` sends requests to ``target`` and measures response latency;
    ``server`` answers after ``service_time`` (0 = ideal); ``bulk`` streams
    one-way packets of ``request_size`` bytes to ``target``; ``sink`` only
    receives.
    """

    role: str
    target: str | None = None
    request_size: int = 128
    response_size: int = 128
    rate: float = 1000.0
    arrival: str = "fixed"
    key_dist: str = "uniform"
    zipf_s: float = 1.8
    keys: int = 1000
    write_fraction: float = 0.0
    service_time: int = 0
    start: int = 0

    def __post_init__(self):
        object.__setattr__(self, "service_time", parse_time(self.service_time))
        object.__setattr__(self, "start", parse_time(self.start))
        if self.role not in ROLES:
            raise ConfigError(f"unknown app role {self.role!r}; expected one of {ROLES}")
        if self.role in ("client", "bulk"):
            if not self.target:
                raise ConfigError(f"{self.role} app needs a target host")
            if not self.rate or self.rate <= 0:
                raise ConfigError(f"offered load must be positive, got {self.rate!r}")
        if self.arrival not in ("fixed", "poisson"):
            raise ConfigError(f"unknown arrival process {self.arrival!r}")
        if self.key_dist not in ("uniform", "zipf"):
            raise ConfigError(f"unknown key distribution {self.key_dist!r}")
        if not 0.0 <= self.write_fraction <= 1.0:
            raise ConfigError(f"write fraction {self.write_fraction} outside [0, 1]")
        if self.keys < 1:
            raise ConfigError("key space must hold at least one key")
        for name in ("request_size", "response_size"):
            v = getattr(self, name)
            if not ETH_MIN <= v <= ETH_MAX:
                raise ConfigError(f"{name} {v} outside [{ETH_MIN}, {ETH_MAX}] bytes")

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v != getattr(_DEFAULTS, k, object()) or k == "role"}

    @classmethod
    def from_dict(cls, d: dict) -> "AppSpec":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown app fields: {sorted(unknown)}")
        return cls(**d)


_DEFAULTS = AppSpec("sink")


def app_key(host_id: str) -> int:
    return zlib.crc32(host_id.encode())


def make_rng(seed: int, host_id: str) -> np.random.Generator:
    """Counter-based generator keyed by (global seed, app identity)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, app_key(host_id)])))


class ZipfSampler:
    """Bounded Zipf over ranks ``1..n`` with exponent ``s``; draws return 0-based keys."""

    def __init__(self, s: float, n: int):
        ranks = np.arange(1, n + 1, dtype=float)
        w = ranks ** -s
        self.pmf = w / w.sum()
        self.cdf = np.cumsum(self.pmf)
        self.cdf[-1] = 1.0

    def draw(self, rng: np.random.Generator) -> int:
        return int(np.searchsorted(self.cdf, rng.random(), side="right"))


class Workload:
    """Per-app generator of request parameters and inter-arrival gaps."""

    def __init__(self, spec: AppSpec, seed: int, host_id: str):
        self.spec = spec
        self.rng = make_rng(seed, host_id)
        self._zipf = ZipfSampler(spec.zipf_s, spec.keys) if spec.key_dist == "zipf" else None
        self._interval = Fraction(SEC) / Fraction(str(spec.rate)) if spec.rate else None
        self._k = 0
        self._next = spec.start

    def next_request(self) -> tuple[int, int, bool]:
        """Return ``(issue time, key, is_write)`` for the next request."""
        t = self._next
        rng = self.rng
        key = self._zipf.draw(rng) if self._zipf is not None else int(rng.integers(self.spec.keys))
        is_write = bool(rng.random() < self.spec.write_fraction) if self.spec.write_fraction else False
        self._k += 1
        if self.spec.arrival == "fixed":
            self._next = self.spec.start + int(self._k * self._interval)
        else:
            self._next = t + max(1, int(rng.exponential(float(self._interval))))
        return t, key, is_write
