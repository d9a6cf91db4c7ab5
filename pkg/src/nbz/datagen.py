"""Synthetic snapshot generators.

Two profiles reproduce the statistical fingerprints of the reference
data sets rather than their physics:

* hacc-like: xx and yy rise monotonically across the whole index range
  with small jitter (lag-1 autocorrelation > 0.999), zz sweeps the box
  periodically with a jittered cycle of 500..1200 particles, velocities
  follow a stationary AR(1) with coefficient 0.92;
* amdf-like: coordinates mix a slow spatial wander with strong
  pointwise jitter (lag-1 autocorrelation lands near 0.72), velocities
  are i.i.d. Gaussian (autocorrelation ~ 0).

Everything is deterministic given (profile, n, seed), with per-field
seed derivation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels as K
from .errors import ValidationError
from .model import ParticleSnapshot


class Profile(enum.Enum):
    HACC_LIKE = "hacc"
    AMDF_LIKE = "amdf"


@dataclass(frozen=True)
class GeneratorConfig:
    profile: Profile
    n: int
    seed: int = 0
    box_size: float = 128.0
    velocity_scale: float = 300.0

    def __post_init__(self):
        if self.n < 0:
            raise ValidationError("n must be >= 0")
        if self.box_size <= 0 or self.velocity_scale <= 0:
            raise ValidationError("scales must be positive")


_PROFILE_TAG = {Profile.HACC_LIKE: 101, Profile.AMDF_LIKE: 202}


def _rng(config: GeneratorConfig, field_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(
        entropy=[_PROFILE_TAG[config.profile], config.seed, field_index])
    return np.random.Generator(np.random.PCG64(ss))


def _ar1(rng: np.random.Generator, n: int, rho: float, sd: float) -> np.ndarray:
    """Stationary AR(1) series with the given lag-1 coefficient and sd."""
    eps = rng.standard_normal(n)
    if n == 0:
        return eps
    eps *= sd * math.sqrt(1.0 - rho * rho)
    eps[0] = eps[0] / math.sqrt(1.0 - rho * rho)
    out = np.empty(n, np.float64)
    K.ar1_filter(eps, rho, out)
    return out


def _ramp_with_noise(rng: np.random.Generator, n: int, box: float,
                     noise_sd: float) -> np.ndarray:
    base = box * np.arange(n, dtype=np.float64) / max(n, 1)
    return base + rng.standard_normal(n) * noise_sd


def _sawtooth(rng: np.random.Generator, n: int, box: float,
              noise_sd: float) -> np.ndarray:
    if n == 0:
        return np.zeros(0)
    pieces = []
    total = 0
    while total < n:
        period = int(rng.integers(500, 1201))
        pieces.append(box * np.arange(period, dtype=np.float64) / period)
        total += period
    saw = np.concatenate(pieces)[:n]
    return saw + rng.standard_normal(n) * noise_sd


def _wander_with_jitter(rng: np.random.Generator, n: int, box: float,
                        target_autocorr: float, wander_rho: float = 0.999,
                        spread: float = 0.125) -> np.ndarray:
    """Slow AR(1) spatial wander plus i.i.d. jitter, mixed so the lag-1
    autocorrelation of the sum hits the target; clipped to [0, box]."""
    total_sd = spread * box
    frac = target_autocorr / wander_rho  # wander share of the variance
    a = total_sd * math.sqrt(frac)
    b = total_sd * math.sqrt(1.0 - frac)
    wander = _ar1(rng, n, wander_rho, a)
    jitter = rng.standard_normal(n) * b
    return np.clip(0.5 * box + wander + jitter, 0.0, box)


def _hacc_like(config: GeneratorConfig) -> ParticleSnapshot:
    n, box, vs = config.n, config.box_size, config.velocity_scale
    xx = _ramp_with_noise(_rng(config, 0), n, box, 0.001 * box)
    yy = _ramp_with_noise(_rng(config, 1), n, box, 0.003 * box)
    zz = _sawtooth(_rng(config, 2), n, box, 0.002 * box)
    vels = [_ar1(_rng(config, 3 + i), n, 0.92, vs) for i in range(3)]
    return ParticleSnapshot(xx, yy, zz, *vels)


def _amdf_like(config: GeneratorConfig) -> ParticleSnapshot:
    n, box, vs = config.n, config.box_size, config.velocity_scale
    xx = _wander_with_jitter(_rng(config, 0), n, box, 0.73)
    yy = _wander_with_jitter(_rng(config, 1), n, box, 0.72)
    zz = _wander_with_jitter(_rng(config, 2), n, box, 0.65)
    vels = [_rng(config, 3 + i).standard_normal(n) * vs for i in range(3)]
    return ParticleSnapshot(xx, yy, zz, *vels)


def generate(config: GeneratorConfig) -> ParticleSnapshot:
    if config.profile is Profile.HACC_LIKE:
        return _hacc_like(config)
    return _amdf_like(config)


def generate_profile(profile: Profile, n: int, seed: int = 0,
                     box_size: Optional[float] = None) -> ParticleSnapshot:
    kwargs = {} if box_size is None else {"box_size": box_size}
    return generate(GeneratorConfig(profile=profile, n=n, seed=seed, **kwargs))
