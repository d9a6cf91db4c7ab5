"""Evaluation math: pointwise errors, NRMSE, PSNR, rates, rate-distortion
sweeps.

NRMSE follows sqrt(sum(e_i^2)/N) / range(original).  PSNR is
-20*log10(NRMSE), so smaller distortion scores higher; NRMSE of zero is
reported as +inf.  Bit rate is defined as 32/ratio for single-precision
inputs, so bit_rate * ratio == 32 holds by construction.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import DegenerateRangeError, NbzError, ValidationError
from .model import FIELD_NAMES, ErrorBoundSpec, ParticleSnapshot, field_range
from .pipeline import (Archive, Bounds, CompressResult, Mode, Settings,
                       DEFAULT_SETTINGS, compress, decompress)


def max_abs_error(orig: np.ndarray, recon: np.ndarray) -> float:
    if orig.shape != recon.shape:
        raise ValidationError("arrays must have equal shape")
    if orig.size == 0:
        return 0.0
    return float(np.max(np.abs(orig.astype(np.float64) - recon.astype(np.float64))))


def nrmse(orig: np.ndarray, recon: np.ndarray) -> float:
    if orig.shape != recon.shape:
        raise ValidationError("arrays must have equal shape")
    if orig.size == 0:
        raise ValidationError("NRMSE of empty arrays is undefined")
    rng = field_range(orig)
    if rng == 0.0:
        raise DegenerateRangeError("NRMSE undefined: original has zero range")
    e = orig.astype(np.float64) - recon.astype(np.float64)
    return float(np.sqrt(np.mean(e * e)) / rng)


def psnr(nrmse_value: float) -> float:
    if nrmse_value < 0:
        raise ValidationError("NRMSE cannot be negative")
    if nrmse_value == 0.0:
        return math.inf
    return -20.0 * math.log10(nrmse_value)


def pooled_nrmse(values: Sequence[Optional[float]]) -> Optional[float]:
    """Root-mean of the defined per-field squared NRMSE values."""
    defined = [v for v in values if v is not None]
    if not defined:
        return None
    return float(math.sqrt(sum(v * v for v in defined) / len(defined)))


@dataclass(frozen=True)
class FieldDistortion:
    name: str
    max_abs_error: float
    nrmse: Optional[float]      # None when the field range is zero
    psnr: Optional[float]
    bound: Optional[float]      # resolved bound, None for constant fields


@dataclass(frozen=True)
class DistortionReport:
    mode: str
    n: int
    original_bytes: int
    compressed_bytes: int
    fields: Tuple[FieldDistortion, ...]
    overall_nrmse: Optional[float]
    compress_seconds: float
    decompress_seconds: float

    @property
    def ratio(self) -> Optional[float]:
        if self.original_bytes == 0:
            return None
        return self.original_bytes / self.compressed_bytes

    @property
    def bit_rate(self) -> Optional[float]:
        r = self.ratio
        return None if r is None else 32.0 / r

    @property
    def overall_psnr(self) -> Optional[float]:
        return None if self.overall_nrmse is None else psnr(self.overall_nrmse)

    @property
    def max_error(self) -> float:
        return max((f.max_abs_error for f in self.fields), default=0.0)

    @property
    def compress_rate(self) -> Optional[float]:
        if self.compress_seconds <= 0:
            return None
        return self.original_bytes / self.compress_seconds

    @property
    def decompress_rate(self) -> Optional[float]:
        if self.decompress_seconds <= 0:
            return None
        return self.original_bytes / self.decompress_seconds

    def summary_line(self) -> str:
        def fmt(v, spec="{:.6g}"):
            return "n/a" if v is None else spec.format(v)

        cr = self.compress_rate
        dr = self.decompress_rate
        parts = [
            f"mode={self.mode}",
            f"n={self.n}",
            f"ratio={fmt(self.ratio)}",
            f"bit_rate={fmt(self.bit_rate)}",
            f"psnr_db={fmt(self.overall_psnr)}",
            f"max_err={self.max_error:.6g}",
            f"compress_mb_s={fmt(None if cr is None else cr / 1e6)}",
            f"decompress_mb_s={fmt(None if dr is None else dr / 1e6)}",
        ]
        return " ".join(parts)

    def csv_rows(self) -> List[str]:
        rows = ["field,min_bound,max_abs_error,nrmse,psnr_db"]
        for f in self.fields:
            b = "" if f.bound is None else f"{f.bound:.9g}"
            nr = "" if f.nrmse is None else f"{f.nrmse:.9g}"
            ps = "" if f.psnr is None else f"{f.psnr:.6g}"
            rows.append(f"{f.name},{b},{f.max_abs_error:.9g},{nr},{ps}")
        return rows


def evaluate(matched_original: ParticleSnapshot, reconstructed: ParticleSnapshot,
             archive: Archive, compress_seconds: float = 0.0,
             decompress_seconds: float = 0.0) -> DistortionReport:
    """Distortion of a reconstruction against the position-matched original.

    For sorted modes the caller must pass the original in archive order
    (apply the sidecar permutation first).
    """
    if matched_original.n != reconstructed.n:
        raise ValidationError("snapshots must have equal length")
    fields = []
    per_field_nrmse: List[Optional[float]] = []
    for fi, name in enumerate(FIELD_NAMES):
        o = matched_original.field(fi)
        r = reconstructed.field(fi)
        err = max_abs_error(o, r)
        try:
            nr = nrmse(o, r) if o.size else None
        except DegenerateRangeError:
            nr = None
        bound = archive.bounds[fi] if archive.bounds[fi] > 0 else None
        fields.append(FieldDistortion(name=name, max_abs_error=err, nrmse=nr,
                                      psnr=None if nr is None else psnr(nr),
                                      bound=bound))
        per_field_nrmse.append(nr)
    return DistortionReport(
        mode=archive.mode.value, n=matched_original.n,
        original_bytes=matched_original.original_bytes(),
        compressed_bytes=archive.total_bytes(),
        fields=tuple(fields), overall_nrmse=pooled_nrmse(per_field_nrmse),
        compress_seconds=compress_seconds, decompress_seconds=decompress_seconds)


def run_mode(snapshot: ParticleSnapshot, mode: Mode, bounds: Bounds,
             settings: Settings = DEFAULT_SETTINGS,
             ) -> Tuple[CompressResult, ParticleSnapshot, DistortionReport]:
    """Compress, decompress and measure, returning everything."""
    t0 = time.perf_counter()
    result = compress(snapshot, mode, bounds, settings)
    result.archive.serialized()
    t1 = time.perf_counter()
    recon = decompress(result.archive)
    t2 = time.perf_counter()
    matched = snapshot
    if result.order is not None:
        matched = ParticleSnapshot(*(f[result.order] for f in snapshot.fields()))
    report = evaluate(matched, recon, result.archive,
                      compress_seconds=t1 - t0, decompress_seconds=t2 - t1)
    return result, recon, report


@dataclass(frozen=True)
class SweepPoint:
    bound_value: float
    ratio: Optional[float]
    bit_rate: Optional[float]
    psnr_db: Optional[float]
    max_error: float


def rd_sweep(snapshot: ParticleSnapshot, mode: Mode,
             bound_specs: Sequence[ErrorBoundSpec],
             settings: Settings = DEFAULT_SETTINGS,
             ) -> Tuple[List[SweepPoint], List[Tuple[float, str]]]:
    """One rate-distortion point per bound; failures are skipped and
    reported as (bound, message) pairs."""
    if not bound_specs:
        raise ValidationError("sweep needs at least one bound")
    points: List[SweepPoint] = []
    failures: List[Tuple[float, str]] = []
    for spec in bound_specs:
        try:
            _, _, report = run_mode(snapshot, mode, spec, settings)
        except NbzError as exc:
            failures.append((spec.value, str(exc)))
            continue
        points.append(SweepPoint(
            bound_value=spec.value, ratio=report.ratio,
            bit_rate=report.bit_rate, psnr_db=report.overall_psnr,
            max_error=report.max_error))
    return points, failures


def sweep_csv(points: Sequence[SweepPoint]) -> List[str]:
    rows = ["bound,ratio,bit_rate,psnr_db,max_err"]
    for p in points:
        ratio = "" if p.ratio is None else f"{p.ratio:.9g}"
        br = "" if p.bit_rate is None else f"{p.bit_rate:.9g}"
        ps = "" if p.psnr_db is None else f"{p.psnr_db:.6g}"
        rows.append(f"{p.bound_value:.9g},{ratio},{br},{ps},{p.max_error:.9g}")
    return rows
