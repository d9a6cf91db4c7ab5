"""Command-line front end.

Summary lines are machine-parseable space-separated key=value pairs.
Exit codes: 0 success, 1 operational error, 2 usage error.
"""

from __future__ import annotations

import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click

from . import io as nbz_io
from . import metrics as M
from .datagen import GeneratorConfig, Profile, generate
from .errors import NbzError
from .model import ErrorBoundSpec, FIELD_NAMES, field_stats
from .pipeline import (MODE_ALIASES, Mode, Settings, compress, decompress)
from .rindex import RIndexVariant

_RINDEX_CHOICES = {"coord": RIndexVariant.COORDINATE,
                   "vel": RIndexVariant.VELOCITY,
                   "coordvel": RIndexVariant.COORD_VELOCITY}


def _fail(message: str) -> "NoReturn":  # noqa: F821 - doc only
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _pick_mode(mode, best_speed, best_tradeoff, best_compression) -> Mode:
    aliases = [name for name, on in (("best-speed", best_speed),
                                     ("best-tradeoff", best_tradeoff),
                                     ("best-compression", best_compression)) if on]
    if mode is not None and aliases:
        raise click.UsageError("--mode conflicts with --best-* aliases")
    if len(aliases) > 1:
        raise click.UsageError("pick at most one --best-* alias")
    if aliases:
        return MODE_ALIASES[aliases[0]]
    if mode is None:
        raise click.UsageError("missing --mode (or a --best-* alias)")
    return Mode(mode)


def _pick_bound(eb_rel, eb_abs) -> ErrorBoundSpec:
    if (eb_rel is None) == (eb_abs is None):
        raise click.UsageError("exactly one of --eb-rel / --eb-abs is required")
    if eb_rel is not None:
        return ErrorBoundSpec.relative(eb_rel)
    return ErrorBoundSpec.absolute(eb_abs)


def _settings(segment_size, ignored_groups, intervals, rindex) -> Settings:
    return Settings(interval_count=intervals, segment_size=segment_size,
                    ignored_groups=ignored_groups,
                    rindex_variant=_RINDEX_CHOICES[rindex])


def _mode_options(f):
    f = click.option("--mode", "-m", type=click.Choice([m.value for m in Mode]),
                     default=None, help="Compression mode.")(f)
    f = click.option("--best-speed", is_flag=True, help="Alias for sz-lv.")(f)
    f = click.option("--best-tradeoff", is_flag=True, help="Alias for sz-lv-prx.")(f)
    f = click.option("--best-compression", is_flag=True,
                     help="Alias for sz-cpc2000.")(f)
    return f


def _codec_options(f):
    f = click.option("--segment-size", type=int, default=16384, show_default=True)(f)
    f = click.option("--ignored-groups", type=int, default=6, show_default=True)(f)
    f = click.option("--intervals", type=int, default=65536, show_default=True)(f)
    f = click.option("--rindex", type=click.Choice(sorted(_RINDEX_CHOICES)),
                     default="coord", show_default=True)(f)
    return f


def _bound_options(f):
    f = click.option("--eb-rel", type=float, default=None,
                     help="Value-range-relative error bound.")(f)
    f = click.option("--eb-abs", type=float, default=None,
                     help="Absolute error bound.")(f)
    return f


@click.group()
def main():
    """Error-bounded lossy compression for N-body particle snapshots."""


@main.command("compress")
@click.argument("input_prefix")
@click.argument("output", type=click.Path(dir_okay=False))
@_mode_options
@_bound_options
@_codec_options
@click.option("--emit-permutation", type=click.Path(dir_okay=False), default=None,
              help="Write the sort permutation sidecar (testing only).")
def cmd_compress(input_prefix, output, mode, best_speed, best_tradeoff,
                 best_compression, eb_rel, eb_abs, segment_size,
                 ignored_groups, intervals, rindex, emit_permutation):
    """Compress raw field files INPUT_PREFIX.{xx,yy,zz,vx,vy,vz} to OUTPUT."""
    picked = _pick_mode(mode, best_speed, best_tradeoff, best_compression)
    bound = _pick_bound(eb_rel, eb_abs)
    settings = _settings(segment_size, ignored_groups, intervals, rindex)
    try:
        snapshot = nbz_io.read_snapshot(input_prefix)
        t0 = time.perf_counter()
        result = compress(snapshot, picked, bound, settings)
        wire = result.archive.serialized()
        dt = time.perf_counter() - t0
        Path(output).write_bytes(wire)
        if emit_permutation is not None and result.order is not None:
            nbz_io.write_permutation(result.order, emit_permutation)
        ob = snapshot.original_bytes()
        ratio = "n/a" if ob == 0 else f"{ob / len(wire):.6g}"
        bit_rate = "n/a" if ob == 0 else f"{32.0 * len(wire) / ob:.6g}"
        rate = "n/a" if dt <= 0 else f"{ob / dt / 1e6:.6g}"
        click.echo(f"mode={picked.value} n={snapshot.n} bytes={len(wire)} "
                   f"ratio={ratio} bit_rate={bit_rate} compress_mb_s={rate}")
    except NbzError as exc:
        _fail(str(exc))


@main.command("decompress")
@click.argument("archive", type=click.Path(exists=True, dir_okay=False))
@click.argument("output_prefix")
def cmd_decompress(archive, output_prefix):
    """Decompress ARCHIVE to raw field files OUTPUT_PREFIX.*"""
    try:
        arch = nbz_io.read_archive(archive)
        t0 = time.perf_counter()
        snapshot = decompress(arch)
        dt = time.perf_counter() - t0
        nbz_io.write_snapshot(snapshot, output_prefix)
        ob = snapshot.original_bytes()
        rate = "n/a" if dt <= 0 else f"{ob / dt / 1e6:.6g}"
        click.echo(f"mode={arch.mode.value} n={snapshot.n} "
                   f"decompress_mb_s={rate}")
    except NbzError as exc:
        _fail(str(exc))


@main.command("analyze")
@click.argument("input_prefix")
@click.option("--csv", "as_csv", is_flag=True, help="CSV instead of a table.")
def cmd_analyze(input_prefix, as_csv):
    """Per-field min/max/range/lag-1 autocorrelation."""
    try:
        snapshot = nbz_io.read_snapshot(input_prefix)
    except NbzError as exc:
        _fail(str(exc))
    rows = []
    for name in FIELD_NAMES:
        arr = getattr(snapshot, name)
        if arr.size == 0:
            rows.append((name, "n/a", "n/a", "n/a", "undefined"))
            continue
        st = field_stats(arr)
        ac = "undefined" if st.lag1_autocorr is None else f"{st.lag1_autocorr:.7g}"
        rows.append((name, f"{st.min:.7g}", f"{st.max:.7g}",
                     f"{st.range:.7g}", ac))
    if as_csv:
        click.echo("field,min,max,range,lag1_autocorr")
        for r in rows:
            click.echo(",".join(r))
    else:
        click.echo(f"{'field':>6} {'min':>14} {'max':>14} {'range':>14} "
                   f"{'lag1_autocorr':>14}")
        for r in rows:
            click.echo(f"{r[0]:>6} {r[1]:>14} {r[2]:>14} {r[3]:>14} {r[4]:>14}")


@main.command("sweep")
@click.argument("input_prefix")
@_mode_options
@_codec_options
@click.option("--bounds", required=True,
              help="Comma-separated list of bound values.")
@click.option("--bound-kind", type=click.Choice(["rel", "abs"]), default="rel",
              show_default=True)
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None,
              help="Write CSV here instead of stdout.")
def cmd_sweep(input_prefix, mode, best_speed, best_tradeoff, best_compression,
              segment_size, ignored_groups, intervals, rindex, bounds,
              bound_kind, output):
    """Rate-distortion sweep: one CSV row per bound."""
    picked = _pick_mode(mode, best_speed, best_tradeoff, best_compression)
    settings = _settings(segment_size, ignored_groups, intervals, rindex)
    try:
        values = [float(tok) for tok in bounds.split(",") if tok.strip()]
    except ValueError as exc:
        raise click.UsageError(f"bad --bounds list: {exc}")
    if not values:
        raise click.UsageError("--bounds list is empty")
    maker = (ErrorBoundSpec.relative if bound_kind == "rel"
             else ErrorBoundSpec.absolute)
    try:
        snapshot = nbz_io.read_snapshot(input_prefix)
        points, failures = M.rd_sweep(snapshot, picked,
                                      [maker(v) for v in values], settings)
    except NbzError as exc:
        _fail(str(exc))
    lines = M.sweep_csv(points)
    if output:
        Path(output).write_text("\n".join(lines) + "\n")
    else:
        for line in lines:
            click.echo(line)
    for bound, message in failures:
        click.echo(f"warning: bound {bound:g} failed: {message}", err=True)
    if failures and not points:
        sys.exit(1)


@main.command("gen")
@click.argument("output_prefix")
@click.option("--profile", type=click.Choice([p.value for p in Profile]),
              required=True)
@click.option("--n", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--box-size", type=float, default=128.0, show_default=True)
def cmd_gen(output_prefix, profile, n, seed, box_size):
    """Generate a synthetic snapshot as raw field files."""
    try:
        config = GeneratorConfig(profile=Profile(profile), n=n, seed=seed,
                                 box_size=box_size)
        snapshot = generate(config)
        nbz_io.write_snapshot(snapshot, output_prefix)
        click.echo(f"profile={profile} n={n} seed={seed} prefix={output_prefix}")
    except NbzError as exc:
        _fail(str(exc))


@main.command("batch")
@click.argument("input_dir", type=click.Path(exists=True, file_okay=False))
@click.argument("output_dir", type=click.Path(file_okay=False))
@_mode_options
@_bound_options
@_codec_options
@click.option("--threads", type=int, default=None,
              help="Worker threads (default: env NBZ_THREADS or 1).")
def cmd_batch(input_dir, output_dir, mode, best_speed, best_tradeoff,
              best_compression, eb_rel, eb_abs, segment_size, ignored_groups,
              intervals, rindex, threads):
    """Compress every snapshot prefix found in INPUT_DIR (one .nbz each)."""
    picked = _pick_mode(mode, best_speed, best_tradeoff, best_compression)
    bound = _pick_bound(eb_rel, eb_abs)
    settings = _settings(segment_size, ignored_groups, intervals, rindex)
    if threads is None:
        threads = int(os.environ.get("NBZ_THREADS", "1"))
    if threads < 1:
        raise click.UsageError("--threads must be >= 1")
    prefixes = sorted(p.with_suffix("") for p in Path(input_dir).glob("*.xx"))
    if not prefixes:
        click.echo("warning: no snapshots found (*.xx)", err=True)
        return
    Path(output_dir).mkdir(parents=True, exist_ok=True)

    def work(prefix: Path):
        snapshot = nbz_io.read_snapshot(prefix)
        t0 = time.perf_counter()
        result = compress(snapshot, picked, bound, settings)
        wire = result.archive.serialized()
        dt = time.perf_counter() - t0
        out = Path(output_dir) / (prefix.name + ".nbz")
        out.write_bytes(wire)
        return snapshot.original_bytes(), len(wire), dt

    t_all = time.perf_counter()
    failures = 0
    total_in = total_out = 0
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = {pool.submit(work, p): p for p in prefixes}
        for fut, prefix in futures.items():
            try:
                ob, cb, dt = fut.result()
            except NbzError as exc:
                failures += 1
                click.echo(f"file={prefix.name} error={exc}", err=True)
                continue
            total_in += ob
            total_out += cb
            ratio = "n/a" if ob == 0 else f"{ob / cb:.6g}"
            click.echo(f"file={prefix.name} n={ob // 24} ratio={ratio}")
    wall = time.perf_counter() - t_all
    agg_ratio = "n/a" if total_out == 0 else f"{total_in / max(total_out, 1):.6g}"
    click.echo(f"files={len(prefixes)} failed={failures} ratio={agg_ratio} "
               f"throughput_mb_s={total_in / max(wall, 1e-9) / 1e6:.6g}")
    if failures:
        sys.exit(1)


if __name__ == "__main__":
    main()
