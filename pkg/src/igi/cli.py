"""Command-line front end: ``igi simulate | reconstruct | variants | hbt | analyze | compare``.

Exit codes: 0 success, 2 configuration error, 3 data or format error,
4 fixed-point overflow.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time

import numpy as np

from . import oracles
from .analysis import (compare_reconstructions, growth_series, memory_report, pearson_r,
                       reconstruction_quality, write_csv, write_growth_csv, write_quality_csv)
from .config import ExperimentConfig, _parse_xt0, dump_config, load_config
from .engine import StreamingEngine, engine_run
from .errors import (ConfigError, DegenerateMaskError, FixedPointOverflow, FormatError,
                     InsufficientDataError, ShapeError)
from .masks import make_object_mask
from .pgm import to_display, write_pgm
from .recording import RecordingWriter, read_recording
from .simulate import iter_arm_blocks, simulate_arms
from .speckle import bucket_signals
from .stream import Algorithm, hbt_stream

log = logging.getLogger("igi")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_OVERFLOW = 4

RECORDING_NAME = "recording.igis"
# acquisition clock used for the elapsed column of snapshot logs
ACQUISITION_RATE_HZ = 500.0

RECONSTRUCT_ALGORITHMS = ("gi", "igi", "igi_s", "igi_i")
VARIANT_ALGORITHMS = ("igi_s", "igi_i")
HBT_ALGORITHMS = ("hbt", "hbt_igi")


def _report_rate(label: str, count: int, seconds: float) -> None:
    rate = count / seconds if seconds > 0 else float("inf")
    print(f"{label}: {count} measurements in {seconds:.3f} s, throughput {rate:.1f} measurements/s")


def write_image(directory: str, stem: str, values: np.ndarray, meta: dict) -> None:
    """8-bit P5 image plus a ``key=value`` sidecar holding the true value range."""
    codes, vmin, vmax = to_display(values, 8)
    write_pgm(os.path.join(directory, stem + ".pgm"), codes, 255)
    lines = dict(meta)
    lines.update({"height": values.shape[0], "width": values.shape[1],
                  "min": repr(vmin), "max": repr(vmax), "display_bits": 8})
    with open(os.path.join(directory, stem + ".meta"), "w") as f:
        for key, value in lines.items():
            f.write(f"{key}={value}\n")


def _rec_meta(rec) -> dict:
    meta = {"algorithm": rec.algorithm.value, "n_used": rec.n_used, "divisor": repr(rec.divisor)}
    for key, value in rec.meta.items():
        if key == "x_t0":
            value = f"{value[1]},{value[0]}"
        meta[key] = value
    return meta


def _recording_path(args, cfg: ExperimentConfig) -> str:
    return args.recording or os.path.join(cfg.out, RECORDING_NAME)


def cmd_simulate(cfg: ExperimentConfig, args) -> int:
    field = cfg.field()
    det = cfg.detector()
    mask = make_object_mask(cfg.mask_spec, cfg.height, cfg.width)
    os.makedirs(cfg.out, exist_ok=True)
    path = _recording_path(args, cfg)
    start = time.perf_counter()
    with RecordingWriter(path, cfg.height, cfg.width, cfg.measurements, det.quant_bits,
                         cfg.seed) as writer:
        for test, ref in iter_arm_blocks(field, det, cfg.measurements):
            writer.write(bucket_signals(test, mask), ref)
    elapsed = time.perf_counter() - start
    write_pgm(os.path.join(cfg.out, "mask.pgm"), (mask.transmissivity * 255).astype(np.int64))
    with open(os.path.join(cfg.out, "config.txt"), "w") as f:
        f.write(dump_config(cfg))
    print(f"wrote {path}")
    _report_rate("simulate", cfg.measurements, elapsed)
    return EXIT_OK


def _run_streaming(stream, algorithm, mode, cadence, directory, extra_meta=None):
    start = time.perf_counter()
    final, intermediates = engine_run(stream, algorithm, mode, cadence)
    elapsed = time.perf_counter() - start
    for snap in intermediates + [final]:
        snap.image.meta.update(extra_meta or {})
    rows = []
    for snap in intermediates:
        n = snap.n_pairs + 1
        write_image(directory, f"snap_{n:07d}", snap.image.values,
                    {**_rec_meta(snap.image), "overflow_count": snap.overflow_count})
        r = pearson_r(snap.image.values, final.image.values)
        rows.append({"n": n, "elapsed_s": repr(n / ACQUISITION_RATE_HZ),
                     "r_vs_final": "" if r is None else repr(r)})
    write_image(directory, "final", final.image.values,
                {**_rec_meta(final.image), "overflow_count": final.overflow_count})
    n = final.n_pairs + 1
    if not rows or rows[-1]["n"] != n:
        rows.append({"n": n, "elapsed_s": repr(n / ACQUISITION_RATE_HZ), "r_vs_final": repr(1.0)})
    write_csv(os.path.join(directory, "snapshots.csv"), ("n", "elapsed_s", "r_vs_final"), rows)
    return final.image, elapsed


def cmd_reconstruct(cfg: ExperimentConfig, args, allowed=RECONSTRUCT_ALGORITHMS) -> int:
    algorithm = cfg.algorithm.lower()
    if algorithm not in allowed:
        raise ConfigError(f"algorithm must be one of {', '.join(allowed)}, got {cfg.algorithm!r}")
    stream, _ = read_recording(_recording_path(args, cfg))
    directory = os.path.join(cfg.out, algorithm)
    os.makedirs(directory, exist_ok=True)
    if algorithm == "gi":
        start = time.perf_counter()
        rec = oracles.gi_background_subtraction(stream)
        elapsed = time.perf_counter() - start
        write_image(directory, "final", rec.values, _rec_meta(rec))
        m = len(stream)
        write_csv(os.path.join(directory, "snapshots.csv"), ("n", "elapsed_s", "r_vs_final"),
                  [{"n": m, "elapsed_s": repr(m / ACQUISITION_RATE_HZ), "r_vs_final": repr(1.0)}])
    else:
        rec, elapsed = _run_streaming(stream, algorithm, cfg.engine_mode(), cfg.cadence, directory)
    print(f"wrote {directory}")
    _report_rate(algorithm, len(stream), elapsed)
    return EXIT_OK


def cmd_variants(cfg: ExperimentConfig, args) -> int:
    if args.algorithm is None and cfg.algorithm.lower() not in VARIANT_ALGORITHMS:
        cfg.algorithm = "igi_s"
    return cmd_reconstruct(cfg, args, VARIANT_ALGORITHMS)


def _hbt_arms(cfg: ExperimentConfig, args):
    if args.recording or args.recording_test:
        ref, _ = read_recording(args.recording or os.path.join(cfg.out, RECORDING_NAME))
        if args.recording_test:
            test_stream, _ = read_recording(args.recording_test)
            return test_stream.frames, ref.frames
        # one recording: both arms are the same reference frames
        return ref.frames, ref.frames
    return simulate_arms(cfg.field(), cfg.measurements, cfg.detector())


def cmd_hbt(cfg: ExperimentConfig, args) -> int:
    algorithm = cfg.algorithm.lower()
    if args.algorithm is None and algorithm not in HBT_ALGORITHMS:
        algorithm = "hbt_igi"
    if algorithm not in HBT_ALGORITHMS:
        raise ConfigError(f"algorithm must be one of {', '.join(HBT_ALGORITHMS)}, got {algorithm!r}")
    frames_test, frames_ref = _hbt_arms(cfg, args)
    x_t0 = cfg.test_pixel()
    stream = hbt_stream(frames_test, frames_ref, x_t0)
    directory = os.path.join(cfg.out, algorithm)
    os.makedirs(directory, exist_ok=True)
    if algorithm == "hbt":
        start = time.perf_counter()
        rec = oracles.hbt_offline(frames_test, frames_ref, x_t0)
        elapsed = time.perf_counter() - start
        write_image(directory, "final", rec.values, _rec_meta(rec))
    else:
        rec, elapsed = _run_streaming(stream, Algorithm.HBT_IGI, cfg.engine_mode(), cfg.cadence,
                                      directory, {"x_t0": x_t0})
    peak = np.unravel_index(int(np.argmax(rec.values)), rec.values.shape)
    print(f"wrote {directory}; peak at X,Y = {peak[1]},{peak[0]} (x_t0 = {x_t0[1]},{x_t0[0]})")
    _report_rate(algorithm, len(stream), elapsed)
    return EXIT_OK


def _default_points(m: int) -> list[int]:
    return sorted({int(v) for v in np.linspace(1, m, num=min(m, 20))})


def cmd_analyze(cfg: ExperimentConfig, args) -> int:
    stream, header = read_recording(_recording_path(args, cfg))
    os.makedirs(cfg.out, exist_ok=True)
    m = len(stream)
    points = list(cfg.sample_points) or _default_points(m)
    start = time.perf_counter()
    series = growth_series(stream, points)
    elapsed = time.perf_counter() - start
    write_growth_csv(os.path.join(cfg.out, "growth.csv"), series)
    dims = stream.dims
    gi_bits, igi_bits = memory_report(dims, m, header["pixel_bits"])
    engine = StreamingEngine(dims, Algorithm.IGI, cfg.engine_mode())
    rows = [{"quantity": "gi_frame_storage_bits", "bits": gi_bits},
            {"quantity": "igi_frame_storage_bits", "bits": igi_bits}]
    rows += [{"quantity": f"engine_{name}_bits", "bits": bits}
             for name, bits in engine.register_bits().items()]
    rows.append({"quantity": "engine_total_bits", "bits": engine.memory_footprint()})
    write_csv(os.path.join(cfg.out, "memory.csv"), ("quantity", "bits"), rows)
    print(f"gi frame storage: {gi_bits} bits; igi frame storage: {igi_bits} bits")
    _report_rate("analyze", series.n[-1] if series.n else 0, elapsed)
    return EXIT_OK


def cmd_compare(cfg: ExperimentConfig, args) -> int:
    names = [a.strip().lower() for a in (args.algorithm or "gi,igi").split(",")]
    if len(names) != 2 or any(n not in RECONSTRUCT_ALGORITHMS for n in names):
        raise ConfigError("compare needs two algorithms from gi, igi, igi_s, igi_i, e.g. gi,igi")
    stream, _ = read_recording(_recording_path(args, cfg))
    start = time.perf_counter()
    recs = {}
    for name in names:
        if name == "gi":
            recs[name] = oracles.gi_background_subtraction(stream)
        else:
            recs[name] = engine_run(stream, name, cfg.engine_mode(), 10 ** 12)[0].image
    elapsed = time.perf_counter() - start
    reports = {f"{names[0]}_vs_{names[1]}": compare_reconstructions(recs[names[0]], recs[names[1]])}
    h, w = stream.dims
    mask = make_object_mask(cfg.mask_spec, h, w)
    for name, rec in recs.items():
        try:
            reports[f"{name}_vs_mask"] = reconstruction_quality(rec, mask)
        except DegenerateMaskError:
            log.warning("mask %s has a single class; skipping CNR", cfg.mask_spec)
            break
    os.makedirs(cfg.out, exist_ok=True)
    write_quality_csv(os.path.join(cfg.out, "compare.csv"), reports)
    for label, report in reports.items():
        print(f"{label}: r={report.pearson_r} nrmsd={report.nrmsd} cnr={report.cnr}")
    _report_rate("compare", len(stream) * len(names), elapsed)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "reconstruct": cmd_reconstruct,
    "variants": cmd_variants,
    "hbt": cmd_hbt,
    "analyze": cmd_analyze,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="igi", description="Instant ghost imaging toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--algorithm")
        p.add_argument("--mode", choices=("float", "fixed"))
        p.add_argument("--cadence", type=int)
        p.add_argument("--xt0", help="HBT test pixel as X,Y (column, row)")
        p.add_argument("--measurements", type=int)
        p.add_argument("--recording", help=f"recording path (default OUT/{RECORDING_NAME})")
        if name == "hbt":
            p.add_argument("--recording-test", help="separate test-arm recording")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    if args.algorithm is not None:
        cfg.algorithm = args.algorithm
    if args.mode is not None:
        cfg.mode = args.mode
    if args.cadence is not None:
        cfg.cadence = args.cadence
    if args.measurements is not None:
        cfg.measurements = args.measurements
    if args.xt0 is not None:
        cfg.xt0 = _parse_xt0(args.xt0)
    return cfg.validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if not hasattr(args, "recording_test"):
        args.recording_test = None
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FixedPointOverflow as exc:
        print(f"overflow: {exc}", file=sys.stderr)
        return EXIT_OVERFLOW
    except (FormatError, ShapeError, InsufficientDataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
