"""Command-line pipeline: simulate -> ecm/reconstruct -> eval, plus stats.

Exit codes: 0 success, 2 usage or validation error, 3 I/O error. A
config file (INI sections named after subcommands, key=value entries)
may supply flag defaults; explicit flags win. The default config path
comes from the EVTKIT_CONFIG environment variable.

Outputs are written via temp-file-and-rename so failure paths leave no
partial files, and results are byte-identical for identical inputs and
flags regardless of --threads.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import deteval, representations
from .annotations import (
    FrameClock,
    align,
    align_detections,
    read_annotations,
    read_detections,
)
from .errors import EvtkitError, ParseError
from .io import (
    FORMAT_BINARY,
    FORMAT_TEXT,
    format_for_path,
    read_events,
    write_events,
)
from .pgm import write_pgm
from .reconstruction import ReconConfig, reconstruct
from .simulate import SimulatorConfig, load_frame_sequence, simulate

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3


def _atomic_write_events(stream, path, fmt):
    fmt = fmt or format_for_path(path)
    tmp = f"{path}.tmp"
    try:
        write_events(stream, tmp, fmt)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def _write_pgms_threaded(images, out_dir, prefix, threads):
    os.makedirs(out_dir, exist_ok=True)
    paths = [
        os.path.join(out_dir, f"{prefix}_{i:06d}.pgm")
        for i in range(len(images))
    ]

    def job(i):
        tmp = f"{paths[i]}.tmp"
        write_pgm(images[i], tmp)
        os.replace(tmp, paths[i])

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        list(pool.map(job, range(len(images))))
    return paths


def cmd_simulate(args):
    frames = load_frame_sequence(args.frames_dir, args.fps)
    cfg = SimulatorConfig(
        theta_pos=args.theta_pos,
        theta_neg=args.theta_neg,
        linlog_knee=args.knee,
        max_events_per_pixel_per_interval=args.max_events_per_pixel,
    )
    cfg.validate()
    stream = simulate(frames, cfg)
    _atomic_write_events(stream, args.out, args.format)
    print(f"wrote {len(stream)} events to {args.out}")
    return EXIT_OK


def cmd_ecm(args):
    stream = read_events(args.events, args.format)
    seq = representations.build_ecm(
        stream, args.window_us, mode=args.mode, normalization=args.norm
    )
    images = [frame.gray for frame in seq.bins]
    _write_pgms_threaded(images, args.out_dir, "ecm", args.threads)
    if args.dump_raw:
        for frame in seq.bins:
            path = os.path.join(
                args.out_dir, f"ecm_{frame.bin_index:06d}.ecmr"
            )
            representations.write_ecm_raw(frame, path)
    counts = _per_bin_counts(stream, seq)
    print(f"bins: {seq.n}")
    for frame, count in zip(seq.bins, counts):
        suffix = " (partial)" if frame.partial else ""
        print(f"bin {frame.bin_index}: {count} events{suffix}")
    print(f"total: {int(sum(counts))} events")
    return EXIT_OK


def _per_bin_counts(stream, seq):
    if len(stream) == 0:
        return [0] * seq.n
    rel = stream.t.astype(np.int64) - stream.t_start
    idx = np.minimum(rel // seq.window, seq.n - 1)
    return np.bincount(idx, minlength=seq.n).tolist()


def cmd_reconstruct(args):
    stream = read_events(args.events, args.format)
    cfg = ReconConfig(
        alpha=args.alpha,
        contrast=args.contrast,
        sample_period=args.sample_period_us,
    )
    cfg.validate()
    frames = reconstruct(stream, cfg)
    _write_pgms_threaded(
        [f.gray for f in frames], args.out_dir, "recon", args.threads
    )
    print(f"wrote {len(frames)} frames to {args.out_dir}")
    return EXIT_OK


@dataclass(frozen=True)
class _Bin:
    t0: int
    t1: int
    partial: bool = False


def _eval_bins(frames, fps, window):
    """Bin bounds covering every annotated frame time."""
    clock = FrameClock(fps)
    last = max(frames) if frames else 0
    end = clock.time_us(last) + 1
    n = max(1, -(-end // window))
    return [
        _Bin(t0=i * window, t1=min((i + 1) * window, end),
             partial=((i + 1) * window > end))
        for i in range(n)
    ]


def cmd_eval(args):
    gts_by_frame, gt_errors = read_annotations(args.gt)
    dets_by_frame, det_errors = read_detections(args.detections)
    for err in gt_errors + det_errors:
        print(f"warning: {err}", file=sys.stderr)
    clock = FrameClock(args.fps)
    frames = set(gts_by_frame) | set(dets_by_frame)
    bins = _eval_bins(frames, args.fps, args.window_us)
    gts_per_bin, gt_oob = align(gts_by_frame, clock, bins)
    dets_per_bin, det_oob = align_detections(dets_by_frame, clock, bins)
    for frame in gt_oob + det_oob:
        print(f"warning: frame {frame} outside binned range", file=sys.stderr)
    if not any(gts_per_bin.values()):
        print("warning: no ground truth boxes; report will be empty",
              file=sys.stderr)
    report = deteval.evaluate(dets_per_bin, gts_per_bin)
    if args.report:
        tmp = f"{args.report}.tmp"
        with open(tmp, "w", encoding="utf-8") as f:
            f.write(report.to_json())
            f.write("\n")
        os.replace(tmp, args.report)
    print(report.to_table())
    return EXIT_OK


def cmd_stats(args):
    stream = read_events(args.events, args.format)
    pos = int(np.count_nonzero(stream.p == 1))
    neg = len(stream) - pos
    duration_s = stream.duration / 1e6
    rate = len(stream) / duration_s if duration_s > 0 else 0.0
    print(f"geometry: {stream.width}x{stream.height}")
    print(f"time range: [{stream.t_start}, {stream.t_end}] us "
          f"(duration {stream.duration} us)")
    print(f"events: {len(stream)}")
    print(f"rate: {rate:.1f} events/s")
    print(f"polarity: +{pos} / -{neg}")
    return EXIT_OK


def _build_parser(config):
    parser = argparse.ArgumentParser(
        prog="evtkit",
        description="Event-camera pipeline: simulation, representations, "
                    "reconstruction, and detection metrics.",
    )
    parser.add_argument("--config", help="INI config file with per-subcommand "
                                         "default sections")
    sub = parser.add_subparsers(dest="command", required=True)

    def section_defaults(sp, name, types):
        if config is not None and config.has_section(name):
            defaults = {}
            for key, value in config.items(name):
                key = key.replace("-", "_")
                if key in types:
                    defaults[key] = types[key](value)
            sp.set_defaults(**defaults)

    p = sub.add_parser("simulate", help="convert a frame directory to events")
    p.add_argument("frames_dir")
    p.add_argument("out")
    p.add_argument("--fps", type=float, required=True)
    p.add_argument("--theta-pos", type=float, default=0.2)
    p.add_argument("--theta-neg", type=float, default=0.2)
    p.add_argument("--knee", type=float, default=20.0)
    p.add_argument("--max-events-per-pixel", type=int, default=None)
    p.add_argument("--format", choices=[FORMAT_TEXT, FORMAT_BINARY],
                   default=None, help="default: inferred from extension")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_simulate)
    section_defaults(p, "simulate", {
        "fps": float, "theta_pos": float, "theta_neg": float, "knee": float,
        "max_events_per_pixel": int, "format": str, "threads": int,
    })

    p = sub.add_parser("ecm", help="build event count maps as PGM frames")
    p.add_argument("events")
    p.add_argument("out_dir")
    p.add_argument("--window-us", type=int, required=True)
    p.add_argument("--mode", choices=list(representations.MODES),
                   default=representations.MODE_SIGNED)
    p.add_argument("--norm", choices=list(representations.NORMALIZATIONS),
                   default=representations.NORM_PER_SEQUENCE)
    p.add_argument("--dump-raw", action="store_true",
                   help="also dump i32 raw maps next to the PGMs")
    p.add_argument("--format", choices=[FORMAT_TEXT, FORMAT_BINARY],
                   default=None)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_ecm)
    section_defaults(p, "ecm", {
        "window_us": int, "mode": str, "norm": str, "threads": int,
        "format": str,
    })

    p = sub.add_parser("reconstruct",
                       help="reconstruct grayscale frames from events")
    p.add_argument("events")
    p.add_argument("out_dir")
    p.add_argument("--alpha", type=float, default=5.0)
    p.add_argument("--contrast", type=float, default=0.2)
    p.add_argument("--sample-period-us", type=int, default=33_333)
    p.add_argument("--format", choices=[FORMAT_TEXT, FORMAT_BINARY],
                   default=None)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_reconstruct)
    section_defaults(p, "reconstruct", {
        "alpha": float, "contrast": float, "sample_period_us": int,
        "threads": int, "format": str,
    })

    p = sub.add_parser("eval", help="score detections against ground truth")
    p.add_argument("gt", help="VisDrone-style annotation CSV")
    p.add_argument("detections", help="detector dump CSV")
    p.add_argument("--fps", type=float, required=True)
    p.add_argument("--window-us", type=int, required=True)
    p.add_argument("--report", help="write the JSON report here")
    p.set_defaults(func=cmd_eval)
    section_defaults(p, "eval", {
        "fps": float, "window_us": int, "report": str,
    })

    p = sub.add_parser("stats", help="summarize an event file")
    p.add_argument("events")
    p.add_argument("--format", choices=[FORMAT_TEXT, FORMAT_BINARY],
                   default=None)
    p.set_defaults(func=cmd_stats)
    section_defaults(p, "stats", {"format": str})

    return parser


def _load_config(argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=os.environ.get("EVTKIT_CONFIG"))
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return None
    config = configparser.ConfigParser()
    if not config.read(known.config):
        raise OSError(f"config file not found: {known.config}")
    return config


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        config = _load_config(argv)
        parser = _build_parser(config)
        args = parser.parse_args(argv)
        _validate(args)
        return args.func(args)
    except (ParseError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EvtkitError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def _validate(args):
    fps = getattr(args, "fps", None)
    if fps is not None and (fps <= 0 or math.isnan(fps)):
        raise ValueError(f"fps must be positive, got {fps}")
    window = getattr(args, "window_us", None)
    if window is not None and window <= 0:
        raise ValueError(f"window must be positive, got {window}")
    threads = getattr(args, "threads", None)
    if threads is not None and threads < 1:
        raise ValueError("threads must be at least 1")


if __name__ == "__main__":
    sys.exit(main())
