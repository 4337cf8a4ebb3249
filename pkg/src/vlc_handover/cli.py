"""Command-line interface: ``vlc-handover {trajectory,bermap,kurtosis,waveform}``.

Exit codes: 0 success, 1 configuration error (bad flags, unreadable or
invalid config files), 2 runtime error (e.g. zero-variance input).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import experiment, phy, stats
from .handover import HandoverConfig
from .rng import derive_rng
from .scene import SCENE_DIR_ENV, SceneError, load_scene_file


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _nonneg_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _add_common(p, default_scene):
    p.add_argument("--scene", default=default_scene,
                   help=f"scene file or bundled scene name (default: {default_scene}; "
                        f"names are also looked up in ${SCENE_DIR_ENV})")
    p.add_argument("--seed", type=int, required=True, help="master seed (integer, mandatory)")
    p.add_argument("--out", required=True, type=Path, help="output report path")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="report format (default: csv)")
    p.add_argument("--plot", type=Path, default=None, help="also render a PNG figure to this path")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vlc-handover", description="Kurtosis-based VLC handover simulator.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("trajectory", help="walk a path, report per-frame kurtosis and handover events")
    _add_common(t, "paper_scene")
    t.add_argument("--path", default="paper_path", help="trajectory file or bundled name (default: paper_path)")
    t.add_argument("--events", type=Path, default=None,
                   help="event log CSV path (default: <out stem>_events.csv next to --out)")
    t.add_argument("--frames-per-waypoint", type=_positive_int, default=None,
                   help="frames measured at each waypoint (default: from the path file)")
    t.add_argument("--peak-window", type=_positive_int, default=2, help="relative-max half window, frames (default: 2)")
    t.add_argument("--peak-margin", type=float, default=0.3,
                   help="required kurtosis rise over the window minimum, dimensionless (default: 0.3)")
    t.add_argument("--confirm-frames", type=_positive_int, default=3,
                   help="consecutive dominant frames to confirm or cancel, frames (default: 3)")
    t.add_argument("--gain-hysteresis", type=float, default=1.1,
                   help="cell level ratio counted as dominance, dimensionless >= 1 (default: 1.1)")
    t.add_argument("--power-scale", type=float, default=1.0,
                   help="multiply every LED optical power (W) by this factor (default: 1)")
    t.set_defaults(func=cmd_trajectory)

    b = sub.add_parser("bermap", help="Monte Carlo payload BER on a grid over the room")
    _add_common(b, "paper_scene_ber")
    b.add_argument("--nx", type=int, default=8, help="grid points along x (default: 8)")
    b.add_argument("--ny", type=int, default=8, help="grid points along y (default: 8)")
    b.add_argument("--mode", choices=experiment.MODES, default="isolated",
                   help="isolated: one LED lit at a time; concurrent: all LEDs send (default: isolated)")
    b.add_argument("--bits-per-point", type=_positive_int, default=experiment.DEFAULT_BITS_PER_POINT,
                   help="payload bits per transmitter per grid point, bits (default: 100000)")
    b.add_argument("--noise-std", type=_nonneg_float, default=None,
                   help="override receiver noise standard deviation, A")
    b.set_defaults(func=cmd_bermap)

    k = sub.add_parser("kurtosis", help="kurtosis report of a waveform CSV (header n,time_s,amps)")
    k.add_argument("input", type=Path, help="waveform CSV file, amps column in A")
    k.add_argument("--id-segment", type=_positive_int, default=None, metavar="SAMPLES_PER_BIT",
                   help="analyse only the mean-removed cell-ID segment (first 2 bit slots of this many samples)")
    k.add_argument("--bins", type=_positive_int, default=0,
                   help="also print a histogram PDF with this many bins (default: off)")
    k.set_defaults(func=cmd_kurtosis)

    w = sub.add_parser("waveform", help="export one received frame as a waveform CSV")
    _add_common(w, "paper_scene")
    w.add_argument("--x", type=float, required=True, help="receiver x position, m")
    w.add_argument("--y", type=float, required=True, help="receiver y position, m")
    w.set_defaults(func=cmd_waveform, format="csv")
    return parser


def _load_scene(name):
    try:
        return load_scene_file(name)
    except (OSError, SceneError) as exc:
        raise ConfigError(f"cannot load scene {name!r}: {exc}") from None


def _write(path: Path, text: str):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from None


def cmd_trajectory(args) -> int:
    scene = _load_scene(args.scene)
    if args.power_scale <= 0:
        raise ConfigError("--power-scale must be > 0")
    if args.power_scale != 1.0:
        scene = scene.with_power_scale(args.power_scale)
    try:
        traj = experiment.load_trajectory_file(args.path)
        if args.frames_per_waypoint:
            traj = experiment.Trajectory(traj.waypoints, args.frames_per_waypoint)
        cfg = HandoverConfig(args.peak_window, args.peak_margin, args.confirm_frames, args.gain_hysteresis)
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    report = experiment.run_trajectory(scene, traj, cfg, args.seed)
    _write(args.out, experiment.render_report(report, args.format))
    events = args.events or args.out.with_name(f"{args.out.stem}_events.csv")
    _write(events, experiment.events_to_csv(report.events))
    if args.plot:
        from .plots import plot_trajectory
        plot_trajectory(report, args.plot)
    print(f"{len(report.records)} frames, {len(report.events)} handover event(s) -> {args.out}, {events}")
    return 0


def cmd_bermap(args) -> int:
    if args.nx < 1 or args.ny < 1:
        raise ConfigError("--nx and --ny must be >= 1")
    scene = _load_scene(args.scene)
    if args.noise_std is not None:
        scene = scene.with_receiver(noise_std=args.noise_std)
    ber = experiment.run_ber_map(scene, args.nx, args.ny, args.bits_per_point, args.mode, args.seed)
    _write(args.out, experiment.render_report(ber, args.format))
    if args.plot:
        from .plots import plot_ber_map
        plot_ber_map(ber, args.plot)
    print(f"{args.nx}x{args.ny} {args.mode} BER map -> {args.out}")
    return 0


def cmd_kurtosis(args) -> int:
    try:
        samples = phy.waveform_from_csv(args.input.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read waveform {args.input}: {exc}") from None
    if args.id_segment:
        n = phy.N_ID_BITS * args.id_segment
        if samples.size < n:
            raise ConfigError("waveform shorter than the cell-ID segment")
        samples = samples[:n] - samples[:n].mean()
    rep = stats.kurtosis(samples)
    sys.stdout.write(experiment.render_report(rep, "csv"))
    if args.bins:
        pdf = stats.histogram_pdf(samples, args.bins)
        sys.stdout.write("bin_lo,bin_hi,probability\n")
        for lo, hi, p in zip(pdf.bin_edges[:-1], pdf.bin_edges[1:], pdf.probabilities):
            sys.stdout.write(f"{float(lo)!r},{float(hi)!r},{float(p)!r}\n")
    return 0


def cmd_waveform(args) -> int:
    scene = _load_scene(args.scene)
    if not scene.contains((args.x, args.y)):
        raise ConfigError(f"position ({args.x}, {args.y}) lies outside the room")
    rng = derive_rng(args.seed, 0, 0)
    w = phy.synthesize_received(scene, (args.x, args.y), phy.random_frames(scene, rng), rng)
    _write(args.out, phy.waveform_to_csv(w))
    if args.plot:
        from .plots import plot_waveform
        plot_waveform(w, args.plot)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - any simulation failure maps to exit 2
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
