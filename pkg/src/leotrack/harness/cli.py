"""Command-line entry point: ``leotrack {simulate,estimate,baseline,montecarlo,abc}``.

Exit status is 0 on success, 2 for configuration problems and 3 when the
estimation itself fails.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from ..baseline import TwoStepTracker, write_baseline_history
from ..errors import ConfigError, LeoTrackError
from ..signal import Trajectory, read_frames, true_direction, write_frames
from ..vmp import ObservationModel, VmpTracker, abc_sample, write_history
from .config import ScenarioConfig, config_from_mapping, dump_config, load_config, parse_window
from .io import emit_ci_orbits, emit_results, write_gnuplot
from .montecarlo import frame_source, run_montecarlo, setup_run

log = logging.getLogger("leotrack")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario INI file")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--snr-db", type=float)
    common.add_argument("--obstruct", metavar="T0:T1", help="replace frames in [T0, T1] by noise")
    common.add_argument("--window-rho", type=float)
    common.add_argument("--trajectory", help="truth trajectory CSV (t_seconds,x_m,y_m,z_m)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="leotrack", description="LEO satellite orbit and beam tracking simulator")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", parents=[common], help="draw a pass and write its frames")
    s.add_argument("--cadence", type=float, help="frame spacing in s (default: VMP interval)")

    e = sub.add_parser("estimate", parents=[common], help="run the VMP tracker on recorded frames")
    e.add_argument("--frames", help="frame file (default OUT/frames.bin)")
    e.add_argument("--run", help="run description written by simulate (default OUT/run.ini)")
    e.add_argument("--ci-level", type=float, default=0.95)
    e.add_argument("--ci-count", type=int, default=0, help="orbits to sample from the final surrogate")

    b = sub.add_parser("baseline", parents=[common], help="run the two-step tracker on recorded frames")
    b.add_argument("--frames")
    b.add_argument("--run")

    m = sub.add_parser("montecarlo", parents=[common], help="full tracker comparison")
    m.add_argument("--runs", type=int, help="number of Monte Carlo runs K")
    m.add_argument("--workers", type=int)
    m.add_argument("--gnuplot", action="store_true", help="also write plot.gp")

    a = sub.add_parser("abc", parents=[common], help="dump orbit samples consistent with an AoA")
    a.add_argument("--aoa", metavar="AZ,EL", help="initial AoA in degrees (default: drawn pass)")
    return p


def scenario_from_args(args) -> ScenarioConfig:
    cfg = load_config(args.config)
    overrides = {}
    for flag, key in (("seed", "seed"), ("snr_db", "snr_db"), ("window_rho", "window_rho"),
                      ("trajectory", "trajectory"), ("runs", "runs"), ("workers", "workers")):
        v = getattr(args, flag, None)
        if v is not None:
            overrides[key] = v
    if args.obstruct is not None:
        parse_window(args.obstruct)
        overrides["obstruct"] = args.obstruct
    return config_from_mapping(overrides, cfg) if overrides else cfg


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_run(path: Path, setup) -> None:
    ini = configparser.ConfigParser()
    ini["run"] = {
        "gamma_v": repr(setup.gamma_v),
        "gamma_p": repr(setup.gamma_p),
        "initial_aoa": ",".join(repr(float(v)) for v in setup.initial_aoa),
    }
    with open(path, "w") as fh:
        ini.write(fh)


def _read_run(path: Path) -> tuple[float, float, np.ndarray]:
    ini = configparser.ConfigParser()
    if not ini.read(path):
        raise ConfigError(f"cannot read run description {path}")
    try:
        r = ini["run"]
        aoa = np.array([float(v) for v in r["initial_aoa"].split(",")])
        return float(r["gamma_v"]), float(r["gamma_p"]), aoa
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"malformed run description {path}: {exc}") from exc


def cmd_simulate(args, cfg: ScenarioConfig) -> None:
    out = _out_dir(args)
    ss_setup, ss_frames = np.random.SeedSequence([cfg.seed, 0]).spawn(2)
    setup = setup_run(cfg, np.random.default_rng(ss_setup))
    cadence = args.cadence or cfg.vmp_interval
    times = cadence * np.arange(int(np.floor(cfg.duration / cadence + 1e-9)) + 1)
    make = frame_source(cfg, setup, np.random.default_rng(ss_frames))
    # offline recordings point the beam at the true direction
    frames = [make(float(t), true_direction(float(t), setup.truth, cfg.shape)) for t in times]
    write_frames(out / "frames.bin", frames)
    dense = np.arange(0.0, cfg.duration + 1.0, 1.0)
    truth = setup.truth if isinstance(setup.truth, Trajectory) else Trajectory.from_orbit(setup.truth, cfg.shape, dense)
    truth.save(out / "truth.csv")
    _write_run(out / "run.ini", setup)
    (out / "scenario.ini").write_text(dump_config(cfg))
    log.info("wrote %d frames to %s", len(frames), out)


def _frames_and_run(args, out: Path):
    frames = read_frames(args.frames or out / "frames.bin")
    if not frames:
        raise ConfigError("frame file is empty")
    return frames, _read_run(Path(args.run or out / "run.ini"))


def cmd_estimate(args, cfg: ScenarioConfig) -> None:
    out = _out_dir(args)
    frames, (gamma_v, gamma_p, aoa) = _frames_and_run(args, out)
    model = ObservationModel(cfg.hybrid, cfg.shape, cfg.pilot, gamma_v, gamma_p)
    tracker = VmpTracker(model, aoa, cfg.vmp, np.random.default_rng(np.random.SeedSequence([cfg.seed, 1])))
    for fr in frames:
        tracker.process(fr)
    if tracker.state is None:
        raise LeoTrackError("need at least two frames to initialise the tracker")
    write_history(out / "history.csv", tracker.state.history)
    if args.ci_count > 0:
        times = np.array([fr.t for fr in frames])
        emit_ci_orbits(tracker.state.orbit, times, out / "ci_orbits.csv", cfg.shape,
                       np.random.default_rng(np.random.SeedSequence([cfg.seed, 2])),
                       args.ci_level, args.ci_count)
    log.info("final orbit estimate %s", tracker.state.orbit.mean)


def cmd_baseline(args, cfg: ScenarioConfig) -> None:
    out = _out_dir(args)
    frames, (_, _, aoa) = _frames_and_run(args, out)
    truth_path = Path(cfg.trajectory) if cfg.trajectory else out / "truth.csv"
    truth = Trajectory.load(truth_path)
    tracker = TwoStepTracker(aoa, cfg.hybrid)
    est = []
    for fr in frames:
        tracker.process(fr)
        est.append(tracker.estimate(fr.t))
    times = np.array([fr.t for fr in frames])
    write_baseline_history(out / "baseline.csv", times, np.array(est), true_direction(times, truth, None))


def cmd_montecarlo(args, cfg: ScenarioConfig) -> None:
    out = _out_dir(args)
    series = run_montecarlo(cfg, progress=lambda n: log.info("run %d/%d done", n, cfg.runs))
    emit_results(series, out / "metrics.csv")
    if args.gnuplot:
        write_gnuplot(out / "plot.gp", "metrics.csv", [s.method for s in series])


def cmd_abc(args, cfg: ScenarioConfig) -> None:
    out = _out_dir(args)
    ss_setup, ss_abc = np.random.SeedSequence([cfg.seed, 0]).spawn(2)
    if args.aoa:
        try:
            az, el = (np.radians(float(v)) for v in args.aoa.split(","))
        except ValueError as exc:
            raise ConfigError(f"--aoa expects AZ,EL in degrees, got {args.aoa!r}") from exc
        aoa = np.array([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)])
    else:
        aoa = setup_run(cfg, np.random.default_rng(ss_setup)).initial_aoa
    res = abc_sample(aoa, cfg.abc_samples, np.random.default_rng(ss_abc), cfg.shape,
                     lookahead=cfg.vmp_interval, n_trials=cfg.abc_trials)
    with open(out / "abc_samples.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha", "beta", "eta0", "fitness"])
        for g, f in zip(res.samples, res.fitness):
            w.writerow([*(repr(float(v)) for v in g), repr(float(f))])
    log.info("accepted %d of %d candidates", res.n_accepted, res.n_trials)


COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "baseline": cmd_baseline,
    "montecarlo": cmd_montecarlo,
    "abc": cmd_abc,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = scenario_from_args(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LeoTrackError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
