"""Command-line entry point: ``cogradar <command> [options]``.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
Errors are reported on stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .beamform import beampattern_grid, omni_weights
from .clutter import psd_grid, stability_report
from .config import RunManifest, bundled_config, digest, parse_config, serialize
from .errors import ConfigError
from .export import (
    atomic_write,
    write_detection_cube,
    write_pd_curve,
    write_pd_summary,
    write_psd,
    write_q_dump,
    write_reward_curve,
    write_targets,
    write_beampattern,
)
from .sim import run_false_alarm_trials, run_paired

logger = logging.getLogger("cogradar")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _load(args):
    sc = parse_config(args.config or bundled_config())
    if getattr(args, "runs", None) is not None:
        if args.runs < 1:
            raise UsageError("--runs must be at least 1")
        sc = sc.replace(mc_runs=args.runs)
    return sc


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


class _Session:
    """Collects written files and finishes with a manifest."""

    def __init__(self, command, sc, seed, out, parameters=None):
        self.out = out
        self.manifest = RunManifest(digest=digest(sc), seed=seed, version=__version__, command=command,
                                    started=_now(), parameters=parameters or {})
        atomic_write(out / "scenario.toml", serialize(sc))
        self.manifest.outputs.append("scenario.toml")

    def add(self, path):
        self.manifest.outputs.append(Path(path).name)

    def close(self):
        self.manifest.finished = _now()
        atomic_write(self.out / "manifest.json", self.manifest.to_json())


def cmd_run(args) -> int:
    sc = _load(args)
    out = _out_dir(args.out)
    sess = _Session("run", sc, args.seed, out, {"q_interval": args.q_interval})
    rl, omni = run_paired(sc, seed=args.seed, workers=args.threads)
    sess.add(write_detection_cube(out / "cube_rl.csv", sc.grid, rl.detection_frequency))
    sess.add(write_detection_cube(out / "cube_omni.csv", sc.grid, omni.detection_frequency))
    sess.add(write_pd_summary(out / "pd_summary.csv", sc.targets, rl.target_pd(), omni.target_pd()))
    sess.add(write_reward_curve(out / "reward_curve.csv", rl.mean_reward, omni.mean_reward))
    sess.add(write_q_dump(out / "q_table.csv", rl.mean_q, args.q_interval))
    sess.close()
    for j, t in enumerate(sc.targets):
        print(f"target {j} ({t.freq.nu_x:+.2f},{t.freq.nu_y:+.2f}) {t.snr_db:g} dB: "
              f"P_D rl={rl.target_pd()[j]:.3f} omni={omni.target_pd()[j]:.3f}")
    return EXIT_OK


def cmd_sweep_n(args) -> int:
    sc = _load(args)
    out = _out_dir(args.out)
    sess = _Session("sweep-n", sc, args.seed, out, {"sides": args.sides})
    xs, rl_pd, om_pd = [], [], []
    for side in args.sides:
        sub = sc.with_sides(side)
        rl, omni = run_paired(sub, seed=args.seed, workers=args.threads)
        xs.append(sub.geometry.n)
        rl_pd.append(rl.target_pd())
        om_pd.append(omni.target_pd())
        logger.info("side %d: rl %s omni %s", side, rl_pd[-1], om_pd[-1])
    rl_pd, om_pd = np.array(rl_pd), np.array(om_pd)
    for j in range(len(sc.targets)):
        sess.add(write_pd_curve(out / f"pd_vs_n_target{j}.csv", xs, rl_pd[:, j], om_pd[:, j]))
    sess.close()
    return EXIT_OK


def cmd_sweep_snr(args) -> int:
    sc = _load(args)
    if not 0 <= args.target < len(sc.targets):
        raise UsageError(f"--target must lie in 0..{len(sc.targets) - 1}")
    out = _out_dir(args.out)
    sess = _Session("sweep-snr", sc, args.seed, out, {"snrs": args.snrs, "target": args.target})
    rl_pd, om_pd = [], []
    for snr in args.snrs:
        rl, omni = run_paired(sc.with_target_snr(args.target, snr), seed=args.seed, workers=args.threads)
        rl_pd.append(rl.target_pd()[args.target])
        om_pd.append(omni.target_pd()[args.target])
    sess.add(write_pd_curve(out / f"pd_vs_snr_target{args.target}.csv", args.snrs, rl_pd, om_pd))
    sess.close()
    return EXIT_OK


def cmd_psd(args) -> int:
    sc = _load(args)
    out = _out_dir(args.out)
    sess = _Session("psd", sc, 0, out, {"resolution": args.resolution})
    axis = np.linspace(-0.5, 0.5, args.resolution)
    sess.add(write_psd(out / "psd.csv", axis, axis, psd_grid(sc.disturbance, axis, axis)))
    sess.add(write_targets(out / "targets.csv", sc.targets))
    omni = omni_weights(sc.geometry.n_t, sc.p_t)
    sess.add(write_beampattern(out / "beampattern_omni.csv", sc.grid.freqs,
                               beampattern_grid(omni, sc.grid.freqs, sc.geometry)))
    rep = stability_report(sc.disturbance)
    if not rep.stable:
        print("warning: AR recursion is unstable (characteristic root moduli "
              f"x={np.round(rep.root_moduli_x, 3).tolist()}, y={np.round(rep.root_moduli_y, 3).tolist()})",
              file=sys.stderr)
    sess.close()
    return EXIT_OK


def cmd_calibrate(args) -> int:
    sc = _load(args)
    if args.p_fa is not None:
        sc = sc.replace(p_fa=args.p_fa)
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    out = _out_dir(args.out)
    sess = _Session("calibrate", sc, args.seed, out, {"trials": args.trials})
    res = run_false_alarm_trials(sc.replace(targets=()), args.trials, seed=args.seed, workers=args.threads)
    lo, hi = res.interval()
    band = res.sigma_band(4.0)
    report = {
        "p_fa": res.p_fa, "trials": res.trials, "exceedances": res.exceedances, "rate": res.rate,
        "ci95": [lo, hi], "band_4sigma": list(band), "within_band": bool(band[0] <= res.rate <= band[1]),
    }
    atomic_write(out / "calibrate.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    sess.add("calibrate.json")
    sess.close()
    print(f"empirical P_FA {res.rate:.5f} ({res.exceedances}/{res.trials}), "
          f"95% CI [{lo:.5f}, {hi:.5f}], nominal {res.p_fa:g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="TOML scenario file (default: bundled reference)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--runs", type=int, help="override the Monte Carlo run count")
    common.add_argument("--threads", type=int, default=1, help="worker processes")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="cogradar", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", parents=[common], help="RL and omni Monte Carlo on one scenario")
    p.add_argument("--q-interval", type=int, default=10, help="steps between Q-table dumps")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep-n", parents=[common], help="P_D versus array size")
    p.add_argument("--sides", type=_int_list, default=list(range(3, 11)),
                   help="comma-separated array sides (default 3..10)")
    p.set_defaults(func=cmd_sweep_n)

    p = sub.add_parser("sweep-snr", parents=[common], help="P_D versus one target's SNR")
    p.add_argument("--snrs", type=_float_list, default=[-10.0, -9.0, -8.0, -7.0, -6.0, -5.0])
    p.add_argument("--target", type=int, default=0, help="index of the swept target")
    p.set_defaults(func=cmd_sweep_snr)

    p = sub.add_parser("psd", parents=[common], help="disturbance PSD and target markers")
    p.add_argument("--resolution", type=int, default=101)
    p.set_defaults(func=cmd_psd)

    p = sub.add_parser("calibrate", parents=[common], help="empirical false-alarm rate")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--p-fa", type=float, help="override the configured P_FA")
    p.set_defaults(func=cmd_calibrate)
    return parser


def _fail(kind, message, code, **extra):
    print(json.dumps({"error": kind, "message": message, **extra}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return _fail("usage", str(exc), EXIT_USAGE)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        return _fail("usage", str(exc), EXIT_USAGE)
    except ConfigError as exc:
        return _fail("config", str(exc), EXIT_USAGE, key=exc.key, line=exc.line)
    except OSError as exc:
        return _fail("io", str(exc), EXIT_RUNTIME)
    except Exception as exc:  # component failures
        logger.debug("runtime failure", exc_info=True)
        return _fail(type(exc).__name__, str(exc), EXIT_RUNTIME)


if __name__ == "__main__":
    sys.exit(main())
