"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

import numpy as np

from . import allocate as al
from . import harness as hz
from .errors import NumericalError, ValidationError
from .model import PRESETS, load_template, preset, scenario_to_dict, standard_cn

ALLOCATE_STRATEGIES = ("equal", "sum-constraint", "individual-constraint", "min-sum-power", "min-max-power",
                       "high-snr", "low-snr")


def parse_values(text: str, integer: bool = False) -> list:
    """``a:b[:step]`` (inclusive) or a comma-separated list."""
    conv = int if integer else float
    try:
        if ":" in text:
            parts = [conv(p) for p in text.split(":")]
            if len(parts) not in (2, 3):
                raise ValueError
            lo, hi = parts[0], parts[1]
            step = parts[2] if len(parts) == 3 else 1
            if step <= 0:
                raise ValueError
            return list(np.arange(lo, hi + step / 2, step).astype(int if integer else float))
        return [conv(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ValidationError(f"cannot parse values {text!r}; use a:b[:step] or a comma list") from None


def _template(args):
    if args.scenario:
        tmpl, gseed = load_template(args.scenario)
    else:
        tmpl, gseed = preset(args.preset), args.seed
    over = {}
    if getattr(args, "n_sensors", None) is not None:
        over["n_sensors"] = args.n_sensors
    if getattr(args, "sum_power", None) is not None:
        over["sum_power"] = args.sum_power
    if over:
        tmpl = replace(tmpl, **over)
    return tmpl, gseed


def _scenario(args):
    tmpl, gseed = _template(args)
    return tmpl.realize(tmpl.n_sensors, np.random.default_rng(gseed))


def _emit(result: hz.SweepResult, out):
    text = result.to_csv(out)
    if out is None:
        sys.stdout.write(text)


def cmd_mse_sweep(args):
    tmpl, gseed = _template(args)
    spec = hz.SweepSpec(args.variable, parse_values(args.values, args.variable == "n_sensors"), args.trials,
                        args.seed, args.redraw_geometry)
    strategies = [s.strip() for s in args.strategies.split(",")]
    _emit(hz.run_mse_sweep(tmpl, spec, strategies, geometry_seed=gseed), args.out)


def cmd_power_sweep(args):
    tmpl, gseed = _template(args)
    spec = hz.SweepSpec(args.variable, parse_values(args.values, args.variable == "n_sensors"), args.trials,
                        args.seed, args.redraw_geometry)
    eps = parse_values(args.epsilons) if args.variable != "epsilon" else None
    _emit(hz.run_power_sweep(tmpl, spec, eps, geometry_seed=gseed, include_peak=not args.no_peak), args.out)


def cmd_outage(args):
    sc = _scenario(args)
    _emit(hz.run_outage(sc, parse_values(args.sum_powers), args.epsilon, args.trials, args.seed, args.prior_mse),
          args.out)


def cmd_track(args):
    sc = _scenario(args)
    _emit(hz.run_track(sc, args.steps, args.strategy, args.seed, args.hold_gains), args.out)


def cmd_allocate(args):
    sc = _scenario(args)
    h = standard_cn(hz.stream(args.seed, 0, hz.CHANNEL), sc.n_sensors) * sc.path_gains
    s = args.strategy
    needs_eps = s in ("min-sum-power", "min-max-power")
    if needs_eps and args.epsilon is None:
        raise ValidationError(f"strategy {s!r} needs --epsilon")
    if s == "equal":
        alloc = al.equal_power_allocation(sc, channel=h)
    elif s == "sum-constraint":
        alloc = al.min_mse_sum_power(sc, h)
    elif s == "individual-constraint":
        alloc = al.min_mse_individual_power(sc, h)
    elif s in ("high-snr", "low-snr"):
        alloc = al.asymptotic_gains(sc, h, s.replace("-", "_"))
    else:
        tg = al.check_feasibility(sc, None, args.epsilon)
        alloc = (al.min_sum_power_mse if s == "min-sum-power" else al.min_max_power_mse)(sc, h, tg)
    doc = {
        "strategy": s,
        "scenario": scenario_to_dict(sc),
        "channel_re": h.real.tolist(),
        "channel_im": h.imag.tolist(),
        "allocation": alloc.to_dict(),
    }
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario JSON file (overrides --preset)")
    common.add_argument("--preset", default="paper-sec7", choices=sorted(PRESETS))
    common.add_argument("--seed", type=int, default=0, help="master seed (nonnegative)")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--n-sensors", type=int)
    common.add_argument("--sum-power", type=float)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="aftrack", description="Gain allocation and tracking for coherent-MAC sensor networks.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("mse-sweep", parents=[common], help="mean filtered MSE per strategy")
    s.add_argument("--variable", default="n_sensors", choices=("n_sensors", "sum_power"))
    s.add_argument("--values", default="5:30:5")
    s.add_argument("--strategies", default=",".join(hz.MSE_STRATEGIES))
    s.add_argument("--trials", type=int, default=300)
    s.add_argument("--redraw-geometry", action="store_true")
    s.set_defaults(func=cmd_mse_sweep)

    s = sub.add_parser("power-sweep", parents=[common], help="required power for MSE targets")
    s.add_argument("--variable", default="n_sensors", choices=hz.SWEEP_VARIABLES)
    s.add_argument("--values", default="10:40:10")
    s.add_argument("--epsilons", default="0.1")
    s.add_argument("--trials", type=int, default=300)
    s.add_argument("--redraw-geometry", action="store_true")
    s.add_argument("--no-peak", action="store_true", help="skip the peak-power SDP columns")
    s.set_defaults(func=cmd_power_sweep)

    s = sub.add_parser("outage", parents=[common], help="equal-power MSE outage, closed form and Monte Carlo")
    s.add_argument("--sum-powers", default="3,10,30,300,3000")
    s.add_argument("--epsilon", type=float, default=0.2)
    s.add_argument("--prior-mse", type=float)
    s.add_argument("--trials", type=int, default=100_000)
    s.set_defaults(func=cmd_outage)

    s = sub.add_parser("track", parents=[common], help="simulate the tracking filter")
    s.add_argument("--steps", type=int, default=1000)
    s.add_argument("--strategy", default="sum-constraint", choices=hz.TRACK_STRATEGIES)
    s.add_argument("--hold-gains", action="store_true", help="keep the first step's gains")
    s.set_defaults(func=cmd_track)

    s = sub.add_parser("allocate", parents=[common], help="one allocation as JSON")
    s.add_argument("--strategy", default="sum-constraint", choices=ALLOCATE_STRATEGIES)
    s.add_argument("--epsilon", type=float)
    s.set_defaults(func=cmd_allocate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.seed < 0:
            raise ValidationError("--seed must be nonnegative")
        args.func(args)
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
