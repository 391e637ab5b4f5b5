"""Command-line entry point: ``handset-emf simulate | replay | calibrate``.

Exit codes: 0 on success, 2 on configuration (or trace) errors, 3 on
runtime failures.
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .calibration import calibration_for
from .config import SimulationConfig, default_config, load_config, validate
from .errors import ConfigError, SimulationError
from .experiments import EXPERIMENTS, run_experiment
from .report import emit_report
from .scenario import read_trace, replay

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

log = logging.getLogger('handset_emf')


def _config(path: Optional[str]) -> SimulationConfig:
    return load_config(path) if path else default_config()


def _apply_overrides(cfg: SimulationConfig, args) -> SimulationConfig:
    sim = cfg.simulation
    if args.seed is not None:
        sim = replace(sim, seed=args.seed)
    if args.scenario is not None:
        sim = replace(sim, scenario=args.scenario)
    if args.format is not None:
        sim = replace(sim, output_format=args.format)
    return validate(replace(cfg, simulation=sim)) if sim != cfg.simulation else cfg


def cmd_simulate(args) -> int:
    cfg = _apply_overrides(_config(args.config), args)
    names = list(EXPERIMENTS) if args.experiment == 'all' else [args.experiment]
    cal = calibration_for(cfg)
    out = Path(args.out)
    for name in names:
        bundle = run_experiment(name, cfg, cal)
        target = out / name if len(names) > 1 else out
        for path in emit_report(bundle, cfg.simulation.output_format, target):
            print(path)
    return EXIT_OK


def cmd_replay(args) -> int:
    steps = replay(read_trace(args.trace), args.hysteresis)
    print('time_s,event,rrc,wifi_flag,offloaded_tx,active_ul,in_call')
    for entry, st in steps:
        print(f"{entry.t_s!r},{entry.event},{st.rrc.value},{int(st.wifi_flag)},"
              f"{st.offloaded_tx},{st.active_ul},{int(st.in_call)}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    cfg = _config(args.config)
    print(json.dumps(calibration_for(cfg).as_dict(), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog='handset-emf', description=__doc__.splitlines()[0])
    p.add_argument('-v', '--verbose', action='store_true', help='log at INFO level')
    sub = p.add_subparsers(dest='command', required=True)

    s = sub.add_parser('simulate', help='run an experiment and write its report')
    s.add_argument('--config', help='INI configuration file (defaults if omitted)')
    s.add_argument('--experiment', required=True,
                   help=f"one of: {', '.join(EXPERIMENTS)}, or 'all'")
    s.add_argument('--scenario', help='scenario id or ALL (overrides the config)')
    s.add_argument('--format', choices=('csv', 'json'), help='report format (overrides the config)')
    s.add_argument('--out', required=True, help='output directory')
    s.add_argument('--seed', type=int, help='channel seed (overrides the config)')
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser('replay', help='replay an event trace through the connectivity controller')
    r.add_argument('--trace', required=True, help='trace file of "t_seconds EVENT [args]" lines')
    r.add_argument('--hysteresis', type=float, default=0.0, help='SNR margin in dB')
    r.set_defaults(func=cmd_replay)

    c = sub.add_parser('calibrate', help='print calibration constants as JSON')
    c.add_argument('--config', help='INI configuration file (defaults if omitted)')
    c.set_defaults(func=cmd_calibrate)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format='%(levelname)s: %(message)s')
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == '__main__':
    sys.exit(main())
