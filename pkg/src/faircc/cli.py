"""
Command-line front end.

::

    faircc run --scenario sym_fading --K 4 --alpha 1
    faircc sweep --scenario sym_fading --K 4 --axis V --values 10 100 1000
    faircc compare --scenario det_two_class --alpha 0 --K 6
    faircc check

Results go to ``--output-dir``, else ``$FAIRCC_OUTPUT_DIR``, else
``./results``.
"""

import argparse
import dataclasses
import os
import sys
import time

from . import config as cfgmod
from . import results
from .engine import POLICIES, run, run_many, sweep_configs
from .errors import ConfigError, ContractViolation, DomainError

OUTPUT_ENV = "FAIRCC_OUTPUT_DIR"
DEFAULT_OUTPUT = "results"

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


def _common(p):
    p.add_argument("--scenario", required=True, choices=cfgmod.SCENARIOS)
    p.add_argument("--config", help="configuration file (required for --scenario custom)")
    p.add_argument("--K", type=int, help="number of users")
    p.add_argument("--alpha", type=float)
    p.add_argument("--V", type=float)
    p.add_argument("--d", type=float, help="utility domain shift")
    p.add_argument("--gamma-max", type=float)
    p.add_argument("--sigma-max", type=int)
    p.add_argument("--horizon", type=int, help="slots per run")
    p.add_argument("--seed", type=int)
    p.add_argument("--sample-every", type=int, help="trajectory sampling period (slots); writes a JSON file")
    power = p.add_mutually_exclusive_group()
    power.add_argument("--power-db", type=float, help="power budget in dB")
    power.add_argument("--power-linear", type=float, help="power budget, linear")
    p.add_argument("--output-dir", help=f"overrides ${OUTPUT_ENV} and ./{DEFAULT_OUTPUT}")
    p.add_argument("--tag", help="prefix for the output file names")


def build_parser():
    parser = argparse.ArgumentParser(prog="faircc", description="Fair coded caching over fading broadcast channels.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one configuration")
    _common(p)
    p.add_argument("--policy", choices=POLICIES)

    p = sub.add_parser("sweep", help="independent runs along one axis")
    _common(p)
    p.add_argument("--policy", choices=POLICIES)
    p.add_argument("--axis", required=True, choices=("K", "V", "alpha"))
    p.add_argument("--values", required=True, nargs="+", type=float)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("compare", help="proposed scheme and both baselines on one scenario")
    _common(p)

    p = sub.add_parser("check", help="identity, oracle and consistency checks")
    p.add_argument("--quick", action="store_true", help="smaller random suites")
    return parser


def resolve_config(args):
    """Scenario preset (or config file) with the command-line overrides applied."""
    if args.scenario == "custom":
        if not args.config:
            raise ConfigError("--scenario custom needs --config")
        cfg = cfgmod.load(args.config)
        if args.K is not None and args.K != cfg.params.K:
            raise ConfigError(f"--K {args.K} does not match users = {cfg.params.K} in {args.config}")
    else:
        if args.config:
            raise ConfigError("--config is only used with --scenario custom")
        cfg = cfgmod.preset(args.scenario, args.K if args.K is not None else 4)
    fair = {}
    for name, field in (("alpha", "alpha"), ("V", "V"), ("d", "d"), ("gamma_max", "gamma_max"), ("sigma_max", "sigma_max")):
        value = getattr(args, name)
        if value is not None:
            fair[field] = value
    if fair:
        cfg = cfg.replace(fairness=dataclasses.replace(cfg.fairness, **fair))
    power = None
    if args.power_db is not None:
        power = cfgmod.db_to_linear(args.power_db)
    elif args.power_linear is not None:
        power = args.power_linear
    if power is not None:
        cfg = cfg.replace(params=dataclasses.replace(cfg.params, P=float(power)))
    changes = {}
    if args.horizon is not None:
        changes["horizon"] = args.horizon
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.sample_every is not None:
        changes["sample_every"] = args.sample_every
    if getattr(args, "policy", None):
        changes["policy"] = args.policy
    if changes:
        cfg = cfg.replace(**changes)
    return cfg.validate()


def output_dir(args):
    path = args.output_dir or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {path}: {exc.strerror}") from None
    if not os.access(path, os.W_OK):
        raise ConfigError(f"output directory {path} is not writable")
    return path


def _write(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc.strerror}") from None
    print(f"wrote {path}")


def _name(args, default):
    return f"{args.tag}_{default}" if args.tag else default


def _report(metrics_list):
    for m in metrics_list:
        print(f"{m.scheme:12s} K={m.K} alpha={m.alpha:g} V={m.V:g} seed={m.seed}: "
              f"sum rate {m.sum_rate:.4f} files/slot, utility {m.utility:.4f}")


def _emit(args, out, stem, cfg, metrics_list, summary=False):
    _write(os.path.join(out, f"{stem}.cfg"), cfgmod.dumps(cfg))
    _write(os.path.join(out, f"{stem}.csv"), results.per_user_csv(metrics_list))
    if summary:
        _write(os.path.join(out, f"{stem}_summary.csv"), results.summary_csv(metrics_list))
    if cfg.sample_every:
        _write(os.path.join(out, f"{stem}_trajectories.json"), results.trajectories_json(metrics_list, cfg.sample_every))


def cmd_run(args):
    cfg = resolve_config(args)
    out = output_dir(args)
    t = time.perf_counter()
    m = run(cfg)
    _report([m])
    print(f"{cfg.horizon} slots in {time.perf_counter() - t:.1f} s")
    _emit(args, out, _name(args, "run"), cfg, [m])
    return EXIT_OK


def cmd_sweep(args):
    cfg = resolve_config(args)
    out = output_dir(args)
    values = [int(v) if args.axis == "K" else v for v in args.values]
    if args.axis == "K" and any(v != int(v) for v in args.values):
        raise ConfigError("K values must be integers")
    configs = sweep_configs(cfg, args.axis, values)
    metrics = run_many(configs, workers=args.workers)
    _report(metrics)
    _emit(args, out, _name(args, f"sweep_{args.axis}"), cfg, metrics, summary=True)
    return EXIT_OK


def cmd_compare(args):
    cfg = resolve_config(args)
    out = output_dir(args)
    metrics = [run(cfg.replace(policy=p)) for p in ("proposed", "unicast_opp", "standard_cc")]
    _report(metrics)
    _emit(args, out, _name(args, "compare"), cfg.replace(policy="proposed"), metrics, summary=True)
    return EXIT_OK


def cmd_check(args):
    from .checks import run_checks

    res = run_checks(quick=args.quick)
    for r in res:
        print(r.line())
    failed = sum(not r.passed for r in res)
    print(f"{len(res) - failed}/{len(res)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_FAILED


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "compare": cmd_compare, "check": cmd_check}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, DomainError, ContractViolation) as exc:
        print(f"faircc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
