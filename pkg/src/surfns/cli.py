"""Command line interface: ``surfns converge | deform | selftest``."""
import argparse
import logging
import os
import sys

from .bench.config import ConfigError, load_config

log = logging.getLogger("surfns")

# option name -> (type, default)
OPTIONS = {
    "level": (int, 3),
    "levels": (str, "2,3,4"),
    "dt": (float, None),
    "dt0": (float, 0.05),
    "T": (float, 1.0),
    "mu": (float, None),
    "c_delta": (float, 1.1),
    "rg": (int, 2),
    "bdf": (int, 2),
    "tau_scale": (float, 1.0),
    "rho_u_scale": (float, 1.0),
    "rho_p_scale": (float, 1.0),
    "case": (str, None),
    "fix_inextensibility": (bool, False),
    "out": (str, None),
    "vtk": (str, None),
    "deterministic": (bool, False),
    "threads": (int, 1),
    "solver": (str, "direct"),
    "seed": (int, 0),
}

CASES = ("manufactured", "axisymmetric", "asymmetric")


def _bool(value):
    if isinstance(value, bool):
        return value
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; command-line flags override it")
    common.add_argument("--level", type=int)
    common.add_argument("--levels", help="comma separated, e.g. 2,3,4")
    common.add_argument("--dt", type=float)
    common.add_argument("--dt0", type=float)
    common.add_argument("--T", type=float, dest="T")
    common.add_argument("--mu", type=float)
    common.add_argument("--c-delta", type=float, dest="c_delta")
    common.add_argument("--rg", type=int)
    common.add_argument("--bdf", type=int, choices=(1, 2))
    common.add_argument("--tau-scale", type=float, dest="tau_scale")
    common.add_argument("--rho-u-scale", type=float, dest="rho_u_scale")
    common.add_argument("--rho-p-scale", type=float, dest="rho_p_scale")
    common.add_argument("--case", choices=CASES)
    common.add_argument("--fix-inextensibility", action="store_const", const=True,
                        dest="fix_inextensibility")
    common.add_argument("--out")
    common.add_argument("--vtk")
    common.add_argument("--deterministic", action="store_const", const=True)
    common.add_argument("--threads", type=int)
    common.add_argument("--solver", choices=("direct", "gmres"))
    common.add_argument("--seed", type=int)
    common.add_argument("-v", "--verbose", action="count", default=0)
    parser = argparse.ArgumentParser(prog="surfns", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("converge", parents=[common],
                   help="manufactured-solution convergence study (error table)")
    sub.add_parser("deform", parents=[common], help="tangential flow on a deforming sphere")
    sub.add_parser("selftest", parents=[common], help="quick internal consistency checks")
    return parser


def resolve_options(args):
    """Defaults < config file < command line."""
    opts = {k: d for k, (_, d) in OPTIONS.items()}
    if args.config:
        for key, value in load_config(args.config).items():
            key = "T" if key == "t" else key
            if key not in OPTIONS:
                raise ConfigError(f"unknown configuration key {key!r}")
            typ = OPTIONS[key][0]
            opts[key] = _bool(value) if typ is bool else typ(value)
    for key in OPTIONS:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    if opts["bdf"] not in (1, 2):
        raise ConfigError("bdf must be 1 or 2")
    if opts["solver"] not in ("direct", "gmres"):
        raise ConfigError("solver must be 'direct' or 'gmres'")
    if opts["case"] is not None and opts["case"] not in CASES:
        raise ConfigError(f"case must be one of {CASES}")
    return opts


def _run_config(opts, level, dt, mu):
    from .stepping import RunConfig
    return RunConfig(level=level, dt=dt, T=opts["T"], c_delta=opts["c_delta"], mu=mu,
                     tau_scale=opts["tau_scale"], rho_u_scale=opts["rho_u_scale"],
                     rho_p_scale=opts["rho_p_scale"], rg=opts["rg"], bdf=opts["bdf"],
                     solver=opts["solver"], threads=1 if opts["deterministic"] else opts["threads"],
                     deterministic=opts["deterministic"])


def cmd_converge(opts):
    from .bench import ManufacturedCase, run_convergence
    if opts["case"] not in (None, "manufactured"):
        raise ConfigError("converge only supports --case manufactured")
    levels = [int(v) for v in str(opts["levels"]).split(",") if v.strip()]
    case = ManufacturedCase(mu=opts["mu"] if opts["mu"] is not None else 5e-3, T=opts["T"])
    dt0 = opts["dt0"] if opts["dt"] is None else opts["dt"]
    config = _run_config(opts, levels[0], dt0, case.mu)
    out = opts["out"] or "results"
    table, _ = run_convergence(levels, dt0, config=config, case=case, out=out)
    print(table.format())
    print(f"wrote {os.path.join(out, 'errors.csv')}")
    return 0


def cmd_deform(opts):
    from .bench import DeformCase, run_deform
    name = opts["case"] or "axisymmetric"
    if name == "axisymmetric":
        case = DeformCase.axisymmetric(**({"mu": opts["mu"]} if opts["mu"] else {}))
    elif name == "asymmetric":
        kw = {"mu": opts["mu"]} if opts["mu"] else {}
        case = DeformCase.asymmetric(fix_inextensibility=opts["fix_inextensibility"], **kw)
    else:
        raise ConfigError("deform needs --case axisymmetric or asymmetric")
    dt = opts["dt"] if opts["dt"] is not None else 0.02
    config = _run_config(opts, opts["level"], dt, case.mu)
    out = opts["out"] or "results"
    series, _ = run_deform(case, config, out=out, vtk=opts["vtk"])
    dev = max(abs(r["rel_area_change"]) for r in series)
    print(f"case {case.name}: level {config.level}, dt {dt}, steps {len(series) - 1}")
    print(f"max relative area change {dev:.3e}")
    print(f"wrote {os.path.join(out, 'timeseries.csv')}")
    return 0


def cmd_selftest(opts):
    from .selftest import run_selftest
    ok = run_selftest(seed=opts["seed"], verbose=True)
    return 0 if ok else 1


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        opts = resolve_options(args)
    except (ConfigError, OSError, ValueError) as err:
        parser.print_usage(sys.stderr)
        print(f"surfns: error: {err}", file=sys.stderr)
        return 2
    if opts["deterministic"]:
        for var in ("OMP_NUM_THREADS", "MKL_NUM_THREADS", "OPENBLAS_NUM_THREADS"):
            os.environ[var] = "1"
    commands = {"converge": cmd_converge, "deform": cmd_deform, "selftest": cmd_selftest}
    try:
        return commands[args.command](opts)
    except ConfigError as err:
        print(f"surfns: error: {err}", file=sys.stderr)
        return 2
    except Exception as err:  # runtime failure
        log.debug("failure", exc_info=True)
        print(f"surfns: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
