"""Command line entry point: ``levylab <subcommand> [options]``.

Subcommands
-----------
density      Lévy density, characteristic exponent and free transition density.
survive-mc   Monte Carlo survival probabilities.
survive-pde  Grid-solver survival probabilities.
eigen        First Dirichlet eigenpair with its refinement table.
check        Run selected checks of a configuration, or list the catalog.
run          Run every check of a configuration and write the report bundle.

Results go to standard output as JSON; ``--out DIR`` also writes files (the
default directory comes from ``$LEVYLAB_OUT``).  Exit status: 0 on success,
1 when a check fails, 2 on invalid input or a refused model.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys

import numpy as np

from levylab import io as lio
from levylab.config import (ConfigError, ExperimentConfig, HypothesisRefusal, gate_hypotheses,
                            load_config, parse_config)
from levylab.errors import LevyLabError
from levylab.experiments import list_checks, run
from levylab.models import char_exponent, levy_density, transition_density


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="YAML or JSON experiment configuration")
    p.add_argument("--seed", type=int, help="base seed (overrides the configuration)")
    p.add_argument("--out", help="output directory (default: $LEVYLAB_OUT or ./levylab-out)")
    p.add_argument("--jobs", type=int, help="worker threads for path simulation")
    p.add_argument("--validate-only", action="store_true",
                   help="validate the configuration and model hypotheses, then exit")
    p.add_argument("--validation-mode", action="store_true",
                   help="allow models outside the standing hypotheses (solver validation)")
    p.add_argument("-v", "--verbose", action="store_true")


def _model_flags(p: argparse.ArgumentParser):
    p.add_argument("--kind", choices=["alpha_stable", "tempered_stable", "truncated_stable",
                                      "brownian_reference"])
    p.add_argument("--alpha", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--R", type=float)
    p.add_argument("--dimension", type=int, choices=[1, 2])
    p.add_argument("--scale", type=float)


def _domain_flags(p: argparse.ArgumentParser):
    p.add_argument("--a", type=float, help="half-width in the first coordinate")
    p.add_argument("--b", type=float, help="half-width in the second coordinate (box)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="levylab", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("density", help="nu(r), psi(xi) and p_t(x)")
    _common(p)
    _model_flags(p)
    p.add_argument("--r", type=_floats, default=[], help="radii for nu, comma separated")
    p.add_argument("--xi", type=_floats, default=[], help="frequencies for psi")
    p.add_argument("--t", type=float, help="time for the transition density")
    p.add_argument("--x", type=_floats, default=[], help="points for the transition density")

    for name, helptext in (("survive-mc", "Monte Carlo survival probabilities"),
                           ("survive-pde", "grid-solver survival probabilities")):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        _model_flags(p)
        _domain_flags(p)
        p.add_argument("--x", type=_floats, default=[0.0],
                       help="start points on the first axis (comma separated)")
        p.add_argument("--x2", type=float, default=0.0, help="second coordinate in a box")
        p.add_argument("--t", type=_floats, default=[1.0], help="horizons")
        if name == "survive-mc":
            p.add_argument("--n", type=int, default=100_000)
            p.add_argument("--eps", type=float)
        else:
            p.add_argument("--N", type=int, default=512)

    p = sub.add_parser("eigen", help="first Dirichlet eigenpair")
    _common(p)
    _model_flags(p)
    _domain_flags(p)
    p.add_argument("--N", type=int, default=512)
    p.add_argument("--no-refine", action="store_true", help="skip the N/2 and 2N levels")

    p = sub.add_parser("check", help="run selected checks of a configuration")
    _common(p)
    p.add_argument("ids", nargs="*", help="check ids to run (default: all in the configuration)")
    p.add_argument("--list", action="store_true", help="print the check catalog")

    p = sub.add_parser("run", help="run a configuration and write the report bundle")
    _common(p)
    return parser


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    over = {"seed": args.seed, "jobs": args.jobs}
    if args.validation_mode:
        over["validation_mode"] = True
    return cfg.with_overrides(**over)


def _with_model(cfg: ExperimentConfig, args) -> ExperimentConfig:
    data = cfg.model.model_dump()
    for k in ("kind", "alpha", "theta", "R", "dimension", "scale"):
        v = getattr(args, k, None)
        if v is not None:
            data[k] = v
    dom = cfg.domain.model_dump()
    for k in ("a", "b"):
        v = getattr(args, k, None)
        if v is not None:
            dom[k] = v
    if data.get("dimension") == 2 and dom.get("b") is None:
        dom["b"] = dom["a"]
    full = cfg.model_dump()
    full["model"] = data
    full["domain"] = dom
    return parse_config(full)


_NOT_INPUTS = {"config", "out", "jobs", "validate_only", "validation_mode", "verbose"}


def _input_hash(args, cfg: ExperimentConfig) -> str:
    """Hash of the configuration together with the subcommand's own arguments."""
    inputs = {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_INPUTS}
    text = cfg.canonical() + lio.dumps(inputs)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _emit(payload, args, cfg: ExperimentConfig, name: str):
    chash = _input_hash(args, cfg)
    sys.stdout.write(lio.dumps({"meta": {"config_hash": chash, "seed": cfg.seed}, "data": payload}))
    if args.out is not None or cfg.output_dir is not None:
        path = cfg.out_dir(args.out) / name
        lio.write_json(path, payload, chash, cfg.seed)
        print(f"wrote {path}", file=sys.stderr)
    return chash


def cmd_density(args, cfg):
    m = cfg.model.build()
    out = {"model": m.to_dict()}
    if args.r:
        out["nu"] = {"r": args.r, "value": [float(levy_density(m, r)) for r in args.r]}
    if args.xi:
        out["psi"] = {"xi": args.xi, "value": [float(char_exponent(m, x)) for x in args.xi]}
    if args.t is not None:
        xs = args.x or [0.0]
        out["transition_density"] = {"t": args.t, "x": xs,
                                     "value": [float(transition_density(m, args.t, x)) for x in xs]}
    _emit(out, args, cfg, "density.json")
    return 0


def _points(args, cfg) -> np.ndarray:
    x = np.asarray(args.x, dtype=float)
    if cfg.model.dimension == 2:
        return np.column_stack([x, np.full_like(x, args.x2)])
    return x.reshape(-1, 1)


def cmd_survive_mc(args, cfg):
    from levylab.pathsim import estimate_survival_profiles

    m, d = cfg.model.build(), cfg.domain.build()
    profs = estimate_survival_profiles(m, d, _points(args, cfg), args.t, args.n, args.eps,
                                       cfg.seed, cfg.jobs)
    out = {"model": m.to_dict(), "domain": d.to_dict(),
           "estimates": [e.to_dict() for p in profs.values() for e in p.estimates]}
    _emit(out, args, cfg, "survive_mc.json")
    return 0


def cmd_survive_pde(args, cfg):
    from levylab.solver.grid import Grid1D, Grid2D
    from levylab.solver.semigroup import node_interp, survival_pde

    m, d = cfg.model.build(), cfg.domain.build()
    pts = _points(args, cfg)
    rows = []
    for t in args.t:
        if d.dimension == 1:
            g = Grid1D(d.a, args.N)
            vals = node_interp(g, survival_pde(m, d, t, g), pts[:, 0])
        else:
            g = Grid2D(d.a, d.b, args.N)
            vals = g.interpolate(survival_pde(m, d, t, g), pts)
        rows.append({"t": t, "points": pts, "values": vals, "N": args.N})
    _emit({"model": m.to_dict(), "domain": d.to_dict(), "survival": rows}, args, cfg,
          "survive_pde.json")
    return 0


def cmd_eigen(args, cfg):
    from levylab.solver.eigen import first_eigenpair
    from levylab.solver.grid import Grid1D, Grid2D

    m, d = cfg.model.build(), cfg.domain.build()
    g = Grid1D(d.a, args.N) if d.dimension == 1 else Grid2D(d.a, d.b, args.N)
    pair = first_eigenpair(m, d, g, refine=not args.no_refine)
    chash = _emit({"model": m.to_dict(), "domain": d.to_dict(), "eigenpair": pair.to_dict()},
                  args, cfg, "eigen.json")
    if args.out is not None and d.dimension == 1:
        lio.write_csv(cfg.out_dir(args.out) / "eigen_phi1.csv", {"x": g.nodes, "phi": pair.phi},
                      chash, cfg.seed)
    return 0


def cmd_run(args, cfg, only=None):
    res = run(cfg, args.out, only)
    print(res.table())
    print(f"reports in {cfg.out_dir(args.out)}", file=sys.stderr)
    return res.exit_code


def cmd_check(args, cfg):
    if args.list:
        for c in list_checks():
            print(f"{c['id']:<24} {c['title']}: {c['statement']}")
        return 0
    if not args.config:
        raise ConfigError("check needs --config (or --list)")
    known = {c.id for c in cfg.checks}
    missing = [i for i in args.ids if i not in known]
    if missing:
        raise ConfigError(f"checks not in the configuration: {', '.join(missing)}")
    return cmd_run(args, cfg, set(args.ids) or None)


COMMANDS = {"density": cmd_density, "survive-mc": cmd_survive_mc, "survive-pde": cmd_survive_pde,
            "eigen": cmd_eigen, "check": cmd_check, "run": cmd_run}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load(args)
        if args.command in ("density", "survive-mc", "survive-pde", "eigen"):
            cfg = _with_model(cfg, args)
        if args.command == "run" and not args.config:
            raise ConfigError("run needs --config")
        if not (args.command == "check" and args.list):
            reports = gate_hypotheses(cfg)
            if args.validate_only:
                print(lio.dumps({"config_hash": cfg.config_hash, "valid": True,
                                 "hypotheses": reports}), end="")
                return 0
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except HypothesisRefusal as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    except (LevyLabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
