"""Command line interface: ``levy-expfun <subcommand> ...``.

Single values are printed as JSON.  The exit code is 0 unless a check fails or
an error is raised.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .errors import LevyExpfunError
from .levy_model import LevyModel


def _complex(s: str) -> complex:
    return complex(s.replace(" ", "").replace("i", "j"))


def _model(path) -> LevyModel:
    return LevyModel.from_json(path)


def _cplx_out(v, err=None, **extra):
    v = complex(np.asarray(v).reshape(-1)[0])
    d = {"re": v.real, "im": v.imag}
    if err is not None:
        d["err_estimate"] = float(err)
    d.update(extra)
    return d


def cmd_eval_psi(args):
    from .levy_model import psi

    return _cplx_out(psi(_model(args.model), _complex(args.z), args.q))


def cmd_wiener_hopf(args):
    from .wiener_hopf import log_phi_time

    val, err = log_phi_time(_model(args.model), args.sign, args.q,
                            np.array([_complex(args.z)]))
    v = np.exp(val)
    return _cplx_out(v, abs(v[0]) * float(np.max(err)))


def cmd_bgamma(args):
    from .bernstein_gamma import log_bivariate_W, log_W_integral_rep
    from .wiener_hopf import WienerHopfPair

    pair = WienerHopfPair(_model(args.model))
    z = _complex(args.z)
    if args.route == "integral":
        # integral route evaluates log W(1 + z')
        lw = log_W_integral_rep(pair, args.sign, args.q, z - 1)
        return _cplx_out(np.exp(lw), None, route="integral")
    lw, err = log_bivariate_W(pair, args.sign, args.q, np.array([z]))
    v = np.exp(lw)
    return _cplx_out(v, abs(v[0]) * float(np.max(err)), route="product")


def cmd_potential(args):
    from .potentials import potential_power

    pm = potential_power(_model(args.model), args.q, args.power, args.grid)
    m = pm.measure
    rows = np.column_stack([m.centers, m.masses])
    if args.out:
        np.savetxt(args.out, rows, delimiter=",", header="cell_center,mass", comments="",
                   fmt="%.17g")
    return {"total": m.total(), "atoms": [[x, a] for x, a in m.atoms], "out": args.out,
            "construction": pm.construction}


def cmd_mellin(args):
    from .mellin_limits import mellin
    from .wiener_hopf import WienerHopfPair

    return _cplx_out(mellin(WienerHopfPair(_model(args.model)), args.q, np.array([_complex(args.z)])))


def cmd_limit_cdf(args):
    from .mellin_limits import limit_cdf, limit_constant
    from .wiener_hopf import WienerHopfPair

    pair = WienerHopfPair(_model(args.model))
    cdf, err = limit_cdf(pair, args.a, args.alpha, args.x, b=args.b, return_error=True)
    return {"cdf": float(cdf), "total_mass": limit_constant(pair, args.a, args.alpha),
            "err_estimate": float(err)}


def cmd_simulate(args):
    from . import montecarlo as mc

    model = _model(args.model)
    if args.x is None:
        est = mc.estimate_moment(model, args.t, args.a, args.n, args.seed, dt=args.dt)
    else:
        est = mc.estimate_truncated(model, args.t, args.a, args.x, args.n, args.seed, dt=args.dt)
    return est.to_dict()


def cmd_experiment(args):
    from .experiments import ExperimentConfig, result_to_dict, run_experiment

    res = result_to_dict(run_experiment(ExperimentConfig.from_json(args.config)))
    return res, bool(res.get("passed", True))


def cmd_check(args):
    from .experiments import STANDARD_MODELS, identity_suite

    models = dict(STANDARD_MODELS)
    if args.model:
        models = {p: p for p in args.model}
    rep = identity_suite(models=models, gauge=args.gauge)
    return rep, rep["passed"]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="levy-expfun",
                                description="Exponential functionals of Levy processes.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("eval-psi", help="Levy-Khintchine exponent")
    s.add_argument("--model", required=True)
    s.add_argument("--z", required=True)
    s.add_argument("--q", type=float, default=0.0)
    s.set_defaults(func=cmd_eval_psi)

    s = sub.add_parser("wiener-hopf", help="Wiener-Hopf factor phi_+/-(q, z)")
    s.add_argument("--model", required=True)
    s.add_argument("--q", type=float, required=True)
    s.add_argument("--z", required=True)
    s.add_argument("--sign", choices=["plus", "minus"], default="plus")
    s.set_defaults(func=cmd_wiener_hopf)

    s = sub.add_parser("bgamma", help="bivariate Bernstein-gamma function")
    s.add_argument("--model", required=True)
    s.add_argument("--sign", choices=["plus", "minus"], default="plus")
    s.add_argument("--q", type=float, required=True)
    s.add_argument("--z", required=True)
    s.add_argument("--route", choices=["product", "integral"], default="product")
    s.set_defaults(func=cmd_bgamma)

    s = sub.add_parser("potential", help="q-potential measure and its convolution powers")
    s.add_argument("--model", required=True)
    s.add_argument("--q", type=float, required=True)
    s.add_argument("--power", type=int, default=1)
    s.add_argument("--grid", required=True, help='"lo,hi,n_cells"')
    s.add_argument("--out")
    s.set_defaults(func=cmd_potential)

    s = sub.add_parser("mellin", help="Mellin transform M(q, z)")
    s.add_argument("--model", required=True)
    s.add_argument("--q", type=float, required=True)
    s.add_argument("--z", required=True)
    s.set_defaults(func=cmd_mellin)

    s = sub.add_parser("limit-cdf", help="distribution function of the limit measure")
    s.add_argument("--model", required=True)
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--x", type=float, required=True)
    s.add_argument("--b", type=float, default=-0.25)
    s.set_defaults(func=cmd_limit_cdf)

    s = sub.add_parser("simulate", help="Monte Carlo moment of I(t)")
    s.add_argument("--model", required=True)
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--x", type=float)
    s.add_argument("--dt", type=float)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("experiment", help="run an experiment config")
    s.add_argument("--config", required=True)
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("check", help="identity suite")
    s.add_argument("--model", action="append", help="model file (repeatable)")
    s.add_argument("--gauge", type=float, default=2.0)
    s.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if hasattr(args, "sign"):
        args.sign = "+" if args.sign == "plus" else "-"
    try:
        out = args.func(args)
    except (LevyExpfunError, ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}))
        return 2
    ok = True
    if isinstance(out, tuple):
        out, ok = out
    print(json.dumps(out, indent=2, default=float))
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
