"""Command-line interface.

    fractel ml        --alpha A --beta B --z Z [--deriv]
    fractel cf        {hadamard,space-hadamard,hilfer} ...
    fractel density   {telegraph,inverted} ...
    fractel simulate  {telegraph,brownian-time,stable,inverse-time} ... --seed S
    fractel validate  {kernels,eigen,mc,all} --seed S

Exit codes: 0 success, 2 invalid parameters (a JSON error object goes to
stderr), 1 numerical failure or a failed validation check.  Every run that
writes a file also writes ``<out>.config.json`` with the resolved
configuration; without ``--out`` data goes to stdout and the configuration
to stderr.  The thread count can be set with FRACTEL_THREADS; it never
changes results.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from fractel import __version__
from fractel.errors import NumericalError, ParameterError

EXIT_OK, EXIT_NUMERICAL, EXIT_PARAMETER = 0, 1, 2


@dataclass
class RunConfig:
    command: str
    target: str | None
    params: dict = field(default_factory=dict)
    out: str | None = None
    seed: int | None = None
    version: str = __version__


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParameterError(message)


def _num(v: float) -> str:
    return repr(float(v))


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fractel", description="Fractional telegraph equations: evaluation, simulation, validation.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ml = sub.add_parser("ml", help="Mittag-Leffler function E_{alpha,beta}(z)")
    ml.add_argument("--alpha", type=float, required=True)
    ml.add_argument("--beta", type=float, default=1.0)
    ml.add_argument("--z", type=complex, required=True)
    ml.add_argument("--deriv", action="store_true", help="evaluate d/dz instead")
    ml.add_argument("--out")

    cf = sub.add_parser("cf", help="characteristic function on a beta grid (CSV beta,re,im)")
    cf.add_argument("target", choices=["hadamard", "space-hadamard", "hilfer"])
    cf.add_argument("--nu", type=float, default=0.5)
    cf.add_argument("--gamma", type=float, default=0.5)
    cf.add_argument("--delta", type=float, default=1.0)
    cf.add_argument("--extended", action="store_true", help="allow delta up to 3/2")
    cf.add_argument("--lambda", dest="lam", type=float, default=1.0)
    cf.add_argument("--c", type=float, default=1.0)
    cf.add_argument("--omega", type=float, default=0.0)
    cf.add_argument("--t0", type=float, default=1.0)
    cf.add_argument("--t", type=float, default=math.e)
    cf.add_argument("--alpha", type=float, default=2.0)
    cf.add_argument("--theta", type=float, default=0.0)
    cf.add_argument("--f1", type=complex, default=1.0, help="Fourier transform of u(x,0), constant in beta")
    cf.add_argument("--f2", type=complex, default=0.0, help="Fourier transform of u_t(x,0), constant in beta")
    cf.add_argument("--beta-max", type=float, default=10.0)
    cf.add_argument("--n-beta", type=int, default=201)
    cf.add_argument("--out")

    de = sub.add_parser("density", help="density on an x grid (CSV x,pdf; atoms in <out>.atoms.json)")
    de.add_argument("target", choices=["telegraph", "inverted"])
    de.add_argument("--nu", type=float, default=1.0)
    de.add_argument("--lambda", dest="lam", type=float, default=1.0)
    de.add_argument("--c", type=float, default=1.0)
    de.add_argument("--t0", type=float, default=1.0)
    de.add_argument("--t", type=float, default=2.0)
    de.add_argument("--alpha", type=float, default=2.0)
    de.add_argument("--x-max", type=float, default=None, help="default: 1.5 c tau (or 10 for alpha < 2)")
    de.add_argument("--n-x", type=int, default=401)
    de.add_argument("--out")

    si = sub.add_parser("simulate", help="Monte-Carlo samples (CSV column value, JSON header line)")
    si.add_argument("target", choices=["telegraph", "brownian-time", "stable", "inverse-time"])
    si.add_argument("--lambda", dest="lam", type=float, default=1.0)
    si.add_argument("--c", type=float, default=1.0)
    si.add_argument("--t0", type=float, default=1.0)
    si.add_argument("--t", type=float, default=2.0)
    si.add_argument("--nu", type=float, default=0.5)
    si.add_argument("--alpha", type=float, default=2.0)
    si.add_argument("--grid-step", type=float, default=None)
    si.add_argument("--n", type=int, default=10000)
    si.add_argument("--seed", type=int, default=0)
    si.add_argument("--stream", type=int, default=0)
    si.add_argument("--out")

    va = sub.add_parser("validate", help="run validation checks (JSON reports)")
    va.add_argument("target", choices=["kernels", "eigen", "mc", "all"])
    va.add_argument("--seed", type=int, default=42)
    va.add_argument("--out")
    return p


# ---------------------------------------------------------------------------
# commands


def _run_ml(a):
    from fractel.specfun import MLArgs, ml, ml_deriv

    args = MLArgs(a.alpha, a.beta, a.z)
    r = (ml_deriv if a.deriv else ml)(args)
    v = complex(r.value)
    doc = {
        "value": [v.real, v.imag],
        "certified": bool(r.certified),
        "branch": r.branch_used.value if hasattr(r.branch_used, "value") else str(r.branch_used),
        "est_abs_error": float(r.est_abs_error),
    }
    return json.dumps(doc, sort_keys=True) + "\n", None


def _cf_function(a):
    from fractel.operators import RieszFellerParams
    from fractel.solutions import HadamardModel, HilferModel, hadamard_cf, hilfer_cf, space_hadamard_cf

    if a.target == "hilfer":
        model = HilferModel(a.gamma, a.delta, a.lam, a.c, a.omega, RieszFellerParams(a.alpha, a.theta), a.extended)
        if not a.t > 0:
            raise ParameterError(f"t must be > 0, got {a.t}")
        return lambda b: hilfer_cf(model, a.t, b, a.f1, a.f2)
    model = HadamardModel(a.nu, a.lam, a.c, a.t0, a.alpha if a.target == "space-hadamard" else 2.0)
    model.log_time(a.t)
    if a.target == "hadamard":
        return lambda b: hadamard_cf(model, a.t, b)
    RieszFellerParams(a.alpha, a.theta)
    return lambda b: space_hadamard_cf(model, a.theta, a.t, b)


def _run_cf(a):
    if a.n_beta < 2 or not a.beta_max > 0:
        raise ParameterError("need --n-beta >= 2 and --beta-max > 0")
    f = _cf_function(a)
    betas = np.linspace(-a.beta_max, a.beta_max, a.n_beta)
    vals = np.asarray(f(betas), dtype=complex)
    buf = io.StringIO()
    buf.write("beta,re,im\n")
    for b, v in zip(betas, vals):
        buf.write(f"{_num(b)},{_num(v.real)},{_num(v.imag)}\n")
    return buf.getvalue(), None


def _run_density(a):
    from fractel.solutions import HadamardModel, hadamard_cf, invert_cf, space_hadamard_cf, telegraph_density, telegraph_edge_value

    if a.n_x < 2:
        raise ParameterError("need --n-x >= 2")
    if a.target == "telegraph":
        if not a.t > 0:
            raise ParameterError(f"t must be > 0, got {a.t}")
        x_max = a.x_max or 1.5 * a.c * a.t
        x = np.linspace(-x_max, x_max, a.n_x)
        d = telegraph_density(a.lam, a.c, a.t, x)
    else:
        model = HadamardModel(a.nu, a.lam, a.c, a.t0, a.alpha)
        tau = model.log_time(a.t)
        if not tau > 0:
            raise ParameterError("t must exceed t0")
        x_max = a.x_max or (1.5 * a.c * tau if a.alpha == 2.0 else 10.0)
        x = np.linspace(-x_max, x_max, a.n_x)
        atoms, boxes = None, None
        if a.nu == 1.0 and a.alpha == 2.0:
            # log-time telegraph law: atoms at +-c tau and the jump of the
            # continuous part at the same points are removed analytically
            w = 0.5 * math.exp(-a.lam * tau)
            atoms = [(-a.c * tau, w), (a.c * tau, w)]
            boxes = [(-a.c * tau, a.c * tau, telegraph_edge_value(a.lam, a.c, tau))]
        if a.alpha == 2.0:
            cf = lambda b: hadamard_cf(model, a.t, b)  # noqa: E731
        else:
            cf = lambda b: space_hadamard_cf(model, 0.0, a.t, b)  # noqa: E731
        d = invert_cf(cf, x, atoms=atoms, boxes=boxes)
    buf = io.StringIO()
    buf.write("x,pdf\n")
    for xv, pv in zip(d.x_grid, d.pdf):
        buf.write(f"{_num(xv)},{_num(pv)}\n")
    side = {
        "atoms": [{"location": float(loc), "mass": float(m)} for loc, m in d.atoms],
        "est_trunc_error": None if d.est_trunc_error is None else float(d.est_trunc_error),
        "mass_in_grid": None if d.mass_in_grid is None else float(d.mass_in_grid),
        "resolution_limited": bool(d.resolution_limited),
    }
    return buf.getvalue(), side


def _run_simulate(a):
    from fractel.stochastic import (
        RngSpec,
        sample_stable_symmetric,
        sim_brownian_time_telegraph,
        sim_inverse_time,
        sim_telegraph,
    )

    if a.n < 1:
        raise ParameterError("need --n >= 1")
    rng = RngSpec(a.seed, a.stream)
    if a.target == "telegraph":
        batch = sim_telegraph(a.lam, a.c, a.t, a.n, rng)
        params = {"lambda": a.lam, "c": a.c, "t": a.t}
    elif a.target == "brownian-time":
        batch = sim_brownian_time_telegraph(a.lam, a.c, a.t0, a.t, a.n, rng)
        params = {"lambda": a.lam, "c": a.c, "t0": a.t0, "t": a.t}
    elif a.target == "stable":
        batch = sample_stable_symmetric(a.alpha, a.t, a.n, rng)
        params = {"alpha": a.alpha, "time_scale": a.t}
    else:
        batch = sim_inverse_time(a.nu, a.lam, a.t, a.n, rng, a.grid_step)
        params = {"nu": a.nu, "lambda": a.lam, "t": a.t, "grid_step": a.grid_step}
    header = {"target": a.target, "params": params, "seed": a.seed, "stream": a.stream, "n": a.n}
    buf = io.StringIO()
    buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
    buf.write("value\n")
    for v in batch.values:
        buf.write(_num(v) + "\n")
    return buf.getvalue(), None


def _run_validate(a):
    from fractel.validation import run_suite

    reports = run_suite(a.seed, a.target)
    doc = [r.to_dict() for r in reports]
    text = json.dumps(doc, sort_keys=True, indent=1) + "\n"
    failed = [r.name for r in reports if not r.passed]
    return text, {"failed": failed}


_COMMANDS = {
    "ml": _run_ml,
    "cf": _run_cf,
    "density": _run_density,
    "simulate": _run_simulate,
    "validate": _run_validate,
}


def _config(a) -> RunConfig:
    params = {k: v for k, v in vars(a).items() if k not in ("command", "target", "out", "seed")}
    params = {k: ([v.real, v.imag] if isinstance(v, complex) else v) for k, v in params.items()}
    return RunConfig(a.command, getattr(a, "target", None), params, a.out, getattr(a, "seed", None))


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        a = build_parser().parse_args(argv)
        cfg = _config(a)
        text, extra = _COMMANDS[a.command](a)
    except ParameterError as exc:
        stderr.write(json.dumps({"error": "parameter", "message": str(exc)}) + "\n")
        return EXIT_PARAMETER
    except (NumericalError, ArithmeticError) as exc:
        stderr.write(json.dumps({"error": "numerical", "type": type(exc).__name__, "message": str(exc)}) + "\n")
        return EXIT_NUMERICAL

    config_text = json.dumps(asdict(cfg), sort_keys=True, indent=1) + "\n"
    if a.out:
        with open(a.out, "w", newline="\n") as fh:
            fh.write(text)
        with open(a.out + ".config.json", "w") as fh:
            fh.write(config_text)
        if a.command == "density":
            with open(a.out + ".atoms.json", "w") as fh:
                fh.write(json.dumps(extra, sort_keys=True, indent=1) + "\n")
    else:
        stdout.write(text)
        stderr.write(config_text)
        if a.command == "density":
            stderr.write(json.dumps(extra, sort_keys=True) + "\n")

    if a.command == "validate" and extra["failed"]:
        stderr.write(json.dumps({"error": "validation", "failed": extra["failed"]}) + "\n")
        return EXIT_NUMERICAL
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
