"""Command-line interface: ``lremreg {check,solve,irf,spectrum,simulate,example}``.

Exit codes
----------
0   success (``check``: unique solution)
1   input error (bad flags, unreadable or malformed files)
2   singular pencil, unit root or reordering failure
3   simulated path failed the residual check
10  ``check``: indeterminate
11  regularized solution not unique; the minimal-norm member was written
20  no stationary solution
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import examples as ex
from .analysis import impulse_response, residual_check, simulate, spectral_density
from .errors import LremError, ModelFileError, NoSolution, ReorderFailure, SingularPencil, UnitRoot
from .io import (
    csv_text,
    dumps,
    matrices_csv,
    model_fingerprint,
    read_model,
    read_solution,
    read_weight,
    solution_to_dict,
    write_model,
    write_weight,
)
from .regularize import ConstantWeight, QuadratureConfig, regularize
from .solver import Tolerances, baseline_solution, check_existence, check_uniqueness, decompose

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_PENCIL = 2
EXIT_RESIDUAL = 3
EXIT_INDETERMINATE = 10
EXIT_NONUNIQUE_REG = 11
EXIT_NO_SOLUTION = 20


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _emit(text: str, out) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _tols(args) -> Tolerances:
    return Tolerances(unit_tol=args.unit_tol)


def _quad(args) -> QuadratureConfig:
    return QuadratureConfig(tol=args.quad_tol)


def _diagnostics(cf) -> dict:
    exists, eres = check_existence(cf)
    unique, ures = check_uniqueness(cf)
    return {
        "exists": exists,
        "exist_residual": eres,
        "unique": unique,
        "unique_residual": ures,
        "indeterminacy_dim": cf.indeterminacy_dim,
        "kernel_width": cf.m,
        "n_stable": cf.qz.n_stable,
        "pencil_zero_moduli": _zero_moduli(cf),
    }


def _zero_moduli(cf) -> list:
    """``|x|`` for each zero of det(Gamma0 + Gamma1 x); ``None`` stands for infinity."""
    out = []
    for mu in cf.qz.recursion_moduli:
        out.append(None if mu == 0 else float(1.0 / mu) if np.isfinite(mu) else 0.0)
    return out


def _select(args, model):
    """Decompose and pick baseline or regularized solution; returns ``(cf, sol, reg)``."""
    cf = decompose(model, _tols(args))
    if not check_existence(cf)[0]:
        raise NoSolution(f"no stationary solution (existence residual {cf.exist_residual:.3e})")
    reg = None
    if getattr(args, "regularize", False) or getattr(args, "weight", None):
        spec = read_weight(args.weight) if args.weight else ConstantWeight(np.eye(model.n))
        r = regularize(cf, spec, quad=_quad(args))
        sol = r.solution
        if sol.provenance != "unique":
            reg = r
    else:
        sol = baseline_solution(cf)
    return cf, sol, reg


def _reg_exit(reg) -> int:
    if reg is not None and not reg.unique:
        print("warning: regularized solution is not unique; wrote the minimal-norm member", file=sys.stderr)
        return EXIT_NONUNIQUE_REG
    return EXIT_OK


def cmd_check(args) -> int:
    model = read_model(args.model)
    cf = decompose(model, _tols(args))
    d = _diagnostics(cf)
    mods = ", ".join("inf" if m is None else f"{m:.6g}" for m in d["pencil_zero_moduli"])
    lines = [
        f"model: {args.model} (n={model.n}, l={model.l}, k={model.k})",
        f"existence: {'yes' if d['exists'] else 'no'} (residual {d['exist_residual']:.3e})",
        f"uniqueness: {'yes' if d['unique'] else 'no'} (residual {d['unique_residual']:.3e})",
        f"indeterminacy dimension: {d['indeterminacy_dim']}",
        f"stable block size: {d['n_stable']}",
        f"pencil zero moduli: {mods}",
    ]
    if not d["exists"]:
        code, verdict = EXIT_NO_SOLUTION, "no solution"
    elif d["unique"]:
        code, verdict = EXIT_OK, "unique"
    else:
        code, verdict = EXIT_INDETERMINATE, "indeterminate"
    lines.append(f"verdict: {verdict}")
    print("\n".join(lines))
    if args.json:
        d["verdict"] = verdict
        Path(args.json).write_text(dumps(d) + "\n")
    return code


def cmd_solve(args) -> int:
    model = read_model(args.model)
    cf, sol, reg = _select(args, model)
    extras = {}
    diag = _diagnostics(cf)
    if reg is not None:
        extras = {"B_star": reg.B_star, "Xi": reg.Xi}
        diag["regularization"] = {
            "unique": reg.unique,
            "foc_residual": reg.foc_residual,
            "loss": reg.loss_value,
            "rcond": reg.rcond,
            "family_kernel": reg.family_kernel,
            "selection": "unique" if reg.unique else "minimal-norm",
        }
    if args.format == "json":
        text = dumps(solution_to_dict(model, sol, diag, extras)) + "\n"
    else:
        named = {"Theta1": sol.Theta1, "impact": sol.impact, "eta_load": sol.eta_load}
        named.update({k: v for k, v in extras.items() if np.size(v)})
        text = matrices_csv(named)
    _emit(text, args.out)
    return _reg_exit(reg)


def cmd_irf(args) -> int:
    model = read_model(args.model)
    _, sol, reg = _select(args, model)
    if args.horizon < 0:
        raise ModelFileError("--horizon must be nonnegative")
    labels = list(model.var_labels)
    if args.rows:
        wanted = [r for part in args.rows for r in part.split(",") if r]
        missing = [r for r in wanted if r not in labels]
        if missing:
            raise ModelFileError(f"--rows: unknown variables {missing}; known: {labels}")
        idx = [labels.index(r) for r in wanted]
    else:
        idx = list(range(model.n))
    irf = impulse_response(sol, args.horizon)
    rows = [
        (h, labels[i], model.shock_labels[j], float(irf.responses[h, i, j]))
        for h in range(args.horizon + 1)
        for i in idx
        for j in range(model.l)
    ]
    _emit(csv_text(("lag", "variable", "shock", "value"), rows), args.out)
    return _reg_exit(reg)


def cmd_spectrum(args) -> int:
    model = read_model(args.model)
    _, sol, reg = _select(args, model)
    if args.grid < 2:
        raise ModelFileError("--grid must be at least 2")
    omega = np.linspace(0.0, np.pi, args.grid)
    spec = spectral_density(sol, omega, model.Sigma_zz)
    n = model.n
    rows = [
        (float(w), i + 1, j + 1, float(F[i, j].real), float(F[i, j].imag))
        for w, F in zip(omega, spec.densities)
        for i in range(n)
        for j in range(n)
    ]
    _emit(csv_text(("omega", "i", "j", "re", "im"), rows), args.out)
    return _reg_exit(reg)


def cmd_simulate(args) -> int:
    model = read_model(args.model)
    if args.T < 1:
        raise ModelFileError("--T must be at least 1")
    reg = None
    if args.solution:
        sol, fp = read_solution(args.solution)
        if sol.Theta1.shape != (model.n, model.n) or sol.impact.shape != (model.n, model.l) or sol.eta_load.shape != (model.k, model.l):
            raise ModelFileError(f"{args.solution}: solution dimensions do not match model {args.model}")
        if fp != model_fingerprint(model):
            raise ModelFileError(f"{args.solution}: solution was computed for a different model than {args.model}")
    else:
        _, sol, reg = _select(args, model)
    path = simulate(sol, args.T, seed=args.seed, Sigma_zz=model.Sigma_zz)
    rep = residual_check(model, sol, path)
    header = ["t", *model.var_labels, *model.shock_labels, *(f"eta{i + 1}" for i in range(model.k))]
    rows = (
        (t + 1, *map(float, path.y[t]), *map(float, path.z[t]), *map(float, path.eta[t]))
        for t in range(args.T)
    )
    _emit(csv_text(header, rows), args.out)
    print(
        f"equation residual: {rep.max_residual:.3e} (scale {rep.scale:.3e}) {'ok' if rep.equation_ok else 'FAIL'}\n"
        f"max |corr(eta(t), z(t-1))|: {rep.max_abs_corr:.3e} (threshold {rep.corr_threshold:.3e}) "
        f"{'ok' if rep.martingale_ok else 'FAIL'}",
        file=sys.stderr,
    )
    if not rep.passed:
        return EXIT_RESIDUAL
    return _reg_exit(reg)


def cmd_example(args) -> int:
    name = args.name
    if name == "cagan":
        model, weights = ex.cagan(), ex.cagan_weights()
    elif name == "nongeneric":
        if args.theta is None:
            raise ModelFileError("nongeneric requires --theta")
        if args.theta == 0:
            raise ModelFileError("nongeneric: --theta must be nonzero")
        model, weights = ex.nongeneric(args.theta), ex.nongeneric_weights()
    else:
        params = {p: getattr(args, p) for p in ex.NK_PARAMS}
        missing = [p for p, v in params.items() if v is None]
        if missing:
            raise ModelFileError("nk requires every parameter; missing: " + ", ".join("--" + p.replace("_", "-") for p in missing))
        model, weights = ex.new_keynesian(**params), ex.nk_weights()
    out = Path(args.out or f"{name}.json")
    write_model(model, out)
    print(out)
    for tag, spec in weights.items():
        wpath = out.with_name(f"{out.stem}.weight-{tag}.json")
        write_weight(spec, wpath)
        print(wpath)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lremreg", description="Solve and regularize linear rational expectations models.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, solve_flags=True):
        sp.add_argument("model", help="model file (JSON)")
        sp.add_argument("--unit-tol", type=float, default=Tolerances().unit_tol, help="unit-circle margin")
        if solve_flags:
            sp.add_argument("--regularize", action="store_true", help="select the regularized solution")
            sp.add_argument("--weight", help="weight file; implies --regularize (default: identity)")
            sp.add_argument("--quad-tol", type=float, default=QuadratureConfig().tol)
            sp.add_argument("--out", help="output file (default: stdout)")

    sp = sub.add_parser("check", help="existence/uniqueness report")
    common(sp, solve_flags=False)
    sp.add_argument("--json", help="also write the report as JSON")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("solve", help="write the solution matrices")
    common(sp)
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("irf", help="impulse responses as long CSV")
    common(sp)
    sp.add_argument("--horizon", type=int, default=20)
    sp.add_argument("--rows", action="append", help="variable labels to keep (comma separated, repeatable)")
    sp.set_defaults(func=cmd_irf)

    sp = sub.add_parser("spectrum", help="spectral density on a uniform grid over [0, pi]")
    common(sp)
    sp.add_argument("--grid", type=int, default=256)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("simulate", help="simulate a path and verify the model equations")
    common(sp)
    sp.add_argument("--T", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--solution", help="simulate a previously written solution file instead of solving")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("example", help="write a built-in model and its weight files")
    sp.add_argument("name", choices=("cagan", "nk", "nongeneric"))
    sp.add_argument("--out", help="model file path (default: NAME.json)")
    sp.add_argument("--theta", type=float, help="nongeneric: coupling parameter (nonzero)")
    for name in ex.NK_PARAMS:
        sp.add_argument("--" + name.replace("_", "-"), dest=name, type=float, help="nk parameter")
    sp.set_defaults(func=cmd_example)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT
    try:
        return args.func(args)
    except (SingularPencil, UnitRoot, ReorderFailure) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PENCIL
    except NoSolution as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_SOLUTION
    except (ModelFileError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (LremError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
