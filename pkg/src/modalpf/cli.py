"""Command-line frontend: reproducible analyses emitting plot-ready CSV/JSON.

Subcommands
-----------
``eig``          eigenvalues, references and scaling factors under a scheme
``pf``           linear / nonlinear participation-factor tables
``sweep``        PF values over a grid of theta or alpha values; invariance harness
``simulate``     fixed-step integration of the model
``reconstruct``  closed-form response or a single mode component
``variants``     seeded Monte Carlo PF variants

Exit codes: 0 success, 1 I/O or schema error, 2 mathematical degeneracy,
3 usage error.
"""

from __future__ import annotations

import argparse
import importlib.resources
import itertools
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .model import ModelFormatError, PolynomialSystem, parse_model
from .normalform import ResonantComponentError, build_expansion, mode_component, reconstruct, z_initial
from .pf import build_report, linear_pf, nonlinear_pf, normalize_pf
from .sim import DivergenceError, ensemble, integrate, perturb_state
from .spectrum import (
    DegenerateModeError,
    StrongResonanceError,
    apply_scaling,
    apply_scheme,
    eigendecompose,
    scaling_for_theta,
)
from .variants import (
    InitialDistribution,
    datadriven_pf,
    fit_koopman,
    modified_psimpf,
    nonlinear_pmispf,
    pmispf,
    psimpf,
)

__all__ = ["main"]


class UsageError(Exception):
    """Bad flag combination or malformed flag value."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route argparse failures through our exit-code policy
        raise UsageError(message)


def _cpair(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def _cmatrix(M: np.ndarray) -> list[list[list[float]]]:
    return [[_cpair(v) for v in row] for row in np.asarray(M, dtype=complex)]


def _parse_complex_list(text: str, n: int, what: str) -> np.ndarray:
    try:
        values = [complex(part.strip().replace(" ", "")) for part in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"cannot parse {what} {text!r}: {exc}") from exc
    if len(values) == 1:
        values = values * n
    if len(values) != n:
        raise UsageError(f"{what} needs 1 or {n} comma-separated values, got {len(values)}")
    return np.asarray(values, dtype=complex)


def _parse_float_list(text: str, what: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"cannot parse {what} {text!r}: {exc}") from exc


def _parse_tuple(text: str) -> tuple[int, ...]:
    try:
        modes = tuple(int(part) - 1 for part in text.split(","))
    except ValueError as exc:
        raise UsageError(f"cannot parse mode tuple {text!r}: {exc}") from exc
    if len(modes) < 2:
        raise UsageError("a combination tuple needs at least two mode indices")
    return modes


def _parse_perturb(text: str) -> tuple[int, float]:
    k, alpha = None, 1.0
    for part in text.split(","):
        key, _, value = part.partition("=")
        if key.strip() == "k":
            k = int(value) - 1
        elif key.strip() == "alpha":
            alpha = float(value)
        else:
            raise UsageError(f"unknown perturbation field {key!r} (expected k=, alpha=)")
    if k is None:
        raise UsageError("--perturb needs k=<state index>")
    return k, alpha


def _load_model(path: str) -> PolynomialSystem:
    p = Path(path)
    if not p.exists():
        fixture = importlib.resources.files("modalpf.fixtures") / p.name
        if fixture.is_file():
            return parse_model(fixture.read_text())
        raise FileNotFoundError(f"model file {path!r} not found (and not a bundled fixture)")
    return parse_model(p.read_text())


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(out).write_text(text)


def _basis_for(args, sys_model):
    basis = eigendecompose(sys_model, norm_ord=args.norm)
    theta = getattr(args, "theta", None)
    scheme = getattr(args, "scheme", None)
    if theta is not None and scheme is not None:
        raise UsageError("--scheme and --theta are mutually exclusive")
    if theta is not None:
        vec = _parse_complex_list(theta, basis.n, "--theta")
        return scaling_for_theta(basis, vec), None
    return apply_scheme(basis, scheme or "I"), scheme or "I"


def _mode_rows(values: dict, normalized: bool) -> list[dict]:
    rows = []
    for (k, m), v in sorted(values.items()):
        rows.append(
            {
                "state": k + 1,
                "mode_tuple": "+".join(str(l + 1) for l in m),
                "re": float(np.real(v)),
                "im": float(np.imag(v)),
                "magnitude": float(abs(v)),
            }
        )
    return rows


def _rows_to_csv(rows: list[dict], header: list[str]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_csv_cell(row.get(col, "")) for col in header))
    return "\n".join(lines) + "\n"


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


# ---------------------------------------------------------------- subcommands


def cmd_eig(args) -> None:
    sys_model = _load_model(args.model)
    basis, scheme = _basis_for(args, sys_model)
    if args.format == "json":
        doc = {
            "scheme": scheme,
            "norm": args.norm,
            "eigenvalues": [_cpair(v) for v in basis.eigenvalues],
            "sigma": [_cpair(v) for v in basis.sigma],
            "xi": [_cpair(v) for v in basis.xi],
            "theta": [_cpair(v) for v in basis.theta],
            "cos_delta": [_cpair(v) for v in basis.cos_delta],
            "phi_hat": _cmatrix(basis.phi_hat),
            "psi_hat": _cmatrix(basis.psi_hat),
            "Phi": _cmatrix(basis.Phi),
            "Psi": _cmatrix(basis.Psi),
        }
        _write(json.dumps(doc, indent=2), args.out)
    else:
        rows = []
        for i in range(basis.n):
            rows.append(
                {
                    "mode": i + 1,
                    "lambda_re": float(basis.eigenvalues[i].real),
                    "lambda_im": float(basis.eigenvalues[i].imag),
                    "sigma_abs": float(abs(basis.sigma[i])),
                    "xi_abs": float(abs(basis.xi[i])),
                    "theta_abs": float(abs(basis.theta[i])),
                    "cos_delta_abs": float(abs(basis.cos_delta[i])),
                }
            )
        header = ["mode", "lambda_re", "lambda_im", "sigma_abs", "xi_abs", "theta_abs", "cos_delta_abs"]
        _write(_rows_to_csv(rows, header), args.out)


def _selectors(args, order: int) -> list:
    selectors: list = []
    for m in args.mode or []:
        selectors.append(m - 1)
    for t in args.tuple or []:
        modes = _parse_tuple(t)
        if len(modes) > order:
            raise UsageError(
                f"combination order {len(modes)} exceeds the transformation order {order}"
            )
        selectors.append(modes)
    return selectors


def cmd_pf(args) -> None:
    sys_model = _load_model(args.model)
    basis, scheme = _basis_for(args, sys_model)
    order = args.order or sys_model.max_order
    expansion = build_expansion(sys_model, basis, order=order, tol=args.restol)
    alpha = _parse_complex_list(args.alpha, sys_model.n, "--alpha")
    selectors = _selectors(args, expansion.order)
    if not args.linear and not selectors:
        raise UsageError("nothing to compute: pass --linear, --mode and/or --tuple")
    report = build_report(
        expansion,
        linear=args.linear,
        modes=tuple(selectors),
        alpha=alpha,
        normalize=args.normalize,
        scheme=scheme,
    )
    skipped = [
        {
            "target": i + 1,
            "mode_tuple": "+".join(str(l + 1) for l in m),
            "coefficient": _cpair(c),
        }
        for (i, m), c in report.skipped_resonant
    ]
    if args.format == "json":
        doc = {
            "scheme": scheme,
            "normalized": args.normalize,
            "theta": [_cpair(v) for v in report.theta],
            "alpha": [_cpair(v) for v in report.alpha],
            "skipped_resonant": skipped,
        }
        if report.linear is not None:
            lin = report.linear
            if args.normalize:
                lin = np.column_stack([normalize_pf(lin[:, i]) for i in range(lin.shape[1])])
            doc["linear"] = _cmatrix(lin)
        doc["values"] = _mode_rows(report.nonlinear, args.normalize)
        _write(json.dumps(doc, indent=2), args.out)
        return
    rows = []
    if report.linear is not None:
        lin = report.linear
        if args.normalize:
            lin = np.column_stack([normalize_pf(lin[:, i]) for i in range(lin.shape[1])])
        for i in range(lin.shape[1]):
            for k in range(lin.shape[0]):
                v = lin[k, i]
                rows.append(
                    {
                        "state": k + 1,
                        "mode_tuple": str(i + 1),
                        "re": float(v.real),
                        "im": float(v.imag),
                        "magnitude": float(abs(v)),
                    }
                )
    rows.extend(_mode_rows(report.nonlinear, args.normalize))
    text = _rows_to_csv(rows, ["state", "mode_tuple", "re", "im", "magnitude"])
    if skipped:
        text += "# skipped_resonant: " + json.dumps(skipped) + "\n"
    _write(text, args.out)


def _invariance_harness(sys_model, basis_ref, expansion_ref, selectors, alpha, trials, seed, order, restol):
    """Max deviation of PFs across random (sigma, xi) refactorizations at fixed theta."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    n = basis_ref.n
    theta = basis_ref.theta
    lin_ref = linear_pf(basis_ref.Phi, basis_ref.Psi)
    nl_ref = {
        (k, sel if isinstance(sel, tuple) else (sel,)): nonlinear_pf(
            expansion_ref, k, sel, alpha[k]
        )
        for sel in selectors
        for k in range(n)
    }
    max_lin = 0.0
    max_nl = 0.0
    for _ in range(trials):
        sigma = np.exp(rng.uniform(-0.7, 0.7, n)) * np.exp(1j * rng.uniform(0, 2 * np.pi, n))
        xi = theta / (sigma * basis_ref.cos_delta)
        scaled = apply_scaling(basis_ref, sigma, xi)
        max_lin = max(max_lin, float(np.max(np.abs(linear_pf(scaled.Phi, scaled.Psi) - lin_ref))))
        if selectors and sys_model.max_order > 1:
            exp_s = build_expansion(sys_model, scaled, order=order, tol=restol)
            for (k, m), ref in nl_ref.items():
                sel = m if len(m) > 1 else m[0]
                val = nonlinear_pf(exp_s, k, sel, alpha[k])
                scale = max(abs(ref), 1e-30)
                max_nl = max(max_nl, abs(val - ref) / scale)
    return max_lin, max_nl


def cmd_sweep(args) -> None:
    sys_model = _load_model(args.model)
    basis, scheme = _basis_for(args, sys_model)
    order = args.order or sys_model.max_order
    expansion = build_expansion(sys_model, basis, order=order, tol=args.restol)
    alpha = _parse_complex_list(args.alpha, sys_model.n, "--alpha")
    selectors = _selectors(args, expansion.order)
    if not selectors:
        selectors = list(range(sys_model.n))
    rows: list[dict] = []
    if args.what:
        grid = _parse_float_list(args.grid, "--grid")
        for value in grid:
            if args.what == "theta":
                basis_g = scaling_for_theta(
                    eigendecompose(sys_model, norm_ord=args.norm),
                    np.full(sys_model.n, value, dtype=complex),
                )
                expansion_g = build_expansion(sys_model, basis_g, order=order, tol=args.restol)
                alpha_g = alpha
            else:
                expansion_g = expansion
                alpha_g = np.full(sys_model.n, value, dtype=complex)
            for sel in selectors:
                m = sel if isinstance(sel, tuple) else (sel,)
                for k in range(sys_model.n):
                    v = nonlinear_pf(expansion_g, k, sel, alpha_g[k])
                    rows.append(
                        {
                            "what": args.what,
                            "value": float(value),
                            "state": k + 1,
                            "mode_tuple": "+".join(str(l + 1) for l in m),
                            "re": float(np.real(v)),
                            "im": float(np.imag(v)),
                            "magnitude": float(abs(v)),
                        }
                    )
    if args.invariance:
        max_lin, max_nl = _invariance_harness(
            sys_model, basis, expansion, selectors, alpha,
            args.trials, args.seed or 0, order, args.restol,
        )
        rows.append(
            {"what": "invariance_linear", "value": args.trials, "state": "", "mode_tuple": "",
             "re": "", "im": "", "magnitude": max_lin}
        )
        rows.append(
            {"what": "invariance_nonlinear", "value": args.trials, "state": "", "mode_tuple": "",
             "re": "", "im": "", "magnitude": max_nl}
        )
    if not rows:
        raise UsageError("nothing to sweep: pass --what and --grid, or --invariance")
    header = ["what", "value", "state", "mode_tuple", "re", "im", "magnitude"]
    if args.format == "json":
        _write(json.dumps(rows, indent=2), args.out)
    else:
        _write(_rows_to_csv(rows, header), args.out)


def cmd_simulate(args) -> None:
    sys_model = _load_model(args.model)
    k, alpha = _parse_perturb(args.perturb)
    x0 = perturb_state(sys_model.n, k, alpha)
    traj = integrate(sys_model, x0, dt=args.dt, T=args.T)
    _write(traj.to_csv(), args.out)


def cmd_reconstruct(args) -> None:
    sys_model = _load_model(args.model)
    basis, scheme = _basis_for(args, sys_model)
    order = args.order or sys_model.max_order
    expansion = build_expansion(sys_model, basis, order=order, tol=args.restol)
    k, alpha = _parse_perturb(args.perturb)
    z0 = z_initial(expansion, k, alpha).mu
    tgrid = np.arange(0.0, args.T + 0.5 * args.dt, args.dt)
    selectors = _selectors(args, expansion.order)
    if len(selectors) > 1:
        raise UsageError("pass at most one --mode or --tuple selector")
    if selectors:
        traj = mode_component(expansion, z0, selectors[0], tgrid)
    else:
        traj = reconstruct(expansion, z0, tgrid)
    _write(traj.to_csv(), args.out)


def cmd_variants(args) -> None:
    sys_model = _load_model(args.model)
    basis, scheme = _basis_for(args, sys_model)
    dist = InitialDistribution(
        kind=args.kind, guard=args.guard, seed=args.seed, samples=args.samples, radius=args.radius
    )
    i, k = args.i - 1, args.k - 1
    if not 0 <= i < sys_model.n or not 0 <= k < sys_model.n:
        raise UsageError("--i and --k must be valid 1-based indices")
    extra: dict = {}
    if args.which == "pmispf":
        est = pmispf(basis, dist, i, k)
    elif args.which == "psimpf":
        expansion = None
        if args.corrected:
            expansion = build_expansion(sys_model, basis, tol=args.restol)
        est = psimpf(basis, dist, i, k, expansion=expansion)
    elif args.which == "nonlinear-pmispf":
        expansion = build_expansion(sys_model, basis, tol=args.restol)
        est = nonlinear_pmispf(expansion, dist, i, k)
    elif args.which == "modified-psimpf":
        est = modified_psimpf(basis, dist, i, k)
    elif args.which == "datadriven":
        ens_dist = InitialDistribution(
            kind=args.kind, guard=args.guard, seed=args.seed + 1,
            samples=args.members, radius=args.radius,
        )
        snaps = ensemble(sys_model, ens_dist, dt=args.dt, steps=args.steps)
        kb = fit_koopman(snaps, norm_ord=args.norm)
        kb_basis = kb.basis
        if args.theta is not None:
            kb_basis = scaling_for_theta(kb_basis, _parse_complex_list(args.theta, basis.n, "--theta"))
        else:
            kb_basis = apply_scheme(kb_basis, scheme or "I")
        from dataclasses import replace

        est = datadriven_pf(replace(kb, basis=kb_basis), dist, i, k)
        extra = {
            "holdout_error": kb.holdout_error,
            "snapshot_pairs": kb.pairs,
            "diverged_members": snaps.diverged,
            "eigenvalues_ct": [_cpair(v) for v in kb.eigenvalues_ct],
        }
    else:  # pragma: no cover - argparse choices guard this
        raise UsageError(f"unknown variant {args.which!r}")
    doc = {
        "which": args.which,
        "scheme": scheme,
        "i": args.i,
        "k": args.k,
        "estimate": _cpair(est.value),
        "stderr": est.stderr,
        "admitted": est.admitted,
        "rejected": est.rejected,
        "seed": est.seed,
        "samples": args.samples,
        "kind": args.kind,
        "guard": args.guard,
    }
    doc.update(extra)
    _write(json.dumps(doc, indent=2), args.out)


# ---------------------------------------------------------------- parser


def _add_common(p: argparse.ArgumentParser, scheme: bool = True) -> None:
    p.add_argument("--model", required=True, help="model JSON path or bundled fixture name")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--norm", type=float, default=1, help="reference eigenvector norm order (default 1)")
    p.add_argument("--restol", type=float, default=None, help="resonance tolerance (default 1e-6*max|lambda|)")
    if scheme:
        p.add_argument("--scheme", choices=("I", "II", "III"), default=None)
        p.add_argument("--theta", default=None, help="explicit theta vector, comma-separated complex")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="modalpf", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"modalpf {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eig", help="eigenvalues, references and scaling factors")
    _add_common(p)
    p.set_defaults(func=cmd_eig)

    p = sub.add_parser("pf", help="participation-factor tables")
    _add_common(p)
    p.add_argument("--linear", action="store_true", help="emit the full linear PF matrix")
    p.add_argument("--mode", type=int, action="append", help="linear-mode selector (1-based), repeatable")
    p.add_argument("--tuple", action="append", help="combination tuple 'r,s,...' (1-based), repeatable")
    p.add_argument("--alpha", default="1", help="perturbation amplitude(s), scalar or per-state list")
    p.add_argument("--order", type=int, default=None, help="transformation order (default: model max order)")
    p.add_argument("--normalize", action="store_true", help="divide each column by its largest-magnitude entry")
    p.set_defaults(func=cmd_pf)

    p = sub.add_parser("sweep", help="PF values over a theta or alpha grid; invariance harness")
    _add_common(p)
    p.add_argument("--what", choices=("theta", "alpha"), default=None)
    p.add_argument("--grid", default="", help="comma-separated grid values")
    p.add_argument("--mode", type=int, action="append")
    p.add_argument("--tuple", action="append")
    p.add_argument("--alpha", default="1")
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--invariance", action="store_true", help="run the fixed-theta refactorization harness")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="fixed-step integration")
    _add_common(p, scheme=False)
    p.add_argument("--perturb", required=True, help="'k=<1-based state>,alpha=<amplitude>'")
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--T", type=float, default=10.0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="closed-form response or a single mode component")
    _add_common(p)
    p.add_argument("--perturb", required=True, help="'k=<1-based state>,alpha=<amplitude>'")
    p.add_argument("--mode", type=int, action="append")
    p.add_argument("--tuple", action="append")
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--T", type=float, default=10.0)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("variants", help="seeded Monte Carlo PF variants")
    _add_common(p)
    p.add_argument(
        "--which",
        required=True,
        choices=("pmispf", "psimpf", "nonlinear-pmispf", "modified-psimpf", "datadriven"),
    )
    p.add_argument("--i", type=int, required=True, help="mode index (1-based)")
    p.add_argument("--k", type=int, required=True, help="state index (1-based)")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--guard", type=float, default=0.1)
    p.add_argument("--kind", choices=("uniform-sphere", "componentwise-uniform"), default="uniform-sphere")
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--corrected", action="store_true", help="psimpf: use corrected z-space initial values")
    p.add_argument("--members", type=int, default=50, help="datadriven: ensemble members")
    p.add_argument("--steps", type=int, default=40, help="datadriven: snapshot steps per member")
    p.add_argument("--dt", type=float, default=1e-3, help="datadriven: snapshot spacing")
    p.set_defaults(func=cmd_variants)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 3
    except (ModelFormatError, FileNotFoundError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (StrongResonanceError, DegenerateModeError, DivergenceError, ResonantComponentError) as exc:
        print(f"degenerate: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
