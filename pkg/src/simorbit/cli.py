"""Command-line front end.

Every command writes a JSON report ``{command, inputs_hash, tolerances,
results, warnings}`` to stdout or ``--out``; ``--csv`` additionally writes
curve data. Exit status is 0 on success, 2 on invalid input and 3 on a
numerical failure.

Input paths that do not exist are looked up by file name in the bundled
example corpus, so ``simorbit gmc-check examples/gmc4.json`` works from any
directory.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import estimator, fsst, gmc, io, l2cutoff, orbit, purebirth, spectral
from .chain import (
    GeneratorMatrix,
    StochasticKernel,
    is_birth_death,
    is_irreducible,
    is_normal,
    is_reversible,
    is_stochastically_monotone,
)
from .config import ToleranceConfig, load_tolerances
from .errors import SimOrbitError, ValidationError

log = logging.getLogger("simorbit")

CSV_COLUMNS = {
    "spectral": "n, lower, norm, upper, tv, tv_bound",
    "bounds": "p, t, lower, norm, upper",
    "fsst": "n (or t), tail, separation",
    "cutoff-sep": "size, t, rho_sq, theta_min, product, window",
    "cutoff-l2": "label, t, d2",
    "purebirth": "t, tv, tv_bound",
    "estimate": "delta, rmse, bound",
    "analyze": "index, eigenvalue_real, eigenvalue_imag",
}


def resolve_input(path: str) -> Path:
    p = Path(path)
    if p.exists():
        return p
    bundled = resources.files("simorbit") / "data" / p.name
    if bundled.is_file():
        return Path(str(bundled))
    raise ValidationError(f"input file not found: {path}")


class Context:
    def __init__(self, args: argparse.Namespace, tol: ToleranceConfig):
        self.args = args
        self.tol = tol
        self.inputs: list[str] = []
        self.warnings: list[str] = []
        self.csv_rows: list[dict] = []

    def chain(self, path: str):
        p = resolve_input(path)
        self.inputs.append(p.read_text())
        return io.load_chain(p, self.tol)

    def link(self, path: str):
        p = resolve_input(path)
        self.inputs.append(p.read_text())
        return io.load_link(p, self.tol)

    def manifest(self, path: str) -> io.FamilyManifest:
        p = resolve_input(path)
        self.inputs.append(p.read_text())
        return io.FamilyManifest.load(p)


# ----------------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------------


def cmd_analyze(ctx: Context) -> dict:
    c = ctx.chain(ctx.args.chain)
    irreducible = is_irreducible(c)
    if c.pi is None:
        c = c.with_stationary()
    ev = np.linalg.eigvals(c.matrix)
    order = np.argsort(-ev.real, kind="stable")
    ev = ev[order]
    out = {
        "kind": c.kind,
        "size": c.size,
        "pi": c.pi,
        "irreducible": irreducible,
        "reversible": is_reversible(c),
        "normal": is_normal(c),
        "birth_death": is_birth_death(c),
        "eigenvalues": ev,
    }
    if isinstance(c, StochasticKernel):
        out["monotone"] = is_stochastically_monotone(c)
        lam = float(np.max(np.abs(ev[1:]), initial=0.0))
        out["lambda_star"] = lam
        out["sigma_star"] = spectral.second_singular_value(c)
        if lam >= 1.0 - 1e-12:
            ctx.warnings.append("lambda_star = 1: the chain is reducible or periodic, so no geometric convergence")
    else:
        gaps = np.sort(-ev.real)
        out["spectral_gap"] = float(gaps[1]) if gaps.size > 1 else 0.0
        out["markovian"] = c.markovian
        if out["spectral_gap"] <= 1e-12:
            ctx.warnings.append("spectral gap is zero: the generator is reducible")
    ctx.csv_rows = [{"index": i, "eigenvalue_real": float(z.real), "eigenvalue_imag": float(z.imag)}
                    for i, z in enumerate(ev)]
    return out


def cmd_gmc_check(ctx: Context) -> dict:
    return gmc.check_gmc(ctx.chain(ctx.args.chain), ctx.tol).to_dict()


def cmd_gmc_reduce(ctx: Context) -> dict:
    red = gmc.theorem_mc_pipeline(ctx.chain(ctx.args.chain), ctx.tol)
    ctx.warnings.extend(red.warnings)
    return red.to_dict()


def _pair(ctx: Context, c):
    a = ctx.args
    if a.link is None:
        return None, None
    if a.partner is None:
        raise ValidationError("--link needs --partner")
    Q = ctx.chain(a.partner).with_stationary()
    pair = orbit.verify_similarity(c.with_stationary(), Q, ctx.link(a.link), ctx.tol)
    if not pair.verified:
        raise ValidationError(f"link does not intertwine the pair (residual {pair.residual:.3g})")
    return pair.link, Q


def cmd_spectral(ctx: Context) -> dict:
    c = ctx.chain(ctx.args.chain).with_stationary()
    link, Q = _pair(ctx, c)
    sys_ = spectral.decompose(c, link, Q, ctx.tol)
    out = {"eigenvalues": sys_.eigenvalues, "origin": sys_.origin, "real": sys_.real,
           "distinct": sys_.distinct}
    if isinstance(c, StochasticKernel):
        b = spectral.convergence_bound(c, link, Q, ctx.tol)
        out["bound"] = b.to_dict()
        rows = spectral.bound_curve(c, b, range(ctx.args.n_max + 1))
        ctx.csv_rows = rows
        out["curve"] = rows
    else:
        out["spectral_gap"] = spectral.spectral_gap(c)
    return out


def cmd_bounds(ctx: Context) -> dict:
    c = ctx.chain(ctx.args.chain).with_stationary()
    link, Q = _pair(ctx, c)
    if isinstance(c, StochasticKernel):
        b = spectral.convergence_bound(c, link, Q, ctx.tol)
        rows = spectral.bound_curve(c, b, range(ctx.args.n_max + 1))
        ctx.csv_rows = rows
        return {"bound": b.to_dict(), "curve": rows}
    rows = []
    for p in ctx.args.p:
        for t in ctx.args.t:
            r = spectral.lp_bounds(c, link, t, p, Q, verify=not ctx.args.no_verify, tol=ctx.tol)
            if r.upper_holds is False:
                ctx.warnings.append(f"upper bound fails at p={p}, t={t}")
            rows.append(r.to_dict())
    ctx.csv_rows = [{k: r[k] for k in ("p", "t", "lower", "norm", "upper")} for r in rows]
    ctx.warnings.append("the lower bound is reported, not asserted")
    return {"lp": rows}


def cmd_fsst(ctx: Context) -> dict:
    a = ctx.args
    c = ctx.chain(a.chain).with_stationary()
    mix = fsst.fsst_distribution(c, a.mode, strict=not a.non_strict, tol=ctx.tol)
    ctx.warnings.extend(mix.warnings)
    if a.mode == "discrete":
        ns = np.arange(a.n_max + 1)
        sep = fsst.separation_curve(c, a.n_max)
    else:
        ns = np.linspace(0.0, a.t_max, a.points)
        L = c if isinstance(c, GeneratorMatrix) else GeneratorMatrix(c.matrix - np.eye(c.size), c.pi)
        sep = np.array([fsst.continuous_separation(L, float(t)) for t in ns])
    tails = fsst.phase_tail(mix, ns)
    ctx.csv_rows = [{"n": float(n), "tail": float(x), "separation": float(s)} for n, x, s in zip(ns, tails, sep)]
    return {"mixture": mix.to_dict(), "mean": mix.mean(), "variance": mix.variance(),
            "max_tail_error": float(np.max(np.abs(tails - sep)))}


def cmd_cutoff_sep(ctx: Context) -> dict:
    a = ctx.args
    man = ctx.manifest(a.manifest)
    mode = a.mode or man.mode
    diag = fsst.separation_cutoff(man.kernels(ctx.tol), mode, a.threshold, strict=not a.non_strict)
    ctx.warnings.append("the verdict is a finite-family trend, not a limit statement")
    ctx.csv_rows = [{"size": r.size, "t": r.t, "rho_sq": r.rho_sq, "theta_min": r.theta_min,
                     "product": r.product, "window": r.window[1]} for r in diag.records]
    return diag.to_dict()


def cmd_cutoff_l2(ctx: Context) -> dict:
    a = ctx.args
    members = ctx.manifest(a.manifest).cutoff_members(ctx.tol)
    res = l2cutoff.l2_cutoff_criteria(members, a.delta, a.C, a.eps)
    rows = []
    for m, r in zip(members, res.records):
        for t in np.linspace(0.0, 3.0 * r.t_delta, a.points):
            rows.append({"label": m.label, "t": float(t),
                         "d2": float(np.sqrt(l2cutoff.chi_squared_distance(m.L, m.start(), float(t), m.link, m.G).spectral))})
    ctx.csv_rows = rows
    ctx.warnings.append("verdicts are finite-family trends, not limit statements")
    return res.to_dict()


def cmd_purebirth(ctx: Context) -> dict:
    a = ctx.args
    G = ctx.chain(a.generator)
    if not isinstance(G, GeneratorMatrix):
        raise ValidationError("purebirth needs a generator")
    conj = purebirth.pure_birth_conjugate(G, ctx.tol)
    out = {"conjugate": conj.to_dict()}
    if not conj.markovian:
        ctx.warnings.append("conjugate is not a Markov generator")
    times = np.linspace(0.0, a.t_max, a.points)
    spec = purebirth.pure_birth_spectral(G, conj, times)
    out["spectral"] = {"eigenvalues": spec.system.eigenvalues, "basis": spec.system.basis,
                       "dual": spec.system.dual, "kappa": spec.kappa, "gap": spec.gap,
                       "expm_residual": spec.expm_residual}
    ctx.csv_rows = spec.curve_rows()
    return out


def cmd_estimate(ctx: Context) -> dict:
    a = ctx.args
    L = ctx.chain(a.chain).with_stationary()
    if not isinstance(L, GeneratorMatrix):
        raise ValidationError("estimate needs a generator")
    link, G = _pair(ctx, L)
    fp = resolve_input(a.f)
    ctx.inputs.append(fp.read_text())
    f = io.load_vector(fp)
    if f.size != L.size:
        raise ValidationError("test function has the wrong length")
    A = estimator.operator_a(L, link, G)
    norms = estimator.seminorms(A, L.pi, f, a.s)
    paths = estimator.simulate_paths(L, None, a.T, a.replicas, a.seed)
    fit = estimator.fit_rate(paths, f, a.n, norms)
    ctx.csv_rows = [{"delta": float(d), "rmse": float(r), "bound": float(b)}
                    for d, r, b in zip(fit.deltas, fit.rmse, fit.bounds)]
    ctx.warnings.append("bounds use C = 1; the constant is not explicit, so only the rate is checked")
    return {"norms": norms.to_dict(), "fit": fit.to_dict(), "T": a.T, "replicas": a.replicas,
            "seed": a.seed}


def cmd_orbit_verify(ctx: Context) -> dict:
    a = ctx.args
    P = ctx.chain(a.P).with_stationary()
    Q = ctx.chain(a.Q).with_stationary()
    pair = orbit.verify_similarity(P, Q, ctx.link(a.link), ctx.tol)
    return {"verified": pair.verified, "residual": pair.residual,
            "adjoint_residual": pair.adjoint_residual, "link": pair.link.to_dict(),
            "kappa": pair.link.kappa}


COMMANDS = {
    "analyze": cmd_analyze,
    "gmc-check": cmd_gmc_check,
    "gmc-reduce": cmd_gmc_reduce,
    "spectral": cmd_spectral,
    "bounds": cmd_bounds,
    "fsst": cmd_fsst,
    "cutoff-sep": cmd_cutoff_sep,
    "cutoff-l2": cmd_cutoff_l2,
    "purebirth": cmd_purebirth,
    "estimate": cmd_estimate,
    "orbit-verify": cmd_orbit_verify,
}


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the JSON report here instead of stdout")
    common.add_argument("--csv", help="write curve data as CSV")
    common.add_argument("--seed", type=int, default=0, help="seed for stochastic commands")
    common.add_argument("--tol-config", help="JSON tolerance file (default: $SIMORBIT_TOL_CONFIG)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="simorbit", description="Spectral analysis of similarity orbits of Markov chains.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_,
                              epilog=f"CSV columns: {CSV_COLUMNS[name]}" if name in CSV_COLUMNS else None)

    p = add("analyze", "structural summary of a chain")
    p.add_argument("chain")
    p = add("gmc-check", "monotonicity-class conditions")
    p.add_argument("chain")
    p = add("gmc-reduce", "Siegmund-dual reduction to a birth-death kernel")
    p.add_argument("chain")
    for name, help_ in (("spectral", "spectral decomposition and convergence bound"),
                        ("bounds", "convergence or L^p bounds")):
        p = add(name, help_)
        p.add_argument("chain")
        p.add_argument("--link", help="link file mapping the partner into the chain")
        p.add_argument("--partner", help="normal partner chain file")
        p.add_argument("--n-max", type=int, default=50)
        if name == "bounds":
            p.add_argument("--p", type=_floats, default=[2.0], help="comma-separated exponents")
            p.add_argument("--t", type=_floats, default=[0.5, 1.0, 2.0], help="comma-separated times")
            p.add_argument("--no-verify", action="store_true", help="skip the exact norm")
    p = add("fsst", "fastest strong stationary time mixture")
    p.add_argument("chain")
    p.add_argument("--mode", choices=["discrete", "continuous"], default="discrete")
    p.add_argument("--n-max", type=int, default=100)
    p.add_argument("--t-max", type=float, default=20.0)
    p.add_argument("--points", type=int, default=81)
    p.add_argument("--non-strict", action="store_true", help="skip the laziness condition")
    p = add("cutoff-sep", "separation-cutoff diagnostics over a family")
    p.add_argument("manifest")
    p.add_argument("--mode", choices=["discrete", "continuous"])
    p.add_argument("--threshold", type=float, default=10.0)
    p.add_argument("--non-strict", action="store_true")
    p = add("cutoff-l2", "L2-cutoff criteria over a family")
    p.add_argument("manifest")
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--points", type=int, default=31)
    p = add("purebirth", "pure-birth conjugate of a birth-death generator")
    p.add_argument("generator")
    p.add_argument("--t-max", type=float, default=10.0)
    p.add_argument("--points", type=int, default=41)
    p = add("estimate", "Riemann-sum estimator error and rate")
    p.add_argument("chain")
    p.add_argument("--f", required=True, help="JSON vector file with the test function")
    p.add_argument("--T", type=float, default=10.0)
    p.add_argument("--n", type=_ints, default=[8, 16, 32, 64, 128, 256], help="comma-separated grid sizes")
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--replicas", type=int, default=10000)
    p.add_argument("--link")
    p.add_argument("--partner")
    p = add("orbit-verify", "check that a link intertwines two chains")
    p.add_argument("P")
    p.add_argument("Q")
    p.add_argument("link")
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    ctx: Context | None = None
    tol: ToleranceConfig | None = None
    try:
        tol = load_tolerances(args.tol_config)
        ctx = Context(args, tol)
        results = COMMANDS[args.command](ctx)
        status = 0
        report = {"command": args.command, "results": results}
    except SimOrbitError as exc:
        status = exc.exit_status
        report = {"command": args.command,
                  "error": {"code": exc.code, "type": type(exc).__name__, "message": str(exc)}}
        log.error("%s: %s", exc.code, exc)
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        status = 2
        report = {"command": args.command,
                  "error": {"code": "invalid_input", "type": type(exc).__name__, "message": str(exc)}}
        log.error("invalid input: %s", exc)
    except ArithmeticError as exc:
        status = 3
        report = {"command": args.command,
                  "error": {"code": "numerical", "type": type(exc).__name__, "message": str(exc)}}
    argtext = json.dumps({k: v for k, v in sorted(vars(args).items()) if k not in ("out", "csv", "verbose")},
                         sort_keys=True, default=str)
    report["inputs_hash"] = io.content_hash(argtext, *(ctx.inputs if ctx else []))
    report["tolerances"] = tol.to_dict() if tol else None
    report["warnings"] = list(ctx.warnings) if ctx else []
    text = io.canonical_json(report)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if status == 0 and args.csv and ctx.csv_rows:
        Path(args.csv).write_text(io.rows_to_csv(ctx.csv_rows))
    return status


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
