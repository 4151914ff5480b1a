"""Batch front end.

Loads a problem, economy, or map file, dispatches to the corresponding
pipeline, and writes a deterministic JSON report. Sweep-style commands
additionally write a flat CSV table and render a figure next to it;
everything an external plotting tool needs lives in those two files.

Exit status: 0 all checks passed, 1 a check failed or a pipeline error
was captured into the report, 2 the input could not be loaded.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .calculus import evaluate
from .convexity import estimate_convexity_radius
from .economy import (
    Allocation,
    EquilibriumCertificate,
    EquilibriumResiduals,
    allocation_problem,
    build_equilibrium,
    check_regular,
    localized_pareto,
    utilities_map,
    verify_equilibrium,
)
from .errors import InputError, LocoptError
from .plots import render_bundle_figure, render_front_figure, render_radius_figure
from .problem_io import RunSpec, load_run_spec
from .reporting import (
    Report,
    RunConfig,
    SampleCounts,
    Tolerances,
    digest_file,
    render_json,
    write_csv,
    write_report,
    write_text_atomic,
)
from .spaces import quadratic_growth_constant
from .vopt import (
    Localization,
    SolveConfig,
    check_certificate,
    pareto_sweep,
    solve_localization,
)

__all__ = ["main", "run"]

_RESIDUAL_FIELDS = (
    "boundary_gap",
    "dual_cone_violation",
    "normal_cone_violation",
    "lagrangian_violation",
    "complementarity_gap",
)

# which input kinds each command accepts
_ACCEPTED_KINDS = {
    "check-regularity": ("economy",),
    "economy-regularity": ("economy",),
    "convexity-radius": ("map",),
    "localize": ("vector_problem", "economy"),
    "pareto-sweep": ("vector_problem", "economy"),
    "certify": ("vector_problem", "economy"),
    "economy-solve": ("economy",),
    "economy-verify": ("economy",),
}


# ---- small shared pieces -------------------------------------------------

def _out_stem(path: str) -> str:
    return path[:-5] if path.endswith(".json") else path


def _weight_grid(spec: RunSpec, n_weights: int | None, seed: int) -> list[np.ndarray]:
    """Resolve the weight grid: --weights-grid wins, then the file, then uniform."""
    if spec.kind == "economy":
        q = spec.economy.n_consumers
    else:
        q = spec.problem.K.dim
    if n_weights is not None:
        if n_weights < 1:
            raise InputError(f"--weights-grid must be >= 1, got {n_weights}")
        if q == 2:
            ts = [(k + 1) / (n_weights + 1) for k in range(n_weights)]
            return [np.array([1.0 - t, t]) for t in ts]
        rng = np.random.default_rng(np.random.SeedSequence([seed, 202]))
        return [w for w in rng.dirichlet(np.ones(q), size=n_weights)]
    if spec.weight_grid is not None:
        return [np.asarray(w, dtype=float) for w in spec.weight_grid]
    return [np.full(q, 1.0 / q)]


def _localize_pair(spec: RunSpec, eps: float) -> tuple[Localization, object]:
    """(localization, objective map) for either input kind.

    Economies are solved through their stacked allocation problem; the
    objective map reported is the per-consumer utilities.
    """
    if spec.kind == "economy":
        problem = allocation_problem(spec.economy)
        return Localization(problem, spec.x0, eps), utilities_map(spec.economy)
    return Localization(spec.problem, spec.x0, eps), spec.problem.h


def _residual_payload(res) -> dict:
    return {name: float(getattr(res, name)) for name in _RESIDUAL_FIELDS}


def _residuals_pass(res, eps: float, tols: Tolerances) -> bool:
    if res.boundary_gap > tols.boundary_rel * eps:
        return False
    return all(
        float(getattr(res, name)) <= tols.optimality for name in _RESIDUAL_FIELDS[1:]
    )


def _check_payload(check) -> dict:
    out = {
        "name": check.name,
        "value": float(check.value),
        "passed": bool(check.passed),
        "applicable": bool(check.applicable),
    }
    if check.witness is not None:
        out["witness"] = np.asarray(check.witness).tolist()
    return out


def _x0_allocation(spec: RunSpec) -> Allocation:
    eco = spec.economy
    return Allocation.from_stacked(spec.x0, eco.n_consumers, eco.n_commodities)


def _solve_config(config: RunConfig, threads: int) -> SolveConfig:
    return SolveConfig(seed=config.seed, threads=threads)


# ---- command handlers ------------------------------------------------------

def _run_check_regularity(spec, config, *, threads, plot, eps_list, weight_grid, cert_path):
    verdict = check_regular(spec.economy, _x0_allocation(spec))
    results = {
        "passed": bool(verdict.regular),
        "regular": bool(verdict.regular),
        "sigma_min": float(verdict.sigma_min),
        "reason": verdict.reason,
        "interior_margins": [float(v) for v in verdict.interior_margins],
    }
    return results, []


def _run_convexity_radius(spec, config, *, threads, plot, eps_list, weight_grid, cert_path):
    est = estimate_convexity_radius(
        spec.map,
        spec.x0,
        max(eps_list),
        tol=config.tolerances.optimality,
        seed=config.seed,
        n_pairs=config.sample_counts.convexity_pairs,
        threads=threads,
    )
    stem = _out_stem(config.output_path)
    table = stem + ".csv"
    write_csv(
        table,
        ["eps", "worst_midpoint_residual", "passed"],
        [[e, r, int(p)] for e, r, p in est.history],
    )
    figure = stem + "-radius.png"
    render_radius_figure(figure, est.history, est.radius, est.tol)
    results = {
        "passed": True,
        "radius": float(est.radius),
        "unbounded_in_window": bool(est.unbounded_in_window),
        "eps_max": float(max(eps_list)),
        "n_pairs": est.n_pairs,
        "probes": len(est.history),
        "space": {
            "dim": spec.space.dim,
            "norm": "euclidean" if spec.space.is_euclidean else f"p:{spec.space.p}",
            "kappa": quadratic_growth_constant(spec.space),
        },
        "artifacts": {"table": table, "figure": figure},
    }
    return results, []


def _solve_entries(spec, config, threads, eps_list, weight_grid, certify: bool):
    """The shared eps x weights solve loop of localize and certify."""
    cfg = _solve_config(config, threads)
    entries = []
    all_pass = True
    for eps in eps_list:
        for wt in weight_grid:
            entry = {"eps": float(eps), "weights": [float(v) for v in wt]}
            try:
                loc, hmap = _localize_pair(spec, eps)
                cert = solve_localization(loc, wt, cfg)
                entry["x_eps"] = cert.x_eps.tolist()
                entry["h"] = evaluate(hmap, cert.x_eps).tolist()
                entry["scalar_value"] = float(cert.scalar_value)
                entry["residuals"] = _residual_payload(cert.residuals)
                if certify:
                    rep = check_certificate(
                        loc,
                        cert,
                        n_samples=config.sample_counts.certificate_samples,
                        seed=config.seed,
                        tol=config.tolerances.optimality,
                    )
                    entry["checks"] = [_check_payload(c) for c in rep.checks]
                    entry["passed"] = bool(rep.passed)
                else:
                    entry["passed"] = _residuals_pass(
                        cert.residuals, eps, config.tolerances
                    )
            except LocoptError as exc:
                entry["failure"] = {"error": type(exc).__name__, "message": str(exc)}
                entry["passed"] = False
            entries.append(entry)
            all_pass = all_pass and entry["passed"]
    return entries, all_pass


def _maybe_front_figure(entries, stem: str, plot: bool):
    if not plot:
        return None, []
    rows = [e for e in entries if "h" in e and len(e["h"]) == 2]
    if not rows:
        return None, ["no 2-d objective values to plot"]
    H = np.array([e["h"] for e in rows])
    W = np.array([e["weights"] for e in rows])
    figure = stem + "-front.png"
    render_front_figure(figure, H, W)
    return figure, []


def _run_localize(spec, config, *, threads, plot, eps_list, weight_grid, cert_path):
    entries, all_pass = _solve_entries(spec, config, threads, eps_list, weight_grid, False)
    results = {"passed": all_pass, "entries": entries}
    figure, warnings = _maybe_front_figure(entries, _out_stem(config.output_path), plot)
    if figure:
        results["artifacts"] = {"figure": figure}
    return results, warnings


def _run_certify(spec, config, *, threads, plot, eps_list, weight_grid, cert_path):
    entries, all_pass = _solve_entries(spec, config, threads, eps_list, weight_grid, True)
    failed = [
        c["name"]
        for e in entries
        for c in e.get("checks", [])
        if not c["passed"]
    ]
    results = {"passed": all_pass, "entries": entries, "failed_checks": sorted(set(failed))}
    figure, warnings = _maybe_front_figure(entries, _out_stem(config.output_path), plot)
    if figure:
        results["artifacts"] = {"figure": figure}
    return results, warnings


def _run_pareto_sweep(spec, config, *, threads, plot, eps_list, weight_grid, cert_path):
    cfg = _solve_config(config, threads)
    warnings: list[str] = []
    rows = []
    payload = []
    all_pass = True
    for eps in eps_list:
        loc, hmap = _localize_pair(spec, eps)
        sweep = pareto_sweep(loc, weight_grid, cfg)
        warnings.extend(f"eps={eps:g}: {a}" for a in sweep.annotations)
        all_pass = all_pass and bool(sweep.certificates)
        for cert in sweep.certificates:
            h = evaluate(hmap, cert.x_eps)
            res = cert.residuals
            rows.append(
                [eps]
                + cert.scalarization_weights.tolist()
                + cert.x_eps.tolist()
                + h.tolist()
                + [float(getattr(res, name)) for name in _RESIDUAL_FIELDS]
            )
            payload.append(
                {
                    "eps": float(eps),
                    "weights": cert.scalarization_weights.tolist(),
                    "x_eps": cert.x_eps.tolist(),
                    "h": h.tolist(),
                    "residuals": _residual_payload(res),
                }
            )

    q = len(payload[0]["weights"]) if payload else len(weight_grid[0])
    d = spec.x0.size
    p = len(payload[0]["h"]) if payload else q
    header = (
        ["eps"]
        + [f"w{k + 1}" for k in range(q)]
        + [f"x{k + 1}" for k in range(d)]
        + [f"h{k + 1}" for k in range(p)]
        + list(_RESIDUAL_FIELDS)
    )
    stem = _out_stem(config.output_path)
    table = stem + ".csv"
    write_csv(table, header, rows)
    artifacts = {"table": table}
    H = np.array([row["h"] for row in payload if len(row["h"]) == 2])
    if H.size:
        figure = stem + "-front.png"
        render_front_figure(figure, H)
        artifacts["figure"] = figure
    results = {"passed": all_pass, "certificates": payload, "artifacts": artifacts}
    return results, warnings


def _equilibrium_payload(eq: EquilibriumCertificate) -> dict:
    res = eq.residuals
    return {
        "price": eq.price.tolist(),
        "allocation": eq.allocation.bundles.tolist(),
        "endowment_distribution": eq.endowment_distribution.tolist(),
        "radii": eq.radii.tolist(),
        "scalarization_weights": eq.scalarization_weights.tolist(),
        "center": eq.center.bundles.tolist(),
        "residuals": {
            "positivity": float(res.positivity),
            "market_clearing": float(res.market_clearing),
            "distribution_consistency": float(res.distribution_consistency),
            "individual_optimality": float(res.individual_optimality),
        },
    }


def _equilibrium_from_payload(doc: dict, where: str) -> EquilibriumCertificate:
    def need(key):
        if key not in doc:
            raise InputError(f"{where}: missing key '{key}'")
        return doc[key]

    res = doc.get("residuals", {})
    return EquilibriumCertificate(
        allocation=Allocation(np.asarray(need("allocation"), dtype=float)),
        price=np.asarray(need("price"), dtype=float),
        endowment_distribution=np.asarray(need("endowment_distribution"), dtype=float),
        radii=np.asarray(need("radii"), dtype=float),
        scalarization_weights=np.asarray(need("scalarization_weights"), dtype=float),
        residuals=EquilibriumResiduals(
            positivity=float(res.get("positivity", 0.0)),
            market_clearing=float(res.get("market_clearing", 0.0)),
            distribution_consistency=float(res.get("distribution_consistency", 0.0)),
            individual_optimality=float(res.get("individual_optimality", 0.0)),
        ),
        center=Allocation(np.asarray(need("center"), dtype=float)),
    )


def _verification_payload(rep) -> tuple[dict, list[str]]:
    checks = [_check_payload(c) for c in rep.checks]
    failed = sorted({c["name"] for c in checks if not c["passed"]})
    payload = {
        "passed": bool(rep.passed),
        "checks": checks,
        "failed_checks": failed,
        "budget_sample_counts": list(rep.budget_sample_counts),
    }
    return payload, failed


def _run_economy_solve(spec, config, *, threads, plot, eps_list, weight_grid, cert_path):
    eco = spec.economy
    eps = float(eps_list[0])
    wt = weight_grid[0]
    x0a = _x0_allocation(spec)
    pair = localized_pareto(eco, x0a, eps, wt, _solve_config(config, threads))
    eq = build_equilibrium(eco, x0a, pair)
    rep = verify_equilibrium(
        eco,
        eq,
        n_samples=config.sample_counts.budget_samples,
        seed=config.seed,
        tol=config.tolerances.optimality,
        threads=threads,
    )
    verification, failed = _verification_payload(rep)

    stem = _out_stem(config.output_path)
    payload = _equilibrium_payload(eq)
    cert_file = stem + "-cert.json"
    write_text_atomic(cert_file, render_json({"equilibrium": payload}))
    figure = stem + "-bundles.png"
    render_bundle_figure(figure, x0a.bundles, eq.allocation.bundles, eq.price)
    results = {
        "passed": verification["passed"],
        "eps": eps,
        "weights": [float(v) for v in wt],
        "equilibrium": payload,
        "verification": verification,
        "failed_checks": failed,
        "artifacts": {"certificate": cert_file, "figure": figure},
    }
    return results, []


def _run_economy_verify(spec, config, *, threads, plot, eps_list, weight_grid, cert_path):
    if cert_path is None:
        raise InputError("economy-verify needs --cert pointing at a certificate file")
    try:
        with open(cert_path, "r") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise InputError(f"no such file: {cert_path}")
    except json.JSONDecodeError as exc:
        raise InputError(f"{cert_path}: {exc}", line=exc.lineno, column=exc.colno)
    if not isinstance(doc, dict):
        raise InputError(f"{cert_path}: top level must be an object")
    # accept a bare payload, a cert file, or a whole economy-solve report
    if "results" in doc and isinstance(doc["results"], dict):
        doc = doc["results"]
    if "equilibrium" in doc:
        doc = doc["equilibrium"]
    eq = _equilibrium_from_payload(doc, cert_path)
    rep = verify_equilibrium(
        spec.economy,
        eq,
        n_samples=config.sample_counts.budget_samples,
        seed=config.seed,
        tol=config.tolerances.optimality,
        threads=threads,
    )
    verification, failed = _verification_payload(rep)
    results = dict(verification)
    results["failed_checks"] = failed
    return results, []


_HANDLERS = {
    "check-regularity": _run_check_regularity,
    "economy-regularity": _run_check_regularity,
    "convexity-radius": _run_convexity_radius,
    "localize": _run_localize,
    "pareto-sweep": _run_pareto_sweep,
    "certify": _run_certify,
    "economy-solve": _run_economy_solve,
    "economy-verify": _run_economy_verify,
}


# ---- dispatch --------------------------------------------------------------

def run(
    command: str,
    input_path: str,
    config: RunConfig,
    *,
    threads: int = 1,
    plot: bool = False,
    eps_override=None,
    weights_grid: int | None = None,
    cert_path: str | None = None,
) -> Report:
    """Execute one command on one input file and write the report.

    Input problems (unknown command, unreadable or mistyped file) raise
    InputError before anything is written. Pipeline errors are captured
    into the report's failure payload; the caller turns them into a
    nonzero exit status.
    """
    if command not in _HANDLERS:
        raise InputError(f"unknown command '{command}'")
    spec = load_run_spec(input_path)
    if spec.kind not in _ACCEPTED_KINDS[command]:
        accepted = " or ".join(f"'{k}'" for k in _ACCEPTED_KINDS[command])
        raise InputError(f"{command} expects input kind {accepted}, got '{spec.kind}'")

    eps_list = list(spec.eps_list)
    if eps_override:
        eps_list = [float(e) for e in eps_override]
        if any(e <= 0 for e in eps_list):
            raise InputError("--eps values must be positive")
    grid = None
    if command not in ("check-regularity", "economy-regularity", "convexity-radius"):
        grid = _weight_grid(spec, weights_grid, config.seed)

    digest = digest_file(input_path)
    try:
        results, warnings = _HANDLERS[command](
            spec,
            config,
            threads=threads,
            plot=plot,
            eps_list=eps_list,
            weight_grid=grid,
            cert_path=cert_path,
        )
    except InputError:
        raise
    except LocoptError as exc:
        results = {
            "passed": False,
            "failure": {"error": type(exc).__name__, "message": str(exc)},
        }
        warnings = []
    report = Report(
        command=command,
        inputs_digest=digest,
        config=config,
        results=results,
        warnings=list(warnings),
    )
    write_report(report, config.output_path)
    return report


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("input", help="problem, economy, or map file")
    common.add_argument("--seed", type=int, default=0, help="base RNG seed (default 0)")
    common.add_argument("--tol-feas", type=float, default=None, help="feasibility tolerance")
    common.add_argument("--tol-opt", type=float, default=None, help="optimality tolerance")
    common.add_argument(
        "--samples",
        type=int,
        default=None,
        help="override the command's primary sample count",
    )
    common.add_argument("--out", default=None, help="report path (default report.json)")
    common.add_argument(
        "--eps",
        type=float,
        action="append",
        default=None,
        help="override the file's radius list (repeatable)",
    )
    common.add_argument(
        "--weights-grid",
        type=int,
        default=None,
        metavar="N",
        help="replace the weight grid by N strictly positive weight vectors",
    )
    common.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
    common.add_argument(
        "--plot",
        action="store_true",
        help="also render a figure for commands that have none by default",
    )

    parser = argparse.ArgumentParser(
        prog="locopt",
        description="local programming toolkit: ball-image convexity, "
        "localized vector optimization, localized exchange equilibria",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "check-regularity": "decide regularity of the file's center allocation",
        "economy-regularity": "alias of check-regularity",
        "convexity-radius": "largest verified convexity radius of a map's ball images",
        "localize": "solve the localized problem on each radius and weight vector",
        "pareto-sweep": "sweep the weight grid and tabulate the local frontier",
        "certify": "solve, then recheck every certificate condition by sampling",
        "economy-solve": "localized Pareto point, supporting price, verification",
        "economy-verify": "recheck a stored equilibrium certificate (--cert)",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, parents=[common], help=text)
        if name == "economy-verify":
            p.add_argument("--cert", required=True, help="certificate JSON from economy-solve")
    return parser


def _config_from_args(ns) -> RunConfig:
    tols = Tolerances()
    if ns.tol_feas is not None:
        tols = Tolerances(feasibility=ns.tol_feas, optimality=tols.optimality, boundary_rel=tols.boundary_rel)
    if ns.tol_opt is not None:
        tols = Tolerances(feasibility=tols.feasibility, optimality=ns.tol_opt, boundary_rel=tols.boundary_rel)
    counts = SampleCounts()
    if ns.samples is not None:
        if ns.samples < 1:
            raise InputError(f"--samples must be >= 1, got {ns.samples}")
        if ns.command == "convexity-radius":
            counts = SampleCounts(convexity_pairs=ns.samples)
        elif ns.command in ("economy-solve", "economy-verify"):
            counts = SampleCounts(budget_samples=ns.samples)
        else:
            counts = SampleCounts(certificate_samples=ns.samples)
    out = ns.out if ns.out is not None else "report.json"
    try:
        return RunConfig(seed=ns.seed, tolerances=tols, sample_counts=counts, output_path=out)
    except LocoptError as exc:
        raise InputError(str(exc)) from exc


def _summarize(report: Report) -> str:
    results = report.results
    if "failure" in results:
        f = results["failure"]
        return f"{report.command}: FAIL ({f['error']}: {f['message']})"
    if results.get("passed", False):
        return f"{report.command}: pass"
    failed = results.get("failed_checks")
    if failed:
        return f"{report.command}: FAIL (checks: {', '.join(failed)})"
    entries = results.get("entries")
    if entries:
        bad = sum(1 for e in entries if not e["passed"])
        return f"{report.command}: FAIL ({bad}/{len(entries)} entries failed)"
    return f"{report.command}: FAIL"


def main(argv=None) -> int:
    parser = _build_parser()
    ns = parser.parse_args(argv)
    try:
        config = _config_from_args(ns)
        if ns.threads < 1:
            raise InputError(f"--threads must be >= 1, got {ns.threads}")
        report = run(
            ns.command,
            ns.input,
            config,
            threads=ns.threads,
            plot=ns.plot,
            eps_override=ns.eps,
            weights_grid=ns.weights_grid,
            cert_path=getattr(ns, "cert", None),
        )
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(_summarize(report))
    print(f"report written to {config.output_path}")
    return 0 if report.results.get("passed", False) else 1


if __name__ == "__main__":
    sys.exit(main())
