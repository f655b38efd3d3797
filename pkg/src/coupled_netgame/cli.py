"""Command-line entry point: ``netgame <command> --config scenario.json``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .componentwise import solve_ptilde
from .errors import ConfigError, NetGameError, NumericalFailureError
from .feasibility import classify_regime
from .game import (
    NONNEG_TOL,
    PriceProfile,
    centrality,
    greedy_minimal_set,
    interior_equilibrium,
    kkt_residual,
    leontief_bundle,
    nonneg_equilibrium,
    quadratic_welfare,
    welfare_gradient,
)
from .network import connected_components, read_network
from .oracle import (
    SUBSET_CAP,
    best_response_fixed_point,
    finite_diff_gradient,
    subset_minimal_s,
    vertex_enumeration_p,
    vertex_enumeration_ptilde,
)
from .problems import ProblemP, ProblemPR, ProblemPTilde
from .redistribution import recommend_policy, solve_pr, vanish_penalty
from .scenario import broadcast, load_scenario, scenario_prices, write_results
from .solver_p import solve_p
from .sweep import run_sweep, synthetic_concession_network, tau_at_price

COMMANDS = ("feasibility", "equilibrium", "centrality", "solve", "sweep", "verify", "recommend")


class Context:
    """Scenario plus the objects every command needs."""

    def __init__(self, args):
        if args.config is None:
            raise ConfigError("--config is required")
        self.args = args
        self.cfg = load_scenario(args.config)
        base = Path(self.cfg.base_dir)
        net = self.cfg.network
        if args.network is not None:
            self.g = read_network(args.network, net.get("n"))
        elif "path" in net:
            path = Path(net["path"])
            self.g = read_network(path if path.is_absolute() else base / path, net.get("n"))
        else:
            spec = dict(net["synthetic"])
            try:
                self.g = synthetic_concession_network(**spec)
            except TypeError as exc:
                raise ConfigError(f"field 'network.synthetic': {exc}") from None
        self.params = self.cfg.params
        self.p_a0, self.p_b0 = scenario_prices(self.cfg, self.g.n)
        self._bundle = None

    @property
    def bundle(self):
        if self._bundle is None:
            self._bundle = leontief_bundle(self.g, self.params, self.p_b0)
        return self._bundle

    def tau(self, spec):
        """``tau_b`` as a number, or ``{"price_ratio": r}`` for the aggregate at ``pA = r pB``."""
        if isinstance(spec, dict):
            if "price_ratio" not in spec:
                raise ConfigError("field 'tau_b' object needs 'price_ratio'")
            return tau_at_price(self.g, self.params, self.p_b0, float(spec["price_ratio"]))
        try:
            return float(spec)
        except (TypeError, ValueError):
            raise ConfigError(f"field 'tau_b' must be a number or {{'price_ratio': r}}, got {spec!r}") from None

    def problem(self, kind):
        pr = self.cfg.problem
        if pr is None:
            raise ConfigError("missing field 'problem'")
        n = self.g.n
        tau = self.tau(pr["tau_b"])
        try:
            if kind in ("p", "ptilde"):
                if "p_max" not in pr:
                    raise ConfigError("missing field 'problem.p_max'")
                p_max = broadcast(pr["p_max"], n, "problem.p_max")
                cls = ProblemP if kind == "p" else ProblemPTilde
                return cls(self.p_a0, p_max, self.p_b0, tau)
            if "rho_max" not in pr:
                raise ConfigError("missing field 'problem.rho_max'")
            rho = broadcast(pr["rho_max"], n, "problem.rho_max")
            budget = broadcast(pr.get("budget", 0.0), n, "problem.budget")
            return ProblemPR(self.p_a0, self.p_b0, rho, budget, tau)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"field 'problem': {exc}") from None

    def emit(self, payload):
        text = json.dumps(payload, indent=2, sort_keys=True, default=_jsonable)
        if self.args.out is not None:
            Path(self.args.out).write_text(text + "\n")
        print(text)


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return str(x)


def cmd_feasibility(ctx):
    pr = ctx.cfg.problem or {}
    rho = broadcast(pr["rho_max"], ctx.g.n, "problem.rho_max") if "rho_max" in pr else None
    report = classify_regime(ctx.g, ctx.params, rho)
    print(report.summary())
    if report.component_regimes:
        print("component regimes: " + " ".join(report.component_regimes))


def cmd_equilibrium(ctx):
    prices = PriceProfile(ctx.p_a0, ctx.p_b0)
    kw = {} if ctx.args.tol is None else {"kkt_tol": ctx.args.tol}
    eff, cert = nonneg_equilibrium(ctx.g, ctx.params, prices, bundle=ctx.bundle, **kw)
    ctx.emit({
        "x_a": eff.x_a, "x_b": eff.x_b, "branch": cert.branch.value,
        "active_set": list(cert.active_set), "kkt_residual": cert.kkt_residual,
        "aggregate_x_b": float(eff.x_b.sum()),
    })


def cmd_centrality(ctx):
    b = centrality(ctx.bundle)
    order = np.argsort(-b, kind="stable")
    print("rank agent b_delta")
    for r, i in enumerate(order, 1):
        print(f"{r} {i} {float(b[i])!r}")


def cmd_solve(ctx):
    kind = ctx.args.kind
    problem = ctx.problem(kind)
    limit = ctx.args.bruteforce_limit
    extra = {}
    if kind == "p":
        res = solve_p(ctx.g, ctx.params, problem, bruteforce_limit=limit, bundle=ctx.bundle)
    elif kind == "ptilde":
        res, relax = solve_ptilde(ctx.g, ctx.params, problem, bundle=ctx.bundle)
        extra = {
            "relaxation": {
                "ell_prime": relax.ell_prime, "ell_star": relax.ell_star, "gamma": relax.gamma,
                "order": relax.order, "bar_p": relax.bar_p, "exact": relax.exact,
                "upper_bound": relax.upper_bound, "suggested_tau_b": relax.suggested_tau_b,
            }
        }
    else:
        res = solve_pr(ctx.g, ctx.params, problem, bundle=ctx.bundle)
        rho0 = vanish_penalty(ctx.bundle, problem.p_a0, problem.p_b0, problem.budget, paper_literal=ctx.args.paper_literal)
        extra = {"vanish_penalty": rho0, "vanish_penalty_form": "literal" if ctx.args.paper_literal else "corrected"}
    ctx.emit({**res.as_dict(), "tau_b": problem.tau_b, **extra})


def cmd_sweep(ctx):
    sw = ctx.cfg.sweep
    if sw is None:
        raise ConfigError("missing field 'sweep'")
    out = ctx.args.out
    if out is None:
        if ctx.cfg.output is None:
            raise ConfigError("sweep needs --out or field 'output'")
        out = Path(ctx.cfg.base_dir) / ctx.cfg.output
    spec = sw.tau_b if sw.tau_b is not None else (ctx.cfg.problem or {}).get("tau_b")
    if spec is None:
        raise ConfigError("sweep needs field 'sweep.tau_b' or 'problem.tau_b'")
    ratios = sw.values()
    rows = []
    if len(ratios):
        rows = run_sweep(
            ctx.g, ctx.params, ctx.p_a0, ctx.p_b0, ctx.tau(spec), ratios, problems=sw.problems,
            rho_max_ratio=sw.rho_max_ratio, jitter=sw.jitter, seed=ctx.args.seed,
            scenario_id=ctx.cfg.scenario_id, bruteforce_limit=ctx.args.bruteforce_limit,
        )
    write_results(rows, out)
    print(f"wrote {len(rows)} rows to {out}")


def _check(lines, name, ok, info):
    lines.append((name, bool(ok), info))


def cmd_verify(ctx):
    g, params, bundle = ctx.g, ctx.params, ctx.bundle
    tol = 1e-7 if ctx.args.tol is None else ctx.args.tol
    limit = ctx.args.bruteforce_limit
    checks = []
    skipped = []
    prices = PriceProfile(ctx.p_a0, ctx.p_b0)
    eff, cert = nonneg_equilibrium(g, params, prices, bundle=bundle)
    ref, trace = best_response_fixed_point(g, params, prices)
    scale = max(1.0, float(np.max(np.abs(eff.x_a))), float(np.max(np.abs(eff.x_b))))
    diff = max(np.max(np.abs(eff.x_a - ref.x_a)), np.max(np.abs(eff.x_b - ref.x_b))) / scale
    _check(checks, "equilibrium vs best response", trace.converged and diff < tol, f"rel diff {diff:.3g}")
    res = kkt_residual(g.adjacency, params, prices, eff)
    _check(checks, "equilibrium KKT residual", res < 1e-8 * scale, f"{res:.3g}")
    _, ok = interior_equilibrium(bundle, prices)
    if not ok and cert.branch.value == "MIXED_MINIMAL_SET" and g.n > SUBSET_CAP:
        skipped.append(f"minimal set size: n={g.n} exceeds {SUBSET_CAP}")
    elif not ok and cert.branch.value == "MIXED_MINIMAL_SET":
        pscale = max(1.0, float(ctx.p_a0.max()), float(ctx.p_b0.max()))
        s_greedy, _ = greedy_minimal_set(bundle, prices, NONNEG_TOL * pscale)
        s_exh = subset_minimal_s(g, params, prices, bundle=bundle)
        _check(checks, "minimal set size", len(s_greedy) == len(s_exh), f"{len(s_greedy)} vs {len(s_exh)}")
    p0 = np.array(ctx.p_a0)
    fd = finite_diff_gradient(lambda p: quadratic_welfare(bundle, p), p0, h=1e-6 * max(1.0, float(p0.max())))
    an = welfare_gradient(bundle, p0)
    gerr = np.max(np.abs(fd - an)) / max(1.0, np.max(np.abs(an)))
    _check(checks, "welfare gradient", gerr < 1e-6, f"rel err {gerr:.3g}")

    kind = (ctx.cfg.problem or {}).get("kind")
    if kind == "p" and g.n > limit:
        skipped.append(f"price raise vs vertex enumeration: n={g.n} exceeds --bruteforce-limit {limit}")
    elif kind == "p":
        prob = ctx.problem("p")
        a = solve_p(g, params, prob, bruteforce_limit=limit, bundle=bundle)
        b = vertex_enumeration_p(g, params, prob, limit=limit, bundle=bundle)
        gap = abs(a.welfare - b.welfare) / max(1.0, abs(b.welfare))
        _check(checks, "price raise vs vertex enumeration", gap < 1e-8, f"{a.certificate.value}, rel gap {gap:.3g}")
    elif kind == "ptilde" and len(connected_components(g).components) > limit:
        skipped.append(f"uniform raise vs vertex enumeration: more than {limit} components")
    elif kind == "ptilde":
        prob = ctx.problem("ptilde")
        a, relax = solve_ptilde(g, params, prob, bundle=bundle)
        b = vertex_enumeration_ptilde(g, params, prob, limit=limit, bundle=bundle)
        s = max(1.0, abs(b.welfare))
        if a.optimality_exact:
            gap = abs(a.welfare - b.welfare) / s
            _check(checks, "uniform raise vs vertex enumeration", gap < 1e-8, f"{a.certificate.value}, rel gap {gap:.3g}")
        else:
            _check(checks, "relaxation bound", b.welfare <= relax.upper_bound + 1e-8 * s,
                   f"optimum {b.welfare:.10g} <= bound {relax.upper_bound:.10g}")
    elif kind == "pr":
        prob = ctx.problem("pr")
        a = solve_pr(g, params, prob, bundle=bundle)
        if "no_agent_worse" in a.details:
            _check(checks, "no agent worse off", a.details["no_agent_worse"], a.certificate.value)
        rho0 = vanish_penalty(bundle, prob.p_a0, prob.p_b0, prob.budget)
        _check(checks, "vanishing penalty", True, f"max {float(np.max(rho0)):.6g}")

    for name, ok, info in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {info}")
    for note in skipped:
        print(f"SKIP {note}")
    failed = [name for name, ok, _ in checks if not ok]
    if failed:
        raise NumericalFailureError(f"{len(failed)} cross-check(s) failed", {"failed": failed})


def cmd_recommend(ctx):
    problem = ctx.problem("pr")
    rec = recommend_policy(ctx.g, ctx.params, problem, priority=ctx.args.priority, uniform=ctx.args.uniform, bundle=ctx.bundle)
    print(rec.action)
    print(f"reason: {rec.reason}")
    print("p_a: " + " ".join(repr(float(x)) for x in rec.policy_a))
    print("p_b: " + " ".join(repr(float(x)) for x in rec.policy_b))


HANDLERS = {
    "feasibility": cmd_feasibility,
    "equilibrium": cmd_equilibrium,
    "centrality": cmd_centrality,
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "recommend": cmd_recommend,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario JSON file")
    common.add_argument("--network", help="edge list (CSV src,dst or JSON) overriding the scenario network")
    common.add_argument("--out", help="output file")
    common.add_argument("--seed", type=int, default=0, help="seed for randomised bounds in sweeps")
    common.add_argument("--bruteforce-limit", type=int, default=15, help="largest n for vertex enumeration")
    common.add_argument("--paper-literal", action="store_true", help="report the literal vanishing-penalty formula")
    common.add_argument("--tol", type=float, default=None, help="numerical tolerance for equilibrium checks")

    parser = argparse.ArgumentParser(prog="netgame", description="Price interventions in a two-activity network game.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("feasibility", parents=[common], help="classify the intervention regime")
    sub.add_parser("equilibrium", parents=[common], help="non-negative equilibrium at the scenario prices")
    sub.add_parser("centrality", parents=[common], help="rank agents by price-response centrality")
    solve = sub.add_parser("solve", parents=[common], help="solve a policy problem")
    solve.add_argument("kind", choices=("p", "pr", "ptilde"))
    sub.add_parser("sweep", parents=[common], help="policy sweep over the average maximum price, written as CSV")
    sub.add_parser("verify", parents=[common], help="cross-check solvers against brute-force oracles")
    rec = sub.add_parser("recommend", parents=[common], help="policy guideline for a budget and penalty cap")
    rec.add_argument("--priority", choices=("welfare", "reduction"), default="welfare")
    rec.add_argument("--uniform", action="store_true", help="restrict raises to one price per component")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        HANDLERS[args.command](Context(args))
    except NetGameError as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}
        diag = getattr(exc, "diagnostics", None)
        if diag:
            err["diagnostics"] = diag
        print(json.dumps(err, default=_jsonable), file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": 1}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
