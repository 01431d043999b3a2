"""Command-line front end.

Each subcommand builds a model, calls into the library, writes CSV layers and
a ``summary.json`` into ``--out`` and exits with

* 0 when every acceptance rule of the run passed,
* 1 when a rule failed,
* 2 on a bad configuration,
* 3 when a computation failed.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import brown, flows
from .artifacts import config_hash, emit_plot_data, write_csv, write_summary
from .ensembles import EnsembleError, build_deformation, eigenvalues, sample_iid, trial_seed
from .experiments import (Bump, cluster_count_trial, edge_statistics, girko_identity_test,
                          girko_observables, local_law_trial, no_outlier_trial, real_edge_comparison,
                          smallest_singular_tail)
from .mde import MdeConvergenceError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_COMPUTE = 0, 1, 2, 3

COMMANDS = ("brown-grid", "edge-scan", "path-build", "flow-check", "zigzag-plan", "mc-eigen", "local-law",
            "no-outlier", "cluster-count", "edge-stats", "girko-check", "sstail")

# default tolerances per command; --tol-overrides may replace any of them
TOLERANCES = {
    "brown-grid": {"density_excess": 2e-2},
    "edge-scan": {"f_residual": 1e-10},
    "path-build": {"norm_f": 1e-10, "C5": 1e3},
    "flow-check": {"rel_dev": 1e-8},
    "zigzag-plan": {"reconstruction": 1e-8},
    "mc-eigen": {},
    "local-law": {"slope_lo": -1.2, "slope_hi": -0.8, "iso_lo": 0.1, "iso_hi": 10.0},
    "no-outlier": {"violations": 0},
    "cluster-count": {"mismatches": 0},
    "edge-stats": {"abs": 0.03, "k_se": 3.0, "bulk_rel": 0.05, "alpha": 0.01},
    "girko-check": {"girko_rel": 1e-3, "l0_per_N": 1e-6, "n0_abs": 1e-12},
    "sstail": {"k_se": 3.0},
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    model: str | dict = "zero"
    N: int = 256
    field: str = "complex"
    trials: int = 100
    seed: int = 0
    eps: float = 0.25
    eps0: float = 0.05
    delta: float = 0.005
    eta_grid: str = "auto"
    out: str = "out"
    workers: int = 1
    tolerances: dict = dc_field(default_factory=dict)
    ray: str = "1"
    origin: str = "0"
    z: str | None = None
    w: str = "0"
    eta0: float = 1.0
    h: float = 0.02
    radius: float = 0.5
    real_path: bool = False

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.N <= 0 or self.trials <= 0:
            raise ConfigError("N and trials must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.field not in ("real", "complex"):
            raise ConfigError("field must be 'real' or 'complex'")
        for name in ("eps", "eps0", "delta", "eta0", "h", "radius"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        unknown = set(self.tolerances) - set(TOLERANCES[self.command])
        if unknown:
            raise ConfigError(f"unknown tolerance keys for {self.command}: {sorted(unknown)}")
        for s in (self.ray, self.origin, self.w) + ((self.z,) if self.z else ()):
            parse_complex(s)
        parse_eta_grid(self.eta_grid, self.N)

    def tol(self, key):
        return self.tolerances.get(key, TOLERANCES[self.command][key])

    def provenance(self) -> dict:
        """Config with defaults filled in; ``out`` and ``workers`` do not affect results."""
        d = asdict(self)
        d["tolerances"] = {**TOLERANCES[self.command], **self.tolerances}
        return d

    def hash(self) -> str:
        d = self.provenance()
        d.pop("out")
        d.pop("workers")
        return config_hash(d)


def parse_complex(s) -> complex:
    if isinstance(s, (int, float, complex)):
        return complex(s)
    try:
        return complex(str(s).replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise ConfigError(f"cannot parse complex number {s!r}") from exc


def parse_eta_grid(s, N: int | None = None) -> np.ndarray:
    """``lo:hi:n`` (log-spaced), a comma list, or ``auto``: 13 log-spaced points on ``[N^-0.9, N^-0.1]``."""
    if s == "auto":
        if not N or N < 2:
            raise ConfigError("eta grid 'auto' needs N >= 2")
        return np.geomspace(N ** -0.9, N ** -0.1, 13)
    try:
        if ":" in s:
            lo, hi, n = (float(x) for x in s.split(":"))
            if lo <= 0 or hi <= 0 or n < 1:
                raise ConfigError(f"bad eta grid {s!r}")
            grid = np.logspace(np.log10(lo), np.log10(hi), int(n))
        else:
            grid = np.array([float(x) for x in s.split(",")])
    except ValueError as exc:
        raise ConfigError(f"bad eta grid {s!r}") from exc
    if grid.size == 0 or np.any(grid <= 0):
        raise ConfigError("eta grid must be non-empty and positive")
    return grid


def _model(cfg: RunConfig):
    spec = cfg.model
    if isinstance(spec, str) and spec.strip().startswith("{"):
        spec = json.loads(spec)
    spec = {"kind": spec} if isinstance(spec, str) else dict(spec)
    spec.setdefault("N", cfg.N)
    spec.setdefault("field", cfg.field)
    try:
        return build_deformation(spec)
    except (EnsembleError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _rule(value, threshold, ok, **extra) -> dict:
    return {"value": value, "threshold": threshold, "pass": bool(ok), **extra}


def _edge(cfg, model, N=None):
    return brown.find_edge(model, direction=parse_complex(cfg.ray), origin=parse_complex(cfg.origin), N=N)


# ---------------------------------------------------------------------------
# subcommands: each returns (rules, results) and writes its CSV layers


def cmd_brown_grid(cfg, model, out, ch):
    bf = brown.brown_field(model, h=cfg.h)
    write_csv(out / "field.csv", ["re_z", "im_z", "f", "density", "in_support"], bf.rows(), ch, cfg.seed)
    emit_plot_data(out, ch, cfg.seed, contours=bf.contour)
    dmax = float(bf.density_vals.max())
    rules = {"density_bound": _rule(dmax, 1 / np.pi + cfg.tol("density_excess"),
                                    dmax <= 1 / np.pi + cfg.tol("density_excess"))}
    return rules, {"total_mass": bf.total_mass, "n_contours": len(bf.contour)}


def cmd_edge_scan(cfg, model, out, ch):
    ep = _edge(cfg, model, N=cfg.N)
    (out / "edge.json").write_text(json.dumps(ep.to_json(), indent=2, sort_keys=True) + "\n")
    res = abs(ep.f - 1.0)
    return {"f_residual": _rule(res, cfg.tol("f_residual"), res <= cfg.tol("f_residual"))}, ep.to_json()


def cmd_path_build(cfg, model, out, ch):
    z0 = parse_complex(cfg.z) if cfg.z else _edge(cfg, model).z0
    if cfg.real_path:
        p = flows.real_path(model, z0, cfg.N, delta=cfg.delta, C5=cfg.tol("C5"))
        ok = p.check_report["regime_ok"]
        rules = {"regime": _rule(p.regime, "A1/A2", ok)}
    else:
        p = flows.complex_path(model, z0, N=cfg.N, delta=cfg.delta, C5=cfg.tol("C5"))
        rules = {}
    rep = p.check_report
    rules["norm_f"] = _rule(rep["max_norm_f_dev"], cfg.tol("norm_f"), rep["max_norm_f_dev"] <= cfg.tol("norm_f"))
    rules["C5"] = _rule(rep["C5_fit"], cfg.tol("C5"), rep["C5_fit"] <= cfg.tol("C5"))
    write_csv(out / "path.csv", p.columns, p.rows(), ch, cfg.seed)
    return rules, {"z0": z0, "z1": p.z1, "regime": p.regime, "report": rep}


def cmd_flow_check(cfg, model, out, ch):
    z = parse_complex(cfg.z) if cfg.z else 0j
    tr = flows.characteristic_flow(model, z, cfg.eta0)
    _, m_cf, T_cf = flows.characteristic_closed_form(model, z, cfg.eta0, tr.t)
    keep = tr.eta > 0
    rel = float(np.max(np.abs(tr.m[keep] / m_cf[keep] - 1.0)))
    write_csv(out / "flow.csv", tr.columns + ("im_M_closed",), [*tr.rows().T, m_cf], ch, cfg.seed)
    rules = {"dM_dt": _rule(rel, cfg.tol("rel_dev"), rel <= cfg.tol("rel_dev"))}
    return rules, {"T_star": tr.T_star, "T_star_closed": T_cf, "hit_zero": tr.hit_zero}


def cmd_zigzag_plan(cfg, model, out, ch):
    z = parse_complex(cfg.z) if cfg.z else 0j
    sc = flows.zigzag_schedule(model, z, cfg.N, cfg.eps, cfg.eps0)
    write_csv(out / "zigzag.csv", sc.columns, sc.rows(), ch, cfg.seed)
    dev = float(np.max(np.abs(sc.reconstruction - 1.0)))
    rules = {
        "reconstruction": _rule(dev, cfg.tol("reconstruction"), dev <= cfg.tol("reconstruction")),
        "eta_ratio": _rule(sc.eta_ratio_min, sc.eta_ratio_bound, sc.eta_ratio_min >= sc.eta_ratio_bound),
    }
    return rules, {"K": sc.K, "eta_in": sc.eta_in, "eta_fin": sc.eta_fin, "T": sc.T}


def cmd_mc_eigen(cfg, model, out, ch):
    lam = np.concatenate([eigenvalues(sample_iid(model, trial_seed(cfg.seed, i)).deformed)
                          for i in range(cfg.trials)])
    sp = brown.spec_eps(model, cfg.N, cfg.eps, h=cfg.h)
    emit_plot_data(out, ch, cfg.seed, scatter=lam, contours=sp.contours, band=list(zip(sp.contours, sp.radius)))
    return {}, {"n_eigenvalues": lam.size, "n_clusters": sp.n_clusters}


def cmd_local_law(cfg, model, out, ch):
    z = parse_complex(cfg.z) if cfg.z else _edge(cfg, model).z0
    r = local_law_trial(model, z, parse_eta_grid(cfg.eta_grid, cfg.N), cfg.trials, cfg.seed, workers=cfg.workers)
    cols = ["eta", "rho"] + [f"avg_mean_{b}" for b in r.B_names] + [f"avg_q95_{b}" for b in r.B_names]
    npairs = r.iso_mean.shape[0]
    cols += [f"iso_mean_{k}" for k in range(npairs)] + [f"iso_q95_{k}" for k in range(npairs)]
    write_csv(out / "local_law.csv", cols, r.rows(), ch, cfg.seed)
    lo, hi = cfg.tol("slope_lo"), cfg.tol("slope_hi")
    ir = r.iso_ratio
    rules = {
        "avg_slope": _rule(r.slope, [lo, hi], lo <= r.slope <= hi),
        "iso_ratio": _rule([float(ir.min()), float(ir.max())], [cfg.tol("iso_lo"), cfg.tol("iso_hi")],
                           ir.min() >= cfg.tol("iso_lo") and ir.max() <= cfg.tol("iso_hi")),
    }
    return rules, {"z": z}


def cmd_no_outlier(cfg, model, out, ch):
    sp = brown.spec_eps(model, cfg.N, cfg.eps, h=cfg.h)
    r = no_outlier_trial(model, sp, cfg.trials, cfg.seed, workers=cfg.workers)
    write_csv(out / "no_outlier.csv", ["trial", "violations", "max_normalized", "max_excursion"],
              r.rows()[:, :4], ch, cfg.seed)
    v = r.total_violations
    return {"violations": _rule(v, cfg.tol("violations"), v <= cfg.tol("violations"))}, \
        {"max_excursion": float(r.max_excursion.max())}


def cmd_cluster_count(cfg, model, out, ch):
    sp = brown.spec_eps(model, cfg.N, cfg.eps, h=cfg.h)
    r = cluster_count_trial(model, sp, cfg.trials, cfg.seed, workers=cfg.workers)
    k = r.counts.shape[1]
    write_csv(out / "counts.csv", ["trial"] + [f"cluster_{j}" for j in range(k)] + ["outside", "ambiguous"],
              r.rows(), ch, cfg.seed)
    bad = int(np.count_nonzero(~r.match))
    return {"mismatches": _rule(bad, cfg.tol("mismatches"), bad <= cfg.tol("mismatches"))}, \
        {"expected": r.expected, "ambiguous_trials": int(r.ambiguous.sum())}


def cmd_edge_stats(cfg, model, out, ch):
    ep = _edge(cfg, model)
    if model.field == "real":
        r = real_edge_comparison(model, ep, cfg.trials, cfg.seed, workers=cfg.workers, alpha=cfg.tol("alpha"))
        for name in ("deformed", "ginibre"):
            write_csv(out / f"p1_{name}.csv", ["re_w", "p1", "p1_se", "count"], r[name].rows(), ch, cfg.seed)
        rules = {"chi2": _rule(r["p_value"], cfg.tol("alpha"), r["pass"])}
        return rules, {k: r[k] for k in ("z0", "z1", "chi2", "dof", "p_value")}
    r = edge_statistics(model, ep, cfg.trials, cfg.seed, workers=cfg.workers, tol=cfg.tol("abs"),
                        k_se=cfg.tol("k_se"), bulk_rel=cfg.tol("bulk_rel"))
    write_csv(out / "p1.csv", ["re_w", "p1", "p1_se", "count", "p1_kernel"], r.rows(), ch, cfg.seed)
    c = r.comparison
    rules = {
        "profile": _rule(c["sup_dev"], cfg.tol("abs"), c["pass_profile"]),
        "bulk": _rule(c["bulk_max_rel_dev"], cfg.tol("bulk_rel"), c["pass_bulk"]),
    }
    return rules, {"edge": ep.to_json(), "p2_sup_dev": c.get("p2_sup_dev")}


def cmd_girko_check(cfg, model, out, ch):
    X = sample_iid(model, trial_seed(cfg.seed, 0))
    z = parse_complex(cfg.z) if cfg.z else 0j
    F = Bump(z, cfg.radius)
    g = girko_identity_test(X.deformed, F)
    ep = _edge(cfg, model)
    obs = girko_observables(model, ep, parse_complex(cfg.w), cfg.trials, cfg.seed, delta=cfg.delta,
                            workers=cfg.workers)
    write_csv(out / "girko_observables.csv", ["trial", "L0", "L0_integral", "N0", "N0_resolvent"], obs.rows(),
              ch, cfg.seed)
    gtol = cfg.tol("girko_rel") * g.lap_l1
    rules = {
        "girko": _rule(g.residual, gtol, g.residual <= gtol),
        "L0_routes": _rule(obs.l0_route_dev, cfg.tol("l0_per_N") * cfg.N,
                           obs.l0_route_dev <= cfg.tol("l0_per_N") * cfg.N),
        "N0_identity": _rule(obs.n0_identity_dev, cfg.tol("n0_abs"), obs.n0_identity_dev <= cfg.tol("n0_abs")),
    }
    return rules, {"direct": g.direct, "hermitized": g.hermitized, "L0_std": float(np.std(obs.L0, ddof=1))
                   if obs.L0.size > 1 else 0.0}


def cmd_sstail(cfg, model, out, ch):
    ep = _edge(cfg, model)
    res = smallest_singular_tail(model, ep, parse_complex(cfg.w), cfg.trials, cfg.seed, delta=cfg.delta,
                                 eta_factors=(1.0, 0.25), workers=cfg.workers)
    write_csv(out / "sstail.csv", ["eta0", "p_hat", "ci_lo", "ci_hi", "bound", "bound_se"],
              [[r.eta0 for r in res], [r.p_hat for r in res], [r.ci[0] for r in res], [r.ci[1] for r in res],
               [r.bound for r in res], [r.bound_se for r in res]], ch, cfg.seed)
    k = cfg.tol("k_se")
    r = res[0]
    slack = k * float(np.hypot(r.se, r.bound_se))
    return {"tail_bound": _rule(r.p_hat, r.bound + slack, r.p_hat <= r.bound + slack)}, \
        {"monotone": bool(res[1].p_hat <= res[0].p_hat)}


HANDLERS = {
    "brown-grid": cmd_brown_grid, "edge-scan": cmd_edge_scan, "path-build": cmd_path_build,
    "flow-check": cmd_flow_check, "zigzag-plan": cmd_zigzag_plan, "mc-eigen": cmd_mc_eigen,
    "local-law": cmd_local_law, "no-outlier": cmd_no_outlier, "cluster-count": cmd_cluster_count,
    "edge-stats": cmd_edge_stats, "girko-check": cmd_girko_check, "sstail": cmd_sstail,
}


# ---------------------------------------------------------------------------
# argument handling


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run options")
    g.add_argument("--config", help="JSON config file; explicit flags override its entries")
    g.add_argument("--model", help="deformation kind (zero, twocluster, threecluster, quadratic, planted, "
                                   "jordan) or a JSON model spec")
    g.add_argument("--N", type=int, help="matrix dimension")
    g.add_argument("--field", choices=("real", "complex"), help="entry field of X (and A)")
    g.add_argument("--trials", type=int, help="Monte Carlo trials")
    g.add_argument("--seed", type=int, help="base seed; trial i uses a seed derived from (seed, i)")
    g.add_argument("--eps", type=float, help="Spec_eps exponent, and N^eps target of the zig-zag schedule")
    g.add_argument("--eps0", type=float, help="zig-zag time exponent (T = N^-eps0)")
    g.add_argument("--delta", type=float, help="exponent in eta1 = N^(-3/4-delta)")
    g.add_argument("--eta-grid", dest="eta_grid", help="lo:hi:n log grid, comma list, or auto ([N^-0.9, N^-0.1])")
    g.add_argument("--out", help="output directory")
    g.add_argument("--workers", type=int, help="worker processes (results do not depend on this)")
    g.add_argument("--tol-overrides", dest="tol_overrides", help="JSON object of tolerance overrides")
    g.add_argument("--ray", help="ray direction for edge search, e.g. 1+0i")
    g.add_argument("--origin", help="ray origin")
    g.add_argument("--z", help="base point (complex)")
    g.add_argument("--w", help="rescaled edge coordinate (complex)")
    g.add_argument("--eta0", type=float, help="initial eta for flow-check")
    g.add_argument("--h", type=float, help="grid step for support contours")
    g.add_argument("--radius", type=float, help="bump radius for girko-check")
    g.add_argument("--real-path", dest="real_path", action="store_true", default=None,
                   help="path-build: real-symmetry path instead of the complex path")
    p = argparse.ArgumentParser(prog="deformed-iid", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "brown-grid": "Brown density, f_A and support contour on a grid",
        "edge-scan": "locate and classify an edge point along a ray",
        "path-build": "build and check a deformation path from an edge point",
        "flow-check": "integrate the characteristic flow and compare with its closed form",
        "zigzag-plan": "zig-zag schedule of scales and times",
        "mc-eigen": "eigenvalue scatter with support and Spec_eps layers",
        "local-law": "averaged and isotropic local-law errors",
        "no-outlier": "eigenvalues outside Spec_eps",
        "cluster-count": "eigenvalue counts per Spec_eps cluster",
        "edge-stats": "edge correlation functions vs Ginibre",
        "girko-check": "Girko identity, L0 and N0 identities",
        "sstail": "least singular value tail vs its bound",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name], description=helps[name])
    return p


def make_config(args) -> RunConfig:
    base = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(base, dict):
            raise ConfigError("config must be a JSON object")
        if "tol_overrides" in base:
            base["tolerances"] = base.pop("tol_overrides")
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(base) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if base.get("command", args.command) != args.command:
        raise ConfigError("config command does not match the subcommand")
    base["command"] = args.command
    for k, v in vars(args).items():
        if k in ("config", "command", "tol_overrides") or v is None:
            continue
        base[k] = v
    if args.tol_overrides:
        try:
            base["tolerances"] = {**base.get("tolerances", {}), **json.loads(args.tol_overrides)}
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad --tol-overrides: {exc}") from exc
    try:
        cfg = RunConfig(**base)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    cfg.validate()
    return cfg


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = make_config(args)
        model = _model(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg.out)
    ch = cfg.hash()
    t0 = time.perf_counter()
    try:
        out.mkdir(parents=True, exist_ok=True)
        with np.errstate(all="ignore"):
            rules, results = HANDLERS[cfg.command](cfg, model, out, ch)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MdeConvergenceError, brown.BrownError, flows.PathError, ArithmeticError, RuntimeError,
            ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"compute failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    summary = write_summary(out / "summary.json", cfg.provenance(), rules, time.perf_counter() - t0, results)
    for name, r in rules.items():
        print(f"{name}: {'PASS' if r['pass'] else 'FAIL'} value={r['value']} threshold={r['threshold']}")
    return EXIT_OK if summary["passed"] else EXIT_FAIL


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
