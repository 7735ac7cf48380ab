"""Command-line driver.

Subcommands: ``diag``, ``conditions``, ``kesten``, ``repro-example61`` and
``levy``. Each writes CSV series/tables plus a ``manifest.toml`` (verdicts,
constants and the fully resolved config) and a ``run_meta.toml`` into the
output directory. Verdicts never change the exit status; configuration and
operational errors exit with status 2.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..convolution import (LevySpectrum, compound, explicit_pmf, geometric_pmf, id_compose,
                           levy_to_spectral, poisson_pmf)
from ..diagnostics import (ClassSpec, DiagConfig, KestenConstraintError, check_condition_liminf,
                           classify, find_minimal_n0, kesten_verify, lemma21_bridge_check,
                           weak_equivalence)
from ..diagnostics.example61 import repro_example61
from ..families import Example61Params, example61_grid, standard_families
from ..lattice import TailGrid, build_lattice
from .config import ConfigError, RunConfig
from .reports import (slug, write_manifest, write_run_meta, write_series_csv, write_table_csv)

log = logging.getLogger("convroots")


class OperationalError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# builders


def diag_config(cfg: RunConfig) -> DiagConfig:
    c = cfg.classes
    return DiagConfig(band=c.band, slope_band=c.slope_band, excursion_factor=c.excursion_factor,
                      horizon_factor=c.horizon_factor, fractions=tuple(c.fractions),
                      floor=c.floor, t_multiples=tuple(int(m) for m in c.t_multiples),
                      x_lo=cfg.grid.x_lo)


def build_distribution(cfg: RunConfig) -> TailGrid:
    d, g = cfg.distribution, cfg.grid
    try:
        if d.family == "explicit":
            V = build_lattice(d.masses, g.step, lattice_span_exact=d.lattice_span_exact)
        elif d.family == "example61":
            p = Example61Params(**d.params)
            V = example61_grid(p, g.step, g.N)
        elif d.family == "levy":
            _, V = levy_to_spectral(build_spectrum(cfg), g.step, g.N)
        else:
            V = standard_families(d.family, g.step, g.N, **d.params)
    except (ValueError, TypeError) as exc:
        raise OperationalError(f"distribution ({d.family}): {exc}") from exc
    return V


def build_pmf(spec: dict):
    kind = spec.get("kind")
    K = spec.get("K")
    K = None if not K else int(K)
    try:
        if kind == "poisson":
            return poisson_pmf(float(spec["mu"]), K)
        if kind == "geometric":
            return geometric_pmf(float(spec["q"]), K)
        if kind == "explicit":
            return explicit_pmf(spec["probs"])
    except KeyError as exc:
        raise OperationalError(f"pmf {kind!r} is missing parameter {exc}") from None
    except ValueError as exc:
        raise OperationalError(f"pmf {kind!r}: {exc}") from None
    raise OperationalError(f"unknown pmf kind {kind!r}")


def build_spectrum(cfg: RunConfig) -> LevySpectrum:
    d = cfg.distribution
    x_max = max(cfg.grid.N * cfg.grid.step, 2.0) * 1.0000001
    p = d.levy_params
    if d.levy_kind == "table":
        path = d.levy_table
        try:
            arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        except OSError as exc:
            raise OperationalError(f"cannot read levy_table {path!r}: {exc}") from None
        return LevySpectrum(arr[:, 0], arr[:, 1])
    mu = float(p.get("mu", 1.0))
    if d.levy_kind == "pareto":
        alpha = float(p.get("alpha", 2.0))
        # nu((x, inf)) = mu ((1 + x) / 2)^(-alpha): equals mu at x = 1
        return LevySpectrum.from_function(lambda x: mu * ((1.0 + x) / 2.0) ** -alpha, x_max)
    lam = float(p.get("lam", 1.0))
    return LevySpectrum.from_function(lambda x: mu * np.exp(-lam * (x - 1.0)), x_max)


# ---------------------------------------------------------------------------
# commands


def _prepare_out(args, cfg: RunConfig | None) -> str:
    out = args.out or (cfg.output.dir if cfg else "reports")
    os.makedirs(out, exist_ok=True)
    return out


def _name(cfg: RunConfig | None, base: str) -> str:
    prefix = cfg.output.prefix if cfg else ""
    return f"{prefix}{base}"


def cmd_diag(args, cfg: RunConfig) -> dict:
    out = _prepare_out(args, cfg)
    V = build_distribution(cfg)
    dc = diag_config(cfg)
    specs = [ClassSpec.parse(s) for s in cfg.classes.list]
    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        verdicts = list(pool.map(lambda sp: classify(V, sp, dc), specs))
    manifest = {"command": "diag", "config": cfg.to_dict(), "thresholds": dc.as_dict(),
                "reports": {}}
    for v in verdicts:
        key = slug(str(v.target))
        files = []
        for s in v.series:
            fname = _name(cfg, f"diag_{key}_{slug(s.label)}.csv")
            write_series_csv(os.path.join(out, fname), s)
            files.append(fname)
        manifest["reports"][key] = {"class": str(v.target), "status": v.status,
                                    "reason": v.reason, "series_files": files,
                                    "evidence": _scalar_evidence(v.evidence)}
        log.info("%s", v)
    write_manifest(os.path.join(out, _name(cfg, "manifest.toml")), manifest)
    return manifest


def _scalar_evidence(ev: dict) -> dict:
    """Keep the evidence entries that serialize compactly."""
    keep = {}
    for k, v in ev.items():
        if isinstance(v, dict):
            keep[k] = _scalar_evidence(v)
        elif isinstance(v, (int, float, str, bool)) or v is None:
            keep[k] = v
        elif isinstance(v, (list, tuple)) and all(isinstance(x, (int, float, str)) for x in v):
            keep[k] = list(v)
    return keep


def cmd_conditions(args, cfg: RunConfig) -> dict:
    out = _prepare_out(args, cfg)
    V = build_distribution(cfg)
    dc = diag_config(cfg)
    c = cfg.conditions
    manifest = {"command": "conditions", "config": cfg.to_dict(), "thresholds": dc.as_dict()}
    if c.liminf:
        ladder = list(c.t_ladder) or None
        rep = check_condition_liminf(V, c.gamma, c.k_max, ladder, cfg.grid.x_lo, dc)
        rows = [(r.k, r.t, r.target, min(r.window_infs), min(r.margins),
                 "PASS" if r.passed else "FAIL",
                 r.first_fail_x if r.first_fail_x is not None else "none") for r in rep.rows]
        fname = _name(cfg, "conditions_liminf.csv")
        write_table_csv(os.path.join(out, fname),
                        ("k", "t", "target", "window_inf_min", "margin_min", "status",
                         "first_fail_x"), rows)
        manifest["liminf"] = {"gamma": c.gamma, "passed": rep.passed, "table": fname}
    if c.n0:
        tau = build_pmf(c.pmf)
        local_T = c.local_T or None
        x_hi = c.x_hi or None

        def one(eps):
            return find_minimal_n0(V, tau, eps, c.variant, local_T, x_hi=x_hi)

        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            reps = list(pool.map(one, c.epsilons))
        rows = [(r.epsilon, r.variant, r.n0 if r.n0 is not None else "none", r.status,
                 r.min_slack if r.min_slack is not None else "none", r.x_hi) for r in reps]
        fname = _name(cfg, "conditions_n0.csv")
        write_table_csv(os.path.join(out, fname),
                        ("epsilon", "variant", "n0", "status", "min_slack", "x_hi"), rows)
        manifest["n0"] = {"pmf": repr(tau), "truncation_K": tau.K,
                          "tail_residual": tau.tail_residual, "table": fname}
        if c.bridge and tau.p(1) > 0:
            brows = []
            for eps in c.epsilons:
                b = lemma21_bridge_check(V, tau, eps, local_T)
                brows.append((b.eps1, b.epsilon, b.dstar, b.p1,
                              b.n0 if b.n0 is not None else "none",
                              b.slack if b.slack is not None else "none",
                              {True: "PASS", False: "FAIL", None: "INCONCLUSIVE"}[b.holds]))
            fname = _name(cfg, "conditions_bridge.csv")
            write_table_csv(os.path.join(out, fname),
                            ("eps1", "eps", "dstar", "p1", "n0", "slack", "status"), brows)
            manifest["bridge"] = {"table": fname}
    write_manifest(os.path.join(out, _name(cfg, "manifest.toml")), manifest)
    return manifest


def build_kesten_G(cfg: RunConfig, V: TailGrid) -> TailGrid:
    spec = cfg.kesten.G
    if spec.get("family") == "compound":
        tau = build_pmf(spec.get("pmf", {"kind": "poisson", "mu": 1.0, "K": 40}))
        return compound(V, tau, spill_to_residual=True).dist
    try:
        return standard_families(spec["family"], cfg.grid.step, cfg.grid.N,
                                 **spec.get("params", {}))
    except (KeyError, ValueError, TypeError) as exc:
        raise OperationalError(f"kesten.G: {exc}") from None


def cmd_kesten(args, cfg: RunConfig) -> dict:
    out = _prepare_out(args, cfg)
    k = cfg.kesten
    if not k.enabled:
        manifest = {"command": "kesten", "config": cfg.to_dict(), "skipped": "kesten.enabled = false"}
        write_manifest(os.path.join(out, _name(cfg, "manifest.toml")), manifest)
        return manifest
    V = build_distribution(cfg)
    G = build_kesten_G(cfg, V)
    cert = kesten_verify(V, G, k.gamma, k.k_max, k.M_choice or None, diag_config(cfg))
    data = {f: getattr(cert, f) for f in cert.__dataclass_fields__}
    data["constraint_a_lt_M_lt_1_plus_a"] = cert.feasible and cert.M_in_interval()
    data["constraint_eps"] = cert.feasible and cert.epsilon_margin_ok()
    data["verified"] = cert.verified
    manifest = {"command": "kesten", "config": cfg.to_dict(), "certificate": data}
    write_manifest(os.path.join(out, _name(cfg, "manifest.toml")), manifest)
    log.info("kesten: feasible=%s max_violation=%r", cert.feasible, cert.max_violation)
    return manifest


def cmd_repro_example61(args, cfg: RunConfig | None) -> dict:
    out = _prepare_out(args, cfg)
    params = Example61Params(alpha=args.alpha, a=args.a, gamma=args.gamma,
                             n_cycles=args.cycles)
    dc = diag_config(cfg) if cfg else DiagConfig()
    res = repro_example61(params, tuple(args.t), args.step, args.x_end, dc)
    manifest = {"command": "repro-example61",
                "params": {"alpha": params.alpha, "a": params.a, "r": params.r,
                           "gamma": params.gamma, "n_cycles": params.n_cycles, "C": params.C,
                           "scales": [params.scale(n) for n in range(params.n_cycles + 2)],
                           "step": args.step, "t": list(args.t)},
                "config": cfg.to_dict() if cfg else RunConfig().to_dict(),
                "checks": []}
    for chk in res["checks"]:
        files = []
        for s in chk.series:
            fname = f"example61_{chk.name}_{slug(s.label)}.csv"
            write_series_csv(os.path.join(out, fname), s)
            files.append(fname)
        manifest["checks"].append({"name": chk.name, "status": chk.status,
                                   "detail": _scalar_evidence(chk.detail), "series_files": files})
        log.info("%s: %s", chk.name, chk.status)
    write_manifest(os.path.join(out, "manifest.toml"), manifest)
    return manifest


def cmd_levy(args, cfg: RunConfig) -> dict:
    out = _prepare_out(args, cfg)
    g = cfg.grid
    try:
        mu, F = levy_to_spectral(build_spectrum(cfg), g.step, g.N)
    except ValueError as exc:
        raise OperationalError(f"levy_to_spectral: {exc}") from None
    h1 = cfg.distribution.h1
    try:
        H1 = standard_families(h1["family"], g.step, g.N, **h1.get("params", {}))
    except (KeyError, ValueError, TypeError) as exc:
        raise OperationalError(f"distribution.h1: {exc}") from None
    H2, H = id_compose(H1, F, mu, cfg.distribution.K or None)
    rep = weak_equivalence(H2, H, g.x_lo, diag_config(cfg))
    fname = _name(cfg, "levy_H2_over_H.csv")
    write_series_csv(os.path.join(out, fname), rep.series)
    manifest = {"command": "levy", "config": cfg.to_dict(), "mu": mu,
                "equivalence": {"status": rep.status, "lower": rep.lower, "upper": rep.upper,
                                "window_sups": list(rep.window_sups),
                                "window_infs": list(rep.window_infs), "reason": rep.reason,
                                "series_file": fname}}
    write_manifest(os.path.join(out, _name(cfg, "manifest.toml")), manifest)
    return manifest


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--out", help="output directory (overrides [output].dir)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for independent jobs")
    common.add_argument("--seed", type=int, default=None,
                        help="reserved; all computations are deterministic")
    common.add_argument("--verbose", "-v", action="store_true")

    p = argparse.ArgumentParser(prog="convroots", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("diag", parents=[common], help="class verdicts for one distribution")
    sub.add_parser("conditions", parents=[common], help="liminf and n0 condition checks")
    sub.add_parser("kesten", parents=[common], help="Kesten-type bound certificate")
    sub.add_parser("levy", parents=[common], help="Levy spectrum to compound Poisson pipeline")
    r = sub.add_parser("repro-example61", parents=[common],
                       help="end-to-end checks on the oscillating counterexample family")
    r.add_argument("--alpha", type=float, default=1.6)
    r.add_argument("--a", type=float, default=32.0)
    r.add_argument("--gamma", type=float, default=1.0)
    r.add_argument("--t", type=float, nargs="+", default=[1.0, 2.0])
    r.add_argument("--cycles", type=int, default=2)
    r.add_argument("--step", type=float, default=1 / 32)
    r.add_argument("--x-end", type=float, default=None)
    return p


COMMANDS = {"diag": cmd_diag, "conditions": cmd_conditions, "kesten": cmd_kesten,
            "levy": cmd_levy, "repro-example61": cmd_repro_example61}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        cfg = RunConfig.load(args.config) if args.config else None
        if cfg is None and args.command != "repro-example61":
            cfg = RunConfig()
        manifest = COMMANDS[args.command](args, cfg)
        out = args.out or (cfg.output.dir if cfg else "reports")
        write_run_meta(out, args.command, argv, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except KestenConstraintError as exc:
        print(f"kesten: M_choice rejected: {exc}", file=sys.stderr)
        return 2
    except (OperationalError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.verbose and manifest is not None:
        print(f"wrote reports to {out}", file=sys.stderr)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
