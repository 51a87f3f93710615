"""Command-line entry point.

Exit codes: 0 success with every gated invariant passing, 1 invariant
violation (diagnostics on stderr), 2 configuration error.  Output is
deterministic: identical invocations produce byte-identical JSON, CSV,
and SVG.  Verbosity comes from the SGV_LOG environment variable
(error | info | debug), never from flags, so logs cannot perturb the
emitted reports.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from typing import Optional

import numpy as np

from . import __version__
from .constants import (DELTA_CAP, LedgerInput, build_ledger,
                        gradient_constants)
from .errors import ConfigError, SgvError
from .geometry import geometry_report, diameter, kbar, make_manifold
from .modelode import check_model_inequalities, ode_residual, z_sup
from .report import (PLOT_KINDS, emit_plot_data, records_to_csv,
                     sweep_payload, to_json)
from .spectral import lambda1
from .verify import check_main_theorem, sweep

log = logging.getLogger("sgv")

_MANIFOLD_KINDS = {
    "flat-torus": "constant",
    "cosine-torus": "cosine",
    "sphere": "sine-sphere",
}

_SWEEP_KEYS = {"manifolds", "alpha_target", "p", "C_s", "Lambda_rough",
               "jobs"}
_MANIFOLD_SPEC_KEYS = {"id", "kind", "n", "L", "c", "fiber", "beta",
                       "ts", "fs", "boundary"}


def _setup_logging() -> None:
    level_name = os.environ.get("SGV_LOG", "error")
    levels = {"error": logging.ERROR, "info": logging.INFO,
              "debug": logging.DEBUG}
    if level_name not in levels:
        raise ConfigError(
            f"SGV_LOG={level_name!r} invalid; use error, info, or debug")
    logging.basicConfig(stream=sys.stderr, level=levels[level_name],
                        format="%(levelname)s %(name)s: %(message)s")


def _add_manifold_flags(sp, torus_only: bool = False) -> None:
    choices = ["flat-torus", "cosine-torus"]
    if not torus_only:
        choices.append("sphere")
    sp.add_argument("--manifold", required=True, choices=choices,
                    help="manifold family")
    sp.add_argument("--L", type=float, required=True,
                    help="base interval length (sphere: its diameter)")
    sp.add_argument("--n", type=int, default=2, help="dimension")
    sp.add_argument("--c", type=float, default=None,
                    help="mean warp radius (torus kinds)")
    sp.add_argument("--fiber", type=float, default=None,
                    help="fiber circumference 2*pi*c (torus kinds)")
    sp.add_argument("--beta", type=float, default=0.0,
                    help="cosine perturbation amplitude")


def _manifold_from_args(args):
    kind = _MANIFOLD_KINDS[args.manifold]
    if kind == "sine-sphere":
        return make_manifold(kind, L=args.L, n=args.n)
    if args.c is None and args.fiber is None:
        raise ConfigError(f"{args.manifold} needs --c or --fiber")
    if kind == "constant" and args.beta != 0.0:
        raise ConfigError("flat-torus takes no --beta; "
                          "use --manifold cosine-torus")
    kw = {"L": args.L, "n": args.n, "c": args.c, "fiber": args.fiber}
    if kind == "cosine":
        kw["beta"] = args.beta
    return make_manifold(kind, **kw)


def _emit(text: str, path: Optional[str]) -> None:
    sys.stdout.write(text)
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


# --- subcommand bodies ------------------------------------------------

def _cmd_eig(args) -> int:
    m = _manifold_from_args(args)
    grids = tuple(int(x) for x in args.grids.split(","))
    res = lambda1(m, grids=grids)
    payload = {
        "lambda1": res.lambda1,
        "mode": res.mode,
        "order": res.order,
        "degenerate": res.degenerate,
        "profile_shift": res.a,
        "history": [[int(N), lam] for N, lam in res.history],
    }
    _emit(to_json(payload), args.out)
    return 0


def _cmd_curvature(args) -> int:
    m = _manifold_from_args(args)
    rep = geometry_report(m, args.p, args.H, samples=args.samples)
    payload = {
        "manifold": rep.manifold,
        "p": rep.p,
        "H": rep.H,
        "ricci_min": float(np.min(rep.rho)),
        "ricci_max": float(np.max(rep.rho)),
        "rho_H_max": float(np.max(rep.rho_H)),
        "kbar": rep.kbar,
        "volume": rep.volume,
        "diameter_lo": rep.diameter_lo,
        "diameter_hi": rep.diameter_hi,
        "diameter_converged": rep.diameter_converged,
    }
    if args.arrays:
        payload["t"] = [float(x) for x in rep.t]
        payload["rho"] = [float(x) for x in rep.rho]
        payload["rho_H"] = [float(x) for x in rep.rho_H]
    _emit(to_json(payload), args.out)
    return 0


def _cmd_diameter(args) -> int:
    m = _manifold_from_args(args)
    br = diameter(m)
    _emit(to_json({"lo": br.lo, "hi": br.hi,
                   "converged": br.converged}), args.out)
    return 0


def _cmd_kbar(args) -> int:
    m = _manifold_from_args(args)
    _emit(to_json({"p": args.p, "H": args.H,
                   "kbar": kbar(m, args.p, args.H)}), args.out)
    return 0


def _cmd_ledger(args) -> int:
    inp = LedgerInput(n=args.n, p=args.p, D=args.D, delta=args.delta,
                      C_s=args.Cs, Lambda_rough=args.Lambda,
                      sigma=args.sigma)
    led = build_ledger(inp)
    _emit(to_json(led.to_dict()), args.out)
    if args.plot_out:
        sigma = args.sigma if args.sigma is not None else 0.0
        deltas = np.logspace(math.log10(1e-4), math.log10(DELTA_CAP), 41)
        series = []
        for d in deltas:
            gi = LedgerInput(n=args.n, p=args.p, D=args.D, delta=float(d),
                             C_s=args.Cs, Lambda_rough=args.Lambda)
            gc = gradient_constants(gi, sigma=sigma)
            series.append({"delta": float(d), "alpha": gc.alpha})
        emit_plot_data(series, "alpha-vs-delta", args.plot_out)
    return 0


def _cmd_ode_check(args) -> int:
    margins = check_model_inequalities(args.eta, 1.0 - args.delta,
                                       min(args.eta, 1.0 + args.delta),
                                       u_grid=args.u_grid,
                                       j_grid=args.j_grid)
    u = np.linspace(-1.0 + 1e-9, 1.0 - 1e-9, args.u_grid)
    resid = float(np.max(np.abs(ode_residual(u, args.eta))))
    payload = dict(margins)
    payload["ode_residual_max"] = resid
    payload["z_peak_at"], payload["z_peak"] = z_sup(args.eta)
    _emit(to_json(payload), args.out)
    ok = margins["min_margin"] >= -1e-10 and resid <= 1e-12
    if not ok:
        print(f"ode-check gate violated: min margin "
              f"{margins['min_margin']:.3e}, residual {resid:.3e}",
              file=sys.stderr)
    return 0 if ok else 1


def _record_gate_failures(rec) -> list:
    """Gated invariants for one verification record (in-hypothesis)."""
    fails = []
    if not rec.hypothesis_met:
        # nothing is certified outside the smallness hypothesis; the
        # record itself (including an unconverged diameter flag) is
        # informational there
        return fails
    if not rec.diameter_converged:
        fails.append("diameter bracket did not converge")
    if rec.theorem_margin < -1e-9 * rec.lambda1:
        fails.append(f"eigenvalue bound violated: margin "
                     f"{rec.theorem_margin:.6e}")
    if rec.sigma_measured is None or rec.sigma_measured < -1e-12:
        fails.append(f"shift sign: sigma = {rec.sigma_measured}")
    if rec.sigma_bound_margin is None or rec.sigma_bound_margin < -1e-9:
        fails.append(f"shift ceiling: margin = {rec.sigma_bound_margin}")
    if rec.J_deviation is None or rec.J_deviation > rec.delta + 1e-9:
        fails.append(f"J deviation {rec.J_deviation} exceeds "
                     f"delta = {rec.delta}")
    if rec.gradient_margin is not None and rec.lambda_tilde is not None \
            and rec.gradient_margin > 1e-6 * rec.lambda_tilde:
        fails.append(f"gradient estimate margin "
                     f"{rec.gradient_margin:.6e} above tolerance")
    return fails


def _cmd_verify(args) -> int:
    m = _manifold_from_args(args)
    rec = check_main_theorem(m, args.alpha_target, args.p,
                             C_s=args.Cs, Lambda_rough=args.Lambda,
                             manifold_id=args.id or args.manifold)
    _emit(to_json(rec.to_dict()), args.out)
    fails = _record_gate_failures(rec)
    for f in fails:
        print(f"[{rec.manifold_id}] {f}", file=sys.stderr)
    return 1 if fails else 0


def _load_sweep_config(args):
    cfg = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config root must be a JSON object")
        unknown = set(cfg) - _SWEEP_KEYS
        if unknown:
            raise ConfigError(
                f"unknown config keys: {', '.join(sorted(unknown))}")
        for spec in cfg.get("manifolds", []):
            if not isinstance(spec, dict):
                raise ConfigError("each manifold entry must be an object")
            bad = set(spec) - _MANIFOLD_SPEC_KEYS
            if bad:
                raise ConfigError(
                    f"unknown manifold keys: {', '.join(sorted(bad))}")
            kind = spec.get("kind")
            if kind not in _MANIFOLD_KINDS and kind != "tabulated":
                raise ConfigError(
                    f"unknown manifold kind {kind!r}; choose from "
                    + ", ".join(sorted(_MANIFOLD_KINDS)) + ", tabulated")
    # config entries use the CLI vocabulary; the library uses its own
    manifolds = [{**spec, "kind": _MANIFOLD_KINDS.get(spec["kind"],
                                                      spec["kind"])}
                 for spec in cfg.get("manifolds", [])]
    merged = {
        "manifolds": manifolds,
        "alpha_target": args.alpha_target
        if args.alpha_target is not None else cfg.get("alpha_target"),
        "p": args.p if args.p is not None else cfg.get("p"),
        "C_s": args.Cs if args.Cs is not None else cfg.get("C_s"),
        "Lambda_rough": args.Lambda
        if args.Lambda is not None else cfg.get("Lambda_rough"),
        "jobs": args.jobs if args.jobs is not None
        else cfg.get("jobs", 1),
    }
    missing = [k for k in ("alpha_target", "p", "C_s", "Lambda_rough")
               if merged[k] is None]
    if missing:
        raise ConfigError("missing sweep settings: "
                          + ", ".join(missing)
                          + " (set via config file or flags)")
    if not merged["manifolds"]:
        raise ConfigError("sweep needs a non-empty manifolds list "
                          "in the config file")
    return merged


def _cmd_sweep(args) -> int:
    cfg = _load_sweep_config(args)
    log.info("sweep over %d manifolds, jobs=%d",
             len(cfg["manifolds"]), cfg["jobs"])
    rows, summary = sweep(cfg["manifolds"], cfg["alpha_target"],
                          cfg["p"], cfg["C_s"], cfg["Lambda_rough"],
                          jobs=cfg["jobs"])
    payload = sweep_payload(rows, summary)
    _emit(to_json(payload), args.out)
    if args.out_csv:
        recs = [r.record for r in rows if r.record is not None]
        with open(args.out_csv, "w", encoding="utf-8",
                  newline="\n") as fh:
            fh.write(records_to_csv(recs))
    if args.plot:
        if not args.plot_out:
            raise ConfigError("--plot needs --plot-out BASEPATH")
        recs = [r.record for r in rows if r.record is not None]
        emit_plot_data(recs, args.plot, args.plot_out)
    code = 0
    for r in rows:
        if r.error is not None:
            log.info("row %s failed: %s", r.manifold_id, r.error)
            continue
        for f in _record_gate_failures(r.record):
            print(f"[{r.manifold_id}] {f}", file=sys.stderr)
            code = 1
    return code


# --- parser -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sgv",
        description="Numerical certification of a sharp first-eigenvalue "
                    "lower bound on rotationally symmetric manifolds.")
    ap.add_argument("--version", action="version",
                    version=f"sgv {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("eig", help="first nonzero Laplace eigenvalue")
    _add_manifold_flags(sp)
    sp.add_argument("--grids", default="512,1024,2048",
                    help="comma-separated refinement grids")
    sp.add_argument("--out", default=None, help="also write JSON here")
    sp.set_defaults(func=_cmd_eig)

    sp = sub.add_parser("curvature",
                        help="Ricci range, integral norm, volume")
    _add_manifold_flags(sp)
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--H", type=float, default=0.0)
    sp.add_argument("--samples", type=int, default=512)
    sp.add_argument("--arrays", action="store_true",
                    help="include sampled curvature arrays")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=_cmd_curvature)

    sp = sub.add_parser("diameter", help="two-sided diameter bracket")
    _add_manifold_flags(sp)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=_cmd_diameter)

    sp = sub.add_parser("kbar", help="normalized integral curvature norm")
    _add_manifold_flags(sp)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--H", type=float, default=0.0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=_cmd_kbar)

    sp = sub.add_parser("ledger",
                        help="explicit constants for given inputs")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--D", type=float, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--Cs", type=float, required=True,
                    help="Sobolev constant input")
    sp.add_argument("--Lambda", type=float, required=True,
                    help="rough spectral lower bound input")
    sp.add_argument("--sigma", type=float, default=None,
                    help="measured shift (default: a-priori ceiling)")
    sp.add_argument("--plot-out", default=None,
                    help="emit alpha-vs-delta curve to BASE.{csv,svg}")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=_cmd_ledger)

    sp = sub.add_parser("ode-check",
                        help="comparison-function inequality margins")
    sp.add_argument("--eta", type=float, required=True)
    sp.add_argument("--delta", type=float, default=0.1,
                    help="half-width of the tested J range")
    sp.add_argument("--u-grid", type=int, default=100_000)
    sp.add_argument("--j-grid", type=int, default=11)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=_cmd_ode_check)

    sp = sub.add_parser("verify",
                        help="full certification record, one manifold")
    _add_manifold_flags(sp)
    sp.add_argument("--alpha-target", type=float, required=True)
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--Cs", type=float, required=True)
    sp.add_argument("--Lambda", type=float, required=True)
    sp.add_argument("--id", default=None, help="record label")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=_cmd_verify)

    sp = sub.add_parser("sweep", help="verify a family of manifolds")
    sp.add_argument("--config", default=None,
                    help="JSON config with the manifolds list")
    sp.add_argument("--alpha-target", type=float, default=None)
    sp.add_argument("--p", type=float, default=None)
    sp.add_argument("--Cs", type=float, default=None)
    sp.add_argument("--Lambda", type=float, default=None)
    sp.add_argument("--jobs", type=int, default=None,
                    help="parallel row workers (default 1)")
    sp.add_argument("--out", default=None, help="JSON report path")
    sp.add_argument("--out-csv", default=None, help="CSV summary path")
    sp.add_argument("--plot", default=None, choices=PLOT_KINDS)
    sp.add_argument("--plot-out", default=None,
                    help="basename for plot CSV/SVG")
    sp.set_defaults(func=_cmd_sweep)
    return ap


def main(argv=None) -> int:
    try:
        _setup_logging()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SgvError as exc:
        print(f"invariant violation ({type(exc).__name__}): {exc}",
              file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
