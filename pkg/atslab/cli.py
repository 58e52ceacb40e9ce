"""
cli.py

Command-line front end.

    atslab classify | region | price | smile | skew | surface | validate | extrapolate

Parameters come from --config (YAML or JSON) with flag overrides. Tables go
to --out or stdout as CSV or JSON; progress goes to stderr.

Exit codes: 0 success, 1 configuration error, 2 inadmissible parameters,
3 validation failure.
"""

import argparse
import io
import json
import math
import sys
import warnings
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from . import validation
from .ats_model import classify, regime_region, validate
from .config import RunConfig, build_run_config, load_yaml_config
from .errors import AtsError, ConfigError
from .numerics import parallel_starmap
from .pricer import OptionSpec, price_mc, price_quadrature
from .vol_surface import (
    atm_vol,
    monotonicity_flags,
    short_time_extrapolate,
    skew_sections,
    skew_surface,
    skew_term_closed,
    skew_term_fd,
    smile,
)

# Global verbosity setting
VERBOSE = 1

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INADMISSIBLE = 2
EXIT_VALIDATION = 3


def _vprint(level: int, msg: str):
    """Print message to stderr if verbosity level is sufficient"""
    if VERBOSE >= level:
        print(msg, file=sys.stderr)


class InadmissibleParams(Exception):
    """Raised inside a command when the model parameters fail the admissibility check."""


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _clean(obj: Any) -> Any:
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def render(obj: Any, fmt: str) -> str:
    """CSV or JSON text for a DataFrame, JSON text for anything else."""
    if isinstance(obj, pd.DataFrame):
        if fmt == "csv":
            buf = io.StringIO()
            obj.to_csv(buf, index=False, lineterminator="\n")
            return buf.getvalue()
        obj = obj.to_dict(orient="records")
    return json.dumps(_clean(obj), indent=2, ensure_ascii=False) + "\n"


def emit(obj: Any, cfg: RunConfig, fmt: Optional[str] = None):
    text = render(obj, fmt or cfg.fmt)
    if cfg.out:
        with open(cfg.out, "w", newline="\n") as f:
            f.write(text)
        _vprint(1, f"   Written: {cfg.out}")
    else:
        sys.stdout.write(text)


def _require_admissible(cfg: RunConfig):
    report = validate(cfg.params)
    if not report.ok:
        raise InadmissibleParams("; ".join(report.violations + report.flags))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_classify(cfg: RunConfig, args: argparse.Namespace) -> int:
    case = classify(cfg.params)
    report = validate(cfg.params)
    if cfg.fmt == "json":
        emit(
            {
                "params": cfg.params.to_dict(),
                "case": case.tag,
                "predicted_sigma0": case.predicted_sigma0,
                "predicted_xi0": case.predicted_xi0,
                "admissible": report.ok,
                "violations": report.violations,
                "flags": report.flags,
            },
            cfg,
        )
    else:
        lines = [case.describe()] + report.violations + report.flags
        sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK if case.admissible else EXIT_INADMISSIBLE


def cmd_region(cfg: RunConfig, args: argparse.Namespace) -> int:
    n = len(cfg.alpha_grid) * len(cfg.beta_grid) * len(cfg.delta_grid)
    _vprint(1, f"   Regime region: {n} points")
    emit(regime_region(cfg.alpha_grid, cfg.beta_grid, cfg.delta_grid), cfg)
    return EXIT_OK


def cmd_price(cfg: RunConfig, args: argparse.Namespace) -> int:
    _require_admissible(cfg)
    records = []
    for t in cfg.t_grid:
        for y in cfg.y_grid:
            spec = OptionSpec(t, y, args.kind)
            _vprint(2, f"   Pricing {spec}")
            rec: Dict[str, Any] = {"t": t, "y": y, "kind": args.kind}
            try:
                rec["price"], rec["achieved_tol"] = price_quadrature(spec, cfg.params, cfg.tol, full_output=True)
                if args.paths > 0:
                    rec["mc_price"], rec["mc_std_error"] = price_mc(spec, cfg.params, args.paths, cfg.seed, args.shards)
            except (AtsError, RuntimeError) as e:
                print(f"Could not price (t={t}, y={y}): {e}", file=sys.stderr)
                rec["error"] = str(e)
            records.append(rec)
    emit(records, cfg, "json")
    return EXIT_OK


def cmd_smile(cfg: RunConfig, args: argparse.Namespace) -> int:
    _require_admissible(cfg)
    _vprint(1, f"   Smile on {len(cfg.t_grid)} x {len(cfg.y_grid)} grid, {cfg.threads} threads")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore" if VERBOSE < 1 else "default")
        df = smile(cfg.t_grid, cfg.y_grid, cfg.params, cfg.tol, cfg.threads)
    emit(df, cfg)
    return EXIT_OK


def _skew_row(t: float, cfg: RunConfig) -> Dict[str, Any]:
    row: Dict[str, Any] = {"t": t}
    try:
        row["atm_vol"] = atm_vol(t, cfg.params, cfg.tol)
        row["skew_closed"] = skew_term_closed(t, cfg.params, cfg.tol)
        row["skew_fd"] = skew_term_fd(t, cfg.params, tol=cfg.tol)
        row["skew_x_units"] = row["skew_closed"] / math.sqrt(t)
        row["error"] = ""
    except (AtsError, RuntimeError) as e:
        print(f"Could not compute skew at t={t}: {e}", file=sys.stderr)
        row["error"] = str(e)
    return row


def cmd_skew(cfg: RunConfig, args: argparse.Namespace) -> int:
    _require_admissible(cfg)
    rows = parallel_starmap(_skew_row, [(t, cfg) for t in cfg.t_grid], cfg.threads)
    df = pd.DataFrame(rows, columns=["t", "atm_vol", "skew_closed", "skew_fd", "skew_x_units", "error"])
    if not df["error"].astype(bool).any():
        df = df.drop(columns="error")
    emit(df, cfg)
    return EXIT_OK


def cmd_surface(cfg: RunConfig, args: argparse.Namespace) -> int:
    _vprint(1, "=" * 60)
    if args.sections:
        _vprint(1, f"   Surface sections for alpha in {cfg.alpha_grid}")
        df = skew_sections(cfg.alpha_grid, cfg.k_grid, cfg.tol, cfg.threads)
    else:
        n = len(cfg.alpha_grid) * len(cfg.k_grid) * len(cfg.se_grid)
        _vprint(1, f"   Skew surface: {n} points, {cfg.threads} threads")
        df = skew_surface(cfg.alpha_grid, cfg.k_grid, cfg.se_grid, cfg.tol, cfg.threads)
        flags = monotonicity_flags(df)
        if args.flags:
            df = flags
        bad = flags[~flags["nonincreasing"]]
        _vprint(1, f"   Monotone rows: {len(flags) - len(bad)}/{len(flags)}")
        for _, row in bad.iterrows():
            _vprint(1, f"   Not nonincreasing along {row['axis']}: alpha={row['alpha']}, at={row['at']}")
    _vprint(1, "=" * 60)
    emit(df, cfg)
    return EXIT_OK


def cmd_validate(cfg: RunConfig, args: argparse.Namespace) -> int:
    validation.VERBOSE = VERBOSE
    report = validation.run_suite(cfg.tol, cfg.seed, cfg.mc_paths, args.only)
    ok = all(r["status"] == "pass" for r in report)
    emit({"passed": ok, "checks": report}, cfg, "json")
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_extrapolate(cfg: RunConfig, args: argparse.Namespace) -> int:
    _require_admissible(cfg)
    result = short_time_extrapolate(cfg.params, args.quantity, args.t0, args.levels, cfg.tol)
    payload = {"params": cfg.params.to_dict(), "case": classify(cfg.params).tag, "quantity": args.quantity}
    payload.update(result.to_dict())
    emit(payload, cfg, "json")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=str, default=None, help="YAML or JSON run configuration")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--k-bar", dest="k_bar", type=float)
    p.add_argument("--eta-bar", dest="eta_bar", type=float)
    p.add_argument("--sigma-bar", dest="sigma_bar", type=float)
    p.add_argument("--t", type=float, nargs="+", help="maturity grid")
    p.add_argument("--y", type=float, nargs="+", help="moneyness-degree grid")
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--out", type=str)
    p.add_argument("--threads", type=int)
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("-q", "--quiet", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    p = argparse.ArgumentParser(prog="atslab", description="ATS implied volatility toolkit")
    sub = p.add_subparsers(dest="cmd", required=True)

    pc = sub.add_parser("classify", parents=[common], help="Regime of the scaling parameters")
    pc.set_defaults(func=cmd_classify)

    pr = sub.add_parser("region", parents=[common], help="Regime of every (alpha, beta, delta) grid point")
    pr.set_defaults(func=cmd_region)

    pp = sub.add_parser("price", parents=[common], help="Price options by quadrature (and Monte Carlo)")
    pp.add_argument("--kind", choices=["call", "put"], default="call")
    pp.add_argument("--paths", type=int, default=0, help="Monte Carlo paths; 0 skips Monte Carlo")
    pp.add_argument("--shards", type=int, default=1)
    pp.set_defaults(func=cmd_price)

    ps = sub.add_parser("smile", parents=[common], help="Implied volatility over the (t, y) grid")
    ps.set_defaults(func=cmd_smile)

    pk = sub.add_parser("skew", parents=[common], help="ATM vol and skew term over the t grid")
    pk.set_defaults(func=cmd_skew)

    pf = sub.add_parser("surface", parents=[common], help="Short-time skew for beta=1, delta=-1/2")
    shape = pf.add_mutually_exclusive_group()
    shape.add_argument("--sections", action="store_true", help="Only the k_bar and sigma*eta cuts")
    shape.add_argument("--flags", action="store_true", help="Monotonicity flag per grid row and column instead of xi0")
    pf.set_defaults(func=cmd_surface)

    pv = sub.add_parser("validate", parents=[common], help="Run the property suite")
    pv.add_argument("--only", nargs="+", choices=list(validation.CHECKS), default=None)
    pv.set_defaults(func=cmd_validate)

    pe = sub.add_parser("extrapolate", parents=[common], help="Short-time limit of the ATM vol or skew")
    pe.add_argument("--quantity", choices=["atm_vol", "skew_term"], default="atm_vol")
    pe.add_argument("--t0", type=float, default=1e-2)
    pe.add_argument("--levels", type=int, default=6)
    pe.set_defaults(func=cmd_extrapolate)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    global VERBOSE
    args = build_parser().parse_args(argv)
    VERBOSE = 0 if args.quiet else 1 + args.verbose

    overrides = {
        key: getattr(args, key)
        for key in ("alpha", "beta", "delta", "k_bar", "eta_bar", "sigma_bar", "t", "y", "seed", "format", "out", "threads")
    }
    try:
        raw = load_yaml_config(args.config) if args.config else {}
        cfg = build_run_config(raw, overrides)
    except (ConfigError, KeyError, FileNotFoundError) as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    _vprint(2, f"   Params: {cfg.params.to_dict()}")
    try:
        return args.func(cfg, args)
    except InadmissibleParams as e:
        print(f"Inadmissible parameters: {e}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    except ConfigError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except AtsError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONFIG
