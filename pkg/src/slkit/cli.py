"""Command-line entry point.

Usage: ``slkit <command> --config run.json --out results/ [--threads n]``.
The command may also be given as ``"command"`` inside the config.  Exit
status is 0 on success, 2 for bad input and 3 when a solver fails.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .errors import (
    BracketError,
    DomainError,
    IllPosedDataError,
    SingularBasisError,
    SolverError,
    ValidationError,
)
from .forward import DEFAULT_TOL, SpectralData, spectral_data
from .inverse import FiniteDataSet, assemble_glm, glm_reconstruct, roundtrip_check
from .potential import DEFAULT_GRID, load_sigma_json

COMMANDS = ("forward", "invert", "perturb", "rates", "noise", "asymptotics", "roundtrip")
EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 2, 3


class ConfigError(ValidationError):
    pass


def _num(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_num(v) if isinstance(v, (int, float, np.number, bool, np.bool_)) else v for v in r])


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# -- config helpers --------------------------------------------------------
def _load_json(path, what):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{what} file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {what} {path}: {exc}") from None


def _get(cfg, key, default=None, kind=float):
    if key not in cfg:
        if default is None:
            raise ConfigError(f"config is missing {key!r}")
        return default
    try:
        return kind(cfg[key])
    except (TypeError, ValueError):
        raise ConfigError(f"config key {key!r} has a bad value: {cfg[key]!r}") from None


def _list(cfg, key, default=None, kind=float):
    v = cfg.get(key, default)
    if v is None:
        raise ConfigError(f"config is missing {key!r}")
    if not isinstance(v, list):
        v = [v]
    try:
        return [kind(x) for x in v]
    except (TypeError, ValueError):
        raise ConfigError(f"config key {key!r} has a bad value: {v!r}") from None


def _sigma(cfg, base: Path):
    if "sigma" in cfg:
        spec = cfg["sigma"]
    elif "sigma_path" in cfg:
        spec = _load_json(base / cfg["sigma_path"], "sigma")
    else:
        raise ConfigError("config needs 'sigma' or 'sigma_path'")
    if isinstance(spec, dict) and spec.get("kind") == "smoothness_class":
        return ex.smoothness_class_sigma(
            float(spec["theta"]),
            int(spec.get("J", 1024)),
            float(spec.get("amplitude", 1.0)),
            int(spec.get("seed", 0)),
            zero_h0=bool(spec.get("zero_h0", True)),
        )
    try:
        return load_sigma_json(spec)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad sigma specification: {exc}") from None


def _tol(cfg):
    tol = _get(cfg, "tol", DEFAULT_TOL)
    if not tol > 0:
        raise ConfigError("tol must be positive")
    return tol


def _N(cfg, key="N", default=None):
    N = _get(cfg, key, default, int)
    if N < 1:
        raise ConfigError(f"{key} must be >= 1")
    return N


def _c(cfg):
    return None if "c" not in cfg else _list(cfg, "c")


# -- plots -----------------------------------------------------------------
def write_loglog_svg(path: Path, x, y, slope, title: str, xlabel: str) -> None:
    """Minimal log-log plot: measured polyline, fitted line, axis labels."""
    x, y = np.log10(np.asarray(x, float)), np.log10(np.asarray(y, float))
    W, H, M = 480, 360, 50
    x0, x1 = x.min(), x.max() if x.max() > x.min() else x.min() + 1
    y0, y1 = y.min(), y.max() if y.max() > y.min() else y.min() + 1

    def px(a):
        return M + (a - x0) / (x1 - x0) * (W - 2 * M)

    def py(b):
        return H - M - (b - y0) / (y1 - y0) * (H - 2 * M)

    pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="{M}" y="{M}" width="{W - 2 * M}" height="{H - 2 * M}" fill="none" stroke="#888"/>',
        f'<polyline points="{pts}" fill="none" stroke="#1f4e9c" stroke-width="2"/>',
    ]
    if math.isfinite(slope):
        b = float(np.mean(y - slope * x))
        parts.append(
            f'<line x1="{px(x0):.2f}" y1="{py(slope * x0 + b):.2f}" x2="{px(x1):.2f}" y2="{py(slope * x1 + b):.2f}" '
            'stroke="#c0392b" stroke-dasharray="6,4"/>'
        )
    parts += [
        f'<text x="{W / 2:.0f}" y="{M / 2:.0f}" text-anchor="middle" font-size="14">{title} (slope {slope:.3f})</text>',
        f'<text x="{W / 2:.0f}" y="{H - 12}" text-anchor="middle" font-size="12">log10 {xlabel}</text>',
        f'<text x="14" y="{H / 2:.0f}" font-size="12" transform="rotate(-90 14 {H / 2:.0f})" '
        'text-anchor="middle">log10 error</text>',
        "</svg>",
    ]
    path.write_text("\n".join(parts) + "\n")


def _report_artifacts(rep: ex.RateReport, out: Path, stem: str):
    rep.to_csv(out / f"{stem}.csv")
    for tau, fit in rep.fits.items():
        x, e = rep.series(tau)
        name = stem if len(rep.fits) == 1 else f"{stem}_tau{tau:g}"
        write_loglog_svg(out / f"{name}.svg", x, e, fit.slope, f"{stem}, tau={tau:g}", rep.sweep)
    return 0


# -- commands --------------------------------------------------------------
def cmd_forward(cfg, out, base, threads):
    sigma = _sigma(cfg, base)
    sd = spectral_data(sigma, _N(cfg), _tol(cfg))
    rows = [(k, lam, a) for k, lam, a in zip(range(1, sd.N + 1), sd.lambdas, sd.alphas)]
    _write_csv(out / "forward.csv", ["k", "lambda", "alpha"], rows)
    _write_json(out / "spectral_data.json", {"q0": sd.q0, "lambdas": sd.lambdas.tolist(), "alphas": sd.alphas.tolist()})


def _data(cfg, base):
    if "data" in cfg:
        obj = cfg["data"]
    elif "data_path" in cfg:
        obj = _load_json(base / cfg["data_path"], "data")
    else:
        raise ConfigError("config needs 'data' or 'data_path'")
    if not isinstance(obj, dict):
        raise ConfigError("spectral data must be a JSON object")
    obj = dict(obj)
    obj.setdefault("theta", cfg.get("theta", 1.0))
    return FiniteDataSet.from_dict(obj)


def cmd_invert(cfg, out, base, threads):
    d = _data(cfg, base)
    grid = _get(cfg, "grid", DEFAULT_GRID, int)
    method = cfg.get("method", "general")
    sigma = glm_reconstruct(assemble_glm(d, None, grid), method)
    _write_csv(out / "sigma.csv", ["x", "sigma"], zip(sigma.nodes, sigma.values))
    _write_json(out / "sigma.json", sigma.to_dict())
    rep = roundtrip_check(sigma, d, _get(cfg, "roundtrip_tol", ex.ROUNDTRIP_TOL))
    _write_json(out / "residual.json", rep.to_dict())


def cmd_perturb(cfg, out, base, threads):
    if "sigma" in cfg or "sigma_path" in cfg:
        sd = spectral_data(_sigma(cfg, base), _N(cfg), _tol(cfg))
    else:
        d = _data(cfg, base)
        sd = SpectralData(d.q0, d.lambdas, d.alphas)
    noise = ex.NoiseSpec(_get(cfg, "epsilon"), _get(cfg, "seed", 0, int))
    theta = _get(cfg, "theta", 1.0)
    pd = ex.perturb(sd, noise, theta, _c(cfg), cfg.get("N"))
    _write_json(out / "perturbed.json", pd.to_dict())
    rows = zip(range(1, pd.N + 1), pd.lambdas, pd.alphas)
    _write_csv(out / "perturbed.csv", ["k", "lambda", "alpha"], rows)


def cmd_rates(cfg, out, base, threads):
    sigma = _sigma(cfg, base)
    rep = ex.convergence_study(
        sigma,
        _get(cfg, "theta"),
        _list(cfg, "tau", [0.0]),
        _list(cfg, "N", [4, 8, 16, 32, 64], int),
        c=_c(cfg),
        threads=threads,
    )
    return _report_artifacts(rep, out, "rates")


def cmd_noise(cfg, out, base, threads):
    sigma = _sigma(cfg, base)
    rep = ex.noise_floor_study(
        sigma,
        _get(cfg, "theta"),
        _get(cfg, "tau"),
        _list(cfg, "epsilon", [1e-2, 1e-3, 1e-4]),
        N_rule=cfg.get("N_rule", "fixed"),
        N=_N(cfg, "N", 64),
        prefactor=_get(cfg, "prefactor", 1.0),
        seed=_get(cfg, "seed", 0, int),
        c=_c(cfg),
        threads=threads,
    )
    return _report_artifacts(rep, out, "noise")


def cmd_asymptotics(cfg, out, base, threads):
    sigma = _sigma(cfg, base)
    K = _N(cfg, "K", 32)
    a = ex.asymptotic_functionals(sigma)
    sd = spectral_data(sigma, K, _tol(cfg))
    k = np.arange(1, K + 1)
    root = np.sqrt(np.maximum(sd.lambdas, 0.0))
    rows = zip(
        k, root, a.sqrt_lambda(k, 1), a.sqrt_lambda(k, 2),
        np.abs(root - a.sqrt_lambda(k, 1)), np.abs(root - a.sqrt_lambda(k, 2)), sd.alphas, a.alpha(k),
    )
    _write_csv(
        out / "asymptotics.csv",
        ["k", "sqrt_lambda", "pred_h0", "pred_h1", "resid_h0", "resid_h1", "alpha", "pred_g1"],
        rows,
    )
    _write_json(out / "functionals.json", {"h0": a.h0, "g1": a.g1, "h1": a.h1})


def cmd_roundtrip(cfg, out, base, threads):
    sigma = _sigma(cfg, base)
    Ns = _list(cfg, "N", [4, 8, 16], int)
    theta = _get(cfg, "theta", 1.0)
    tol = _get(cfg, "roundtrip_tol", ex.ROUNDTRIP_TOL)
    sd = spectral_data(sigma, max(Ns), _tol(cfg))
    rows = []
    for N in Ns:
        d = FiniteDataSet.from_spectral(sd, theta, _c(cfg), N)
        rec = glm_reconstruct(assemble_glm(d, None, ex.recon_grid(N)))
        rep = roundtrip_check(rec, d, tol)
        rows.append((N, rep.lambda_residual, rep.alpha_residual, tol, rep.passed))
    _write_csv(out / "roundtrip.csv", ["N", "lambda_residual", "alpha_residual", "tol", "pass"], rows)


HANDLERS = {
    "forward": cmd_forward,
    "invert": cmd_invert,
    "perturb": cmd_perturb,
    "rates": cmd_rates,
    "noise": cmd_noise,
    "asymptotics": cmd_asymptotics,
    "roundtrip": cmd_roundtrip,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="slkit", description="Forward and inverse Dirichlet Sturm-Liouville experiments.")
    p.add_argument("command", nargs="?", help="one of: " + ", ".join(COMMANDS))
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", default=".", help="output directory (created if missing)")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: SLKIT_THREADS or 1)")
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_json(args.config, "config")
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        command = args.command or cfg.get("command")
        if command not in HANDLERS:
            raise ConfigError(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}")
        out = Path(args.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory {out}: {exc.strerror}") from None
        if not os.access(out, os.W_OK):
            raise ConfigError(f"output directory {out} is not writable")
        threads = args.threads if args.threads is not None else ex.default_threads()
        if threads < 1:
            raise ConfigError("threads must be >= 1")
        HANDLERS[command](cfg, out, Path(args.config).resolve().parent, threads)
    except (ValidationError, DomainError) as exc:
        print(f"slkit: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, BracketError, IllPosedDataError, SingularBasisError) as exc:
        print(f"slkit: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def main() -> None:
    sys.exit(run())
