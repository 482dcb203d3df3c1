"""Command-line driver.

Every subcommand reads a JSON run config (``--config``), applies flag
overrides (flags win), validates everything before computing, and writes CSV
or JSON with 17 significant digits. Exit codes: 0 success, 2 validation,
3 numeric failure, 4 persistence.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import coefficients as coef
from . import resonance as res
from .errors import (AccuracyError, CacheError, ConvergenceError, IllConditionedError,
                     PoleError, TruncationError, VoronoiError)
from .voronoi import (ExpansionCoefficients, LanglandsParams, calibrate_ck, psi_asymptotic,
                      psi_contour_many)
from .weights import BumpFunction

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_PERSISTENCE = 0, 2, 3, 4
COMMANDS = ("psi-check", "calibrate", "scan", "decay", "sharpcut", "coeffs", "kloosterman")


class ConfigError(ValueError):
    pass


def _f(x) -> str:
    return f"{float(x) + 0.0:.17g}"


def _json_float(x):
    return float(_f(x))


# ----------------------------------------------------------------------------
# Run configuration
# ----------------------------------------------------------------------------

@dataclass
class RunConfig:
    command: str = ""
    m: int = 3
    mu: Any = "tempered:0.5"
    X: float = 1000.0
    bump: dict = field(default_factory=dict)
    source: dict = field(default_factory=lambda: {"kind": "sym_power"})
    N: int | None = None
    negative_sign: int = 1
    r: int = 0
    c: list | None = None
    fix_c0: bool = False
    x_grid: list = field(default_factory=list)
    multiple: float = 5.0
    sigma: float | None = None
    tol: float = 1e-8
    alpha: float = 1.0
    beta: float = 0.2
    alpha_grid: Any = field(default_factory=list)
    X_list: list = field(default_factory=list)
    delta: float | None = None
    peak_rule: str = "prominence"
    kernel_sign: int = res.DUAL_KERNEL_SIGN
    moduli: list = field(default_factory=list)
    pairs: list = field(default_factory=list)
    hyper: list = field(default_factory=list)
    out: str | None = None
    cache_dir: str | None = None
    threads: int = 1

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    # -- typed views ----------------------------------------------------

    def params(self) -> LanglandsParams:
        return parse_mu(self.mu, self.m)

    def make_bump(self) -> BumpFunction:
        allowed = {"a", "b", "kind", "delta", "amplitude"}
        extra = sorted(set(self.bump) - allowed)
        if extra:
            raise ConfigError(f"unknown bump keys: {', '.join(extra)}")
        return BumpFunction(**self.bump)

    def make_source(self):
        spec = dict(self.source)
        kind = spec.pop("kind", "sym_power")
        makers = {"sym_power": coef.SymPowerSource, "synthetic": coef.SyntheticSource,
                  "constant": coef.ConstantSource}
        if kind not in makers:
            raise ConfigError(f"unknown coefficient source {kind!r}")
        try:
            return makers[kind](m=self.m, **spec)
        except TypeError as exc:
            raise ConfigError(f"bad source options: {exc}") from exc

    def grid(self) -> list[float]:
        g = self.alpha_grid
        if isinstance(g, dict):
            if set(g) != {"start", "stop", "step"}:
                raise ConfigError("alpha_grid needs exactly start, stop, step")
            if not g["step"] > 0:
                raise ConfigError("alpha_grid step must be positive")
            count = int(math.floor((g["stop"] - g["start"]) / g["step"] + 1e-9)) + 1
            return [round(g["start"] + i * g["step"], 12) for i in range(max(count, 0))]
        return [float(a) for a in g]


def parse_mu(mu, m: int) -> LanglandsParams:
    """``"tempered:t"`` is ``(it, 0, -it)``; ``"sym2"`` or ``"sym2:k"`` is the lift
    of a weight-k form; otherwise a list of numbers, ``[re, im]`` pairs or
    complex literals."""
    if isinstance(mu, str):
        head, _, arg = mu.partition(":")
        if head == "tempered":
            if m != 3:
                raise ConfigError("the tempered shorthand needs m = 3")
            t = float(arg)
            return LanglandsParams((1j * t, 0.0, -1j * t), label=f"tempered:{arg}")
        if head == "sym2":
            if m != 3:
                raise ConfigError("the sym2 shorthand needs m = 3")
            return LanglandsParams.sym2_lift(int(arg) if arg else 12)
        raise ConfigError(f"unrecognised mu shorthand {mu!r}")
    vals = []
    for v in mu:
        if isinstance(v, (list, tuple)):
            vals.append(complex(v[0], v[1]))
        elif isinstance(v, str):
            vals.append(complex(v.replace(" ", "")))
        else:
            vals.append(complex(v))
    if len(vals) != m:
        raise ConfigError(f"mu has {len(vals)} entries but m = {m}")
    return LanglandsParams(tuple(vals))


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_config(args: argparse.Namespace) -> RunConfig:
    data: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    if data.get("command", args.command) != args.command:
        raise ConfigError(f"config is for {data['command']!r}, not {args.command!r}")
    data["command"] = args.command
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        data[key] = _parse_value(value)
    for key in ("m", "X", "N", "r", "alpha", "beta", "out", "threads"):
        v = getattr(args, key, None)
        if v is not None:
            data[key] = v
    if args.mu is not None:
        data["mu"] = _parse_value(args.mu)
    if args.cache_dir:
        data["cache_dir"] = args.cache_dir
    elif "cache_dir" not in data and os.environ.get(coef.CACHE_ENV):
        data["cache_dir"] = os.environ[coef.CACHE_ENV]
    return RunConfig.from_mapping(data)


# ----------------------------------------------------------------------------
# Shared helpers
# ----------------------------------------------------------------------------

def _out_path(cfg: RunConfig, suffix: str) -> Path:
    default = cfg.command.replace("-", "_") + suffix
    return Path(cfg.out or default)


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _table(cfg: RunConfig, needed: int) -> coef.CoefficientTable:
    N = cfg.N if cfg.N is not None else needed
    if N < needed:
        raise ConfigError(f"N={N} is below the {needed} coefficients this run needs")
    src = cfg.make_source()
    if cfg.cache_dir:
        return coef.cached_table(src, N, cfg.negative_sign, cfg.cache_dir)
    return coef.build_table(src, N, cfg.negative_sign)


def _coeffs_from_config(cfg: RunConfig) -> ExpansionCoefficients:
    if cfg.c is None:
        if cfg.r != 0:
            raise ConfigError("r > 0 needs calibrated coefficients in 'c'")
        return ExpansionCoefficients.analytic_leading(cfg.m)
    c = [complex(v[0], v[1]) if isinstance(v, list) else complex(v) for v in cfg.c]
    if len(c) != cfg.r + 1:
        raise ConfigError(f"'c' has {len(c)} entries, r={cfg.r} needs {cfg.r + 1}")
    return ExpansionCoefficients(cfg.m, tuple(c), "calibrated")


def _needed_N(X_values, weight_hi: float) -> int:
    return max([int(math.ceil(weight_hi * X)) for X in X_values] + [1])


# ----------------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------------

def cmd_psi_check(cfg: RunConfig) -> int:
    params = cfg.params()
    bump = cfg.make_bump()
    coeffs = _coeffs_from_config(cfg)
    xs = [float(x) for x in cfg.x_grid]
    if any(not x > 0 for x in xs):
        raise ConfigError("x_grid entries must be positive")
    if not cfg.multiple > 0:
        raise ConfigError("multiple must be positive")
    rows, ok = [], True
    if xs:
        contour = psi_contour_many(xs, bump, cfg.X, params, cfg.sigma, cfg.tol)
        for x, c in zip(xs, contour):
            a = psi_asymptotic(x, bump, cfg.X, params, coeffs)
            dev = 0.0 if c.value == a.value else abs(c.value - a.value) / abs(c.value)
            bound = cfg.multiple * (x * cfg.X) ** (-(cfg.r + 1) / cfg.m)
            ok &= dev <= bound
            rows.append([_f(x), _f(c.value.real), _f(c.value.imag), _f(a.value.real),
                         _f(a.value.imag), _f(dev), _f(a.error_estimate), _f(bound)])
    _write_csv(_out_path(cfg, ".csv"),
               ["x", "re_contour", "im_contour", "re_asymptotic", "im_asymptotic",
                "rel_deviation", "predicted_remainder", "allowed_deviation"], rows)
    return EXIT_OK if ok else EXIT_NUMERIC


def _fit_payload(co: ExpansionCoefficients) -> dict:
    return {"c": [[_json_float(v.real), _json_float(v.imag)] for v in co.c],
            "residual": _json_float(co.residual), "condition": _json_float(co.condition),
            "remainder_constant": _json_float(co.remainder_constant)}


def cmd_calibrate(cfg: RunConfig) -> int:
    params = cfg.params()
    bump = cfg.make_bump()
    xs = [float(x) for x in cfg.x_grid]
    contour = psi_contour_many(xs, bump, cfg.X, params, cfg.sigma, cfg.tol) if xs else None
    fit = calibrate_ck(params, bump, cfg.X, xs, cfg.r, fix_c0=cfg.fix_c0, sigma=cfg.sigma,
                       tol=cfg.tol, contour=contour)
    payload = {"m": cfg.m, "mu": [[_json_float(v.real), _json_float(v.imag)] for v in params.mu],
               "X": _json_float(cfg.X), "r": cfg.r, "fix_c0": cfg.fix_c0,
               "grid": [_json_float(x) for x in xs], **_fit_payload(fit),
               "c0_deviation": _json_float(fit.c0_deviation())}
    # refit on alternate grid points to gauge the stability of c_1
    if cfg.r >= 1 and len(xs) >= 8 * (cfg.r + 1):
        halves = []
        for start in (0, 1):
            sub = xs[start::2]
            halves.append(calibrate_ck(params, bump, cfg.X, sub, cfg.r, fix_c0=cfg.fix_c0,
                                       contour=contour[start::2]))
        c1 = [h.c[1] for h in halves]
        payload["split_refit"] = {
            "c1": [[_json_float(v.real), _json_float(v.imag)] for v in c1],
            "relative_spread": _json_float(abs(c1[0] - c1[1]) / max(abs(fit.c[1]), 1e-300)),
        }
    _write_json(_out_path(cfg, ".json"), payload)
    return EXIT_OK


def cmd_scan(cfg: RunConfig) -> int:
    grid = cfg.grid()
    bump = cfg.make_bump()
    out = _out_path(cfg, ".csv")
    if not grid:
        empty = res.ScanResult((), (), cfg.peak_rule, cfg.negative_sign, cfg.make_source().automorphic)
        empty.write_csv(out)
        empty.write_json(out.with_suffix(".json"))
        return EXIT_OK
    table = _table(cfg, _needed_N([cfg.X], bump.support[1]))
    coeffs = _coeffs_from_config(cfg) if cfg.c is not None else None
    result = res.alpha_scan(table, grid, cfg.beta, cfg.X, cfg.m, bump,
                            peak_rule=cfg.peak_rule, coeffs=coeffs, threads=cfg.threads,
                            kernel_sign=cfg.kernel_sign)
    out.parent.mkdir(parents=True, exist_ok=True)
    result.write_csv(out)
    result.write_json(out.with_suffix(".json"))
    return EXIT_OK


def cmd_decay(cfg: RunConfig) -> int:
    bump = cfg.make_bump()
    Xs = [float(x) for x in cfg.X_list] or [cfg.X]
    table = _table(cfg, _needed_N(Xs, bump.support[1]))
    rows = []
    for X in Xs:
        spec = res.SumSpec(cfg.alpha, cfg.beta, X, 1, bump)
        s = res.smooth_sum(table, spec)
        flat = res.smooth_sum(table, res.SumSpec(0.0, cfg.beta, X, 1, bump))
        rows.append([_f(X), _f(s.real), _f(s.imag), _f(abs(s)), res.regime(cfg.alpha, cfg.beta, X, cfg.m),
                     _f(abs(flat)), _f(math.sqrt(X))])
    _write_csv(_out_path(cfg, ".csv"),
               ["X", "re_sum", "im_sum", "abs_sum", "regime", "abs_untwisted", "sqrt_X"], rows)
    return EXIT_OK


def cmd_sharpcut(cfg: RunConfig) -> int:
    Xs = [float(x) for x in cfg.X_list] or [cfg.X]
    deltas = []
    for X in Xs:
        d = cfg.delta if cfg.delta is not None else max(cfg.alpha * X ** cfg.beta, X ** (2.0 / cfg.m))
        if not d > 1:
            raise ConfigError("sharpening parameter delta must exceed 1")
        deltas.append(d)
    hi = max((2.0 + 1.0 / d) * X for X, d in zip(Xs, deltas))
    table = _table(cfg, int(math.ceil(hi)))
    rows = []
    for X, d in zip(Xs, deltas):
        s = res.sharp_sum(table, cfg.alpha, cfg.beta, X)
        smooth = res.smooth_sum(table, res.SumSpec.sharpened(cfg.alpha, cfg.beta, X, d))
        gap = res.sharpening_gap_bound(table, X, d)
        scale = X ** (1.0 - 1.0 / cfg.m)
        rows.append([_f(X), _f(s.real), _f(s.imag), _f(abs(s)), _f(scale), _f(abs(s) / scale),
                     _f(d), _f(abs(smooth)), _f(abs(s - smooth)), _f(gap)])
    _write_csv(_out_path(cfg, ".csv"),
               ["X", "re_sharp", "im_sharp", "abs_sharp", "bound_scale", "ratio", "delta",
                "abs_sharpened", "sharpening_gap", "gap_bound"], rows)
    return EXIT_OK


def cmd_coeffs(cfg: RunConfig) -> int:
    if cfg.N is None:
        raise ConfigError("coeffs needs N")
    if cfg.N > coef.MAX_N or cfg.N < 1:
        raise ConfigError(f"N must lie in 1..{coef.MAX_N}")
    src = cfg.make_source()
    table = coef.cached_table(src, cfg.N, cfg.negative_sign, cfg.cache_dir)
    if cfg.out:
        coef.save_table(table, cfg.out)
    return EXIT_OK


def _divisor_count(c: int) -> int:
    return sum(1 for d in range(1, c + 1) if c % d == 0)


def cmd_kloosterman(cfg: RunConfig) -> int:
    rows = []
    for c in cfg.moduli:
        c = int(c)
        pairs = cfg.pairs or [[a, b] for a in range(1, c) for b in range(1, c)]
        for a, b in pairs:
            s = coef.kloosterman(int(a), int(b), c)
            bound = _divisor_count(c) * math.sqrt(math.gcd(math.gcd(int(a), int(b)), c) * c)
            rows.append(["classical", a, b, c, "", _f(s), _f(0.0), _f(bound), int(abs(s) <= bound + 1e-9)])
    for entry in cfg.hyper:
        if set(entry) != {"h_bar", "n", "d", "q"}:
            raise ConfigError("hyper entries need exactly h_bar, n, d, q")
        v = coef.hyper_kloosterman(int(entry["h_bar"]), int(entry["n"]), entry["d"], int(entry["q"]))
        d = " ".join(str(int(x)) for x in entry["d"])
        rows.append(["hyper", entry["h_bar"], entry["n"], entry["q"], d, _f(v.real), _f(v.imag), "", ""])
    _write_csv(_out_path(cfg, ".csv"),
               ["kind", "a", "b", "modulus", "d", "re_value", "im_value", "weil_bound", "within_bound"], rows)
    return EXIT_OK


HANDLERS = {
    "psi-check": cmd_psi_check,
    "calibrate": cmd_calibrate,
    "scan": cmd_scan,
    "decay": cmd_decay,
    "sharpcut": cmd_sharpcut,
    "coeffs": cmd_coeffs,
    "kloosterman": cmd_kloosterman,
}


# ----------------------------------------------------------------------------
# Entry point
# ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gl-voronoi", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON run config")
        p.add_argument("--out", help="output file")
        p.add_argument("--threads", type=int)
        p.add_argument("--cache-dir", help=f"coefficient cache (default ${coef.CACHE_ENV})")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key; VALUE is parsed as JSON when possible")
        p.add_argument("--m", type=int)
        p.add_argument("--mu", help='e.g. "tempered:0.5", "sym2" or a JSON list')
        p.add_argument("--X", type=float)
        p.add_argument("--N", type=int)
        p.add_argument("--r", type=int)
        p.add_argument("--alpha", type=float)
        p.add_argument("--beta", type=float)
    return parser


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (CacheError, OSError)):
        return EXIT_PERSISTENCE
    if isinstance(exc, (AccuracyError, ConvergenceError, TruncationError, IllConditionedError,
                        PoleError, ArithmeticError)):
        return EXIT_NUMERIC
    return EXIT_VALIDATION


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        if cfg.threads < 1:
            raise ConfigError("threads must be at least 1")
        with np.errstate(all="ignore"):
            return HANDLERS[cfg.command](cfg)
    except (VoronoiError, ConfigError, ValueError, TypeError, ArithmeticError, OSError) as exc:
        print(f"{args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
