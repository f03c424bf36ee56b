"""Experiment harness: parameter grids, lemma checks, reproducible outputs.

Subcommands: count | saddle | lemmas | ek | model | sums.
Exit codes: 0 all checks pass, 1 check failure, 2 usage, 3 capacity.

Every command is deterministic given (config, seed); reports carry a config
hash and schema version but no timestamps, so identical runs produce
identical bytes.
"""

from __future__ import annotations

import argparse
import contextlib
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .errors import BracketError, CapacityError
from .model import build_ensemble, exact_distribution, sample_moments
from .saddle import prime_sum_M, solve_alpha, solve_xi
from .scan import omega_scan
from .sieve import (
    SmoothContext,
    count_smooth_recurrence,
    count_smooth_sieve,
    count_ultra,
    primes_up_to,
)
from .stats import (
    Z_GRID,
    ek_distribution,
    ks_distance,
    moments_from_histogram,
)

SCHEMA_VERSION = 1
ENV_PREFIX = "SMOOTHSTATS_"

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_CAPACITY = 3

# Frozen lemma-check thresholds.  The paper's O(.) constants are
# unspecified; these were calibrated once from a pilot run at
# (x, y) = (1e8, 1e4) and must not be retuned per run.
FROZEN = {
    # |M(y) - (log log y + u)|; pilot gap 0.062
    "sumybig_gap": 1.0,
    # |M(y) - (log log y + u*y/(y+log x))|; pilot gap 0.058
    "lemma41_gap": 1.0,
    # |mean(omega) - M(y)|; pilot gap 0.125
    "mean_gap": 2.0,
    # |M(Y) - (log log y - log phi(y))|; pilot gap 0.855
    "trunc_gap": 2.0,
    # local ratio |Psi(x/d,y) d^alpha / Psi(x,y) - 1| <= K*(1/u_y + log d/log x)
    # over 30 primes d <= y; pilot max ratio 0.30
    "local_ratio_K": 1.0,
    # relative gap of xi(u) to log(u log u), valid for u >= 3; pilot <= 0.25
    "xi_asymptotic_rel": 0.25,
}


@dataclass
class ExperimentConfig:
    x: int | None = None
    y: int | None = None
    x_grid: list[int] = field(default_factory=list)
    y_grid: list[int] = field(default_factory=list)
    fixed_u: float | None = None
    trunc_exponent: float | None = None
    moments: int = 10
    seed: int = 0
    threads: int = 1
    format: str = "json"
    cache_dir: str | None = None
    mode: str = "exact"
    samples: int = 0
    out_dir: str | None = None
    alpha_override: float | None = None  # lemma-check sensitivity canary

    def grid(self) -> list[tuple[int, int]]:
        """All (x, y) points implied by the flags."""
        if self.x is not None and self.y is not None:
            return [(self.x, self.y)]
        ys = self.y_grid or ([self.y] if self.y is not None else [])
        if self.fixed_u is not None:
            if not ys:
                raise ValueError("--fixed-u needs --y or --y-grid")
            return [(int(round(y**self.fixed_u)), y) for y in ys]
        xs = self.x_grid or ([self.x] if self.x is not None else [])
        if not xs or not ys:
            raise ValueError("need --x/--y, grids, or --fixed-u with a y grid")
        return [(x, y) for x in xs for y in ys]

    def validate(self) -> None:
        pts = self.grid()
        if not pts:
            raise ValueError("empty parameter grid")
        for x, y in pts:
            if not 2 <= y <= x:
                raise ValueError(f"grid point (x={x}, y={y}) violates x >= y >= 2")
        if not 0 <= self.moments <= 10:
            raise ValueError("moment cap must be in [0, 10]")
        if self.format not in ("json", "csv", "text"):
            raise ValueError(f"unknown format {self.format!r}")
        if self.mode not in ("exact", "approximate"):
            raise ValueError(f"unknown mode {self.mode!r}")

    def hash(self) -> str:
        payload = {k: v for k, v in asdict(self).items() if k != "cache_dir"}
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _round17(obj):
    """Normalize every float to its 17-significant-digit value (lossless)."""
    if isinstance(obj, float):
        return float(f"{obj:.17g}")
    if isinstance(obj, dict):
        return {k: _round17(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round17(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(f"{float(obj):.17g}")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_round17(v) for v in obj.tolist()]
    return obj


def _emit(report: dict, config: ExperimentConfig, stream=None) -> None:
    stream = stream or sys.stdout
    report = _round17(report)
    if config.format == "json":
        json.dump(report, stream, sort_keys=True, indent=1)
        stream.write("\n")
    elif config.format == "csv":
        rows = report.get("rows", [])
        if rows:
            cols = list(rows[0].keys())
            stream.write(",".join(cols) + "\n")
            for r in rows:
                stream.write(",".join(str(r.get(c, "")) for c in cols) + "\n")
    else:
        _emit_text(report, stream)


def _emit_text(report: dict, stream, indent: int = 0) -> None:
    pad = "  " * indent
    for k, v in report.items():
        if isinstance(v, dict):
            stream.write(f"{pad}{k}:\n")
            _emit_text(v, stream, indent + 1)
        elif isinstance(v, list) and v and isinstance(v[0], dict):
            for i, row in enumerate(v):
                stream.write(f"{pad}{k}[{i}]:\n")
                _emit_text(row, stream, indent + 1)
        else:
            stream.write(f"{pad}{k}: {v}\n")


# ---------------------------------------------------------------------------
# Baseline store


class BaselineStore:
    """Append-only record of per-experiment results, keyed by
    (command, config hash, code version).  Deterministic commands must
    reproduce their stored payload bit-identically on rerun."""

    def __init__(self, cache_dir: str):
        os.makedirs(cache_dir, exist_ok=True)
        self.path = os.path.join(cache_dir, "baselines.jsonl")
        self.lock_path = os.path.join(cache_dir, ".lock")

    @contextlib.contextmanager
    def _lock(self, timeout: float = 30.0):
        deadline = time.monotonic() + timeout
        while True:
            try:
                fd = os.open(self.lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
                break
            except FileExistsError:
                if time.monotonic() > deadline:
                    raise TimeoutError(f"cache dir locked: {self.lock_path}")
                time.sleep(0.05)
        try:
            yield
        finally:
            os.close(fd)
            os.unlink(self.lock_path)

    def lookup(self, command: str, config_hash: str) -> dict | None:
        if not os.path.exists(self.path):
            return None
        key = [command, config_hash, __version__]
        found = None
        with open(self.path) as f:
            for line in f:
                rec = json.loads(line)
                if rec["key"] == key:
                    found = rec["payload"]  # last record wins, file is append-only
        return found

    def check_or_record(self, command: str, config_hash: str, payload: dict) -> bool:
        """True if the payload matches the stored baseline (or none existed)."""
        payload = _round17(payload)
        with self._lock():
            prior = self.lookup(command, config_hash)
            if prior is not None:
                return json.dumps(prior, sort_keys=True) == json.dumps(
                    payload, sort_keys=True
                )
            with open(self.path, "a") as f:
                rec = {"key": [command, config_hash, __version__], "payload": payload}
                f.write(json.dumps(rec, sort_keys=True) + "\n")
        return True


# ---------------------------------------------------------------------------
# Commands


def cmd_count(config: ExperimentConfig) -> tuple[dict, int]:
    rows = []
    ok = True
    for x, y in config.grid():
        ctx = SmoothContext(x, y, trunc_exponent=config.trunc_exponent)
        psi_sieve = count_smooth_sieve(ctx)
        psi_rec = count_smooth_recurrence(x, y)
        ups = count_ultra(ctx)
        agree = psi_sieve == psi_rec
        ok = ok and agree
        u = ctx.u
        rows.append(
            {
                "x": x,
                "y": y,
                "psi_sieve": psi_sieve,
                "psi_recurrence": psi_rec,
                "algorithms_agree": agree,
                "upsilon": ups,
                "ratio_upsilon_psi": ups / psi_sieve,
                "predicted_deviation_scale": u
                * math.log(2 * u)
                / (math.sqrt(y) * math.log(y)),
            }
        )
    return {"command": "count", "rows": rows}, EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_saddle(config: ExperimentConfig) -> tuple[dict, int]:
    rows = []
    ok = True
    for x, y in config.grid():
        ctx = SmoothContext(x, y, trunc_exponent=config.trunc_exponent)
        sp = solve_alpha(ctx)
        xi = solve_xi(ctx.u)
        tol = 1e-10 * math.log(x)
        ok = ok and sp.residual <= tol
        rows.append(
            {
                "x": x,
                "y": y,
                "u": ctx.u,
                "alpha": sp.alpha,
                "residual": sp.residual,
                "residual_tolerance": tol,
                "xi": xi.xi,
                "alpha_approx": sp.alpha_approx,
                "approx_gap": abs(sp.alpha - sp.alpha_approx),
                "degenerate": sp.degenerate,
            }
        )
    return {"command": "saddle", "rows": rows}, EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_sums(config: ExperimentConfig) -> tuple[dict, int]:
    rows = []
    for x, y in config.grid():
        ctx = SmoothContext(x, y, trunc_exponent=config.trunc_exponent)
        sp = solve_alpha(ctx)
        primes = primes_up_to(y)
        points = {"t=2": 2, "t=Y": ctx.Y, "t=y": y}
        if ctx.u > math.e:
            points["t=y^(1/log u)"] = max(2, int(y ** (1.0 / math.log(ctx.u))))
        for label, t in points.items():
            rep = prime_sum_M(t, sp.alpha, ctx, primes)
            # the same sum at alpha=1 is the Mertens partial sum, a cross-check
            mertens = float(np.sum(1.0 / primes[primes <= t].astype(np.float64)))
            rows.append(
                {
                    "x": x,
                    "y": y,
                    "point": label,
                    "t": t,
                    "alpha": sp.alpha,
                    "M_t": rep.M_t,
                    "mertens_sum": mertens,
                    "lemma41_target": rep.lemma41_target,
                    "sumybig_target": rep.sumybig_target,
                    "loglog_t_target": rep.loglog_t_target,
                    "trunc_target": rep.trunc_target,
                }
            )
    return {"command": "sums", "rows": rows}, EXIT_OK


def _lemma_rows(ctx: SmoothContext, alpha_override: float | None = None) -> list[dict]:
    sp = solve_alpha(ctx)
    alpha = alpha_override if alpha_override is not None else sp.alpha
    primes = primes_up_to(ctx.y)
    rep_y = prime_sum_M(ctx.y, alpha, ctx, primes)
    rep_big = prime_sum_M(ctx.Y, alpha, ctx, primes)
    xi = solve_xi(ctx.u)

    rows = []

    def check(name, value, threshold, passed, note=""):
        rows.append(
            {
                "check": name,
                "value": value,
                "threshold": threshold,
                "status": "PASS" if passed else "FAIL",
                "note": note,
            }
        )

    def na(name, note):
        rows.append(
            {"check": name, "value": None, "threshold": None, "status": "N/A",
             "note": note}
        )

    tol = 1e-10 * math.log(ctx.x)
    check("saddle_residual", sp.residual, tol, sp.residual <= tol)

    if ctx.u >= 3:
        rel = abs(xi.xi - xi.xi_asymptotic) / xi.xi_asymptotic
        check("xi_asymptotic", rel, FROZEN["xi_asymptotic_rel"],
              rel <= FROZEN["xi_asymptotic_rel"])
    else:
        na("xi_asymptotic", "requires u >= 3")

    gap = abs(rep_y.M_t - rep_y.lemma41_target)
    check("lemma41_prime_sum", gap, FROZEN["lemma41_gap"], gap <= FROZEN["lemma41_gap"])

    if ctx.y > math.log(ctx.x):
        gap = abs(rep_y.M_t - rep_y.sumybig_target)
        check("sumybig_prime_sum", gap, FROZEN["sumybig_gap"],
              gap <= FROZEN["sumybig_gap"])
    else:
        na("sumybig_prime_sum", "requires y > log x")

    gap = abs(rep_big.M_t - rep_big.trunc_target)
    check("truncation_prime_sum", gap, FROZEN["trunc_gap"], gap <= FROZEN["trunc_gap"])

    # population-level checks need the per-element scan
    d_primes = primes[np.unique(np.linspace(0, len(primes) - 1, 30).astype(int))]
    thresholds = tuple(int(ctx.x // int(d)) for d in d_primes)
    scan = omega_scan(ctx, thresholds=thresholds)

    mo = moments_from_histogram(scan.marginal("smooth", "omega"), "smooth", 2)
    gap = abs(mo.mean - rep_y.M_t)
    check("mean_vs_prime_sum", gap, FROZEN["mean_gap"], gap <= FROZEN["mean_gap"])

    worst = 0.0
    for d in d_primes:
        d = int(d)
        ratio = scan.psi_at[ctx.x // d] * d**alpha / scan.psi
        band = 1.0 / ctx.u_y + math.log(d) / math.log(ctx.x)
        worst = max(worst, abs(ratio - 1.0) / band)
    check("local_ratio", worst, FROZEN["local_ratio_K"],
          worst <= FROZEN["local_ratio_K"],
          note="max |Psi(x/d,y) d^a/Psi(x,y) - 1| / (1/u_y + log d/log x)")

    hist_h = scan.h_histogram("smooth")
    mh = moments_from_histogram(hist_h, "smooth", 2)
    lly = ctx.loglog_y
    thr = lly**0.25 if lly > 0 else 0.0
    n = int(hist_h.sum())
    tail = float(hist_h[np.arange(len(hist_h)) > thr].sum() / n)
    slack = thr - mh.mean
    bound = mh.variance / slack**2 if slack > 0 else 1.0
    check("tail_chebyshev", tail, bound, tail <= bound,
          note="exact Chebyshev on measured h; paper-shaped bound "
          f"sigma_h^2/sqrt(lly) = {mh.variance / math.sqrt(lly) if lly > 0 else float('inf'):.6g}")
    return rows


def cmd_lemmas(config: ExperimentConfig) -> tuple[dict, int]:
    all_rows = []
    ok = True
    for x, y in config.grid():
        ctx = SmoothContext(x, y, trunc_exponent=config.trunc_exponent)
        for row in _lemma_rows(ctx, config.alpha_override):
            row = {"x": x, "y": y, **row}
            ok = ok and row["status"] != "FAIL"
            all_rows.append(row)
    return {"command": "lemmas", "rows": all_rows}, (
        EXIT_OK if ok else EXIT_CHECK_FAILED
    )


def cmd_model(config: ExperimentConfig) -> tuple[dict, int]:
    rows = []
    for x, y in config.grid():
        ctx = SmoothContext(x, y, trunc_exponent=config.trunc_exponent)
        if config.mode == "approximate":
            sp = solve_alpha(ctx)
            ens = build_ensemble(ctx, "approximate", alpha=sp.alpha)
        else:
            ens = build_ensemble(ctx, "exact")
        dist = exact_distribution(ens, moment_cap=config.moments)
        ks = ks_distance(dist.pmf, dist.mean, math.sqrt(dist.variance))
        row = {
            "x": x,
            "y": y,
            "Y": ctx.Y,
            "mode": ens.mode,
            "n_indicators": ens.m,
            "mean": dist.mean,
            "variance": dist.variance,
            "raw_moments": dist.raw_moments.tolist(),
            "centered_moments": dist.centered_moments.tolist(),
            "ks_standardized_vs_phi": ks,
        }
        if config.samples > 0:
            sm = sample_moments(
                ens,
                config.samples,
                seed=config.seed,
                moment_cap=config.moments,
                n_streams=config.threads,
            )
            row["sample_raw_moments"] = sm.tolist()
            row["n_samples"] = config.samples
            row["seed"] = config.seed
        rows.append(row)
    return {"command": "model", "rows": rows}, EXIT_OK


def cmd_ek(config: ExperimentConfig) -> tuple[dict, int]:
    rows = []
    for x, y in config.grid():
        ctx = SmoothContext(x, y, trunc_exponent=config.trunc_exponent)
        scan = omega_scan(ctx)
        if config.mode == "approximate":
            sp = solve_alpha(ctx)
            ens = build_ensemble(ctx, "approximate", alpha=sp.alpha)
        else:
            ens = build_ensemble(ctx, "exact")
        dist = exact_distribution(ens, moment_cap=config.moments)
        reports = {
            "smooth": ek_distribution(ctx, scan, "smooth", dist, config.moments),
            "ultra": ek_distribution(ctx, scan, "ultra", dist, config.moments),
        }
        model_ks = ks_distance(dist.pmf, dist.mean, math.sqrt(dist.variance))
        row = {
            "x": x,
            "y": y,
            "Y": ctx.Y,
            "psi": scan.psi,
            "upsilon": scan.upsilon,
            "model_ks": model_ks,
            "model_mean": dist.mean,
            "model_variance": dist.variance,
        }
        for pop, rep in reports.items():
            row[pop] = {
                "count": rep.count,
                "ks_paper_omega": rep.ks_paper_omega,
                "ks_paper_omega_y": rep.ks_paper_omega_y,
                "ks_empirical_omega": rep.ks_empirical_omega,
                "ks_empirical_omega_y": rep.ks_empirical_omega_y,
                "mean_omega": rep.mean_omega,
                "var_omega": rep.var_omega,
                "mean_omega_y": rep.mean_omega_y,
                "var_omega_y": rep.var_omega_y,
                "tail_fraction": rep.tail_fraction,
                "sigma_h2": rep.sigma_h2,
                "degenerate": rep.degenerate,
            }
            if rep.gaps is not None:
                row[pop]["moment_gaps"] = {
                    "mu_center": rep.gaps.mu_center,
                    "a_j": rep.gaps.a.tolist(),
                    "delta_direct": rep.gaps.delta_direct.tolist(),
                    "delta_expansion": rep.gaps.delta_expansion.tolist(),
                }
            if config.out_dir:
                os.makedirs(config.out_dir, exist_ok=True)
                path = os.path.join(config.out_dir, f"cdf_{pop}_x{x}_y{y}.csv")
                with open(path, "w") as f:
                    f.write("z,F_emp,Phi\n")
                    for z, fe, ph in zip(rep.z, rep.f_omega_paper, rep.phi):
                        f.write(f"{z:.2f},{fe:.17g},{ph:.17g}\n")
                row[pop]["cdf_csv"] = path
        rows.append(row)
    return {"command": "ek", "rows": rows}, EXIT_OK


COMMANDS = {
    "count": cmd_count,
    "saddle": cmd_saddle,
    "lemmas": cmd_lemmas,
    "ek": cmd_ek,
    "model": cmd_model,
    "sums": cmd_sums,
}


def _env(name: str, default=None):
    return os.environ.get(ENV_PREFIX + name, default)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="smoothstats",
        description="Exact omega statistics over smooth integers: counting, "
        "saddle-point solving, lemma checks, and distribution experiments.",
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--x", type=int, default=None)
        sp.add_argument("--y", type=int, default=None)
        sp.add_argument("--x-grid", type=int, nargs="+", default=[])
        sp.add_argument("--y-grid", type=int, nargs="+", default=[])
        sp.add_argument("--fixed-u", type=float, default=None)
        sp.add_argument("--trunc-exponent", type=float, default=None)
        sp.add_argument("--moments", type=int, default=10, metavar="K")
        sp.add_argument("--seed", type=int, default=int(_env("SEED", 0)))
        sp.add_argument("--threads", type=int, default=int(_env("THREADS", 1)))
        sp.add_argument("--format", choices=["json", "csv", "text"],
                        default=_env("FORMAT", "json"))
        sp.add_argument("--cache-dir", default=_env("CACHE_DIR"))
        sp.add_argument("--mode", choices=["exact", "approximate"],
                        default=_env("MODE", "exact"))
        sp.add_argument("--samples", type=int, default=0)
        sp.add_argument("--out-dir", default=None)
        sp.add_argument("--alpha-override", type=float, default=None,
                        help=argparse.SUPPRESS)
    return p


def run(argv: list[str] | None = None, stream=None) -> int:
    args = build_parser().parse_args(argv)
    config = ExperimentConfig(
        x=args.x,
        y=args.y,
        x_grid=args.x_grid,
        y_grid=args.y_grid,
        fixed_u=args.fixed_u,
        trunc_exponent=args.trunc_exponent,
        moments=args.moments,
        seed=args.seed,
        threads=args.threads,
        format=args.format,
        cache_dir=args.cache_dir,
        mode=args.mode,
        samples=args.samples,
        out_dir=args.out_dir,
        alpha_override=args.alpha_override,
    )
    try:
        config.validate()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        report, code = COMMANDS[args.command](config)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except BracketError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    report["schema_version"] = SCHEMA_VERSION
    report["config_hash"] = config.hash()
    if config.cache_dir:
        store = BaselineStore(config.cache_dir)
        stable = store.check_or_record(args.command, config.hash(), report)
        report["baseline_match"] = stable
        if not stable and code == EXIT_OK:
            code = EXIT_CHECK_FAILED
    _emit(report, config, stream)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
