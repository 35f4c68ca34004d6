"""Command-line front end.

Subcommands: mu, simulate, verify, kernel-limit, fit, examples. Each one
writes its outputs (with the fully resolved configuration embedded) to
``--out-dir``.

Exit codes: 0 pass, 1 statistical failure or negative verdict, 2 config
error, 3 numeric error, 4 insufficient data.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from collections.abc import Callable, Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import distfn, htfit
from .errors import (CevmError, DomainError, EvaluationError, InsufficientDataError,
                     PreconditionError, QuadratureError, RegistryLookupError)
from .erv import psi
from .kernels import KernelLimitReport
from .limits import LimitMeasure, export_grid, limit_measure_from_json, mu_gamma, mu_general
from .montecarlo import ModelSpec, Normalization, default_sample_size, sample_pairs, verify_convergence
from .registry import SUITE, ExampleModel, example_registry, kernel_from_json

log = logging.getLogger("cevm")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC, EXIT_DATA = 0, 1, 2, 3, 4
COMMANDS = ("mu", "simulate", "verify", "kernel-limit", "fit", "examples")


class ConfigError(CevmError):
    """Invalid run configuration; the message starts with the offending field path."""


# -- configuration ----------------------------------------------------------------------

def parse_range(desc, path: str = "grid") -> list[float]:
    """``"start:stop:count:log|lin"``, a comma list, a number or a JSON list."""
    if isinstance(desc, (int, float)):
        return [float(desc)]
    if isinstance(desc, (list, tuple)):
        try:
            vals = [float(v) for v in desc]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: non-numeric entry ({exc})") from exc
    elif isinstance(desc, str) and desc.count(":") == 3:
        start, stop, count, kind = desc.split(":")
        try:
            a, b, n = float(start), float(stop), int(count)
        except ValueError as exc:
            raise ConfigError(f"{path}: bad range descriptor {desc!r}") from exc
        if n < 1:
            raise ConfigError(f"{path}: count must be >= 1")
        if kind == "log":
            if a <= 0 or b <= 0:
                raise ConfigError(f"{path}: log range needs positive ends")
            vals = np.geomspace(a, b, n).tolist()
        elif kind == "lin":
            vals = np.linspace(a, b, n).tolist()
        else:
            raise ConfigError(f"{path}: range kind must be 'log' or 'lin', got {kind!r}")
    elif isinstance(desc, str):
        try:
            vals = [float(v) for v in desc.split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"{path}: bad list {desc!r}") from exc
    else:
        raise ConfigError(f"{path}: expected a range descriptor or list")
    if not vals or not np.all(np.isfinite(vals)):
        raise ConfigError(f"{path}: grid must be a finite nonempty list")
    return vals


@dataclass
class RunConfig:
    command: str
    model: dict = field(default_factory=dict)
    x: object = None
    y: object = None
    t: object = None
    n: int | None = None
    seed: int = 0
    tol: float | None = None
    out_dir: str = "cevm_out"
    data: str | None = None
    threshold: float | None = None
    family: str = "auto"
    filter: str | None = None
    risk: list | None = None
    quiet: bool = False

    def resolved(self) -> dict:
        return asdict(self)


_DEFAULT_GRIDS = {"x": "0.5:8:5:log", "y": "0.5:4:5:log", "t": "10,100"}


def _at(path: str, fn: Callable, *args, **kwargs):
    """Run a builder, prefixing configuration errors with the field path."""
    try:
        return fn(*args, **kwargs)
    except (DomainError, RegistryLookupError, KeyError, TypeError, ValueError) as exc:
        msg = str(exc.args[0]) if isinstance(exc, KeyError) and exc.args else str(exc)
        raise ConfigError(f"{path}: {msg}") from exc


def load_config(args: argparse.Namespace) -> RunConfig:
    raw: dict = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"--config: cannot read {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--config: malformed JSON ({exc})") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config: top level must be an object")
    raw.pop("command", None)
    known = set(RunConfig.__dataclass_fields__) - {"command"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"config.{sorted(unknown)[0]}: unknown field")
    cfg = RunConfig(command=args.command, **raw)
    for name in ("seed", "tol", "n", "data", "threshold", "filter", "x", "y", "t"):
        v = getattr(args, name, None)
        if v is not None:
            setattr(cfg, name, v)
    if getattr(args, "example", None):
        try:
            params = json.loads(args.params or "{}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--params: malformed JSON ({exc})") from exc
        cfg.model = {"example": args.example, "params": params}
    if getattr(args, "family", None):
        cfg.family = args.family
    if args.out_dir:
        cfg.out_dir = args.out_dir
    cfg.quiet = cfg.quiet or args.quiet
    return cfg


def _grid(cfg: RunConfig, name: str, default: str | None = None) -> list[float]:
    desc = getattr(cfg, name)
    if desc is None:
        desc = default or _DEFAULT_GRIDS[name]
    return parse_range(desc, f"config.{name}")


def _measure_from_model(model: dict) -> LimitMeasure:
    if "example" in model:
        ex = _at("config.model.example", example_registry, model["example"],
                 **model.get("params", {}))
        if ex.reference is None:
            raise ConfigError(f"config.model.example: {ex.name} has no reference limit measure")
        return ex.reference
    if "measure" in model:
        return _at("config.model.measure", limit_measure_from_json, model["measure"])
    raise ConfigError("config.model: needs 'example' or 'measure'")


def _model_from_config(model: dict) -> tuple[ModelSpec, ExampleModel | None]:
    if not model:
        raise ConfigError("config.model: missing (give --example or a model object)")
    if "example" in model:
        params = model.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("config.model.params: must be an object")
        ex = _at("config.model", example_registry, model["example"], **params)
        return ex.model_spec(), ex
    for key in ("y_dist", "kernel"):
        if key not in model:
            raise ConfigError(f"config.model.{key}: missing")
    y_dist = _at("config.model.y_dist", distfn.from_json, model["y_dist"])
    kernel = _at("config.model.kernel", kernel_from_json, model["kernel"])
    nd = model.get("normalization", {})
    rho, k = float(nd.get("rho", 1.0)), float(nd.get("k", 0.0))
    norm = Normalization(alpha=lambda t: t**rho, beta=lambda t: psi(t, rho, k), rho=rho, k=k,
                         label=f"(t^{rho:g}, psi)")
    ref = _at("config.model.reference", limit_measure_from_json, model["reference"]) \
        if "reference" in model else None
    return ModelSpec(y_dist, kernel, norm, ref, "custom"), None


def _write_json(path: Path, obj: dict) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, default=_json_default))
    return path


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.bool_):
        return bool(o)
    return str(o)


def _say(cfg: RunConfig, msg: str) -> None:
    if not cfg.quiet:
        print(msg)


# -- commands -------------------------------------------------------------------------------

def cmd_mu(cfg: RunConfig) -> int:
    measure = _measure_from_model(cfg.model)
    xs, ys = _grid(cfg, "x"), _grid(cfg, "y")
    out = Path(cfg.out_dir) / "mu_grid.csv"
    csv_path, side = export_grid(out, measure, xs, ys, extra={"config": cfg.resolved()})
    _say(cfg, f"wrote {csv_path} ({len(xs) * len(ys)} rows) and {side}")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    spec, _ = _model_from_config(cfg.model)
    n = int(cfg.n or 100_000)
    X, Y = sample_pairs(spec, n, cfg.seed)
    out = Path(cfg.out_dir) / "sample.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y"])
        w.writerows(zip(map(repr, X.tolist()), map(repr, Y.tolist())))
    _write_json(out.with_suffix(".json"), {"config": cfg.resolved(), "n": n})
    _say(cfg, f"wrote {n} pairs to {out}")
    return EXIT_OK


def _kernel_report_dict(rep: KernelLimitReport) -> dict:
    d = rep.summary()
    if rep.sub_limits is not None:
        d["sub_limits"] = {"integer": rep.sub_limits[0].tolist(), "half": rep.sub_limits[1].tolist()}
    d["x_grid"] = rep.x_grid.tolist()
    d["limit_row"] = rep.table[-1, :-1].tolist()
    return d


def cmd_kernel_limit(cfg: RunConfig) -> int:
    _, ex = _model_from_config(cfg.model)
    if ex is None:
        raise ConfigError("config.model: kernel-limit needs a registry example")
    kw = {"tol": cfg.tol} if cfg.tol else {}
    rep = ex.detect(**kw)
    ok = ex.kernel_outcome_ok(rep)
    _write_json(Path(cfg.out_dir) / "kernel_limit.json",
                {"config": cfg.resolved(), "report": _kernel_report_dict(rep),
                 "expected_status": ex.expected_status, "matches_expected": ok})
    _say(cfg, f"{ex.name}: status={rep.status} defect={rep.defect_at_infinity:.4g} "
              f"oscillation_gap={rep.oscillation_gap:.4g} degenerate={rep.degenerate} "
              f"asymptotic_independence={rep.asymptotic_independence}")
    clean = rep.status == "converged" and not rep.asymptotic_independence
    return EXIT_OK if clean else EXIT_FAIL


def cmd_verify(cfg: RunConfig) -> int:
    spec, ex = _model_from_config(cfg.model)
    if spec.reference_mu is None:
        raise PreconditionError("model has no reference limit measure to verify against")
    xs = _grid(cfg, "x", "-2:2:5:lin" if spec.normalization.label.startswith("(t^") and ex
               and ex.name == "tail_kernel" else None)
    ys = _grid(cfg, "y", "-1:1.5:5:lin" if not spec.normalization.standard_y else None)
    ts = _grid(cfg, "t")
    n = int(cfg.n or default_sample_size(max(ts)))
    krep = ex.detect() if ex is not None else None
    rep = verify_convergence(spec, ts, xs, ys, n, cfg.seed, kernel_report=krep)
    out = Path(cfg.out_dir)
    for i, g in enumerate(rep.grids):
        g.to_csv(out / "tail_grid.csv", append=i > 0)
    rep.to_json(out / "verify_report.json", extra={"config": cfg.resolved()})
    _say(cfg, f"{spec.label}: {'PASS' if rep.passed else 'FAIL'} verdict={rep.verdict} "
              f"frac(|z|<3)={rep.frac_within:.3f} median|z|={rep.median_abs_z:.3f}")
    return EXIT_OK if rep.passed and rep.verdict == "cevm" else EXIT_FAIL


def cmd_fit(cfg: RunConfig) -> int:
    if not cfg.data:
        raise ConfigError("config.data: path to a two-column CSV is required")
    try:
        X, Y, dropped = htfit.load_xy_csv(cfg.data)
    except OSError as exc:
        raise ConfigError(f"config.data: cannot read {cfg.data}: {exc}") from exc
    except PreconditionError as exc:
        raise ConfigError(f"config.data: {exc}") from exc
    if X.size < htfit.MIN_GAMMA_N:
        raise InsufficientDataError(f"need at least {htfit.MIN_GAMMA_N} rows, got {X.size}",
                                    observed=int(X.size))
    fr = htfit.fit(X, Y, cfg.threshold, cfg.family)
    out = Path(cfg.out_dir)
    extra: dict = {"config": cfg.resolved(), "dropped_rows": dropped}
    if cfg.risk:
        risks = []
        for i, rect in enumerate(cfg.risk):
            r = _at(f"config.risk[{i}]", htfit.risk_region_probability, fr, float(rect[0]),
                    float(rect[1]), seed=cfg.seed)
            risks.append({"x_max": rect[0], "y_min": rect[1], **asdict(r)})
        extra["risk"] = risks
    fr.to_json(out / "fit.json", extra=extra)
    rows = fr.residual_rows()
    with (out / "residuals.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    _say(cfg, f"gamma={fr.gamma_hat:.4g} rho={fr.normalization.rho:.4g} "
              f"family={fr.normalization.family} m={fr.m} dropped={dropped}")
    for msg in fr.warnings:
        _say(cfg, f"warning: {msg}")
    return EXIT_OK


def _mc_grids(ex: ExampleModel) -> tuple[list[float], list[float]]:
    if ex.name == "tail_kernel":
        return [-2.0, -1.0, 0.0, 1.0, 2.0], parse_range(_DEFAULT_GRIDS["y"])
    if not ex.normalization.standard_y:
        return parse_range("0.5:8:5:log"), parse_range("-1:1.5:5:lin")
    return parse_range(_DEFAULT_GRIDS["x"]), parse_range(_DEFAULT_GRIDS["y"])


def _quadrature_mu(ref: LimitMeasure, x: float, y: float) -> float:
    if ref.regime == "general_gamma":
        return mu_gamma(ref.G, ref.rho, ref.k, ref.gamma, x, y)
    return mu_general(ref.G, ref.rho, ref.k, x, y)


def run_example(ex: ExampleModel, n: int, seed: int, t_grid: Sequence[float] | None = None) -> dict:
    """Kernel-limit detection, closed form vs quadrature, and Monte Carlo verification."""
    row: dict = {"name": ex.name, "params": ex.params, "expected_status": ex.expected_status,
                 "expected_verdict": ex.expected_verdict}
    t0 = time.perf_counter()
    rep = ex.detect()
    row.update(status=rep.status, defect=rep.defect_at_infinity, gap=rep.oscillation_gap,
               degenerate=rep.degenerate, kernel_ok=ex.kernel_outcome_ok(rep))
    ok = row["kernel_ok"]
    ref = ex.reference
    if ref is not None:
        xs, ys = _mc_grids(ex)
        if ref.closed_form is not None:
            diff = max(abs(ref.mu(x, y) - _quadrature_mu(ref, x, y)) for x in xs for y in ys)
            row["mu_max_diff"] = diff
            ok = ok and diff < 1e-6
        vr = verify_convergence(ex.model_spec(), t_grid or ex.mc_t, xs, ys, n, seed, kernel_report=rep)
        row.update(mc_passed=vr.passed, verdict=vr.verdict, frac_within=vr.frac_within,
                   median_abs_z=vr.median_abs_z)
        ok = ok and vr.passed and vr.verdict == ex.expected_verdict
    row["ok"] = bool(ok)
    row["seconds"] = time.perf_counter() - t0
    return row


def cmd_examples(cfg: RunConfig) -> int:
    ts = _grid(cfg, "t") if cfg.t is not None else None
    n = int(cfg.n or 10_000_000)
    rows = []
    for name, params in SUITE:
        if cfg.filter and cfg.filter not in name:
            continue
        ex = example_registry(name, **params)
        rows.append(run_example(ex, n, cfg.seed, ts))
        r = rows[-1]
        _say(cfg, f"{'ok  ' if r['ok'] else 'FAIL'} {name:18s} {json.dumps(params):50s} "
                  f"kernel={r['status']:13s} verdict={r.get('verdict', 'n/a'):24s} "
                  f"{r['seconds']:.1f}s")
    out = Path(cfg.out_dir)
    cols = ["name", "params", "expected_status", "status", "kernel_ok", "mu_max_diff",
            "expected_verdict", "verdict", "mc_passed", "frac_within", "median_abs_z", "ok"]
    out.mkdir(parents=True, exist_ok=True)
    with (out / "examples.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({**r, "params": json.dumps(r["params"])})
    _write_json(out / "examples.json", {"config": cfg.resolved(), "rows": rows})
    all_ok = bool(rows) and all(r["ok"] for r in rows)
    _say(cfg, f"{sum(r['ok'] for r in rows)}/{len(rows)} examples behaved as expected")
    return EXIT_OK if all_ok else EXIT_FAIL


HANDLERS = {"mu": cmd_mu, "simulate": cmd_simulate, "verify": cmd_verify,
            "kernel-limit": cmd_kernel_limit, "fit": cmd_fit, "examples": cmd_examples}


# -- entry point ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int)
    common.add_argument("--out-dir", dest="out_dir")
    common.add_argument("--tol", type=float)
    common.add_argument("--quiet", action="store_true")
    common.add_argument("--example", help="registry example name")
    common.add_argument("--params", help="JSON object of example parameters")
    common.add_argument("--x", help="x grid (start:stop:count:log|lin or a,b,c)")
    common.add_argument("--y", help="y grid")
    common.add_argument("--t", help="t grid")
    common.add_argument("-n", type=int, help="sample size")

    p = argparse.ArgumentParser(prog="cevm", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("mu", parents=[common], help="evaluate a limit measure on a grid")
    sub.add_parser("simulate", parents=[common], help="simulate (X, Y) pairs")
    sub.add_parser("verify", parents=[common], help="Monte Carlo verification of the limit")
    sub.add_parser("kernel-limit", parents=[common], help="detect the kernel limit")
    f = sub.add_parser("fit", parents=[common], help="fit the model to (x, y) data")
    f.add_argument("--data")
    f.add_argument("--threshold", type=float)
    f.add_argument("--family", choices=["auto", "positive-rho", "negative-rho"])
    e = sub.add_parser("examples", parents=[common], help="run the example suite")
    e.add_argument("--filter")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args)
        return HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InsufficientDataError as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (QuadratureError, EvaluationError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (PreconditionError, DomainError, RegistryLookupError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
