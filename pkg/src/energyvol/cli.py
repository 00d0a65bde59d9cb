"""
Command-line front end: ``energyvol <subcommand> [options]``.

Subcommands ``ingest``, ``diagnose``, ``fit-garch``, ``fit-bekk``,
``fit-ml``, ``backtest``, ``explain``, ``report`` and ``run`` (the whole
pipeline from one JSON config).  Option precedence is flags > config file >
built-in defaults; the default output directory comes from the
``ENERGYVOL_OUTPUT`` environment variable.

Exit codes: 0 success, 1 model or runtime failure, 2 invalid configuration,
usage or a missing column, 3 unreadable input data.  Failures print a JSON
object ``{"error": ..., "message": ..., "details": [...]}`` on stderr.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import pandas as pd

from energyvol import bekk, diagnostics, garch, serialize
from energyvol import shap as treeshap
from energyvol.config import ConfigError, RunConfig, default_output_dir, load_config, sub_seed
from energyvol.harness import (
    BacktestConfig,
    BekkForecaster,
    ConstantForecaster,
    GarchForecaster,
    HarnessError,
    MlForecaster,
    compare_report,
    evaluate,
    read_records,
    rolling_backtest,
    write_records,
)
from energyvol.ingest import AlignedPanel, IngestError, align_daily, load_csv, read_panel, transform, write_panel
from energyvol.mlmodels import MODEL_KINDS, FeatureMatrix, build_features, fit_model, select_hyperparameters
from energyvol.mlmodels.trees import TreeEnsemble

__all__ = ["main", "run_pipeline", "build_panel", "CliError"]

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG, EXIT_DATA = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, kind: str, message: str, code: int, details: Sequence[str] = ()):
        super().__init__(message)
        self.kind, self.code, self.details = kind, code, list(details)


def _emit_error(err: CliError) -> int:
    doc = {"error": err.kind, "message": str(err), "details": err.details, "exit_code": err.code}
    print(json.dumps(doc, sort_keys=True), file=sys.stderr)
    return err.code


def _dump_json(obj: Any, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (pd.Timestamp, Path)):
        return str(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _missing_columns(names: Sequence[str], panel_columns: Sequence[str]) -> None:
    missing = [c for c in dict.fromkeys(names) if c not in panel_columns]
    if missing:
        raise CliError("missing_column", f"column(s) not found in the data: {', '.join(missing)}",
                       EXIT_CONFIG, [f"missing column {c!r}" for c in missing])


def _day(ts) -> str:
    return pd.Timestamp(ts).strftime("%Y-%m-%d")


# ---------------------------------------------------------------------------
# pipeline pieces


def _referenced_columns(cfg: RunConfig) -> list[str]:
    cols = list(cfg.commodities) + list(cfg.exogenous or []) + list(cfg.transforms)
    for m in cfg.models:
        cols += m.get("exogenous", []) + m.get("columns", [])
    return cols


def build_panel(cfg: RunConfig) -> AlignedPanel:
    """Load, align and transform the configured data files."""
    series = []
    for entry in cfg.data:
        path = cfg.data_path(entry)
        if not path.exists():
            raise CliError("data_error", f"data file not found: {path}", EXIT_DATA)
        schema = entry.get("columns")
        if schema is not None:
            with path.open(newline="") as fh:
                header = [h.strip() for h in fh.readline().split(",")]
            _missing_columns(list(schema), header[1:])
        series += load_csv(path, schema, entry.get("frequencies"))
    names = [s.name for s in series]
    dup = sorted({n for n in names if names.count(n) > 1})
    if dup:
        raise CliError("config_error", f"series defined more than once: {', '.join(dup)}", EXIT_CONFIG)
    _missing_columns(_referenced_columns(cfg), names)
    levels = align_daily(series)
    tags = {c: ("log_return" if c in cfg.commodities else "log_diff") for c in levels.columns}
    tags.update(cfg.transforms)
    return transform(levels, tags, cfg.nonpositive)


def _exogenous(cfg: RunConfig, panel: AlignedPanel) -> list[str]:
    if cfg.exogenous is not None:
        return list(cfg.exogenous)
    return [c for c in panel.columns if c not in cfg.commodities]


def _safe(fn, *args, **kw):
    try:
        return fn(*args, **kw).to_dict()
    except (diagnostics.DiagnosticsError, np.linalg.LinAlgError) as exc:
        return {"error": str(exc)}


def series_diagnostics(x: np.ndarray, lags: int, adf_max_lag: int, squared_tests: bool = True) -> dict:
    out = {
        "summary": _safe(diagnostics.describe, x),
        "jarque_bera": _safe(diagnostics.jarque_bera, x),
        "adf": _safe(diagnostics.adf, x, adf_max_lag),
    }
    if squared_tests:
        z = (x - x.mean()) / (x.std() or 1.0)
        out["ljung_box_squared"] = _safe(diagnostics.ljung_box_squared, z, lags)
        out["arch_lm"] = _safe(diagnostics.arch_lm, x - x.mean(), lags)
    return out


def _garch_summary(fit: garch.GarchFit) -> dict:
    return {
        "params": {k: v for k, v in zip(["mu", "omega", "alpha", "beta", "gamma"], fit.params.full_vector())},
        "exo_coefs": list(fit.params.exo_coefs),
        "std_errors": fit.std_errors,
        "log_likelihood": fit.log_likelihood,
        "persistence": garch.persistence(fit),
        "converged": fit.converged,
        "floor_hits": fit.floor_hits,
    }


def _ml_fit(spec: dict, fm: FeatureMatrix, seed: int):
    hyper = dict(spec.get("hyper", {}))
    if spec.get("tune", False):
        hyper = select_hyperparameters(spec["kind"], fm, seed=seed, base=hyper)
    try:
        return fit_model(spec["kind"], fm, seed=seed, **hyper), hyper
    except TypeError as exc:
        raise CliError("config_error", f"invalid hyperparameter for {spec['kind']}: {exc}", EXIT_CONFIG) from None


def _shap_outputs(model: TreeEnsemble, fm: FeatureMatrix, csv_path: Path, json_path: Path) -> None:
    base, phi = treeshap.tree_shap_matrix(model, fm.X)
    imp = treeshap.global_importance(model, fm.X, fm.feature_names)
    n, p = fm.X.shape
    frame = pd.DataFrame({
        "row_index": np.repeat(np.arange(n), p),
        "feature": np.tile(np.array(fm.feature_names, dtype=object), n),
        "feature_value": fm.X.ravel(),
        "shap_value": phi.ravel(),
    })
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(csv_path, index=False, lineterminator="\n", float_format="%.17g")
    _dump_json({
        "base_value": base,
        "n_rows": n,
        "dates": [_day(fm.dates[0]), _day(fm.dates[-1])] if isinstance(fm.dates, pd.DatetimeIndex) else [],
        "importance": [{"feature": f, "mean_abs_shap": v} for f, v in imp.ranked()],
        "max_local_accuracy_gap": float(np.max(np.abs(base + phi.sum(axis=1) - model.predict(fm.X)))),
    }, json_path)


def _forecasters(cfg: RunConfig, panel: AlignedPanel) -> list:
    exo = _exogenous(cfg, panel)
    out = []
    for m in cfg.models:
        fam, mid = m["family"], m["id"]
        if fam == "constant":
            out.append(ConstantForecaster(float(m["value"]), tuple(cfg.commodities), model_id=mid))
        elif fam == "garch":
            spec = garch.GarchSpec(m.get("kind", "GARCH11"), tuple(m.get("exogenous", [])))
            for c in cfg.commodities:
                out.append(GarchForecaster(c, spec, model_id=mid, warm_start=m.get("warm_start", True)))
        elif fam == "bekk":
            cols = tuple(m.get("columns", cfg.commodities))
            targets = tuple(c for c in cfg.commodities if c in cols)
            out.append(BekkForecaster(cols, targets, model_id=mid, warm_start=m.get("warm_start", True)))
        else:
            for c in cfg.commodities:
                out.append(MlForecaster(m["kind"], c, dict(m.get("hyper", {})), sub_seed(cfg.seed, f"{mid}/{c}"),
                                        m.get("lags", 1), cfg.commodities, exo, m.get("tune", False),
                                        model_id=mid))
    return out


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_pipeline(cfg: RunConfig, output_dir: Optional[Path] = None) -> int:
    """Ingest, diagnose, fit, backtest, evaluate and explain.

    Writes into ``output_dir``: ``panel.csv`` (+ manifest), ``diagnostics.json``,
    ``fits/*.json``, ``records.csv`` and ``report.json`` (when a backtest is
    configured), ``shap/*.csv`` and ``shap/*.json`` for tree models, and
    ``run_manifest.json`` with per-model status and file hashes.  Returns
    0 when at least one model completed, 1 otherwise.
    """
    out = Path(output_dir or cfg.output_dir or default_output_dir())
    out.mkdir(parents=True, exist_ok=True)
    panel = build_panel(cfg)
    write_panel(panel, out / "panel.csv")
    exo = _exogenous(cfg, panel)

    diag: dict[str, Any] = {"series": {}, "model_residuals": {}}
    for col in panel.columns:
        diag["series"][col] = series_diagnostics(panel[col], cfg.diagnostic_lags, cfg.adf_max_lag,
                                                 squared_tests=col in cfg.commodities)

    status: dict[str, dict] = {}
    for m in cfg.models:
        fam, mid = m["family"], m["id"]
        entry: dict[str, Any] = {"family": fam, "targets": {}}
        status[mid] = entry
        if fam == "constant":
            entry["targets"] = {c: {"status": "ok"} for c in cfg.commodities}
            continue
        if fam == "bekk":
            cols = list(m.get("columns", cfg.commodities))
            try:
                E = panel.select(cols).frame.to_numpy(float)
                bfit = bekk.fit(E, columns=cols)
                meta = {"columns": cols, "window": [_day(panel.dates[0]), _day(panel.dates[-1])],
                        "log_likelihood": bfit.log_likelihood, "converged": bfit.converged}
                serialize.save(bfit, out / "fits" / f"{mid}.json", mid, meta)
                z = bekk.standardized_residuals(bfit, E)
                diag["model_residuals"][mid] = {
                    "multivariate_ljung_box_squared": _safe(diagnostics.multivariate_ljung_box_squared, z,
                                                            cfg.diagnostic_lags)}
                entry["targets"] = {c: {"status": "ok"} for c in cols}
                entry["spectral_radius"] = bfit.spectral_radius
            except Exception as exc:  # noqa: BLE001 - recorded, never aborts the run
                entry["targets"] = {c: {"status": "failed", "error": str(exc)} for c in cols}
            continue
        for c in cfg.commodities:
            try:
                if fam == "garch":
                    spec = garch.GarchSpec(m.get("kind", "GARCH11"), tuple(m.get("exogenous", [])))
                    X = panel.select(spec.exogenous).frame.to_numpy(float) if spec.exogenous else None
                    gfit = garch.fit(spec, panel[c], X)
                    meta = {"target": c, "window": [_day(panel.dates[0]), _day(panel.dates[-1])],
                            **_garch_summary(gfit)}
                    serialize.save(gfit, out / "fits" / f"{mid}__{c}.json", mid, meta)
                    diag["model_residuals"][f"{mid}__{c}"] = series_diagnostics(
                        gfit.std_residuals, cfg.diagnostic_lags, cfg.adf_max_lag)
                else:
                    fm = build_features(panel, c, m.get("lags", 1), cfg.commodities, exo)
                    seed = sub_seed(cfg.seed, f"{mid}/{c}")
                    model, hyper = _ml_fit(m, fm, seed)
                    meta = {"target": c, "lags": m.get("lags", 1), "commodities": list(cfg.commodities),
                            "exogenous": exo, "feature_names": fm.feature_names, "hyper": hyper, "seed": seed,
                            "window": [_day(fm.dates[0]), _day(fm.dates[-1])],
                            "train_mse": float(np.mean((model.predict(fm.X) - fm.y) ** 2))}
                    serialize.save(model, out / "fits" / f"{mid}__{c}.json", mid, meta)
                    if cfg.explain and isinstance(model, TreeEnsemble):
                        _shap_outputs(model, fm, out / "shap" / f"{mid}__{c}.csv", out / "shap" / f"{mid}__{c}.json")
                entry["targets"][c] = {"status": "ok"}
            except CliError:
                raise
            except Exception as exc:  # noqa: BLE001 - recorded, never aborts the run
                entry["targets"][c] = {"status": "failed", "error": str(exc)}
    _dump_json(diag, out / "diagnostics.json")

    backtest_info: dict[str, Any] = {"run": False}
    if cfg.backtest is not None:
        try:
            cfg.backtest.check_length(len(panel))
        except HarnessError as exc:
            raise CliError("config_error", str(exc), EXIT_CONFIG, [f"$.backtest: {exc}"]) from None
        records = rolling_backtest(panel, _forecasters(cfg, panel), cfg.backtest)
        write_records(records, out / "records.csv")
        report = compare_report(evaluate(records, cfg.backtest.scale))
        _dump_json(report, out / "report.json")
        backtest_info = {"run": True, "n_records": len(records),
                         "n_failed_records": sum(r.failed for r in records)}

    completed = [mid for mid, e in status.items() if any(t["status"] == "ok" for t in e["targets"].values())]
    files = sorted(p for p in out.rglob("*") if p.is_file() and p.name != "run_manifest.json")
    manifest = {
        "seed": cfg.seed,
        "n_rows": len(panel),
        "panel_dates": [_day(panel.dates[0]), _day(panel.dates[-1])],
        "models": status,
        "completed_models": completed,
        "backtest": backtest_info,
        "files": {str(p.relative_to(out)): _sha256(p) for p in files},
    }
    _dump_json(manifest, out / "run_manifest.json")
    return EXIT_OK if completed else EXIT_FAILURE


# ---------------------------------------------------------------------------
# subcommands


def _config(args) -> Optional[RunConfig]:
    path = getattr(args, "config", None)
    if not path:
        return None
    cfg = load_config(path)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


def _outdir(args, cfg: Optional[RunConfig]) -> Path:
    if getattr(args, "output_dir", None):
        return Path(args.output_dir)
    if cfg is not None and cfg.output_dir:
        return Path(cfg.output_dir)
    return default_output_dir()


def _panel(args, cfg: Optional[RunConfig]) -> AlignedPanel:
    if getattr(args, "panel", None):
        path = Path(args.panel)
        if not path.exists():
            raise CliError("data_error", f"panel file not found: {path}", EXIT_DATA)
        return read_panel(path)
    if cfg is not None:
        return build_panel(cfg)
    raise CliError("usage_error", "give --panel or --config", EXIT_CONFIG)


def _written(*paths) -> int:
    print(json.dumps({"written": [str(p) for p in paths]}))
    return EXIT_OK


def _csv_list(s: Optional[str]) -> list[str]:
    return [x.strip() for x in s.split(",") if x.strip()] if s else []


def cmd_ingest(args) -> int:
    cfg = _config(args)
    if args.data:
        tags = dict(kv.split("=", 1) for kv in args.transform)
        series = []
        for p in args.data:
            if not Path(p).exists():
                raise CliError("data_error", f"data file not found: {p}", EXIT_DATA)
            series += load_csv(p)
        levels = align_daily(series)
        # raw inputs are price levels: log returns unless a tag says otherwise
        tags = {**{c: "log_return" for c in levels.columns}, **tags}
        panel = transform(levels, tags, args.nonpositive)
    elif cfg is not None:
        panel = build_panel(cfg)
    else:
        raise CliError("usage_error", "give --data or --config", EXIT_CONFIG)
    out = Path(args.out) if args.out else _outdir(args, cfg) / "panel.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    manifest = write_panel(panel, out)
    return _written(out, manifest)


def cmd_diagnose(args) -> int:
    cfg = _config(args)
    panel = _panel(args, cfg)
    cols = _csv_list(args.columns) or panel.columns
    _missing_columns(cols, panel.columns)
    doc = []
    for c in cols:
        for test, res in series_diagnostics(panel[c], args.lags, args.adf_max_lag).items():
            doc.append({"series": c, "test": test, **res})
    out = Path(args.out) if args.out else _outdir(args, cfg) / "diagnostics.json"
    return _written(_dump_json(doc, out))


def cmd_fit_garch(args) -> int:
    cfg = _config(args)
    panel = _panel(args, cfg)
    exo = _csv_list(args.exogenous)
    _missing_columns([args.column, *exo], panel.columns)
    spec = garch.GarchSpec(args.kind, tuple(exo))
    X = panel.select(exo).frame.to_numpy(float) if exo else None
    fit = garch.fit(spec, panel[args.column], X, multistart=args.multistart)
    meta = {"target": args.column, "window": [_day(panel.dates[0]), _day(panel.dates[-1])], **_garch_summary(fit),
            "residual_diagnostics": series_diagnostics(fit.std_residuals, args.lags, 10)}
    out = Path(args.out) if args.out else _outdir(args, cfg) / "fits" / f"{spec.kind}__{args.column}.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    return _written(serialize.save(fit, out, args.model_id or spec.kind, meta))


def cmd_fit_bekk(args) -> int:
    cfg = _config(args)
    panel = _panel(args, cfg)
    cols = _csv_list(args.columns) or (cfg.commodities if cfg else panel.columns)
    _missing_columns(cols, panel.columns)
    E = panel.select(cols).frame.to_numpy(float)
    fit = bekk.fit(E, columns=cols, std_errors=not args.no_std_errors)
    z = bekk.standardized_residuals(fit, E)
    meta = {"columns": cols, "window": [_day(panel.dates[0]), _day(panel.dates[-1])],
            "log_likelihood": fit.log_likelihood, "converged": fit.converged,
            "spectral_radius": fit.spectral_radius, "stationary": fit.stationary,
            "multivariate_ljung_box_squared": _safe(diagnostics.multivariate_ljung_box_squared, z, args.lags)}
    out = Path(args.out) if args.out else _outdir(args, cfg) / "fits" / "BEKK.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    return _written(serialize.save(fit, out, args.model_id or "BEKK", meta))


_HYPER_FLAGS = ("lam", "mix", "max_depth", "min_leaf", "n_trees", "feature_fraction", "n_rounds",
                "learning_rate", "lambda_l2", "alpha_l1", "min_child_weight", "k", "hidden_width",
                "epochs", "step_size")


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def cmd_fit_ml(args) -> int:
    cfg = _config(args)
    panel = _panel(args, cfg)
    commodities = _csv_list(args.commodities) or (cfg.commodities if cfg else None)
    exogenous = _csv_list(args.exogenous) if args.exogenous is not None else (
        _exogenous(cfg, panel) if cfg else None)
    _missing_columns([args.target, *(commodities or []), *(exogenous or [])], panel.columns)
    fm = build_features(panel, args.target, args.lags, commodities, exogenous)
    hyper = {k: getattr(args, k) for k in _HYPER_FLAGS if getattr(args, k) is not None}
    for kv in args.param:
        key, _, val = kv.partition("=")
        hyper[key] = _parse_value(val)
    mid = args.model_id or args.model
    seed = sub_seed(args.seed if args.seed is not None else (cfg.seed if cfg else 0), f"{mid}/{args.target}")
    model, hyper = _ml_fit({"kind": args.model, "hyper": hyper, "tune": args.tune}, fm, seed)
    meta = {"target": args.target, "lags": args.lags, "commodities": commodities, "exogenous": exogenous,
            "feature_names": fm.feature_names, "hyper": hyper, "seed": seed,
            "window": [_day(fm.dates[0]), _day(fm.dates[-1])],
            "train_mse": float(np.mean((model.predict(fm.X) - fm.y) ** 2))}
    out = Path(args.out) if args.out else _outdir(args, cfg) / "fits" / f"{mid}__{args.target}.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    return _written(serialize.save(model, out, mid, meta))


def cmd_backtest(args) -> int:
    cfg = _config(args)
    if cfg is None:
        raise CliError("usage_error", "backtest needs --config", EXIT_CONFIG)
    panel = _panel(args, cfg)
    _missing_columns(_referenced_columns(cfg), panel.columns)
    bt = cfg.backtest or BacktestConfig()
    overrides = {k: getattr(args, k) for k in ("in_sample_length", "out_of_sample_length",
                                                "reestimation_period", "volatility_floor", "scale")
                 if getattr(args, k, None) is not None}
    try:
        bt = BacktestConfig(**{**bt.__dict__, **overrides})
        bt.check_length(len(panel))
    except HarnessError as exc:
        raise CliError("config_error", str(exc), EXIT_CONFIG, [f"$.backtest: {exc}"]) from None
    records = rolling_backtest(panel, _forecasters(cfg, panel), bt)
    out = _outdir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    rec_path = write_records(records, out / "records.csv")
    rep_path = _dump_json(compare_report(evaluate(records, bt.scale)), out / "report.json")
    return _written(rec_path, rep_path)


def cmd_explain(args) -> int:
    cfg = _config(args)
    doc = serialize.load_artifact(args.model)
    model = serialize.from_artifact(doc)
    if not isinstance(model, TreeEnsemble):
        raise CliError("usage_error", "explain supports tree ensembles only", EXIT_CONFIG)
    meta = doc.get("metadata", {})
    data = Path(args.data)
    if not data.exists():
        raise CliError("data_error", f"data file not found: {data}", EXIT_DATA)
    if "target" in meta and data.with_suffix(".manifest.json").exists():
        panel = read_panel(data)
        fm = build_features(panel, meta["target"], meta.get("lags", 1), meta.get("commodities"),
                            meta.get("exogenous"))
    else:
        # a plain feature matrix: one column per model feature (plus an optional date column)
        frame = pd.read_csv(data)
        names = list(model.feature_names) or [c for c in frame.columns if c != "date"]
        _missing_columns(names, list(frame.columns))
        X = frame[names].to_numpy(float)
        dates = pd.DatetimeIndex(frame["date"]) if "date" in frame else pd.RangeIndex(len(frame))
        fm = FeatureMatrix(dates, X, names, np.zeros(len(frame)), meta.get("target", "y"))
    if fm.feature_names != list(model.feature_names or fm.feature_names):
        raise CliError("usage_error", "data features do not match the model's features", EXIT_CONFIG)
    out = _outdir(args, cfg)
    stem = Path(args.model).stem
    csv_path, json_path = out / f"shap_{stem}.csv", out / f"shap_{stem}.json"
    _shap_outputs(model, fm, csv_path, json_path)
    return _written(csv_path, json_path)


def cmd_report(args) -> int:
    cfg = _config(args)
    records = []
    for p in args.records:
        if not Path(p).exists():
            raise CliError("data_error", f"records file not found: {p}", EXIT_DATA)
        records += read_records(p)
    scale = args.scale or (cfg.backtest.scale if cfg and cfg.backtest else "variance")
    report = compare_report(evaluate(records, scale))
    out = Path(args.out) if args.out else _outdir(args, cfg) / "report.json"
    _dump_json(report, out)
    if args.csv:
        pd.DataFrame([{**{k: v for k, v in r.items() if k != "best"},
                       **{f"best_{m}": b for m, b in r["best"].items()}} for r in report["rows"]]
                     ).to_csv(args.csv, index=False, lineterminator="\n")
        return _written(out, args.csv)
    return _written(out)


def cmd_run(args) -> int:
    cfg = _config(args)
    if cfg is None:
        raise CliError("usage_error", "run needs --config", EXIT_CONFIG)
    out = _outdir(args, cfg)
    code = run_pipeline(cfg, out)
    print(json.dumps({"output_dir": str(out), "manifest": str(out / "run_manifest.json"), "exit_code": code}))
    return code


# ---------------------------------------------------------------------------


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=d, help="JSON run configuration")
    parser.add_argument("--seed", type=int, default=d, help="global seed (overrides the config)")
    parser.add_argument("--output-dir", default=d, help="output directory (default: $ENERGYVOL_OUTPUT)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="energyvol", description="Energy commodity volatility toolkit")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        _global_flags(p, suppress=True)
        p.set_defaults(func=fn)
        return p

    p = add("ingest", cmd_ingest, "load, align and transform CSV series")
    p.add_argument("--data", action="append", default=[], help="CSV file (date column first); repeatable")
    p.add_argument("--transform", action="append", default=[], metavar="COLUMN=TAG",
                   help="transform tag per column (log_return, log_diff, simple_diff, level); default log_return")
    p.add_argument("--nonpositive", choices=["reject", "arcsinh"], default="reject")
    p.add_argument("--out", help="panel CSV path")

    p = add("diagnose", cmd_diagnose, "summary statistics and tests per column")
    p.add_argument("--panel")
    p.add_argument("--columns", help="comma-separated subset")
    p.add_argument("--lags", type=int, default=40)
    p.add_argument("--adf-max-lag", type=int, default=10)
    p.add_argument("--out")

    p = add("fit-garch", cmd_fit_garch, "fit a univariate GARCH-family model")
    p.add_argument("--panel")
    p.add_argument("--column", required=True)
    p.add_argument("--model", "--kind", dest="kind", default="garch", type=str.lower,
                   choices=["garch", "garch11", "gjr", "egarch"])
    p.add_argument("--exog", "--exogenous", dest="exogenous", help="comma-separated regressor columns")
    p.add_argument("--multistart", action="store_true")
    p.add_argument("--lags", type=int, default=40, help="lag order of the residual tests")
    p.add_argument("--model-id")
    p.add_argument("--out")

    p = add("fit-bekk", cmd_fit_bekk, "fit a BEKK(1,1) model")
    p.add_argument("--panel")
    p.add_argument("--series", "--columns", dest="columns", help="comma-separated columns")
    p.add_argument("--no-std-errors", action="store_true")
    p.add_argument("--lags", type=int, default=40, help="lag order of the residual test")
    p.add_argument("--model-id")
    p.add_argument("--out")

    p = add("fit-ml", cmd_fit_ml, "fit an ML regressor for next-day squared returns")
    p.add_argument("--panel")
    p.add_argument("--model", required=True, choices=list(MODEL_KINDS))
    p.add_argument("--target", required=True)
    p.add_argument("--lags", type=int, default=1)
    p.add_argument("--commodities", help="comma-separated commodity columns")
    p.add_argument("--exogenous", help="comma-separated exogenous columns")
    p.add_argument("--tune", action="store_true", help="grid search on the last 20%% of the data")
    for name in _HYPER_FLAGS:
        kind = int if name in ("max_depth", "min_leaf", "n_trees", "n_rounds", "k", "hidden_width", "epochs") else float
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=kind)
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE", help="other hyperparameters")
    p.add_argument("--model-id")
    p.add_argument("--out")

    p = add("backtest", cmd_backtest, "rolling-window backtest of the configured models")
    p.add_argument("--panel", help="use a prepared panel instead of the configured data")
    p.add_argument("--in-sample-length", type=int)
    p.add_argument("--out-of-sample-length", type=int)
    p.add_argument("--reestimation-period", type=int)
    p.add_argument("--volatility-floor", type=float)
    p.add_argument("--scale", choices=["variance", "volatility"])

    p = add("explain", cmd_explain, "TreeSHAP attributions for a fitted tree model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="panel CSV (with manifest) or feature CSV")

    p = add("report", cmd_report, "metrics table from forecast records")
    p.add_argument("--records", action="append", required=True)
    p.add_argument("--scale", choices=["variance", "volatility"])
    p.add_argument("--out")
    p.add_argument("--csv", help="also write the table as CSV")

    add("run", cmd_run, "full pipeline from --config")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return int(args.func(args))
    except CliError as err:
        return _emit_error(err)
    except ConfigError as err:
        return _emit_error(CliError("config_error", "invalid configuration", EXIT_CONFIG, err.errors))
    except (IngestError, serialize.SerializationError) as err:
        return _emit_error(CliError("data_error", str(err), EXIT_DATA))
    except (garch.GarchError, bekk.BekkError, HarnessError, ValueError, np.linalg.LinAlgError) as err:
        return _emit_error(CliError("model_error", str(err), EXIT_FAILURE))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
