"""Command line pipeline: preprocess, train, prune, evaluate, explain, search.

Exit codes: 0 success, 2 configuration or usage error, 3 data or model error.
"""

from __future__ import annotations

import argparse
import csv
import json
import re
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import (
    CIC_IDS_2017_LABEL_MAPPING,
    NSL_KDD_LABEL_MAPPING,
    Preprocessor,
    feature_significance,
    fit_preprocessor,
    load_csv,
    nsl_kdd_schema,
    select_features,
    stratified_split,
)
from .errors import ConfigError, DataError, DimensionMismatch, InvalidParameter, UnsupportedModel, XidsError
from .evaluate import evaluate, predict_batch
from .explain import (
    feature_heatmap_artifact,
    global_explanation_artifact,
    label_map_artifact,
    local_explanation_artifact,
    maps_of,
    u_matrix_artifact,
    artifact,
)
from .ghsom import GhsomParams, GhsomTree, train_ghsom
from .gsom import GsomParams, train_gsom
from .mapmodel import MapModel, assign_labels, quality_report
from .prune import PruneParams, prune_tree
from .search import SearchSpace, random_search
from .som import SomParams, train_som
from .svg import render_svg
from .treemap import treemap_layout

CONFIG_VERSION = 1
MODEL_FORMAT = "clxids.model"
MODEL_KINDS = ("som", "gsom", "ghsom")
SCHEMA_PRESETS = {"nsl_kdd": nsl_kdd_schema}
LABEL_PRESETS = {"nsl_kdd": NSL_KDD_LABEL_MAPPING, "cic_ids_2017": CIC_IDS_2017_LABEL_MAPPING}
GHSOM_KEYS = {"min_child_samples", "max_depth"}

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3


# ---------------------------------------------------------------- config


@dataclass
class RunConfig:
    base: Path = field(default_factory=Path.cwd)
    train: Path | None = None
    test: Path | None = None
    schema: dict | None = None
    label_mapping: dict = field(default_factory=dict)
    header: bool = True
    delimiter: str = ","
    model: str = "ghsom"
    params: dict = field(default_factory=dict)
    features: dict = field(default_factory=lambda: {"mode": "none"})
    delta: float | None = None
    out: Path = Path("out")
    seed: int = 0
    search: dict | None = None

    @classmethod
    def from_dict(cls, doc, base):
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        if doc.get("config_version") != CONFIG_VERSION:
            raise ConfigError(f"config_version must be {CONFIG_VERSION}, got {doc.get('config_version')!r}")
        data = doc.get("data", {})
        schema = data.get("schema")
        if isinstance(schema, str):
            if schema not in SCHEMA_PRESETS:
                raise ConfigError(f"unknown schema preset {schema!r}")
            schema = SCHEMA_PRESETS[schema]()
        mapping = data.get("label_mapping", {})
        if isinstance(mapping, str):
            if mapping not in LABEL_PRESETS:
                raise ConfigError(f"unknown label mapping preset {mapping!r}")
            mapping = dict(LABEL_PRESETS[mapping])

        def path(v):
            return None if v is None else (base / v).resolve()

        cfg = cls(
            base=base,
            train=path(data.get("train")),
            test=path(data.get("test")),
            schema=schema,
            label_mapping=dict(mapping),
            header=bool(data.get("header", True)),
            delimiter=str(data.get("delimiter", ",")),
            model=str(doc.get("model", {}).get("kind", "ghsom")),
            params=dict(doc.get("model", {}).get("params", {})),
            features=dict(doc.get("features", {"mode": "none"})),
            delta=doc.get("prune", {}).get("delta"),
            out=path(doc.get("out", "out")),
            seed=int(doc.get("seed", 0)),
            search=doc.get("search"),
        )
        if cfg.model not in MODEL_KINDS:
            raise UnsupportedModel(f"model kind must be one of {MODEL_KINDS}, got {cfg.model!r}")
        if cfg.features.get("mode", "none") not in ("none", "list", "top_k"):
            raise ConfigError(f"unknown feature selection mode {cfg.features.get('mode')!r}")
        return cfg


def load_config(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return RunConfig.from_dict(doc, path.resolve().parent)


def build_params(kind, params, seed):
    """Typed parameter object for a model kind; rejects unknown or invalid fields."""
    params = {k: v for k, v in params.items() if k != "seed"}
    try:
        if kind == "som":
            return SomParams(**params, seed=seed)
        if kind == "gsom":
            return GsomParams(**params, seed=seed)
        if kind == "ghsom":
            outer = {k: v for k, v in params.items() if k in GHSOM_KEYS}
            inner = {"spread_factor": 0.3, **{k: v for k, v in params.items() if k not in GHSOM_KEYS}}
            return GhsomParams(gsom=GsomParams(**inner, seed=seed), **outer)
    except TypeError as exc:
        raise InvalidParameter(f"bad {kind} parameters: {exc}") from None
    raise UnsupportedModel(f"model kind must be one of {MODEL_KINDS}, got {kind!r}")


def params_to_dict(p):
    d = asdict(p)
    if "gsom" in d:
        inner = d.pop("gsom")
        d = {**inner, **d}
    return d


# ---------------------------------------------------------------- data


def _need(path, what):
    if path is None:
        raise ConfigError(f"no {what} data path given (config data.{what} or --data)")
    return path


def load_raw(cfg, path, label_optional=False):
    if cfg.schema is None:
        raise ConfigError("config declares no data.schema")
    return load_csv(path, cfg.schema, cfg.label_mapping, delimiter=cfg.delimiter,
                    header=cfg.header, label_optional=label_optional)


def fit_features(cfg, raw):
    """Fit the preprocessor on ``raw`` and apply the configured feature selection."""
    pre = fit_preprocessor(raw)
    mode = cfg.features.get("mode", "none")
    if mode == "list":
        pre.selected = list(cfg.features.get("keep", []))
    elif mode == "top_k":
        full, _ = pre.transform(raw)
        pre.selected = list(select_features(full, top_k=int(cfg.features["top_k"])).feature_names)
    fm, y = pre.transform(raw)
    return pre, fm, y


def fit_model(kind, p, X, y):
    t0 = time.perf_counter()
    if kind == "som":
        model = assign_labels(train_som(X, p), X, y)
    elif kind == "gsom":
        model = assign_labels(train_gsom(X, p), X, y)
    else:
        model = train_ghsom(X, y, p)
    return model, time.perf_counter() - t0


def model_doc(kind, p, pre, model, train_time_s, significance, csv_opts):
    return {
        "format": MODEL_FORMAT,
        "version": 1,
        "kind": kind,
        "params": params_to_dict(p),
        "preprocessor": pre.to_dict(),
        "significance": [float(s) for s in significance],
        "csv": csv_opts,
        "model": model.to_dict(),
        "train_time_s": train_time_s,
    }


@dataclass
class LoadedModel:
    path: Path
    doc: dict
    kind: str
    model: object
    pre: Preprocessor

    @property
    def name(self):
        return self.path.stem

    def config_for_data(self, cfg):
        """Config whose schema and label mapping come from the model when the run config has none."""
        if cfg is not None and cfg.schema is not None:
            return cfg
        csv_opts = self.doc.get("csv", {})
        base = cfg or RunConfig()
        return replace(base, schema=dict(self.pre.columns), label_mapping=dict(self.pre.label_mapping),
                       header=csv_opts.get("header", True), delimiter=csv_opts.get("delimiter", ","))


def load_model(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read model {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"model {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise DataError(f"{path} is not a {MODEL_FORMAT} file")
    kind = doc["kind"]
    try:
        model = GhsomTree.from_dict(doc["model"]) if kind == "ghsom" else MapModel.from_dict(doc["model"])
        pre = Preprocessor.from_dict(doc["preprocessor"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"model {path} is malformed: {exc!r}") from None
    return LoadedModel(path, doc, kind, model, pre)


def _model_dim(model):
    return (model.maps[model.root_id] if isinstance(model, GhsomTree) else model).D


def data_for_model(lm, cfg, path, label_optional=False):
    raw = load_raw(lm.config_for_data(cfg), path, label_optional=label_optional)
    fm = lm.pre.features(raw)
    if fm.D != _model_dim(lm.model):
        raise DimensionMismatch(f"data has {fm.D} features, model expects {_model_dim(lm.model)}")
    return raw, fm


def write_json(path, doc):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _slug(text):
    return re.sub(r"[^A-Za-z0-9.=-]+", "_", str(text)).strip("_") or "x"


def _resolve_out(args, cfg):
    if args.out is not None:
        return Path(args.out).resolve()
    if cfg is not None:
        return cfg.out
    return Path("out").resolve()


def _resolve_data(args, cfg, field_name):
    if getattr(args, "data", None) is not None:
        return Path(args.data).resolve()
    return _need(getattr(cfg, field_name) if cfg is not None else None, field_name)


def _maybe_config(args):
    return load_config(args.config) if args.config is not None else None


def _seed(args, cfg):
    if args.seed is not None:
        return int(args.seed)
    return cfg.seed if cfg is not None else 0


# ---------------------------------------------------------------- commands


def cmd_preprocess(args):
    cfg = load_config(args.config)
    out = _resolve_out(args, cfg)
    raw = load_raw(cfg, _resolve_data(args, cfg, "train"))
    pre, fm, y = fit_features(cfg, raw)
    write_json(out / "preprocessor.json", pre.to_dict())
    sig = feature_significance(fm)
    write_json(out / "significance.json", global_explanation_artifact(sig, fm.feature_names))
    _write_matrix(out / "train_features.csv", fm, y)
    if cfg.test is not None:
        fm_t, y_t = pre.transform(load_raw(cfg, cfg.test))
        _write_matrix(out / "test_features.csv", fm_t, y_t)
    print(f"{len(y)} samples, {fm.D} features -> {out}")
    return EXIT_OK


def _write_matrix(path, fm, labels):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(fm.feature_names) + ["label"])
        for row, lab in zip(fm.data.tolist(), labels.tolist()):
            w.writerow([repr(v) for v in row] + [lab])


def cmd_train(args):
    cfg = load_config(args.config)
    kind = args.kind or cfg.model
    seed = _seed(args, cfg)
    p = build_params(kind, cfg.params, seed)
    out = _resolve_out(args, cfg)
    raw = load_raw(cfg, _resolve_data(args, cfg, "train"))
    pre, fm, y = fit_features(cfg, raw)
    model, secs = fit_model(kind, p, fm.data, y)
    sig = feature_significance(fm)
    doc = model_doc(kind, p, pre, model, secs, sig, {"header": cfg.header, "delimiter": cfg.delimiter})
    model_path = Path(args.model).resolve() if args.model else out / "model.json"
    write_json(model_path, doc)
    root = model.maps[model.root_id] if isinstance(model, GhsomTree) else model
    quality = {"model": kind, "neurons": len(root), **quality_report(root, fm.data).to_dict()}
    if isinstance(model, GhsomTree):
        quality.update({"maps": len(model.maps), "depth": model.max_depth()})
    write_json(out / f"{model_path.stem}_quality.json", quality)
    print(f"trained {kind} on {len(y)} samples x {fm.D} features in {secs:.2f}s -> {model_path}")
    return EXIT_OK


def cmd_prune(args):
    cfg = _maybe_config(args)
    lm = load_model(_need(args.model and Path(args.model), "model"))
    if lm.kind != "ghsom":
        raise UnsupportedModel(f"pruning needs a ghsom model, {lm.path} holds a {lm.kind}")
    delta = args.delta if args.delta is not None else (cfg.delta if cfg and cfg.delta is not None else 0.3)
    params = PruneParams(delta=float(delta))
    raw, fm = data_for_model(lm, cfg, _resolve_data(args, cfg, "train"))
    y = raw.labels()
    pruned, report = prune_tree(lm.model, fm.data, y, params)
    out = _resolve_out(args, cfg)
    doc = dict(lm.doc)
    doc["model"] = pruned.to_dict()
    doc["pruned"] = {"delta": params.delta, "from": lm.path.name}
    target = out / f"{lm.name}_pruned.json"
    write_json(target, doc)
    write_json(out / f"{lm.name}_prune_report.json", {"delta": params.delta, **report.to_dict()})
    print(f"maps {report.maps_before} -> {report.maps_after} "
          f"({100 * report.reduction:.1f}% reduction) -> {target}")
    return EXIT_OK


def cmd_evaluate(args):
    cfg = _maybe_config(args)
    lm = load_model(_need(args.model and Path(args.model), "model"))
    raw, fm = data_for_model(lm, cfg, _resolve_data(args, cfg, "test"))
    y = raw.labels()
    report = evaluate(lm.model, fm.data, y, train_time_s=lm.doc.get("train_time_s", 0.0),
                      repetitions=args.repetitions, timing_samples=args.timing_samples)
    out = _resolve_out(args, cfg)
    write_json(out / f"{lm.name}_eval.json", report.to_dict())
    (out / f"{lm.name}_eval.csv").write_text(report.to_csv(), encoding="utf-8")
    print(report.to_csv(), end="")
    return EXIT_OK


def _emit(out, stem, kind, suffix, art, written):
    name = f"{stem}_{kind}_{_slug(art['map_id'])}{suffix}"
    write_json(out / f"{name}.json", art)
    (out / f"{name}.svg").write_text(render_svg(art), encoding="utf-8")
    written.append(name)


def cmd_explain(args):
    cfg = _maybe_config(args)
    lm = load_model(_need(args.model and Path(args.model), "model"))
    out = _resolve_out(args, cfg)
    names = lm.pre.output_names
    sig = np.asarray(lm.doc.get("significance", []), dtype=np.float64)
    written = []
    if sig.size == len(names):
        _emit(out, lm.name, "global_explanation", "", global_explanation_artifact(sig, names), written)
        ranked = list(np.argsort(-sig, kind="stable"))
    else:
        ranked = list(range(len(names)))
    features = ranked if args.heatmap_top is None else ranked[: max(0, args.heatmap_top)]
    for m in maps_of(lm.model):
        _emit(out, lm.name, "u_matrix", "", u_matrix_artifact(m), written)
        _emit(out, lm.name, "label_map", "", label_map_artifact(m), written)
        for f in sorted(features):
            _emit(out, lm.name, "feature_heatmap", f"_{_slug(names[f])}",
                  feature_heatmap_artifact(m, int(f), names[f]), written)
    if isinstance(lm.model, GhsomTree):
        layout = treemap_layout(lm.model)
        _emit(out, lm.name, "treemap", "", artifact("treemap", lm.model.root_id, layout.to_dict()), written)
    if args.samples is not None:
        _, fm = data_for_model(lm, cfg, Path(args.samples).resolve(), label_optional=True)
        for i, x in enumerate(fm.data):
            _emit(out, lm.name, "local_explanation", f"_sample{i:04d}",
                  local_explanation_artifact(lm.model, x, names), written)
    print(f"{len(written)} artifacts -> {out}")
    return EXIT_OK


def cmd_search(args):
    cfg = load_config(args.config)
    if not cfg.search or "space" not in cfg.search:
        raise ConfigError("config has no search.space")
    kind = args.kind or cfg.model
    space = SearchSpace.from_dict(cfg.search["space"])
    budget = int(args.budget if args.budget is not None else cfg.search.get("budget", 20))
    frac = float(cfg.search.get("validation_fraction", 0.25))
    seed = _seed(args, cfg)
    build_params(kind, cfg.params, seed)  # fail fast on a bad base configuration

    raw = load_raw(cfg, _resolve_data(args, cfg, "train"))
    _, fm, y = fit_features(cfg, raw)
    (tr_m, tr_y), (va_m, va_y) = stratified_split(fm, y, frac, seed)

    def objective(sampled, trial_seed):
        p = build_params(kind, {**cfg.params, **sampled}, trial_seed)
        model, _ = fit_model(kind, p, tr_m.data, tr_y)
        return float(np.mean(predict_batch(model, va_m.data) == va_y))

    out = _resolve_out(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    log_path = out / "trials.jsonl"
    log_path.write_text("", encoding="utf-8")
    best, trials = random_search(space, budget, objective, seed, log_path=log_path)
    failed = sum(not t.ok for t in trials)
    if best is None:
        raise DataError(f"all {budget} trials failed; see {log_path}")
    p = build_params(kind, {**cfg.params, **best.params}, best.seed)
    write_json(out / "best_params.json", {
        "model": kind, "trial": best.index, "objective": best.objective,
        "seed": best.seed, "params": params_to_dict(p),
    })
    print(f"{budget} trials ({failed} failed); best #{best.index} "
          f"validation accuracy {best.objective:.4f} -> {out / 'best_params.json'}")
    return EXIT_OK


COMMANDS = {
    "preprocess": cmd_preprocess,
    "train": cmd_train,
    "prune": cmd_prune,
    "evaluate": cmd_evaluate,
    "explain": cmd_explain,
    "search": cmd_search,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="clxids", description="Explainable competitive-learning intrusion detection")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required):
        p.add_argument("--config", required=config_required, help="run config (JSON)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="output directory (default: config out, else ./out)")
        p.add_argument("--data", help="CSV path overriding the config's train/test path")
        return p

    common(sub.add_parser("preprocess", help="fit encoding and scaling, write normalized features"), True)
    p = common(sub.add_parser("train", help="train a som, gsom or ghsom"), True)
    p.add_argument("--model", help="model file to write (default: OUT/model.json)")
    p.add_argument("--kind", choices=MODEL_KINDS, help="override the config model kind")
    p = common(sub.add_parser("prune", help="prune a ghsom on its training data"), False)
    p.add_argument("--model", required=True, help="ghsom model file")
    p.add_argument("--delta", type=float, help="confidence parameter (default 0.3)")
    p = common(sub.add_parser("evaluate", help="score a model on labeled data"), False)
    p.add_argument("--model", required=True)
    p.add_argument("--repetitions", type=int, default=1, help="timing passes over the data")
    p.add_argument("--timing-samples", type=int, help="time only the first N samples")
    p = common(sub.add_parser("explain", help="write explanation artifacts as JSON and SVG"), False)
    p.add_argument("--model", required=True)
    p.add_argument("--samples", help="CSV of samples to explain locally (label column optional)")
    p.add_argument("--heatmap-top", type=int, help="heatmaps for the K most significant features only")
    p = common(sub.add_parser("search", help="random search over the config's search space"), True)
    p.add_argument("--kind", choices=MODEL_KINDS, help="override the config model kind")
    p.add_argument("--budget", type=int, help="override search.budget")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"clxids: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, XidsError) as exc:
        print(f"clxids: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
