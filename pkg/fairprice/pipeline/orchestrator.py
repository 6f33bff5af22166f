"""
Command implementations behind the CLI.

Each command takes a validated RunConfig, works inside one ArtifactStore
rooted at the configured output directory and returns a small summary dict.
Data loading, risk scoring and the train/test split are deterministic in the
run seed, so every command sees the same splits.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from fairprice.causalforest.forest import histogram_frame, ite_frame
from fairprice.core.errors import ArtifactError, DomainError
from fairprice.datakit.dataset import Dataset, split
from fairprice.datakit.gower import neighbor_pairs
from fairprice.datakit.riskscore import RiskScorer, build_risk_score
from fairprice.datakit.synth import synth_generate
from fairprice.ensemble.pipeline import radar_export, report_table, run_ensemble
from fairprice.fairmodels.base import FairModel, FairModelKind, load_fair_model
from fairprice.fairmodels.mnn import fit_mnn, tune_lambda
from fairprice.fairmodels.models import fit_models
from fairprice.ingestion.parsers import load_csv, load_schema, sidecar_payload
from fairprice.metrics.analytics import double_lift, solidarity_table
from fairprice.metrics.fairness import fairness_report
from fairprice.metrics.plots import save_curve_svg, save_density_svg, save_scatter_svg, scatter_frames
from fairprice.persist.artifacts import MANIFEST, ArtifactStore
from fairprice.pipeline.runconfig import RunConfig
from fairprice.predictors.engine import make_engine
from fairprice.types import FairnessReport
from fairprice.utils.monitor import log_summary

logger = logging.getLogger(__name__)

DATA_FILE = "data.csv"
CONFIG_FILE = "config.json"
SUMMARY_FILES = ("summary.json", "summary.md")
LIFT_BENCHMARK = FairModelKind.MU
LIFT_CHALLENGERS = (FairModelKind.MO, FairModelKind.MDF, FairModelKind.MSCM)


@dataclass
class Splits:
    train: Dataset
    test: Dataset
    scorer: Optional[RiskScorer] = None


def open_store(config: RunConfig) -> ArtifactStore:
    store = ArtifactStore(config.output_path)
    store.write_json(CONFIG_FILE, config.canonical())
    return store


def model_file(kind: FairModelKind) -> str:
    return f"models/{kind.value}.json"


def load_dataset(config: RunConfig, store: ArtifactStore) -> Dataset:
    if config.dataset is not None:
        return load_csv(config.dataset, load_schema(config.schema_file))
    if store.has(DATA_FILE):
        store.read_bytes(DATA_FILE)  # hash check before parsing
        return load_csv(store.path(DATA_FILE), config.generator.schema())
    return synth_generate(config.generator, config.run_seed)


def prepare_splits(config: RunConfig, store: ArtifactStore) -> Splits:
    data = load_dataset(config, store)
    train, test = split(data, config.test_fraction, config.run_seed)
    scorer = None
    if config.risk_factors:
        scorer = build_risk_score(train, config.risk_factors)
        train, test = scorer.apply(train), scorer.apply(test)
    logger.info("Splits: %d train rows, %d test rows", train.n, test.n)
    return Splits(train=train, test=test, scorer=scorer)


def load_models(store: ArtifactStore, kinds: List[FairModelKind]) -> Dict[FairModelKind, FairModel]:
    models = {}
    for kind in kinds:
        name = model_file(kind)
        if not store.has(name):
            raise ArtifactError(f"model file {name!r} not found; run `train` first")
        models[kind] = load_fair_model(store.read_json(name))
    return models


def cmd_synth(config: RunConfig) -> Dict[str, Any]:
    if config.generator is None:
        raise DomainError("synth needs a generator spec in the run config")
    store = open_store(config)
    data = synth_generate(config.generator, config.run_seed)
    store.write_csv(DATA_FILE, data.frame[data.schema.column_names])
    provenance = {"command": "synth", "seed": config.run_seed, "generator": config.generator.model_dump(mode="json")}
    store.write_json(DATA_FILE + ".json", sidecar_payload(data, provenance))
    return {"rows": data.n, "path": str(store.path(DATA_FILE))}


def cmd_train(config: RunConfig) -> Dict[str, Any]:
    store = open_store(config)
    log_summary()
    splits = prepare_splits(config, store)
    seed = config.run_seed
    engine = make_engine(config.engine, config.gbt.params(), config.family)
    if splits.scorer is not None:
        store.write_json("risk_score.json", splits.scorer.to_dict())

    kinds = [k for k in config.models if k != FairModelKind.MNN]
    models: Dict[FairModelKind, FairModel] = fit_models(
        engine, splits.train, kinds, forest_params=config.scm.forest_params(seed), k=config.scm.donor_k,
    )
    if FairModelKind.MNN in config.models:
        params = config.mnn.params(seed)
        tuning = tune_lambda(splits.train, config.mnn.lambda_grid, folds=config.mnn.folds, seed=seed, params=params)
        store.write_csv("lambda_curve.csv", tuning.table)
        logger.info("MNN: selected lambda %g", tuning.best)
        models[FairModelKind.MNN] = fit_mnn(splits.train, tuning.best, params)

    for kind, model in models.items():
        store.write_json(model_file(kind), model.to_dict())
    return {"models": [k.value for k in models], "engine": config.engine.value}


def _split_reports(config: RunConfig, name: str, data: Dataset, models: Dict[FairModelKind, FairModel]) -> List[FairnessReport]:
    seed = config.run_seed
    pairs = neighbor_pairs(data, cap=config.metrics.lipschitz_cap, seed=seed)
    forest_params = config.metrics.forest_params(seed)
    return [
        fairness_report(
            kind.value, name, data, model.predict(data),
            pairs=pairs, forest_params=forest_params, bins=config.metrics.histogram_bins,
        )
        for kind, model in models.items()
    ]


def cmd_evaluate(config: RunConfig, svg: bool = False) -> Dict[str, Any]:
    store = open_store(config)
    models = load_models(store, list(config.models))
    splits = prepare_splits(config, store)

    train_reports = _split_reports(config, "train", splits.train, models)
    test_reports = _split_reports(config, "test", splits.test, models)
    reports = train_reports + test_reports
    store.write_json("reports.json", {"reports": [r.to_dict() for r in reports]})
    store.write_csv("evaluation.csv", report_table(reports))

    for dim, frame in scatter_frames(test_reports).items():
        name = f"scatter_{dim}.csv"
        store.write_csv(name, frame)
        if svg:
            save_scatter_svg(frame, dim, store.path(f"scatter_{dim}.svg"))
            store.register(f"scatter_{dim}.svg", "svg")

    histograms = {}
    for report in test_reports:
        dist = report.ite_distribution
        store.write_csv(f"ite_{report.model}.csv", ite_frame(dist))
        histograms[report.model] = histogram_frame(dist)
        store.write_csv(f"ite_hist_{report.model}.csv", histograms[report.model])
    if svg:
        save_density_svg(histograms, store.path("ite_density.svg"))
        store.register("ite_density.svg", "svg")
        if store.has("lambda_curve.csv"):
            save_curve_svg(store.read_csv("lambda_curve.csv"), "lambda", ["val_loss", "disparity"], store.path("lambda_curve.svg"))
            store.register("lambda_curve.svg", "svg")
    return {"reports": len(reports), "models": [k.value for k in models]}


def _column_sets(config: RunConfig, data: Dataset) -> List[List[str]]:
    return [list(cols) for cols in config.analytics.solidarity_columns] or [[data.schema.sensitive]]


def cmd_analytics(config: RunConfig) -> Dict[str, Any]:
    store = open_store(config)
    splits = prepare_splits(config, store)
    data = splits.test
    present = [k for k in config.models if store.has(model_file(k))]
    models = load_models(store, present)
    if FairModelKind.MB not in models:
        raise ArtifactError("solidarity needs the MB benchmark; include MB in `models` and run `train`")

    written: List[str] = []
    benchmark = models[FairModelKind.MB].predict(data)
    for kind, model in models.items():
        if kind == FairModelKind.MB:
            continue
        fair = model.predict(data)
        for cols in _column_sets(config, data):
            table = solidarity_table(fair, benchmark, data.frame, cols, bands=config.analytics.bands)
            name = f"solidarity_{kind.value}_{'-'.join(cols)}.csv"
            store.write_csv(name, table.table)
            written.append(name)

    if LIFT_BENCHMARK in models:
        bench = models[LIFT_BENCHMARK].predict(data)
        for kind in LIFT_CHALLENGERS:
            if kind not in models:
                logger.warning("double lift: %s was not trained, skipping", kind.value)
                continue
            lift = double_lift(bench, models[kind].predict(data), data.y, data.d,
                               bins=config.analytics.lift_bins, labels=data.levels)
            name = f"double_lift_{LIFT_BENCHMARK.value}_vs_{kind.value}.csv"
            store.write_csv(name, lift)
            written.append(name)
    else:
        logger.warning("double lift: benchmark %s was not trained, skipping", LIFT_BENCHMARK.value)
    return {"artifacts": written}


def cmd_ensemble(config: RunConfig, svg: bool = False) -> Dict[str, Any]:
    store = open_store(config)
    log_summary()
    splits = prepare_splits(config, store)
    engine = make_engine(config.engine, config.gbt.params(), config.family)
    nsga = config.nsga if config.nsga.seed is not None else config.nsga.model_copy(update={"seed": config.run_seed})

    result = run_ensemble(splits.train, engine, nsga, config.topsis, config.ensemble)
    store.write_csv("pareto.csv", result.pareto_frame())
    store.write_json("pareto.json", result.pareto_document())
    store.write_json("selected.json", result.selected_document())
    store.write_json("ensemble_model.json", result.model.to_dict())
    table = result.report_frame()
    store.write_csv("report.csv", table)
    if not table.empty:
        store.write_csv("radar.csv", radar_export(table))
    trace = pd.DataFrame({
        "generation": np.arange(len(result.hypervolume_trace), dtype=int),
        "hypervolume": result.hypervolume_trace,
    })
    store.write_csv("hypervolume.csv", trace)
    if svg and len(trace):
        save_curve_svg(trace, "generation", ["hypervolume"], store.path("hypervolume.svg"))
        store.register("hypervolume.svg", "svg")
    return {
        "archive": len(result.archive),
        "selected": result.selection.best,
        "tag": result.tags[result.selection.best],
        "evaluations": result.evaluations,
    }


def _summary_markdown(doc: Dict[str, Any]) -> str:
    lines = [
        "# Run summary",
        "",
        f"- config hash: `{doc['config_hash']}`",
        f"- seed: {doc['seed']}",
        f"- artifacts: {len(doc['artifacts'])}",
        "",
        "| artifact | kind | bytes | sha256 |",
        "|---|---|---:|---|",
    ]
    for name, entry in doc["artifacts"].items():
        lines.append(f"| {name} | {entry['kind']} | {entry['size']} | `{entry['sha256'][:16]}` |")
    if doc.get("reports"):
        lines += ["", "## Fairness reports", "", "| model | split | rmse | gini | dir | lipschitz_q95 | median_ite |",
                  "|---|---|---:|---:|---:|---:|---:|"]
        for r in doc["reports"]:
            lines.append(
                f"| {r['model']} | {r['split']} | {r['rmse']:.6g} | {r['gini']:.6g} | {r['dir']:.6g} "
                f"| {r['lipschitz_q95']:.6g} | {r['median_ite']:.6g} |"
            )
    if doc.get("selected"):
        s = doc["selected"]
        lines += ["", "## Ensemble selection", "", f"- solution {s['solution']} ({s['tag']}), closeness {s['closeness']:.6g}"]
        for name, value in s["objectives"].items():
            lines.append(f"- {name}: {value:.6g}")
    return "\n".join(lines) + "\n"


def cmd_report(config: RunConfig) -> Dict[str, Any]:
    """Bundles the verified manifest into summary.json / summary.md; reruns are byte-identical."""
    store = open_store(config)
    _, problems = store.verify(required=[CONFIG_FILE])
    if problems:
        raise ArtifactError("; ".join(problems))

    artifacts = {k: v for k, v in store.manifest().items() if k not in SUMMARY_FILES and k != MANIFEST}
    doc: Dict[str, Any] = {
        "config_hash": config.config_hash(),
        "seed": config.run_seed,
        "artifacts": artifacts,
    }
    if "reports.json" in artifacts:
        doc["reports"] = [
            {k: r[k] for k in ("model", "split", "rmse", "gini", "dir", "lipschitz_q95", "median_ite")}
            for r in store.read_json("reports.json")["reports"]
        ]
    if "selected.json" in artifacts:
        selected = store.read_json("selected.json")
        doc["selected"] = {k: selected[k] for k in ("solution", "tag", "closeness", "objectives")}
    store.write_json("summary.json", doc)
    store.write_text("summary.md", _summary_markdown(doc), kind="markdown")
    logger.info("Report: %d artifacts verified, config %s", len(artifacts), doc["config_hash"][:12])
    return {"artifacts": len(artifacts), "config_hash": doc["config_hash"]}

