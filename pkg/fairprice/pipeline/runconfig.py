"""Run configuration: one JSON document drives every CLI command."""
from pathlib import Path
from typing import List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from fairprice.causalforest.forest import CausalForestParams
from fairprice.config import settings
from fairprice.datakit.synth import GeneratorSpec
from fairprice.ensemble.pipeline import EnsembleOptions
from fairprice.fairmodels.base import FairModelKind, STANDARD_KINDS
from fairprice.fairmodels.mnn import MnnParams
from fairprice.moo.nsga2 import NsgaConfig
from fairprice.moo.topsis import TopsisConfig
from fairprice.predictors.engine import EngineKind
from fairprice.predictors.forest import ForestParams
from fairprice.predictors.gbt import GbtParams
from fairprice.predictors.glm import Family
from fairprice.utils.helpers import canonical_json, content_hash, load_json


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GbtOptions(_Strict):
    n_trees: int = settings.gbt.n_trees
    max_depth: int = settings.gbt.max_depth
    learning_rate: float = settings.gbt.learning_rate
    min_leaf: int = settings.gbt.min_leaf
    lambda_l2: float = settings.gbt.lambda_l2

    def params(self) -> GbtParams:
        return GbtParams(**self.model_dump())


class ScmOptions(_Strict):
    donor_k: int = Field(settings.scm.donor_k, ge=1)
    forest_trees: int = Field(settings.forest.n_trees, ge=1)
    forest_mtry: float = settings.forest.mtry
    forest_min_leaf: int = settings.forest.min_leaf

    def forest_params(self, seed: int) -> ForestParams:
        return ForestParams(n_trees=self.forest_trees, mtry=self.forest_mtry, min_leaf=self.forest_min_leaf, seed=seed)


class MnnOptions(_Strict):
    lambda_grid: List[float] = [0.0, 1.0, 10.0, 100.0]
    folds: int = Field(5, ge=2)
    hidden: List[int] = [16, 8]
    epochs: int = Field(100, ge=1)
    batch: int = Field(128, ge=1)
    step_size: float = Field(0.01, gt=0)
    optimizer: str = "adam"

    def params(self, seed: int) -> MnnParams:
        return MnnParams(
            hidden=tuple(self.hidden), epochs=self.epochs, batch=self.batch,
            step_size=self.step_size, seed=seed, optimizer=self.optimizer,
        )


class MetricOptions(_Strict):
    lipschitz_cap: int = Field(settings.lipschitz_cap, ge=2)
    forest_trees: int = Field(settings.causal_forest.n_trees, ge=1)
    min_group: int = Field(settings.causal_forest.min_group, ge=1)
    max_depth: int = Field(settings.causal_forest.max_depth, ge=0)
    histogram_bins: int = Field(settings.causal_forest.histogram_bins, ge=1)

    def forest_params(self, seed: int) -> CausalForestParams:
        return CausalForestParams(
            n_trees=self.forest_trees, min_group=self.min_group, max_depth=self.max_depth, seed=seed,
        )


class AnalyticsOptions(_Strict):
    solidarity_columns: List[List[str]] = Field(default_factory=list)  # empty: the sensitive column
    bands: int = Field(5, ge=1)
    lift_bins: int = Field(10, ge=1)


class RunConfig(_Strict):
    output_dir: str = "runs/default"
    seed: Optional[int] = None

    dataset: Optional[str] = None
    schema_file: Optional[str] = None
    generator: Optional[GeneratorSpec] = None
    risk_factors: List[str] = Field(default_factory=list)
    test_fraction: float = Field(0.2, gt=0, lt=1)

    engine: EngineKind = EngineKind.GLM
    family: Optional[Family] = None
    gbt: GbtOptions = GbtOptions()
    models: List[FairModelKind] = list(STANDARD_KINDS)
    scm: ScmOptions = ScmOptions()
    mnn: MnnOptions = MnnOptions()

    metrics: MetricOptions = MetricOptions()
    analytics: AnalyticsOptions = AnalyticsOptions()

    nsga: NsgaConfig = NsgaConfig()
    topsis: TopsisConfig = TopsisConfig()
    ensemble: EnsembleOptions = EnsembleOptions()

    @model_validator(mode="after")
    def check_sources(self) -> "RunConfig":
        if self.dataset is not None and self.schema_file is None:
            raise ValueError("a dataset path needs a schema_file")
        if self.dataset is None and self.generator is None:
            raise ValueError("configure either dataset (+ schema_file) or generator")
        if len(set(self.models)) != len(self.models):
            raise ValueError("model kinds must be unique")
        return self

    @property
    def run_seed(self) -> int:
        return settings.seed if self.seed is None else self.seed

    @property
    def output_path(self) -> Path:
        return Path(self.output_dir)

    def canonical(self) -> dict:
        """The document with every seed resolved, as written to config.json."""
        doc = self.model_dump(mode="json")
        doc["seed"] = self.run_seed
        if doc["nsga"]["seed"] is None:
            doc["nsga"]["seed"] = self.run_seed
        return doc

    def config_hash(self) -> str:
        return content_hash(canonical_json(self.canonical()))


def load_run_config(source: Union[str, Path, dict]) -> RunConfig:
    doc = source if isinstance(source, dict) else load_json(source)
    return RunConfig.model_validate(doc)
