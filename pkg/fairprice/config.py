from typing import Tuple

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class GbtDefaults(BaseSettings):
    n_trees: int = 200
    max_depth: int = 4
    learning_rate: float = 0.1
    min_leaf: int = 20
    lambda_l2: float = 1.0


class ForestDefaults(BaseSettings):
    n_trees: int = 200
    mtry: float = 0.5  # fraction of design columns tried per split
    min_leaf: int = 5


class CausalForestDefaults(BaseSettings):
    n_trees: int = 100
    min_group: int = 5
    max_depth: int = 6
    histogram_bins: int = 64


class ScmDefaults(BaseSettings):
    donor_k: int = 50
    max_iter: int = 10_000
    tol: float = 1e-8


class EnsembleDefaults(BaseSettings):
    hidden_units: int = 8
    genome_bound: float = 5.0
    validation_fraction: float = 0.25
    objective_subsample: int = 2_000
    ite_trees: int = 20
    ite_max_depth: int = 4
    endpoint_bias: float = 50.0
    topsis_weights: Tuple[float, float, float, float] = (0.3, 0.3, 0.3, 0.1)


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file='.env', env_file_encoding='utf-8', extra='ignore')

    # Reproducibility
    seed: int = Field(default=20240601, alias="FAIRPRICE_SEED")

    # Processing
    pipeline_workers: int = Field(default=8, alias="FAIRPRICE_WORKERS")
    lipschitz_cap: int = Field(default=20_000, alias="FAIRPRICE_LIPSCHITZ_CAP")
    distance_block_rows: int = Field(default=256, alias="FAIRPRICE_DISTANCE_BLOCK")

    # Logging
    log_level: str = Field(default="INFO", alias="FAIRPRICE_LOG_LEVEL")
    progress: bool = Field(default=True, alias="FAIRPRICE_PROGRESS")

    # Engine and algorithm defaults
    gbt: GbtDefaults = GbtDefaults()
    forest: ForestDefaults = ForestDefaults()
    causal_forest: CausalForestDefaults = CausalForestDefaults()
    scm: ScmDefaults = ScmDefaults()
    ensemble: EnsembleDefaults = EnsembleDefaults()


settings = Settings()
