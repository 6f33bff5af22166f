"""Synthetic portfolios with a known premium function and known group effect."""
import logging
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from fairprice.core.errors import DomainError
from fairprice.datakit.dataset import Dataset
from fairprice.ingestion.schemas import ColumnSpec, Schema
from fairprice.types import FeatureKind

logger = logging.getLogger(__name__)


class NumericFeatureSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    distribution: Literal["normal", "uniform", "lognormal"] = "normal"
    loc: float = 0.0
    scale: float = Field(1.0, gt=0, description="sd (normal/lognormal) or width (uniform).")
    group_a_shift: float = Field(0.0, description="Added to loc for group a; makes the feature a proxy of D.")
    coefficient: float = 0.0


class CategoricalFeatureSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    levels: List[str] = Field(..., min_length=2)
    probabilities: Optional[List[float]] = None
    group_a_probabilities: Optional[List[float]] = None
    effects: Dict[str, float] = Field(default_factory=dict, description="Additive effect per level; absent = 0.")


class GeneratorSpec(BaseModel):
    """Ground truth: eta = intercept + sum(coef * x) + sum(effects) + tau * 1[D = a]."""
    model_config = ConfigDict(extra="forbid")

    n: int = Field(..., ge=2)
    sensitive: str = "Gender"
    levels: Tuple[str, str] = ("F", "M")
    group_shares: Tuple[float, float] = (0.5, 0.5)
    numeric: List[NumericFeatureSpec] = Field(default_factory=list)
    categorical: List[CategoricalFeatureSpec] = Field(default_factory=list)
    intercept: float = 0.0
    tau: float = 0.0
    link: Literal["identity", "log"] = "identity"
    noise: Literal["none", "gaussian", "poisson", "gamma"] = "gaussian"
    noise_scale: float = Field(1.0, ge=0, description="Gaussian sd or Gamma dispersion.")
    target: str = "ClaimAmount"
    count_target: Optional[str] = None
    severity_mean: float = Field(1000.0, gt=0)
    exposure: Optional[str] = None
    exposure_range: Tuple[float, float] = (0.1, 1.0)

    def check(self) -> None:
        shares = np.asarray(self.group_shares, dtype=float)
        if np.any(shares < 0) or abs(shares.sum() - 1.0) > 1e-9:
            raise DomainError(f"group shares must be non-negative and sum to 1, got {self.group_shares}")
        if self.levels[0] == self.levels[1]:
            raise DomainError("the two sensitive levels must differ")
        if not self.numeric and not self.categorical:
            raise DomainError("generator declares no features")
        lo, hi = self.exposure_range
        if not 0 < lo <= hi:
            raise DomainError("exposure_range must satisfy 0 < low <= high")
        for cat in self.categorical:
            for probs in (cat.probabilities, cat.group_a_probabilities):
                if probs is None:
                    continue
                p = np.asarray(probs, dtype=float)
                if len(p) != len(cat.levels) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
                    raise DomainError(f"probabilities of {cat.name!r} must match its levels and sum to 1")

    def schema(self) -> Schema:
        cols = [ColumnSpec(name=self.sensitive, kind=FeatureKind.CATEGORICAL)]
        cols += [ColumnSpec(name=f.name, kind=FeatureKind.NUMERIC) for f in self.numeric]
        cols += [ColumnSpec(name=c.name, kind=FeatureKind.CATEGORICAL) for c in self.categorical]
        if self.exposure:
            cols.append(ColumnSpec(name=self.exposure, kind=FeatureKind.NUMERIC))
        if self.count_target:
            cols.append(ColumnSpec(name=self.count_target, kind=FeatureKind.NUMERIC))
        cols.append(ColumnSpec(name=self.target, kind=FeatureKind.NUMERIC))
        return Schema(
            columns=cols,
            sensitive=self.sensitive,
            target=self.target,
            count_target=self.count_target,
            exposure=self.exposure,
            protected_level=self.levels[0],
        )

    def ground_truth(self) -> Dict[str, Any]:
        return {
            "tau": self.tau,
            "intercept": self.intercept,
            "link": self.link,
            "coefficients": {f.name: f.coefficient for f in self.numeric},
            "effects": {c.name: dict(c.effects) for c in self.categorical},
        }


def linear_predictor(spec: GeneratorSpec, frame: pd.DataFrame) -> np.ndarray:
    """Ground-truth eta for given rows (the D term included)."""
    eta = np.full(len(frame), spec.intercept, dtype=float)
    for f in spec.numeric:
        eta += f.coefficient * frame[f.name].to_numpy(dtype=float)
    for c in spec.categorical:
        eta += frame[c.name].map(lambda v, e=c.effects: e.get(v, 0.0)).to_numpy(dtype=float)
    eta += spec.tau * (frame[spec.sensitive].to_numpy() == spec.levels[0])
    return eta


def true_premium(spec: GeneratorSpec, frame: pd.DataFrame) -> np.ndarray:
    eta = linear_predictor(spec, frame)
    return np.exp(eta) if spec.link == "log" else eta


def _draw_numeric(f: NumericFeatureSpec, is_a: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    loc = f.loc + f.group_a_shift * is_a
    if f.distribution == "uniform":
        return loc + f.scale * rng.random(is_a.size)
    z = loc + f.scale * rng.standard_normal(is_a.size)
    return np.exp(z) if f.distribution == "lognormal" else z


def _draw_categorical(c: CategoricalFeatureSpec, is_a: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    k = len(c.levels)
    p_b = np.asarray(c.probabilities if c.probabilities is not None else [1.0 / k] * k)
    p_a = np.asarray(c.group_a_probabilities) if c.group_a_probabilities is not None else p_b
    u = rng.random(is_a.size)
    idx = np.where(
        is_a,
        np.minimum(np.searchsorted(np.cumsum(p_a), u, side="right"), k - 1),
        np.minimum(np.searchsorted(np.cumsum(p_b), u, side="right"), k - 1),
    )
    return np.asarray(c.levels, dtype=object)[idx]


def synth_generate(spec: GeneratorSpec, seed: int) -> Dataset:
    """Deterministic synthetic Dataset; ground-truth parameters land in metadata."""
    spec.check()
    rng = np.random.default_rng(seed)
    n = spec.n
    is_a = rng.random(n) < spec.group_shares[0]
    if is_a.all() or not is_a.any():
        raise DomainError("generated sample holds a single sensitive group; increase n or balance the shares")

    frame = pd.DataFrame({spec.sensitive: np.where(is_a, spec.levels[0], spec.levels[1])})
    for f in spec.numeric:
        frame[f.name] = _draw_numeric(f, is_a, rng)
    for c in spec.categorical:
        frame[c.name] = _draw_categorical(c, is_a, rng)

    mean = true_premium(spec, frame)
    if np.any(mean < 0):
        raise DomainError("ground-truth premium is negative for some rows; raise the intercept")

    exposure = np.ones(n)
    if spec.exposure:
        lo, hi = spec.exposure_range
        exposure = lo + (hi - lo) * rng.random(n)
        frame[spec.exposure] = exposure
    expected = mean * exposure

    if spec.count_target:
        counts = rng.poisson(expected / spec.severity_mean)
        shape = 1.0 / max(spec.noise_scale, 1e-12) if spec.noise == "gamma" else 1.0
        amount = np.zeros(n)
        pos = counts > 0
        amount[pos] = rng.gamma(counts[pos] * shape, spec.severity_mean / shape)
        frame[spec.count_target] = counts.astype(float)
    elif spec.noise == "none":
        amount = expected
    elif spec.noise == "gaussian":
        amount = expected + spec.noise_scale * rng.standard_normal(n)
        clipped = int(np.sum(amount < 0))
        if clipped:
            logger.warning("synth: clipped %d negative gaussian draw(s) to 0", clipped)
        amount = np.maximum(amount, 0.0)
    elif spec.noise == "poisson":
        amount = rng.poisson(expected).astype(float)
    else:
        shape = 1.0 / max(spec.noise_scale, 1e-12)
        amount = rng.gamma(shape, expected / shape)
    frame[spec.target] = amount

    schema = spec.schema()
    frame = frame[schema.column_names]
    metadata = {
        "generator": spec.model_dump(mode="json"),
        "seed": seed,
        "ground_truth": spec.ground_truth(),
    }
    logger.info("synth: generated %d rows (%d in group %s)", n, int(is_a.sum()), spec.levels[0])
    return Dataset.from_frame(schema, frame, metadata=metadata)


def balanced_spec(n: int = 2000, tau: float = 0.0, noise_scale: float = 5.0) -> GeneratorSpec:
    """Features independent of D; only tau separates the groups."""
    return GeneratorSpec(
        n=n,
        numeric=[
            NumericFeatureSpec(name="Age", loc=45.0, scale=12.0, coefficient=0.8),
            NumericFeatureSpec(name="Bonus", distribution="uniform", loc=0.0, scale=1.0, coefficient=20.0),
        ],
        categorical=[
            CategoricalFeatureSpec(name="Region", levels=["East", "North", "South"], effects={"North": 8.0, "South": -4.0}),
        ],
        intercept=60.0,
        tau=tau,
        noise="gaussian" if noise_scale > 0 else "none",
        noise_scale=noise_scale,
    )


def confounded_spec(n: int = 2000, tau: float = 10.0, noise_scale: float = 5.0) -> GeneratorSpec:
    """Adds a D-correlated proxy (Power) on top of a direct group effect."""
    return GeneratorSpec(
        n=n,
        group_shares=(0.4, 0.6),
        numeric=[
            NumericFeatureSpec(name="Age", loc=45.0, scale=12.0, coefficient=0.8),
            NumericFeatureSpec(name="Power", loc=6.0, scale=1.5, group_a_shift=-1.5, coefficient=6.0),
        ],
        categorical=[
            CategoricalFeatureSpec(
                name="Region",
                levels=["East", "North", "South"],
                group_a_probabilities=[0.5, 0.3, 0.2],
                effects={"North": 8.0, "South": -4.0},
            ),
        ],
        intercept=40.0,
        tau=tau,
        noise="gaussian" if noise_scale > 0 else "none",
        noise_scale=noise_scale,
    )
