"""
Gated meta-learner over the MO and MSCM premiums.

A small network maps (standardized features, standardized base premiums) to a
gate g in [0, 1]; the premium is g * MO + (1 - g) * MSCM, so it always lies
between the two base premiums. The network's flat weight vector is the genome
NSGA-II evolves.
"""
from dataclasses import dataclass, replace
from typing import Any, Dict, Optional

import numpy as np

from fairprice.config import settings
from fairprice.core.errors import DomainError
from fairprice.predictors.mlp import MlpModel, OutputActivation, mlp_forward, weight_count


def gated_premium(gate: np.ndarray, y_mo: np.ndarray, y_mscm: np.ndarray) -> np.ndarray:
    """
    g * MO + (1 - g) * MSCM, written from the nearer endpoint so that a
    saturated gate returns that base premium bit for bit.
    """
    gate = np.asarray(gate, dtype=float)
    y_mo = np.asarray(y_mo, dtype=float)
    y_mscm = np.asarray(y_mscm, dtype=float)
    diff = y_mo - y_mscm
    return np.where(gate >= 0.5, y_mo - (1.0 - gate) * diff, y_mscm + gate * diff)


@dataclass(frozen=True)
class MetaLearner:
    mlp: MlpModel
    mean: np.ndarray
    scale: np.ndarray
    include_features: bool = True

    @property
    def genome_length(self) -> int:
        return self.mlp.weights.size

    def inputs(self, features: Optional[np.ndarray], y_mo: np.ndarray, y_mscm: np.ndarray) -> np.ndarray:
        base = np.column_stack([np.asarray(y_mo, dtype=float), np.asarray(y_mscm, dtype=float)])
        if self.include_features:
            if features is None:
                raise DomainError("this meta-learner reads the feature design")
            raw = np.column_stack([np.asarray(features, dtype=float), base])
        else:
            raw = base
        return (raw - self.mean) / self.scale

    def gate(self, features: Optional[np.ndarray], y_mo: np.ndarray, y_mscm: np.ndarray) -> np.ndarray:
        return mlp_forward(self.mlp, self.inputs(features, y_mo, y_mscm))

    def premium(self, features: Optional[np.ndarray], y_mo: np.ndarray, y_mscm: np.ndarray) -> np.ndarray:
        return gated_premium(self.gate(features, y_mo, y_mscm), y_mo, y_mscm)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mlp": self.mlp.to_dict(),
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "include_features": self.include_features,
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "MetaLearner":
        return cls(
            mlp=MlpModel.from_dict(payload["mlp"]),
            mean=np.asarray(payload["mean"], dtype=float),
            scale=np.asarray(payload["scale"], dtype=float),
            include_features=bool(payload["include_features"]),
        )


def build_meta_learner(
    features: Optional[np.ndarray],
    y_mo: np.ndarray,
    y_mscm: np.ndarray,
    include_features: bool = True,
    hidden: Optional[int] = None,
) -> MetaLearner:
    """Zero-weight learner whose input standardization is taken from the given training rows."""
    hidden = settings.ensemble.hidden_units if hidden is None else hidden
    base = np.column_stack([np.asarray(y_mo, dtype=float), np.asarray(y_mscm, dtype=float)])
    raw = np.column_stack([np.asarray(features, dtype=float), base]) if include_features else base
    mean = raw.mean(axis=0)
    scale = raw.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    sizes = (raw.shape[1], hidden, 1) if hidden > 0 else (raw.shape[1], 1)
    mlp = MlpModel(
        layer_sizes=sizes,
        weights=np.zeros(weight_count(sizes)),
        output_activation=OutputActivation.LOGISTIC,
    )
    return MetaLearner(mlp=mlp, mean=mean, scale=scale, include_features=include_features)


def encode(meta: MetaLearner) -> np.ndarray:
    """Flat genome in fixed layer order: each layer's weights, then its biases."""
    return meta.mlp.weights.copy()


def decode(meta: MetaLearner, genome: np.ndarray) -> MetaLearner:
    genome = np.asarray(genome, dtype=float).ravel()
    if genome.size != meta.genome_length:
        raise DomainError(f"genome must have length {meta.genome_length}, got {genome.size}")
    return replace(meta, mlp=replace(meta.mlp, weights=genome.copy()))


def endpoint_genome(meta: MetaLearner, towards_mo: bool, bias: Optional[float] = None) -> np.ndarray:
    """All-zero genome whose output bias saturates the gate at 1 (MO) or 0 (MSCM)."""
    bias = settings.ensemble.endpoint_bias if bias is None else bias
    genome = np.zeros(meta.genome_length)
    genome[-1] = bias if towards_mo else -bias
    return genome
