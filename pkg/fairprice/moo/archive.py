"""Pareto archive export: JSON with genomes, CSV for parallel-coordinates plots."""
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from fairprice.core.errors import ArtifactError
from fairprice.moo.nsga2 import Individual


def objective_names(m: int, names: Optional[Sequence[str]] = None) -> List[str]:
    if names is None:
        return [f"f{j + 1}" for j in range(m)]
    if len(names) != m:
        raise ArtifactError(f"{len(names)} objective names for {m} objectives")
    return list(names)


def archive_frame(archive: Sequence[Individual], names: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """One row per solution, one column per objective."""
    F = np.array([ind.objectives for ind in archive], dtype=float)
    m = F.shape[1] if F.ndim == 2 else 0
    frame = pd.DataFrame(F.reshape(len(archive), m), columns=objective_names(m, names))
    frame.insert(0, "solution", np.arange(len(archive)))
    return frame


def archive_document(
    archive: Sequence[Individual],
    names: Optional[Sequence[str]] = None,
    tags: Optional[Sequence[str]] = None,
) -> Dict[str, Any]:
    m = len(archive[0].objectives) if archive else 0
    cols = objective_names(m, names)
    solutions = []
    for k, ind in enumerate(archive):
        entry = {
            "solution": k,
            "genome": ind.genome.tolist(),
            "objectives": dict(zip(cols, ind.objectives.tolist())),
        }
        if tags is not None:
            entry["tag"] = tags[k]
        solutions.append(entry)
    return {"objective_names": cols, "solutions": solutions}


def archive_from_document(document: Dict[str, Any]) -> List[Individual]:
    try:
        cols = document["objective_names"]
        return [
            Individual(
                genome=np.asarray(s["genome"], dtype=float),
                objectives=np.asarray([s["objectives"][c] for c in cols], dtype=float),
            )
            for s in document["solutions"]
        ]
    except (KeyError, TypeError) as e:
        raise ArtifactError(f"malformed archive document: {e}") from e
