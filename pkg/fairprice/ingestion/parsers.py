"""CSV ingestion and export for portfolio tables, with JSON sidecars."""
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import pandas as pd

from fairprice.core.errors import SchemaError
from fairprice.core.validators import TableValidator
from fairprice.datakit.dataset import Dataset
from fairprice.ingestion.schemas import Schema
from fairprice.utils.helpers import canonical_json, load_json

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def sidecar_path(csv_path: PathLike) -> Path:
    p = Path(csv_path)
    return p.with_name(p.name + ".json")


def load_csv(path: PathLike, schema: Schema) -> Dataset:
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"dataset file not found: {path}")
    raw = pd.read_csv(path, dtype=str, keep_default_na=True, encoding="utf-8", skipinitialspace=True)
    result = TableValidator(schema).validate_frame(raw)
    for issue in result.issues:
        logger.info("%s: column %r has %s", path.name, issue.column, issue.reason)
    if result.dropped_rows:
        logger.warning("%s: dropped %d row(s) with missing values", path.name, result.dropped_rows)

    metadata: Dict[str, Any] = {"source": str(path)}
    side = sidecar_path(path)
    if side.exists():
        metadata.update(load_json(side).get("metadata", {}))
    return Dataset.from_frame(schema, result.frame, dropped_rows=result.dropped_rows, metadata=metadata)


def save_csv(data: Dataset, path: PathLike, provenance: Optional[Dict[str, Any]] = None) -> Path:
    """Writes the table plus a sidecar with schema, ranges and provenance."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = data.frame[data.schema.column_names]
    frame.to_csv(path, index=False, encoding="utf-8", float_format="%.17g", lineterminator="\n")
    side = sidecar_path(path)
    side.write_text(canonical_json(sidecar_payload(data, provenance)), encoding="utf-8")
    return path


def sidecar_payload(data: Dataset, provenance: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    return {
        "schema": data.schema.model_dump(mode="json"),
        "levels": list(data.levels),
        "numeric_ranges": {k: list(v) for k, v in data.numeric_ranges.items()},
        "n_rows": data.n,
        "dropped_rows": data.dropped_rows,
        "metadata": data.metadata,
        "provenance": provenance or {},
    }


def load_schema(path: PathLike) -> Schema:
    return Schema.model_validate(load_json(path))
