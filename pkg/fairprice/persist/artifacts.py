"""
Run-directory artifact store.

Every file a command writes goes through the store, which records its
SHA-256 content hash in manifest.json. Re-reading verifies the recorded hash,
so a report never bundles a file that changed after it was written.
"""
import io
import json
import logging
import threading
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import pandas as pd

from fairprice.core.errors import ArtifactError
from fairprice.utils.helpers import canonical_json, content_hash, load_json

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"


class ArtifactStore:
    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._manifest: Dict[str, Dict[str, Any]] = self._load_manifest()

    def _load_manifest(self) -> Dict[str, Dict[str, Any]]:
        path = self.root / MANIFEST
        if not path.exists():
            return {}
        try:
            return dict(load_json(path).get("artifacts", {}))
        except ValueError as e:
            raise ArtifactError(f"unreadable manifest {path}: {e}") from e

    def _save_manifest(self) -> None:
        doc = {"artifacts": self._manifest}
        (self.root / MANIFEST).write_text(canonical_json(doc), encoding="utf-8")

    def path(self, name: str) -> Path:
        p = (self.root / name).resolve()
        if self.root.resolve() not in p.parents:
            raise ArtifactError(f"artifact {name!r} would land outside the run directory")
        return p

    def _record(self, name: str, data: bytes, kind: str) -> Path:
        p = self.path(name)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_bytes(data)
        with self._lock:
            self._manifest[name] = {"sha256": content_hash(data), "size": len(data), "kind": kind}
            self._save_manifest()
        logger.debug("Wrote %s (%d bytes)", p, len(data))
        return p

    def write_json(self, name: str, obj: Any) -> Path:
        return self._record(name, canonical_json(obj).encode("utf-8"), "json")

    def write_csv(self, name: str, frame: pd.DataFrame) -> Path:
        text = frame.to_csv(index=False, float_format="%.17g", lineterminator="\n")
        return self._record(name, text.encode("utf-8"), "csv")

    def write_text(self, name: str, text: str, kind: str = "text") -> Path:
        return self._record(name, text.encode("utf-8"), kind)

    def register(self, name: str, kind: str = "file") -> Path:
        """Records a file some other writer (e.g. matplotlib) already put in place."""
        p = self.path(name)
        if not p.exists():
            raise ArtifactError(f"cannot register missing artifact {name!r}")
        data = p.read_bytes()
        with self._lock:
            self._manifest[name] = {"sha256": content_hash(data), "size": len(data), "kind": kind}
            self._save_manifest()
        return p

    def has(self, name: str) -> bool:
        return name in self._manifest

    def names(self, prefix: str = "") -> List[str]:
        return sorted(n for n in self._manifest if n.startswith(prefix))

    def read_bytes(self, name: str) -> bytes:
        entry = self._manifest.get(name)
        if entry is None:
            raise ArtifactError(f"artifact {name!r} is not in {self.root / MANIFEST}")
        p = self.path(name)
        if not p.exists():
            raise ArtifactError(f"artifact {name!r} is listed but missing on disk")
        data = p.read_bytes()
        if content_hash(data) != entry["sha256"]:
            raise ArtifactError(f"artifact {name!r} changed since it was written")
        return data

    def read_json(self, name: str) -> Any:
        return json.loads(self.read_bytes(name).decode("utf-8"))

    def read_csv(self, name: str) -> pd.DataFrame:
        return pd.read_csv(io.BytesIO(self.read_bytes(name)))

    def verify(self, required: Optional[List[str]] = None) -> Tuple[List[str], List[str]]:
        """(ok, problems): every manifest entry re-hashed, plus any required names."""
        ok, problems = [], []
        for name in sorted(set(self._manifest) | set(required or [])):
            try:
                self.read_bytes(name)
                ok.append(name)
            except ArtifactError as e:
                problems.append(str(e))
        return ok, problems

    def manifest(self) -> Dict[str, Dict[str, Any]]:
        return {k: dict(v) for k, v in sorted(self._manifest.items())}

