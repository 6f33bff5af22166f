import pandas as pd
import pytest

from fairprice.core.errors import ArtifactError
from fairprice.persist.artifacts import MANIFEST, ArtifactStore


def test_json_and_csv_are_recorded(tmp_path):
    store = ArtifactStore(tmp_path / "run")
    store.write_json("models/MB.json", {"b": 1, "a": [1.5, 2.5]})
    store.write_csv("table.csv", pd.DataFrame({"x": [0.1, 0.2], "y": ["a", "b"]}))
    assert store.names() == ["models/MB.json", "table.csv"]
    assert store.names("models/") == ["models/MB.json"]
    assert store.read_json("models/MB.json") == {"a": [1.5, 2.5], "b": 1}
    frame = store.read_csv("table.csv")
    assert frame["x"].tolist() == [0.1, 0.2]
    assert (tmp_path / "run" / MANIFEST).exists()


def test_manifest_survives_reopen(tmp_path):
    ArtifactStore(tmp_path).write_text("notes.md", "# run\n", kind="markdown")
    reopened = ArtifactStore(tmp_path)
    assert reopened.has("notes.md")
    assert reopened.manifest()["notes.md"]["kind"] == "markdown"


def test_writes_are_byte_stable(tmp_path):
    first = ArtifactStore(tmp_path / "a")
    second = ArtifactStore(tmp_path / "b")
    doc = {"z": 1.0 / 3.0, "a": {"nested": True}}
    assert first.write_json("x.json", doc).read_bytes() == second.write_json("x.json", doc).read_bytes()


def test_tampered_file_is_detected(tmp_path):
    store = ArtifactStore(tmp_path)
    path = store.write_json("x.json", {"v": 1})
    path.write_text('{"v": 2}\n', encoding="utf-8")
    with pytest.raises(ArtifactError, match="changed"):
        store.read_json("x.json")
    ok, problems = store.verify()
    assert ok == [] and len(problems) == 1


def test_missing_and_unknown_artifacts(tmp_path):
    store = ArtifactStore(tmp_path)
    store.write_json("x.json", {})
    (tmp_path / "x.json").unlink()
    with pytest.raises(ArtifactError, match="missing on disk"):
        store.read_bytes("x.json")
    with pytest.raises(ArtifactError):
        store.read_bytes("never.json")
    _, problems = store.verify(required=["config.json"])
    assert any("config.json" in p for p in problems)


def test_register_external_file(tmp_path):
    store = ArtifactStore(tmp_path)
    (tmp_path / "plot.svg").write_text("<svg/>", encoding="utf-8")
    store.register("plot.svg", kind="svg")
    assert store.read_bytes("plot.svg") == b"<svg/>"
    with pytest.raises(ArtifactError):
        store.register("absent.svg")


def test_paths_stay_inside_run_directory(tmp_path):
    store = ArtifactStore(tmp_path / "run")
    with pytest.raises(ArtifactError):
        store.write_json("../escape.json", {})


def test_unreadable_manifest(tmp_path):
    (tmp_path / MANIFEST).write_text("{not json", encoding="utf-8")
    with pytest.raises(ArtifactError):
        ArtifactStore(tmp_path)
