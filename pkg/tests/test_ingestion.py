import pytest

from fairprice.core.errors import CardinalityError, DomainError, ParseError, SchemaError
from fairprice.ingestion.parsers import load_csv, load_schema, save_csv, sidecar_path
from fairprice.ingestion.schemas import ColumnSpec, Schema
from fairprice.types import FeatureKind


@pytest.fixture
def schema():
    return Schema(
        columns=[
            ColumnSpec(name="Gender", kind=FeatureKind.CATEGORICAL),
            ColumnSpec(name="Age", kind=FeatureKind.NUMERIC),
            ColumnSpec(name="Region", kind=FeatureKind.CATEGORICAL),
            ColumnSpec(name="Claim", kind=FeatureKind.NUMERIC),
        ],
        sensitive="Gender",
        target="Claim",
    )


def write(tmp_path, text):
    path = tmp_path / "portfolio.csv"
    path.write_text(text, encoding="utf-8")
    return path


def test_loads_and_types_columns(tmp_path, schema):
    path = write(tmp_path, "Gender,Age,Region,Claim\nF,30,East,100\nM,40,West,0\nF,50,West,25.5\n")
    data = load_csv(path, schema)
    assert data.n == 3
    assert data.levels == ("F", "M")
    assert data.y.tolist() == [100.0, 0.0, 25.5]
    assert data.numeric_ranges["Age"] == (30.0, 50.0)


def test_rows_with_missing_values_are_dropped(tmp_path, schema):
    path = write(tmp_path, "Gender,Age,Region,Claim\nF,30,East,100\nM,,West,0\nF,50,West,25\nM,20,East,3\n")
    data = load_csv(path, schema)
    assert data.n == 3
    assert data.dropped_rows == 1


def test_parse_error_reports_row_and_column(tmp_path, schema):
    path = write(tmp_path, "Gender,Age,Region,Claim\nF,30,East,100\nM,old,West,0\n")
    with pytest.raises(ParseError) as exc:
        load_csv(path, schema)
    assert exc.value.row == 2
    assert exc.value.column == "Age"


def test_sensitive_column_needs_two_levels(tmp_path, schema):
    path = write(tmp_path, "Gender,Age,Region,Claim\nF,30,East,1\nM,40,West,0\nX,50,West,2\n")
    with pytest.raises(CardinalityError):
        load_csv(path, schema)


def test_unknown_header_is_rejected(tmp_path, schema):
    path = write(tmp_path, "Gender,Age,Region,Claim,Colour\nF,30,East,1,red\nM,40,West,0,blue\n")
    with pytest.raises(SchemaError):
        load_csv(path, schema)


def test_negative_target_is_a_domain_error(tmp_path, schema):
    path = write(tmp_path, "Gender,Age,Region,Claim\nF,30,East,-1\nM,40,West,0\n")
    with pytest.raises(DomainError):
        load_csv(path, schema)


def test_schema_rejects_numeric_sensitive_column():
    with pytest.raises(ValueError):
        Schema(
            columns=[ColumnSpec(name="Gender", kind=FeatureKind.NUMERIC), ColumnSpec(name="Claim", kind=FeatureKind.NUMERIC)],
            sensitive="Gender",
            target="Claim",
        )


def test_save_writes_sidecar_and_reloads(tmp_path, small_data):
    path = save_csv(small_data, tmp_path / "out.csv", provenance={"seed": 7})
    assert sidecar_path(path).exists()
    again = load_csv(path, small_data.schema)
    assert again.n == small_data.n
    assert again.metadata["seed"] == 7
    assert again.y == pytest.approx(small_data.y, rel=1e-15)


def test_load_schema_from_json(tmp_path, schema):
    path = tmp_path / "schema.json"
    path.write_text(schema.model_dump_json(), encoding="utf-8")
    assert load_schema(path) == schema
