import json

import pytest

from conftest import SURVEY_HEADER, make_survey_rows, write_csv
from dpbudgeter.data import OPENED, SEALED, file_digest, load_codebook, load_csv, open_for_finalize
from dpbudgeter.errors import DigestMismatchError, FirewallError, IngestError
from dpbudgeter.variables import VariableKind, VariableMetadata, validate_metadata


class TestLoadCsv:
    def test_survey_file(self, survey_csv):
        handle = load_csv(survey_csv)
        assert handle.row_count == 1000
        assert handle.header == SURVEY_HEADER
        assert handle.firewall_state == SEALED
        assert handle.read_audit == 0

    def test_header_only_file(self, tmp_path):
        path = write_csv(tmp_path / "empty.csv", ["a", "b"], [])
        handle = load_csv(path)
        assert handle.row_count == 0
        assert handle.header == ["a", "b"]

    def test_ragged_row_names_line(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("a,b\n1,2\n3\n", encoding="utf-8")
        with pytest.raises(IngestError, match="line 3"):
            load_csv(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "none.csv"
        path.write_text("", encoding="utf-8")
        with pytest.raises(IngestError, match="header"):
            load_csv(path)

    def test_duplicate_header_rejected(self, tmp_path):
        path = tmp_path / "dup.csv"
        path.write_text("a,a\n1,2\n", encoding="utf-8")
        with pytest.raises(IngestError, match="duplicate"):
            load_csv(path)

    def test_idempotent_ingestion(self, survey_csv):
        one, two = load_csv(survey_csv), load_csv(survey_csv)
        assert one.header == two.header
        assert one.row_count == two.row_count
        assert one.digest == two.digest


class TestFirewall:
    def test_open_then_materialize_counts_cells(self, survey_csv):
        handle = load_csv(survey_csv)
        accessor = open_for_finalize(handle)
        assert handle.firewall_state == OPENED
        assert handle.read_audit == 0
        meta = VariableMetadata(kind=VariableKind.NUMERICAL, lower=0.0, upper=150.0)
        accessor.numeric_column("age", meta)
        accessor.label_column("race")
        assert handle.read_audit == 2000

    def test_double_open_rejected(self, survey_csv):
        handle = load_csv(survey_csv)
        open_for_finalize(handle)
        with pytest.raises(FirewallError, match="one-shot"):
            open_for_finalize(handle)

    def test_open_refuses_if_file_changed(self, tmp_path):
        path = write_csv(tmp_path / "d.csv", ["x"], [["1"], ["2"]])
        handle = load_csv(path)
        path.write_text("x\n1\n2\n3\n", encoding="utf-8")
        with pytest.raises(DigestMismatchError):
            open_for_finalize(handle)

    def test_missing_tokens_and_parse_errors(self, tmp_path):
        path = write_csv(
            tmp_path / "m.csv", ["age", "color"],
            [["25", "red"], ["", "blue"], ["NA", ""], ["oops", "green"]],
        )
        handle = load_csv(path)
        accessor = open_for_finalize(handle)
        labels = accessor.label_column("color")
        assert labels == ["red", "blue", None, "green"]
        meta = VariableMetadata(kind=VariableKind.NUMERICAL, lower=0.0, upper=150.0)
        with pytest.raises(IngestError, match="row 4, column 'age'"):
            accessor.numeric_column("age", meta)

    def test_unknown_column(self, tiny_csv):
        accessor = open_for_finalize(load_csv(tiny_csv))
        with pytest.raises(IngestError, match="no column"):
            accessor.label_column("nope")

    def test_digest_is_content_hash(self, tmp_path):
        p1 = write_csv(tmp_path / "a.csv", ["x"], [["1"]])
        p2 = write_csv(tmp_path / "b.csv", ["x"], [["1"]])
        assert file_digest(p1) == file_digest(p2)


class TestMetadataValidation:
    def test_age_bounds_ok(self):
        meta = VariableMetadata(kind=VariableKind.NUMERICAL, lower=0.0, upper=150.0)
        assert validate_metadata(meta) == []

    def test_inverted_bounds(self):
        meta = VariableMetadata(kind=VariableKind.NUMERICAL, lower=150.0, upper=0.0)
        assert any("strictly below" in e for e in validate_metadata(meta))

    def test_duplicate_categories(self):
        meta = VariableMetadata(kind=VariableKind.CATEGORICAL, categories=("a", "a"))
        assert any("unique" in e for e in validate_metadata(meta))

    def test_missing_pieces(self):
        assert validate_metadata(VariableMetadata(kind=VariableKind.NUMERICAL)) != []
        assert validate_metadata(VariableMetadata(kind=VariableKind.CATEGORICAL)) != []
        bool_meta = VariableMetadata(kind=VariableKind.BOOLEAN, categories=("y",))
        assert any("two" in e for e in validate_metadata(bool_meta))

    def test_reserved_overflow_label(self):
        meta = VariableMetadata(kind=VariableKind.CATEGORICAL, categories=("uncategorized",))
        assert any("reserved" in e for e in validate_metadata(meta))

    def test_grid_too_small(self):
        meta = VariableMetadata(kind=VariableKind.NUMERICAL, lower=0.0, upper=1.0, grid_cells=1)
        assert any("grid_cells" in e for e in validate_metadata(meta))


class TestCodebook:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "codebook.json"
        path.write_text(
            json.dumps(
                {
                    "age": {"kind": "numerical", "lower": 0, "upper": 150},
                    "race": {"kind": "categorical", "categories": ["white", "black", "asian"]},
                }
            ),
            encoding="utf-8",
        )
        book = load_codebook(path)
        assert book["age"].lower == 0
        assert book["race"].categories == ("white", "black", "asian")

    def test_bad_entries(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"x": {"nokind": 1}}), encoding="utf-8")
        with pytest.raises(IngestError):
            load_codebook(path)
        path.write_text(json.dumps([1, 2]), encoding="utf-8")
        with pytest.raises(IngestError):
            load_codebook(path)
