"""Tests for record persistence: exact round-trips and stable bytes."""

import pytest

from arm_codesign.experiment import EvalRecord
from arm_codesign.records import (
    RECORD_COLUMNS,
    read_records,
    render_records_csv,
    write_manifest,
    write_records,
)


def sample_records():
    ok = EvalRecord(
        layout="a",
        condition="co_design",
        target=(0.1, -0.05),
        seed=3,
        trajectory_error=0.012345678901234567,
        final_error=0.1 + 0.2,  # deliberately non-representable
        success=False,
        collision_penalty=0.0,
        collided=False,
        l1=0.15000000000000002,
        l2=0.05,
        best_loss_trace=[0.5, 0.25, 1e-7],
    )
    failed = EvalRecord(
        layout="a",
        condition="control_only",
        target=(0.1, -0.05),
        seed=3,
        error="ValueError: target (0.35, 0.0) is not feasible, really",
    )
    return [ok, failed]


class TestRoundTrip:
    def test_parse_emit_identity(self, tmp_path):
        records = sample_records()
        write_records(records, tmp_path)
        back = read_records(tmp_path / "records.csv")
        assert back == records

    def test_floats_round_trip_exactly(self, tmp_path):
        records = sample_records()
        write_records(records, tmp_path)
        back = read_records(tmp_path / "records.csv")
        assert back[0].final_error == records[0].final_error
        assert back[0].l1 == records[0].l1
        assert back[0].best_loss_trace == records[0].best_loss_trace

    def test_error_row_fields_none(self, tmp_path):
        write_records(sample_records(), tmp_path)
        back = read_records(tmp_path / "records.csv")
        assert back[1].error is not None
        assert back[1].final_error is None
        assert back[1].success is None
        assert back[1].best_loss_trace == []


class TestStableBytes:
    def test_render_is_deterministic(self):
        assert render_records_csv(sample_records()) == render_records_csv(sample_records())

    def test_rewrite_is_byte_identical(self, tmp_path):
        records = sample_records()
        p1 = write_records(records, tmp_path / "one")
        p2 = write_records(records, tmp_path / "two")
        assert p1.read_bytes() == p2.read_bytes()

    def test_header_matches_schema(self):
        header = render_records_csv([]).strip().split(",")
        assert header == list(RECORD_COLUMNS)


class TestManifest:
    def test_manifest_round_trip(self, tmp_path):
        import json

        path = write_manifest({"config_hash": "ab", "seeds": [0, 1]}, tmp_path)
        data = json.loads(path.read_text())
        assert data == {"config_hash": "ab", "seeds": [0, 1]}

    def test_manifest_bytes_stable(self, tmp_path):
        p1 = write_manifest({"b": 1, "a": 2}, tmp_path / "x")
        p2 = write_manifest({"a": 2, "b": 1}, tmp_path / "y")
        assert p1.read_bytes() == p2.read_bytes()


class TestSchemaGuard:
    def test_unexpected_columns_rejected(self, tmp_path):
        path = tmp_path / "records.csv"
        path.write_text("layout,condition\n")
        with pytest.raises(ValueError, match="columns"):
            read_records(path)
