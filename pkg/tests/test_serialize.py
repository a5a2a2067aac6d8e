"""Canonical JSON and CSV rendering."""
import json

import pytest

from chaincert.serialize import (
    canonical_json,
    flatten_record,
    payload_to_csv,
    render,
    write_output,
)


class TestCanonicalJson:
    def test_sorted_keys_and_trailing_newline(self):
        text = canonical_json({"zebra": 1, "apple": 2})
        assert text.endswith("\n")
        assert text.index('"apple"') < text.index('"zebra"')
        assert json.loads(text) == {"zebra": 1, "apple": 2}

    def test_nested_keys_sorted(self):
        text = canonical_json({"outer": {"b": 1, "a": 2}})
        assert text.index('"a"') < text.index('"b"')

    def test_two_column_indentation(self):
        text = canonical_json({"k": [1, 2]})
        assert '\n  "k"' in text

    def test_repeated_calls_are_identical(self):
        payload = {"check": "demo", "values": [1.5, 2.5], "params": {"n": 3}}
        assert canonical_json(payload) == canonical_json(payload)


class TestFlattenRecord:
    def test_dotted_paths(self):
        flat = flatten_record({"a": {"b": {"c": 7}}, "x": 1})
        assert flat == {"a.b.c": 7, "x": 1}

    def test_list_indices(self):
        flat = flatten_record({"vals": [10, 20], "pair": (1, 2)})
        assert flat == {"vals[0]": 10, "vals[1]": 20, "pair[0]": 1, "pair[1]": 2}

    def test_mixed_nesting(self):
        flat = flatten_record({"rows": [{"n": 1}, {"n": 2}]})
        assert flat == {"rows[0].n": 1, "rows[1].n": 2}

    def test_scalars_pass_through(self):
        flat = flatten_record({"name": "x", "ok": True, "v": 1.25})
        assert flat == {"name": "x", "ok": True, "v": 1.25}


class TestPayloadToCsv:
    def test_rows_become_lines(self):
        payload = {"rows": [{"n": 10, "h": 0.5}, {"n": 20, "h": 0.4}]}
        text = payload_to_csv(payload)
        lines = text.splitlines()
        assert lines[0] == "h,n"
        assert lines[1] == "0.5,10"
        assert lines[2] == "0.4,20"

    def test_cases_key_also_works(self):
        payload = {"cases": [{"label": "a", "resid": 0.0}]}
        lines = payload_to_csv(payload).splitlines()
        assert lines[0] == "label,resid"
        assert lines[1] == "a,0.0"

    def test_nested_report_cases(self):
        payload = {"passed": True, "report": {"cases": [{"k": 1}, {"k": 2}]}}
        lines = payload_to_csv(payload).splitlines()
        assert lines == ["k", "1", "2"]

    def test_scalar_payload_gets_one_row(self):
        payload = {"check": "demo", "value": 3}
        lines = payload_to_csv(payload).splitlines()
        assert lines[0] == "check,value"
        assert lines[1] == "demo,3"

    def test_ragged_records_share_sorted_header(self):
        payload = {"rows": [{"a": 1}, {"b": 2}]}
        lines = payload_to_csv(payload).splitlines()
        assert lines[0] == "a,b"
        assert lines[1] == "1,"
        assert lines[2] == ",2"

    def test_newline_terminated(self):
        assert payload_to_csv({"rows": [{"x": 1}]}).endswith("\n")
        assert "\r" not in payload_to_csv({"rows": [{"x": 1}]})


class TestRenderAndWrite:
    def test_render_dispatch(self):
        payload = {"k": 1}
        assert render(payload, "json") == canonical_json(payload)
        assert render(payload, "csv") == payload_to_csv(payload)
        with pytest.raises(ValueError):
            render(payload, "yaml")

    def test_write_to_file(self, tmp_path):
        path = tmp_path / "out.json"
        write_output({"k": 1}, str(path))
        assert path.read_text(encoding="utf-8") == canonical_json({"k": 1})

    def test_write_to_stdout(self, capsys):
        write_output({"k": 1}, "-")
        assert capsys.readouterr().out == canonical_json({"k": 1})
        write_output({"k": 2}, None, fmt="csv")
        assert capsys.readouterr().out == payload_to_csv({"k": 2})
