import math

from ratio_allocator.utils.io import (
    read_json,
    safe_name,
    should_process_output,
    write_json,
    write_rows_csv,
)


def test_should_process_output(tmp_path):
    path = tmp_path / "table.csv"
    assert should_process_output(path, replace=False)
    path.write_text("x\n")
    assert not should_process_output(path, replace=False)
    assert should_process_output(path, replace=True)


def test_json_has_no_nan(tmp_path):
    path = write_json({"b": [1.0, math.nan], "a": {"c": math.inf}}, tmp_path / "nested" / "out.json")
    assert read_json(path) == {"a": {"c": None}, "b": [1.0, None]}
    assert path.read_text().index('"a"') < path.read_text().index('"b"')


def test_rows_csv_fills_missing_columns(tmp_path):
    rows = [{"variable": "dy", "RI": 0.5}, {"variable": "tms", "RI": -0.1, "stderr": 0.02}]
    path = write_rows_csv(rows, tmp_path / "rows.csv", ["variable", "RI", "stderr"])
    lines = path.read_text().splitlines()
    assert lines[0] == "variable,RI,stderr"
    assert lines[1] == "dy,0.5,"


def test_safe_name():
    assert safe_name("static:60") == "static-60"
    assert safe_name("static:62.5") == "static-62_5"
