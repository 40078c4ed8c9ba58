import json
from fractions import Fraction

import numpy as np

from qfound.report import CheckReport, format_number, jsonable


def test_status_values():
    rep = CheckReport("t")
    rep.add("a", True)
    rep.add("b", True, warn=True)
    rep.add("c", False, warn=True)
    assert [c.status for c in rep.checks] == ["pass", "warn", "fail"]
    assert not rep.ok and [c.name for c in rep.failed()] == ["c"]


def test_check_dict_key_order():
    rep = CheckReport()
    rep.add("x", True, 1.0, 1.0, 1e-9)
    assert list(rep.checks[0].as_dict()) == ["name", "status", "value", "expected", "tolerance"]


def test_extend_prefixes_and_keeps_warn():
    inner = CheckReport()
    inner.add("x", True, warn=True)
    outer = CheckReport()
    outer.extend(inner, "p: ")
    assert outer["p: x"].status == "warn"


def test_number_formats():
    assert format_number(Fraction(1, 12)) == "1/12"
    assert format_number(Fraction(4, 2)) == "2"
    assert format_number(1 / 3) == "0.333333333333333"
    assert format_number(True) == "true"
    assert format_number(complex(1, -2)) == "1-2i"


def test_jsonable_handles_numpy():
    out = jsonable({"a": np.float64(0.1), "b": np.arange(3), "c": Fraction(2, 3), 4: np.int64(5)})
    assert json.loads(json.dumps(out)) == {"a": 0.1, "b": [0, 1, 2], "c": "2/3", "4": 5}
