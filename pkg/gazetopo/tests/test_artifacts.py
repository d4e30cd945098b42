import json
import math

import pytest

from gazetopo.artifacts import read_json, write_json
from gazetopo.errors import InputError
from gazetopo.persistence import PersistenceDiagram


def test_json_floats_carry_17_significant_digits(tmp_path):
    diagram = PersistenceDiagram(dim=1, bars=[[0.0, 0.1], [0.25, math.inf]])
    path = write_json(tmp_path / "diagram.json", {"source": "0001.csv", "points": 12, "diagram": diagram.to_dict()})

    text = path.read_text(encoding="utf-8")
    assert "0.10000000000000001" in text
    assert '"0001.csv"' in text
    assert '"points": 12' in text
    assert '"inf"' in text

    restored = PersistenceDiagram.from_dict(read_json(path)["diagram"])
    assert restored.bars.tolist() == diagram.bars.tolist()


def test_whole_floats_stay_floats(tmp_path):
    path = write_json(tmp_path / "values.json", {"a": 1.0, "b": 1e16, "c": -2.5e-7, "d": [3, 0.5]})

    loaded = json.loads(path.read_text(encoding="utf-8"))
    assert loaded == {"a": 1.0, "b": 1e16, "c": -2.5e-7, "d": [3, 0.5]}
    assert isinstance(loaded["a"], float)
    assert isinstance(loaded["b"], float)
    assert isinstance(loaded["d"][0], int)


def test_read_json_errors(tmp_path):
    with pytest.raises(InputError):
        read_json(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{oops", encoding="utf-8")
    with pytest.raises(InputError):
        read_json(bad)
