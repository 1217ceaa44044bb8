import json

import numpy as np
import pytest

from oracles import rand_state, rand_unitary
from resource_kit.channels import random_dio
from resource_kit.io import (
    ParseError,
    channel_from_json,
    channel_to_json,
    dumps,
    load_file,
    loads,
    matrix_from_json,
    matrix_to_json,
    mc_state_from_json,
    mc_state_to_json,
    reports_to_csv,
)
from resource_kit.protocols import CSV_COLUMNS, simulate_formation
from resource_kit.states import MCState, mc_embed


def roundtrip(obj):
    return json.loads(dumps(obj))


def test_matrix_roundtrip_is_bit_exact():
    rng = np.random.default_rng(0)
    for shape in ((1, 1), (3, 3), (2, 5), (4, 1)):
        M = rng.normal(size=shape) + 1j * rng.normal(size=shape)
        M *= 10.0 ** rng.integers(-300, 300, size=shape)
        back = matrix_from_json(roundtrip(matrix_to_json(M)))
        assert back.shape == M.shape
        assert np.array_equal(back.view(np.uint64), M.view(np.uint64))
    assert matrix_to_json(np.eye(2))["dim"] == 2
    assert matrix_to_json(np.ones((2, 3)))["rows"] == 2


def test_channel_roundtrip_is_bit_exact():
    for seed in range(3):
        ch = random_dio(2, 3, seed)
        back = channel_from_json(roundtrip(channel_to_json(ch)))
        assert (back.in_dim, back.out_dim) == (2, 3)
        assert np.array_equal(back.kraus, ch.kraus)


def test_mc_state_roundtrip():
    rng = np.random.default_rng(1)
    mc = mc_embed(rand_state(3, rng))
    obj = roundtrip(mc_state_to_json(mc))
    assert obj["canonical"] is True and "bases" not in obj
    back = mc_state_from_json(obj)
    assert np.array_equal(back.expand(), mc.expand())
    rot = mc_embed(rand_state(2, rng), 2, [rand_unitary(2, rng), rand_unitary(2, rng)])
    back = mc_state_from_json(roundtrip(mc_state_to_json(rot)))
    assert isinstance(back, MCState)
    assert np.array_equal(back.expand(), rot.expand())


def test_parse_errors(tmp_path):
    bad = [
        {"dim": 2, "re": [[1, 0]], "im": [[0, 0]]},
        {"re": [[1]]},
        {"dim": 1, "re": [["x"]]},
        {"dim": 1, "re": [[float("nan")]]},
    ]
    for obj in bad:
        with pytest.raises(ParseError):
            matrix_from_json(obj)
    with pytest.raises(ParseError):
        channel_from_json({"in_dim": 2, "out_dim": 2, "kraus": []})
    with pytest.raises(ParseError):
        channel_from_json({"in_dim": 3, "out_dim": 2, "kraus": [matrix_to_json(np.eye(2))]})
    with pytest.raises(ParseError):
        mc_state_from_json({"bases": []})
    with pytest.raises(ParseError):
        loads("{not json")
    with pytest.raises(ParseError):
        load_file(tmp_path / "missing.json")


def test_dumps_is_deterministic():
    a = dumps({"b": np.float64(0.1), "a": np.arange(3), "c": 1 + 2j})
    b = dumps({"c": 1 + 2j, "a": [0, 1, 2], "b": 0.1})
    assert a == b
    assert list(json.loads(a)) == ["a", "b", "c"]


def test_csv_rows():
    rho = np.array([[0.7, 0.3], [0.3, 0.3]], dtype=complex)
    reps = [simulate_formation(rho, n, 0.2, 0.3) for n in (4, 5)]
    text = reports_to_csv(reps, CSV_COLUMNS)
    assert text == reports_to_csv(reps, CSV_COLUMNS)
    lines = text.strip().split("\n")
    assert lines[0] == ",".join(CSV_COLUMNS) and len(lines) == 3
    rate = float(lines[1].split(",")[CSV_COLUMNS.index("rate")])
    assert rate == reps[0].rate
