import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multiechelon import (
    ChainSpec,
    ConfigError,
    EchelonSpec,
    FullNetworkSpec,
    WarehouseParams,
    dump_config,
    load_config,
    parse_config,
    to_config,
    validate_positivity_condition,
)
from multiechelon.netspec import expand_gamma

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def echelon_doc(**over):
    doc = {
        "model": "echelon",
        "warehouses": [
            {"L": 100, "mu": 3, "theta": 0.1, "lambda": 1},
            {"L": 200, "mu": 4, "theta": 0.2, "lambda": 2},
            {"L": 200, "mu": 5, "theta": 0.3, "lambda": 3},
        ],
        "gamma": [[0, 0.5, 0.2], [0.5, 0, 1], [0.2, 1, 0]],
    }
    doc.update(over)
    return doc


def test_parse_three_warehouse_example():
    spec = parse_config(echelon_doc())
    assert isinstance(spec, EchelonSpec)
    assert spec.n == 3
    np.testing.assert_array_equal(spec.L, [100, 200, 200])
    np.testing.assert_array_equal(spec.lam, [1, 2, 3])
    assert spec.symmetric
    assert spec.initial_levels is None


def test_nonzero_diagonal_gamma_names_entry():
    doc = echelon_doc(gamma=[[0.5, 0.5, 0.2], [0.5, 0, 1], [0.2, 1, 0]])
    with pytest.raises(ConfigError, match=r"gamma\[0\]\[0\]"):
        parse_config(doc)


def test_single_warehouse_without_gamma():
    doc = {"model": "echelon", "warehouses": [{"L": 10, "mu": 2, "theta": 0.1, "lambda": 1}]}
    spec = parse_config(doc)
    assert spec.n == 1
    np.testing.assert_array_equal(spec.transshipment, [[0.0]])


@pytest.mark.parametrize(
    "field, value, pattern",
    [
        ("L", 0, r"warehouses\[1\]\.L"),
        ("L", -5, r"warehouses\[1\]\.L"),
        ("mu", -1, r"warehouses\[1\]\.mu"),
        ("theta", -0.1, r"warehouses\[1\]\.theta"),
        ("lambda", -2, r"warehouses\[1\]\.lambda"),
    ],
)
def test_invalid_warehouse_fields(field, value, pattern):
    doc = echelon_doc()
    doc["warehouses"][1][field] = value
    with pytest.raises(ConfigError, match=pattern):
        parse_config(doc)


def test_missing_field_and_bad_shapes():
    doc = echelon_doc()
    del doc["warehouses"][2]["theta"]
    with pytest.raises(ConfigError, match="theta"):
        parse_config(doc)
    with pytest.raises(ConfigError, match="gamma"):
        parse_config(echelon_doc(gamma=[[0, 1], [1, 0]]))
    with pytest.raises(ConfigError, match=r"gamma\[0\]\[2\]"):
        parse_config(echelon_doc(gamma=[[0, 0.5, -0.2], [0.5, 0, 1], [0.2, 1, 0]]))
    with pytest.raises(ConfigError):
        parse_config("{not json")


def test_scalar_gamma_expands():
    g = expand_gamma(1.5, 3)
    np.testing.assert_array_equal(g, [[0, 1.5, 1.5], [1.5, 0, 1.5], [1.5, 1.5, 0]])
    spec = parse_config(echelon_doc(gamma=2))
    assert spec.transshipment[1, 2] == 2 and spec.transshipment[2, 2] == 0


def test_asymmetric_gamma_accepted():
    spec = parse_config(echelon_doc(gamma=[[0, 0.5, 0.2], [0.1, 0, 1], [0.2, 1, 0]]))
    assert not spec.symmetric


def test_transshipment_is_read_only():
    spec = parse_config(echelon_doc())
    with pytest.raises(ValueError):
        spec.transshipment[0, 1] = 9.0


def test_positivity_flags():
    spec = EchelonSpec.from_arrays([10, 10, 10], [3, 2, 5], 0.1, [1, 2, 6])
    np.testing.assert_array_equal(validate_positivity_condition(spec), [True, False, False])


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.json")))
def test_shipped_configs_round_trip(name):
    spec = load_config(CONFIGS / name)
    assert parse_config(dump_config(spec)) == spec


def test_chain_config():
    spec = parse_config(
        {"model": "chain", "echelons": [{"C": 100, "mu": 50, "theta": 0.04}, {"C": 100, "mu": 30, "theta": 0.08}], "lambda_c": 5}
    )
    assert isinstance(spec, ChainSpec)
    assert spec.m == 2
    np.testing.assert_array_equal(spec.mu, [50, 30])
    with pytest.raises(ConfigError, match="lambda_c"):
        parse_config({"model": "chain", "echelons": [{"C": 1, "mu": 1, "theta": 0}] * 2, "lambda_c": -1})
    with pytest.raises(ConfigError, match=r"echelons\[1\]\.C"):
        ChainSpec.from_arrays([1, 0], [1, 1], 0, 1)


def test_full_network_defaults_supply_to_warehouse_sum():
    doc = {
        "model": "full-network",
        "lambda_c": 5,
        "echelons": [
            {"warehouses": [{"L": 10, "mu": 2, "theta": 0.1}, {"L": 10, "mu": 3, "theta": 0.1}], "gamma": 1},
            {"warehouses": [{"L": 10, "theta": 0.2}], "mu_c": 4},
        ],
    }
    net = parse_config(doc)
    assert isinstance(net, FullNetworkSpec)
    assert net.supply_rates == (5.0, 4.0)
    assert parse_config(dump_config(net)) == net


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.json")


positive = st.floats(0.1, 500, allow_nan=False)
nonneg = st.floats(0, 50, allow_nan=False)


@st.composite
def echelon_specs(draw):
    n = draw(st.integers(1, 6))
    rows = [WarehouseParams(draw(positive), draw(nonneg), draw(nonneg), draw(nonneg)) for _ in range(n)]
    gamma = np.array([[0.0 if i == j else draw(nonneg) for j in range(n)] for i in range(n)])
    y0 = draw(st.none() | st.just(tuple(draw(nonneg) for _ in range(n))))
    return EchelonSpec(tuple(rows), gamma, y0)


@settings(max_examples=100, deadline=None)
@given(echelon_specs())
def test_round_trip_property(spec):
    text = dump_config(spec)
    assert parse_config(text) == spec
    assert json.loads(text) == to_config(spec)
