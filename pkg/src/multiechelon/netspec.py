"""Parameter types for echelons, chains and full networks, plus config I/O.

Config documents are JSON objects with a top-level ``model`` key:

``echelon``
    ``{"warehouses": [{"L", "mu", "theta", "lambda"}, ...], "gamma": matrix | scalar, "y0": [...]}``
``chain``
    ``{"echelons": [{"C", "mu", "theta"}, ...], "lambda_c": float, "x0": [...]}``
``full-network``
    ``{"echelons": [echelon-object, ...], "lambda_c": float}`` where each
    echelon-object is an ``echelon`` body plus an optional ``mu_c`` (the
    echelon's total supply rate; defaults to the sum of its warehouses' ``mu``).

Rates are in units/time, deterioration in fraction/time, levels in units.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from numbers import Real
from typing import Any, Union

import numpy as np

from .errors import ConfigError

MODEL_KINDS = ("echelon", "chain", "full-network")


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, Real):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{where}: must be finite")
    return value


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class WarehouseParams:
    max_level: float
    max_supply: float
    deterioration: float
    demand: float

    def __post_init__(self):
        _check_warehouse(self.max_level, self.max_supply, self.deterioration, self.demand, "warehouse")


def _check_warehouse(L: float, mu: float, theta: float, lam: float, where: str) -> None:
    if not L > 0:
        raise ConfigError(f"{where}.L must be > 0 (got {L})")
    if mu < 0:
        raise ConfigError(f"{where}.mu must be >= 0 (got {mu})")
    if theta < 0:
        raise ConfigError(f"{where}.theta must be >= 0 (got {theta})")
    if lam < 0:
        raise ConfigError(f"{where}.lambda must be >= 0 (got {lam})")


@dataclass(frozen=True, eq=False)
class EchelonSpec:
    """Warehouses of one echelon and their maximum transshipment rates.

    ``transshipment[i, j]`` is the maximum rate from warehouse ``i`` to ``j``.
    Asymmetric matrices are accepted.
    """

    warehouses: tuple[WarehouseParams, ...]
    transshipment: np.ndarray
    initial_levels: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "warehouses", tuple(self.warehouses))
        gamma = np.asarray(self.transshipment, dtype=float)
        n = len(self.warehouses)
        if n < 1:
            raise ConfigError("warehouses: at least one warehouse is required")
        if gamma.shape != (n, n):
            raise ConfigError(f"gamma: expected a {n}x{n} matrix, got shape {gamma.shape}")
        if not np.all(np.isfinite(gamma)):
            raise ConfigError("gamma: entries must be finite")
        for i in range(n):
            if gamma[i, i] != 0:
                raise ConfigError(f"gamma[{i}][{i}] must be 0 (got {gamma[i, i]})")
        bad = np.argwhere(gamma < 0)
        if bad.size:
            i, j = bad[0]
            raise ConfigError(f"gamma[{i}][{j}] must be >= 0 (got {gamma[i, j]})")
        object.__setattr__(self, "transshipment", _frozen(gamma))
        if self.initial_levels is not None:
            y0 = tuple(float(v) for v in self.initial_levels)
            if len(y0) != n:
                raise ConfigError(f"y0: expected {n} values, got {len(y0)}")
            object.__setattr__(self, "initial_levels", y0)

    @classmethod
    def from_arrays(cls, L, mu, theta, lam, gamma=0.0, y0=None) -> "EchelonSpec":
        L = np.atleast_1d(np.asarray(L, dtype=float))
        n = L.size
        mu, theta, lam = (np.broadcast_to(np.asarray(v, dtype=float), (n,)) for v in (mu, theta, lam))
        return cls(
            tuple(WarehouseParams(*map(float, row)) for row in zip(L, mu, theta, lam)),
            expand_gamma(gamma, n),
            None if y0 is None else tuple(np.asarray(y0, dtype=float)),
        )

    @property
    def n(self) -> int:
        return len(self.warehouses)

    @property
    def L(self) -> np.ndarray:
        return np.array([w.max_level for w in self.warehouses])

    @property
    def mu(self) -> np.ndarray:
        return np.array([w.max_supply for w in self.warehouses])

    @property
    def theta(self) -> np.ndarray:
        return np.array([w.deterioration for w in self.warehouses])

    @property
    def lam(self) -> np.ndarray:
        return np.array([w.demand for w in self.warehouses])

    @property
    def symmetric(self) -> bool:
        return bool(np.array_equal(self.transshipment, self.transshipment.T))

    def __eq__(self, other):
        if not isinstance(other, EchelonSpec):
            return NotImplemented
        return (
            self.warehouses == other.warehouses
            and np.array_equal(self.transshipment, other.transshipment)
            and self.initial_levels == other.initial_levels
        )


@dataclass(frozen=True)
class ChainEchelon:
    capacity: float
    max_supply: float
    deterioration: float


@dataclass(frozen=True)
class ChainSpec:
    """The m-echelon aggregated chain; echelon 1 is the top (supplied externally)."""

    echelons: tuple[ChainEchelon, ...]
    terminal_demand: float
    initial_levels: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "echelons", tuple(self.echelons))
        if len(self.echelons) < 2:
            raise ConfigError(f"echelons: a chain needs at least 2 echelons, got {len(self.echelons)}")
        for i, e in enumerate(self.echelons):
            if not e.capacity > 0:
                raise ConfigError(f"echelons[{i}].C must be > 0 (got {e.capacity})")
            if e.max_supply < 0:
                raise ConfigError(f"echelons[{i}].mu must be >= 0 (got {e.max_supply})")
            if e.deterioration < 0:
                raise ConfigError(f"echelons[{i}].theta must be >= 0 (got {e.deterioration})")
        if self.terminal_demand < 0:
            raise ConfigError(f"lambda_c must be >= 0 (got {self.terminal_demand})")
        if self.initial_levels is not None:
            x0 = tuple(float(v) for v in self.initial_levels)
            if len(x0) != len(self.echelons):
                raise ConfigError(f"x0: expected {len(self.echelons)} values, got {len(x0)}")
            object.__setattr__(self, "initial_levels", x0)

    @classmethod
    def from_arrays(cls, C, mu, theta, lambda_c, x0=None) -> "ChainSpec":
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        m = mu.size
        C, theta = (np.broadcast_to(np.asarray(v, dtype=float), (m,)) for v in (C, theta))
        echelons = tuple(ChainEchelon(*map(float, row)) for row in zip(C, mu, theta))
        return cls(echelons, float(lambda_c), None if x0 is None else tuple(np.asarray(x0, dtype=float)))

    @property
    def m(self) -> int:
        return len(self.echelons)

    @property
    def C(self) -> np.ndarray:
        return np.array([e.capacity for e in self.echelons])

    @property
    def mu(self) -> np.ndarray:
        return np.array([e.max_supply for e in self.echelons])

    @property
    def theta(self) -> np.ndarray:
        return np.array([e.deterioration for e in self.echelons])


@dataclass(frozen=True)
class FullNetworkSpec:
    """Detailed echelons of a multi-echelon network.

    ``supply_rates[e]`` is the total maximum supply rate into echelon ``e``.
    """

    echelons: tuple[EchelonSpec, ...]
    supply_rates: tuple[float, ...]
    terminal_demand: float
    explicit_supply: tuple[bool, ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "echelons", tuple(self.echelons))
        object.__setattr__(self, "supply_rates", tuple(float(v) for v in self.supply_rates))
        if len(self.echelons) < 2:
            raise ConfigError(f"echelons: a network needs at least 2 echelons, got {len(self.echelons)}")
        if len(self.supply_rates) != len(self.echelons):
            raise ConfigError("supply_rates: one value per echelon is required")
        for i, mu_c in enumerate(self.supply_rates):
            if mu_c < 0:
                raise ConfigError(f"echelons[{i}].mu_c must be >= 0 (got {mu_c})")
        if self.terminal_demand < 0:
            raise ConfigError(f"lambda_c must be >= 0 (got {self.terminal_demand})")
        if not self.explicit_supply:
            object.__setattr__(self, "explicit_supply", (True,) * len(self.echelons))

    @property
    def m(self) -> int:
        return len(self.echelons)


Spec = Union[EchelonSpec, ChainSpec, FullNetworkSpec]


def expand_gamma(gamma: Any, n: int) -> np.ndarray:
    """Scalar ``g`` becomes the n-by-n matrix with ``g`` off the diagonal."""
    if gamma is None:
        return np.zeros((n, n))
    if np.ndim(gamma) == 0:
        g = np.full((n, n), float(gamma))
        np.fill_diagonal(g, 0.0)
        return g
    return np.asarray(gamma, dtype=float)


def validate_positivity_condition(spec: EchelonSpec) -> np.ndarray:
    """Per-warehouse flag ``mu_i > lambda_i``.

    When every flag holds and the initial levels are positive, levels stay
    positive for all time and the equilibrium is positive.
    """
    return spec.mu > spec.lam


# -- parsing ---------------------------------------------------------------


def _require(doc: dict, key: str, where: str) -> Any:
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: expected an object")
    if key not in doc:
        raise ConfigError(f"{where}: missing field {key!r}")
    return doc[key]


def _vector(value: Any, where: str) -> list[float]:
    if not isinstance(value, list):
        raise ConfigError(f"{where}: expected a list")
    return [_number(v, f"{where}[{i}]") for i, v in enumerate(value)]


def _parse_gamma(value: Any, n: int, where: str) -> np.ndarray:
    if value is None:
        return np.zeros((n, n))
    if not isinstance(value, list):
        return expand_gamma(_number(value, where), n)
    if len(value) != n:
        raise ConfigError(f"{where}: expected {n} rows, got {len(value)}")
    rows = []
    for i, row in enumerate(value):
        row = _vector(row, f"{where}[{i}]")
        if len(row) != n:
            raise ConfigError(f"{where}[{i}]: expected {n} columns, got {len(row)}")
        rows.append(row)
    return np.array(rows, dtype=float)


def _parse_warehouse(doc: Any, where: str, *, rates_required: bool = True) -> WarehouseParams:
    get = (lambda k: _number(_require(doc, k, where), f"{where}.{k}"))
    opt = (lambda k: _number(doc[k], f"{where}.{k}") if k in doc else 0.0)
    L, theta = get("L"), get("theta")
    mu, lam = (get("mu"), get("lambda")) if rates_required else (opt("mu"), opt("lambda"))
    _check_warehouse(L, mu, theta, lam, where)
    return WarehouseParams(L, mu, theta, lam)


def _parse_echelon(doc: Any, where: str = "", *, rates_required: bool = True) -> EchelonSpec:
    prefix = f"{where}." if where else ""
    raw = _require(doc, "warehouses", where or "document")
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{prefix}warehouses: expected a non-empty list")
    warehouses = tuple(
        _parse_warehouse(w, f"{prefix}warehouses[{i}]", rates_required=rates_required) for i, w in enumerate(raw)
    )
    gamma = _parse_gamma(doc.get("gamma"), len(warehouses), f"{prefix}gamma")
    y0 = _vector(doc["y0"], f"{prefix}y0") if "y0" in doc else None
    try:
        return EchelonSpec(warehouses, gamma, y0)
    except ConfigError as exc:
        raise ConfigError(f"{prefix}{exc}") from None


def _parse_chain(doc: dict) -> ChainSpec:
    raw = _require(doc, "echelons", "document")
    if not isinstance(raw, list):
        raise ConfigError("echelons: expected a list")
    echelons = []
    for i, e in enumerate(raw):
        where = f"echelons[{i}]"
        echelons.append(ChainEchelon(*(_number(_require(e, k, where), f"{where}.{k}") for k in ("C", "mu", "theta"))))
    lam = _number(_require(doc, "lambda_c", "document"), "lambda_c")
    x0 = _vector(doc["x0"], "x0") if "x0" in doc else None
    return ChainSpec(tuple(echelons), lam, x0)


def _parse_network(doc: dict) -> FullNetworkSpec:
    raw = _require(doc, "echelons", "document")
    if not isinstance(raw, list):
        raise ConfigError("echelons: expected a list")
    echelons, supply, explicit = [], [], []
    for i, e in enumerate(raw):
        where = f"echelons[{i}]"
        ech = _parse_echelon(e, where, rates_required=False)
        echelons.append(ech)
        if "mu_c" in e:
            supply.append(_number(e["mu_c"], f"{where}.mu_c"))
            explicit.append(True)
        else:
            supply.append(float(ech.mu.sum()))
            explicit.append(False)
    lam = _number(_require(doc, "lambda_c", "document"), "lambda_c")
    return FullNetworkSpec(tuple(echelons), tuple(supply), lam, tuple(explicit))


def parse_config(text: str | dict) -> Spec:
    """Parse a config document (JSON text or an already-decoded dict)."""
    if isinstance(text, str):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
    else:
        doc = text
    if not isinstance(doc, dict):
        raise ConfigError("document: expected a JSON object")
    kind = _require(doc, "model", "document")
    if kind == "echelon":
        return _parse_echelon(doc)
    if kind == "chain":
        return _parse_chain(doc)
    if kind == "full-network":
        return _parse_network(doc)
    raise ConfigError(f"model: expected one of {', '.join(MODEL_KINDS)}, got {kind!r}")


def load_config(path) -> Spec:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)


# -- serialization ---------------------------------------------------------


def _echelon_body(spec: EchelonSpec) -> dict:
    body = {
        "warehouses": [
            {"L": w.max_level, "mu": w.max_supply, "theta": w.deterioration, "lambda": w.demand}
            for w in spec.warehouses
        ],
        "gamma": spec.transshipment.tolist(),
    }
    if spec.initial_levels is not None:
        body["y0"] = list(spec.initial_levels)
    return body


def to_config(spec: Spec) -> dict:
    if isinstance(spec, EchelonSpec):
        return {"model": "echelon", **_echelon_body(spec)}
    if isinstance(spec, ChainSpec):
        doc = {
            "model": "chain",
            "echelons": [{"C": e.capacity, "mu": e.max_supply, "theta": e.deterioration} for e in spec.echelons],
            "lambda_c": spec.terminal_demand,
        }
        if spec.initial_levels is not None:
            doc["x0"] = list(spec.initial_levels)
        return doc
    if isinstance(spec, FullNetworkSpec):
        return {
            "model": "full-network",
            "echelons": [{**_echelon_body(e), "mu_c": mu_c} for e, mu_c in zip(spec.echelons, spec.supply_rates)],
            "lambda_c": spec.terminal_demand,
        }
    raise TypeError(f"not a spec: {type(spec).__name__}")


def dump_config(spec: Spec) -> str:
    return json.dumps(to_config(spec), indent=2)
