"""Road geometry, Poisson vehicle placement and scenario configs."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .rng import SeedLike, make_rng


class ConfigError(ValueError):
    """Base class for scenario configuration problems."""


class ConfigParseError(ConfigError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class ConfigValidationError(ConfigError):
    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


def _positive_finite(value: float) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) \
        and math.isfinite(value) and value > 0


@dataclass(frozen=True)
class Street:
    id: str
    length: float

    def __post_init__(self):
        if not _positive_finite(self.length):
            raise ValueError(f"street {self.id!r}: length must be positive and finite, got {self.length!r}")


@dataclass(frozen=True)
class RoadScenario:
    streets: tuple[Street, ...]
    density: float
    coverage_radius: float
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "streets", tuple(self.streets))
        if not self.streets:
            raise ValueError("scenario needs at least one street")
        ids = [s.id for s in self.streets]
        if len(set(ids)) != len(ids):
            raise ValueError("street ids must be unique")
        if not _positive_finite(self.density):
            raise ValueError(f"density must be positive, got {self.density!r}")
        if not _positive_finite(self.coverage_radius):
            raise ValueError(f"coverage_radius must be positive, got {self.coverage_radius!r}")

    @property
    def lengths(self) -> list[float]:
        return [s.length for s in self.streets]


@dataclass(frozen=True)
class Vehicle:
    id: int
    street_id: str
    position: float
    coverage_radius: float


@dataclass(frozen=True)
class VehicleSet:
    street_id: str
    length: float
    vehicles: tuple[Vehicle, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "vehicles", tuple(self.vehicles))
        prev = -math.inf
        seen = set()
        for v in self.vehicles:
            if v.street_id != self.street_id:
                raise ValueError(f"vehicle {v.id} belongs to street {v.street_id!r}, not {self.street_id!r}")
            if not 0.0 <= v.position <= self.length:
                raise ValueError(f"vehicle {v.id} at {v.position} lies outside [0, {self.length}]")
            if v.position < prev:
                raise ValueError("vehicles must be sorted by position")
            if not v.coverage_radius > 0:
                raise ValueError(f"vehicle {v.id}: coverage radius must be positive")
            if v.id in seen:
                raise ValueError(f"duplicate vehicle id {v.id}")
            seen.add(v.id)
            prev = v.position

    def __len__(self) -> int:
        return len(self.vehicles)

    @property
    def positions(self) -> np.ndarray:
        return np.array([v.position for v in self.vehicles], dtype=float)

    @property
    def radii(self) -> np.ndarray:
        return np.array([v.coverage_radius for v in self.vehicles], dtype=float)

    @property
    def ids(self) -> list[int]:
        return [v.id for v in self.vehicles]

    @classmethod
    def from_positions(cls, street_id: str, length: float, positions: Sequence[float],
                       radius: float | Sequence[float] = 1.0) -> "VehicleSet":
        """Build a set from already sorted positions; ids are the ranks."""
        pos = [float(p) for p in positions]
        if np.ndim(radius) == 0:
            radii = [float(radius)] * len(pos)
        else:
            radii = [float(r) for r in radius]
            if len(radii) != len(pos):
                raise ValueError("one radius per position required")
        vehicles = tuple(Vehicle(i, street_id, p, r) for i, (p, r) in enumerate(zip(pos, radii)))
        return cls(street_id, float(length), vehicles)


def sample_positions(length: float, density: float, rng: np.random.Generator) -> np.ndarray:
    """Sorted positions of a homogeneous Poisson process on [0, length]."""
    count = rng.poisson(density * length)
    return np.sort(rng.uniform(0.0, length, size=count))


def place_vehicles(street: Street, density: float, seed: SeedLike,
                   coverage_radius: float = 1.0) -> VehicleSet:
    """Poisson placement of vehicles along one street.

    The count is drawn from Poisson(density * length) and positions are iid
    uniform on the street, returned in ascending order. Identical inputs give
    identical outputs.
    """
    if not _positive_finite(density):
        raise ValueError(f"density must be positive, got {density!r}")
    if not _positive_finite(street.length):
        raise ValueError(f"street length must be positive, got {street.length!r}")
    positions = sample_positions(street.length, density, make_rng(seed))
    return VehicleSet.from_positions(street.id, street.length, positions, coverage_radius)


def truncate_placement(vs: VehicleSet, new_length: float) -> VehicleSet:
    """Keep the vehicles at positions <= new_length on a shortened street."""
    if not (0 < new_length <= vs.length):
        raise ValueError(f"new_length must lie in (0, {vs.length}], got {new_length!r}")
    kept = tuple(v for v in vs.vehicles if v.position <= new_length)
    return VehicleSet(vs.street_id, float(new_length), kept)


_TOP_FIELDS = {"streets", "density_per_m", "coverage_radius_m", "seed"}
_STREET_FIELDS = {"id", "length_m"}


def _number(doc: Mapping[str, Any], key: str, where: str) -> float:
    if key not in doc:
        raise ConfigValidationError(where, "missing required field")
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigValidationError(where, f"expected a number, got {type(value).__name__}")
    if not _positive_finite(value):
        raise ConfigValidationError(where, f"must be positive and finite, got {value!r}")
    return float(value)


def scenario_from_dict(doc: Any) -> RoadScenario:
    if not isinstance(doc, dict):
        raise ConfigValidationError("$", "top level must be a JSON object")
    unknown = sorted(set(doc) - _TOP_FIELDS)
    if unknown:
        raise ConfigValidationError(unknown[0], "unknown field")

    raw_streets = doc.get("streets")
    if not isinstance(raw_streets, list):
        raise ConfigValidationError("streets", "expected a list of streets")
    if not raw_streets:
        raise ConfigValidationError("streets", "at least one street is required")

    streets = []
    for i, raw in enumerate(raw_streets):
        where = f"streets[{i}]"
        if not isinstance(raw, dict):
            raise ConfigValidationError(where, "expected an object")
        extra = sorted(set(raw) - _STREET_FIELDS)
        if extra:
            raise ConfigValidationError(f"{where}.{extra[0]}", "unknown field")
        if "id" not in raw:
            raise ConfigValidationError(f"{where}.id", "missing required field")
        sid = raw["id"]
        if isinstance(sid, bool) or not isinstance(sid, (str, int)):
            raise ConfigValidationError(f"{where}.id", "expected a string or integer")
        length = _number(raw, "length_m", f"{where}.length_m")
        streets.append(Street(str(sid), length))
    if len({s.id for s in streets}) != len(streets):
        raise ConfigValidationError("streets", "street ids must be unique")

    density = _number(doc, "density_per_m", "density_per_m")
    radius = _number(doc, "coverage_radius_m", "coverage_radius_m")

    seed = doc.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
        raise ConfigValidationError("seed", "expected a non-negative integer")
    return RoadScenario(tuple(streets), density, radius, seed)


def load_scenario(source: str | Path | Mapping[str, Any]) -> RoadScenario:
    """Parse and validate a scenario config.

    ``source`` may be a path, a JSON string, or an already-decoded mapping.
    """
    if isinstance(source, Mapping):
        return scenario_from_dict(dict(source))
    if isinstance(source, Path):
        text = source.read_text(encoding="utf-8")
    else:
        text = source
        if not text.lstrip().startswith(("{", "[")):
            text = Path(text).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(exc.msg, exc.lineno, exc.colno) from None
    return scenario_from_dict(doc)


def reference_road(density: float = 0.1, coverage_radius: float = 100.0, seed: int | None = None) -> RoadScenario:
    """The 5 km road: five straight streets of 600 to 1400 m."""
    streets = tuple(Street(f"street-{i + 1}", float(length))
                    for i, length in enumerate((600, 800, 1000, 1200, 1400)))
    return RoadScenario(streets, density, coverage_radius, seed)
