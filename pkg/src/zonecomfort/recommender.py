"""Zone recommendations: score every deployed zone model for a user and pick
the zone whose predicted comfort is closest to neutral.

A zone is scorable when every sensor ever seen in it has a reading within the
staleness limit and a fresh weather sample exists; PMV/PPD are recomputed from
the latest readings before scoring.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

import numpy as np

from .core import SensorReading, WeatherSample, format_timestamp, scalar_to_label
from .ingest import (
    SENSOR_BLOCK_FIELDS,
    WEATHER_FIELDS,
    MinMaxParams,
    feature_schema,
    one_hot_encode,
)
from .pmv import DEFAULT_ASSUMPTIONS, PmvAssumptions, pmv_from_sensor

DEFAULT_STALENESS_LIMIT = timedelta(minutes=60)

COMFORTABLE = "comfortable"


class NoRecommendationError(RuntimeError):
    """No zone is currently scorable."""


@dataclass(frozen=True)
class ZoneGeometry:
    zone: int
    name: str
    polygon: tuple  # ((x, y), ...) in floorplan coordinates

    def to_payload(self) -> dict:
        return {"zone": self.zone, "name": self.name, "polygon": [list(p) for p in self.polygon]}


# Reference floorplan: four workspaces side by side.
DEFAULT_FLOORPLAN = {
    1: ZoneGeometry(1, "workspace one", ((0, 0), (10, 0), (10, 8), (0, 8))),
    2: ZoneGeometry(2, "workspace two", ((10, 0), (20, 0), (20, 8), (10, 8))),
    3: ZoneGeometry(3, "workspace three", ((20, 0), (30, 0), (30, 8), (20, 8))),
    4: ZoneGeometry(4, "workspace four", ((30, 0), (40, 0), (40, 8), (30, 8))),
}


@dataclass(frozen=True)
class ZoneModelBundle:
    """A deployed champion model plus everything needed to build its input row."""

    zone: int
    family: str  # svr | rf
    model: object  # predict(X) -> vector
    user_registry: list[str]
    sensors: list[str]
    scaling: MinMaxParams
    provenance: str  # champion family + parameter summary

    @property
    def schema(self) -> list[str]:
        return feature_schema(self.user_registry, self.sensors)


@dataclass(frozen=True)
class ZoneConditions:
    zone: int
    sensor_blocks: dict  # sensor id -> {field: value} incl. pmv/ppd
    weather: dict
    as_of: datetime


@dataclass(frozen=True)
class UnscorableZone:
    zone: int
    reason: str


@dataclass(frozen=True)
class ZoneScore:
    zone: int
    predicted: float
    label: str
    model_provenance: str

    def to_payload(self) -> dict:
        return {
            "zone": self.zone,
            "predicted": self.predicted,
            "label": self.label,
            "model_provenance": self.model_provenance,
        }


@dataclass(frozen=True)
class Recommendation:
    user: str
    chosen: ZoneScore
    all_scores: list[ZoneScore]
    no_better_option: bool
    floorplan_highlight: ZoneGeometry
    generated_at: datetime

    def to_payload(self) -> dict:
        return {
            "user": self.user,
            "zone": self.chosen.zone,
            "zone_name": self.floorplan_highlight.name,
            "label": self.chosen.label,
            "no_better_option": self.no_better_option,
            "scores": [s.to_payload() for s in self.all_scores],
            "floorplan_highlight": self.floorplan_highlight.zone,
            "generated_at": format_timestamp(self.generated_at),
        }


def latest_zone_conditions(
    zone: int,
    sensor_log: list[SensorReading],
    weather_source: list[WeatherSample],
    staleness_limit: timedelta = DEFAULT_STALENESS_LIMIT,
    now: datetime | None = None,
    assumptions: PmvAssumptions = DEFAULT_ASSUMPTIONS,
) -> ZoneConditions | UnscorableZone:
    """Newest reading per zone sensor plus newest weather, all fresh, with
    PMV/PPD recomputed; otherwise the zone is unscorable with a reason."""
    now = now or datetime.now(timezone.utc)

    latest: dict[str, SensorReading] = {}
    for reading in sensor_log:
        if reading.zone != zone:
            continue
        have = latest.get(reading.sensor)
        if have is None or reading.timestamp > have.timestamp:
            latest[reading.sensor] = reading
    if not latest:
        return UnscorableZone(zone, "no sensors")

    blocks = {}
    for sensor in sorted(latest):
        reading = latest[sensor]
        if now - reading.timestamp > staleness_limit:
            return UnscorableZone(zone, f"stale sensor {sensor}")
        pmv, ppd = pmv_from_sensor(reading, assumptions)
        blocks[sensor] = {
            "illuminance": reading.illuminance,
            "sound_pressure": reading.sound_pressure,
            "motion": reading.motion,
            "temperature": reading.temperature,
            "relative_humidity": reading.relative_humidity,
            "pmv": pmv,
            "ppd": ppd,
        }

    if not weather_source:
        return UnscorableZone(zone, "no weather")
    newest = max(weather_source, key=lambda w: w.timestamp)
    if now - newest.timestamp > staleness_limit:
        return UnscorableZone(zone, "stale weather")
    weather = {
        "outside_temperature": newest.outside_temperature,
        "outside_relative_humidity": newest.outside_relative_humidity,
        "uv_index": newest.uv_index,
    }
    return ZoneConditions(zone=zone, sensor_blocks=blocks, weather=weather, as_of=now)


def feature_row(user: str, bundle: ZoneModelBundle, conditions: ZoneConditions) -> np.ndarray:
    """Scaled scoring row in the bundle's schema order; unknown users encode
    as all zeros."""
    row = list(one_hot_encode(user, bundle.user_registry))
    for sensor in bundle.sensors:
        if sensor not in conditions.sensor_blocks:
            raise KeyError(f"conditions missing sensor {sensor} for zone {bundle.zone}")
        block = conditions.sensor_blocks[sensor]
        row.extend(block[field] for field in SENSOR_BLOCK_FIELDS)
    row.extend(conditions.weather[field] for field in WEATHER_FIELDS)
    raw = np.asarray(row, dtype=float)

    n_onehot = len(bundle.user_registry)
    scaled = raw.copy()
    numeric = raw[n_onehot:][None, :]
    span = bundle.scaling.maximum - bundle.scaling.minimum
    safe = np.where(span > 0, span, 1.0)
    scaled[n_onehot:] = np.where(span > 0, (numeric - bundle.scaling.minimum) / safe, 0.0)[0]
    return scaled


def score_zones(
    user: str,
    bundles: dict[int, ZoneModelBundle],
    conditions: dict[int, ZoneConditions | UnscorableZone],
) -> tuple[list[ZoneScore], list[UnscorableZone]]:
    """One ZoneScore per scorable zone with a deployed model.

    Raises NoRecommendationError when nothing is scorable.
    """
    scores: list[ZoneScore] = []
    skipped: list[UnscorableZone] = []
    for zone in sorted(bundles):
        bundle = bundles[zone]
        cond = conditions.get(zone)
        if cond is None:
            skipped.append(UnscorableZone(zone, "no conditions"))
            continue
        if isinstance(cond, UnscorableZone):
            skipped.append(cond)
            continue
        try:
            row = feature_row(user, bundle, cond)
        except KeyError as exc:
            skipped.append(UnscorableZone(zone, str(exc)))
            continue
        predicted = float(bundle.model.predict(row[None, :])[0])
        scores.append(
            ZoneScore(
                zone=zone,
                predicted=predicted,
                label=scalar_to_label(predicted),
                model_provenance=bundle.provenance,
            )
        )
    if not scores:
        raise NoRecommendationError(
            "no recommendation available: " + "; ".join(f"zone {s.zone}: {s.reason}" for s in skipped)
        )
    return scores, skipped


def recommend(
    user: str,
    bundles: dict[int, ZoneModelBundle],
    conditions: dict[int, ZoneConditions | UnscorableZone],
    floorplan: dict[int, ZoneGeometry] | None = None,
    now: datetime | None = None,
) -> Recommendation:
    """The zone whose prediction is closest to neutral; ties go to the lowest
    zone id. no_better_option is set exactly when the chosen label is not
    comfortable."""
    floorplan = floorplan if floorplan is not None else DEFAULT_FLOORPLAN
    scores, _ = score_zones(user, bundles, conditions)
    chosen = min(scores, key=lambda s: (abs(s.predicted), s.zone))
    return Recommendation(
        user=user,
        chosen=chosen,
        all_scores=scores,
        no_better_option=chosen.label != COMFORTABLE,
        floorplan_highlight=floorplan[chosen.zone],
        generated_at=now or datetime.now(timezone.utc),
    )
