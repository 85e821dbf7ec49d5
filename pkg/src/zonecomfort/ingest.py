"""Fuse votes, sensor streams, and weather into per-zone supervised datasets.

Each vote is matched to the nearest reading of every sensor in its zone plus
the nearest weather sample; votes with any gap beyond the join tolerance are
dropped. The resulting per-zone matrices carry one-hot user columns followed
by per-sensor blocks and the weather block.
"""

from __future__ import annotations

import json
from bisect import bisect_left
from dataclasses import dataclass, field
from datetime import timedelta
from pathlib import Path

import numpy as np

from .core import ComfortVote, SensorReading, WeatherSample, vote_to_scalar
from .pmv import DEFAULT_ASSUMPTIONS, PmvAssumptions, pmv_from_sensor

DEFAULT_JOIN_TOLERANCE = timedelta(minutes=30)
DEFAULT_MIN_SAMPLES = 50

SENSOR_BLOCK_FIELDS = (
    "illuminance",
    "sound_pressure",
    "motion",
    "temperature",
    "relative_humidity",
    "pmv",
    "ppd",
)
WEATHER_FIELDS = ("outside_temperature", "outside_relative_humidity", "uv_index")


class StreamMissingError(ValueError):
    """A required input stream has no records at all."""

    def __init__(self, stream: str):
        super().__init__(f"required stream is empty: {stream}")
        self.stream = stream


@dataclass(frozen=True)
class LabeledSample:
    target: float
    user: str
    zone: int
    timestamp: object  # UTC datetime of the vote
    sensor_blocks: dict  # sensor id -> {field: value}, 7 fields per sensor
    weather: dict  # {field: value}, 3 fields


@dataclass
class JoinReport:
    matched: int = 0
    dropped: int = 0
    dropped_by_reason: dict = field(default_factory=dict)

    def drop(self, reason: str) -> None:
        self.dropped += 1
        self.dropped_by_reason[reason] = self.dropped_by_reason.get(reason, 0) + 1


def _nearest(timestamps, items, t):
    """Nearest item by absolute time difference; equidistant -> earlier."""
    i = bisect_left(timestamps, t)
    if i == 0:
        return items[0], abs(timestamps[0] - t)
    if i == len(timestamps):
        return items[-1], abs(timestamps[-1] - t)
    before, after = timestamps[i - 1], timestamps[i]
    if t - before <= after - t:
        return items[i - 1], t - before
    return items[i], after - t


def nearest_timestamp_join(
    votes: list[ComfortVote],
    sensor_stream: list[SensorReading],
    weather_stream: list[WeatherSample],
    tolerance: timedelta = DEFAULT_JOIN_TOLERANCE,
    assumptions: PmvAssumptions = DEFAULT_ASSUMPTIONS,
) -> tuple[list[LabeledSample], JoinReport]:
    """Merge the three streams on nearest timestamps.

    Every sensor ever seen in a vote's zone is a required stream for that
    vote; a gap beyond `tolerance` on any of them drops the vote.
    """
    if not sensor_stream:
        raise StreamMissingError("sensor readings")
    if not weather_stream:
        raise StreamMissingError("weather")

    by_sensor: dict[str, list[SensorReading]] = {}
    zone_sensors: dict[int, set[str]] = {}
    for reading in sorted(sensor_stream, key=lambda r: r.timestamp):
        by_sensor.setdefault(reading.sensor, []).append(reading)
        zone_sensors.setdefault(reading.zone, set()).add(reading.sensor)
    sensor_times = {s: [r.timestamp for r in rs] for s, rs in by_sensor.items()}

    weather_sorted = sorted(weather_stream, key=lambda w: w.timestamp)
    weather_times = [w.timestamp for w in weather_sorted]

    samples: list[LabeledSample] = []
    report = JoinReport()
    for vote in sorted(votes, key=lambda v: v.timestamp):
        sensors = sorted(zone_sensors.get(vote.zone, ()))
        if not sensors:
            raise StreamMissingError(f"sensor readings for zone {vote.zone}")
        blocks = {}
        ok = True
        for sensor in sensors:
            reading, gap = _nearest(sensor_times[sensor], by_sensor[sensor], vote.timestamp)
            if gap > tolerance:
                report.drop(f"sensor {sensor} gap > tolerance")
                ok = False
                break
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
        if not ok:
            continue
        weather, gap = _nearest(weather_times, weather_sorted, vote.timestamp)
        if gap > tolerance:
            report.drop("weather gap > tolerance")
            continue
        samples.append(
            LabeledSample(
                target=vote_to_scalar(vote.label),
                user=vote.user,
                zone=vote.zone,
                timestamp=vote.timestamp,
                sensor_blocks=blocks,
                weather={
                    "outside_temperature": weather.outside_temperature,
                    "outside_relative_humidity": weather.outside_relative_humidity,
                    "uv_index": weather.uv_index,
                },
            )
        )
        report.matched += 1
    return samples, report


def partition_by_zone(
    samples: list[LabeledSample], min_samples: int = DEFAULT_MIN_SAMPLES
) -> tuple[dict[int, list[LabeledSample]], list[int]]:
    """Group samples per zone; zones below the sample-size gate are excluded."""
    by_zone: dict[int, list[LabeledSample]] = {}
    for sample in samples:
        by_zone.setdefault(sample.zone, []).append(sample)
    kept = {z: rows for z, rows in sorted(by_zone.items()) if len(rows) >= max(min_samples, 1)}
    excluded = [z for z in sorted(by_zone) if z not in kept]
    return kept, excluded


def one_hot_encode(user: str, registry: list[str]) -> np.ndarray:
    """Binary indicator over the registry; unknown users get all zeros."""
    if not registry:
        raise ValueError("user registry must not be empty")
    vec = np.zeros(len(registry))
    try:
        vec[registry.index(user)] = 1.0
    except ValueError:
        pass  # cold-start user: environmental features only
    return vec


@dataclass(frozen=True)
class MinMaxParams:
    minimum: np.ndarray
    maximum: np.ndarray

    def to_lists(self):
        return {"minimum": self.minimum.tolist(), "maximum": self.maximum.tolist()}

    @classmethod
    def from_lists(cls, d):
        return cls(
            minimum=np.asarray(d["minimum"], dtype=float),
            maximum=np.asarray(d["maximum"], dtype=float),
        )


def fit_minmax(rows: np.ndarray) -> MinMaxParams:
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.shape[0] < 1:
        raise ValueError("fit_minmax needs at least one row")
    return MinMaxParams(minimum=rows.min(axis=0), maximum=rows.max(axis=0))


def apply_minmax(rows: np.ndarray, params: MinMaxParams) -> np.ndarray:
    """Scale to [0,1] on the fitted range; constant features map to 0.

    Out-of-range values are deliberately not clamped.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    span = params.maximum - params.minimum
    safe = np.where(span > 0, span, 1.0)
    scaled = (rows - params.minimum) / safe
    return np.where(span > 0, scaled, 0.0)


def invert_minmax(scaled: np.ndarray, params: MinMaxParams) -> np.ndarray:
    scaled = np.atleast_2d(np.asarray(scaled, dtype=float))
    span = params.maximum - params.minimum
    return np.where(span > 0, scaled * span + params.minimum, params.minimum)


@dataclass(frozen=True)
class FeatureMatrix:
    zone: int
    schema: list[str]
    user_registry: list[str]
    sensors: list[str]
    X: np.ndarray  # raw (unscaled) feature rows
    y: np.ndarray

    @property
    def n_onehot(self) -> int:
        return len(self.user_registry)

    def fit_scaling(self, train_indices=None) -> MinMaxParams:
        """Min-max parameters for the numeric block, fitted on training rows
        only (leakage guard: callers pass fold-local indices)."""
        rows = self.X if train_indices is None else self.X[np.asarray(train_indices)]
        return fit_minmax(rows[:, self.n_onehot :])

    def scaled_rows(self, params: MinMaxParams, indices=None) -> np.ndarray:
        rows = self.X if indices is None else self.X[np.asarray(indices)]
        out = rows.copy()
        out[:, self.n_onehot :] = apply_minmax(rows[:, self.n_onehot :], params)
        return out


def feature_schema(registry: list[str], sensors: list[str]) -> list[str]:
    schema = [f"user:{u}" for u in registry]
    for sensor in sensors:
        schema.extend(f"{sensor}.{field}" for field in SENSOR_BLOCK_FIELDS)
    schema.extend(f"weather.{field}" for field in WEATHER_FIELDS)
    return schema


def build_feature_matrix(samples: list[LabeledSample], registry: list[str]) -> FeatureMatrix:
    """Assemble one zone's dataset: one-hot users, sensor blocks in sensor-id
    order, weather block, targets from the votes."""
    if not samples:
        raise ValueError("cannot build a feature matrix from zero samples")
    if not registry:
        raise ValueError("user registry must not be empty")
    zones = {s.zone for s in samples}
    if len(zones) != 1:
        raise ValueError(f"samples span multiple zones: {sorted(zones)}")
    zone = zones.pop()
    sensors = sorted(samples[0].sensor_blocks)
    for s in samples:
        if sorted(s.sensor_blocks) != sensors:
            raise ValueError("inconsistent sensor blocks across samples")

    rows = []
    for s in samples:
        row = list(one_hot_encode(s.user, registry))
        for sensor in sensors:
            block = s.sensor_blocks[sensor]
            row.extend(block[field] for field in SENSOR_BLOCK_FIELDS)
        row.extend(s.weather[field] for field in WEATHER_FIELDS)
        rows.append(row)
    return FeatureMatrix(
        zone=zone,
        schema=feature_schema(registry, sensors),
        user_registry=list(registry),
        sensors=sensors,
        X=np.asarray(rows, dtype=float),
        y=np.asarray([s.target for s in samples], dtype=float),
    )


def build_user_registry(votes: list[ComfortVote]) -> list[str]:
    """All users seen in the vote log, in sorted order."""
    return sorted({v.user for v in votes})


# -- Line-delimited record files ------------------------------------------------


def write_jsonl(records, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_jsonl(path) -> list[dict]:
    with Path(path).open() as fh:
        return [json.loads(line) for line in fh if line.strip()]


def load_votes(path) -> list[ComfortVote]:
    return [ComfortVote.from_record(r) for r in read_jsonl(path)]


def load_readings(path) -> list[SensorReading]:
    return [SensorReading.from_record(r) for r in read_jsonl(path)]


def load_weather(path) -> list[WeatherSample]:
    return [WeatherSample.from_record(r) for r in read_jsonl(path)]


def export_dataset(matrix: FeatureMatrix, path) -> None:
    """Header+rows tabular text export; bit-exact across runs."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        fh.write("\t".join(["target"] + matrix.schema) + "\n")
        for target, row in zip(matrix.y, matrix.X):
            fh.write("\t".join([repr(float(target))] + [repr(float(v)) for v in row]) + "\n")


def import_dataset(path, zone: int, registry: list[str], sensors: list[str]) -> FeatureMatrix:
    lines = Path(path).read_text().splitlines()
    header = lines[0].split("\t")
    schema = header[1:]
    data = np.asarray([[float(v) for v in line.split("\t")] for line in lines[1:]])
    return FeatureMatrix(
        zone=zone,
        schema=schema,
        user_registry=list(registry),
        sensors=list(sensors),
        X=data[:, 1:],
        y=data[:, 0],
    )
