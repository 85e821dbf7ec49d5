"""Shared vocabulary: comfort votes, scales, zones, sensor and weather samples.

Everything here is a plain value type plus pure conversion functions, so the
rest of the package can pass these objects around freely.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, fields
from datetime import datetime, timezone
from enum import Enum

DEFAULT_ZONE_COUNT = 4

# Vote vocabulary, coldest to hottest.
VOTE_LABELS = (
    "very_cold",
    "cold",
    "slightly_cold",
    "good",
    "slightly_hot",
    "hot",
    "very_hot",
)

# Recommendation vocabulary: "good" becomes "comfortable", same scalar band.
RECOMMENDATION_LABELS = (
    "very_cold",
    "cold",
    "slightly_cold",
    "comfortable",
    "slightly_hot",
    "hot",
    "very_hot",
)

# Band edges between adjacent recommendation labels.
_LABEL_THRESHOLDS = (-2.5, -1.5, -0.5, 0.5, 1.5, 2.5)


class ComfortLabel(str, Enum):
    VERY_COLD = "very_cold"
    COLD = "cold"
    SLIGHTLY_COLD = "slightly_cold"
    GOOD = "good"
    SLIGHTLY_HOT = "slightly_hot"
    HOT = "hot"
    VERY_HOT = "very_hot"


class VoteOrigin(str, Enum):
    PROMPTED = "prompted"
    ACTIVE_TRIGGER = "active_trigger"


def vote_to_scalar(label: ComfortLabel | str) -> float:
    """Map a 7-point vote onto the -3..+3 comfort scale."""
    value = label.value if isinstance(label, ComfortLabel) else label
    try:
        return float(VOTE_LABELS.index(value) - 3)
    except ValueError:
        raise ValueError(f"unknown comfort label: {value!r}") from None


def scalar_to_label(x: float) -> str:
    """Assign the recommendation label band for a comfort scalar.

    Bands are half-open, closed at the lower bound: exactly 0.5 is
    slightly_hot, exactly -0.5 is comfortable.
    """
    if not math.isfinite(x):
        raise ValueError(f"comfort scalar must be finite, got {x!r}")
    return RECOMMENDATION_LABELS[bisect_right(_LABEL_THRESHOLDS, x)]


def validate_zone(zone: int, zone_count: int = DEFAULT_ZONE_COUNT) -> int:
    if not isinstance(zone, int) or isinstance(zone, bool) or not 1 <= zone <= zone_count:
        raise ValueError(f"zone must be an integer in 1..{zone_count}, got {zone!r}")
    return zone


def format_timestamp(ts: datetime) -> str:
    """RFC 3339 UTC, second resolution when possible."""
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    ts = ts.astimezone(timezone.utc)
    if ts.microsecond:
        return ts.strftime("%Y-%m-%dT%H:%M:%S.%f") + "Z"
    return ts.strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_timestamp(text: str) -> datetime:
    """Parse an RFC 3339 timestamp to an aware UTC datetime."""
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    ts = datetime.fromisoformat(raw)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


@dataclass(frozen=True)
class ComfortVote:
    user: str
    zone: int
    label: ComfortLabel
    timestamp: datetime
    origin: VoteOrigin = VoteOrigin.PROMPTED

    def __post_init__(self):
        validate_zone(self.zone)
        object.__setattr__(self, "label", ComfortLabel(self.label))
        object.__setattr__(self, "origin", VoteOrigin(self.origin))

    @property
    def scalar(self) -> float:
        return vote_to_scalar(self.label)

    def to_record(self) -> dict:
        return {
            "user": self.user,
            "zone": self.zone,
            "label": self.label.value,
            "timestamp": format_timestamp(self.timestamp),
            "origin": self.origin.value,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "ComfortVote":
        return cls(
            user=str(rec["user"]),
            zone=int(rec["zone"]),
            label=ComfortLabel(rec["label"]),
            timestamp=parse_timestamp(rec["timestamp"]),
            origin=VoteOrigin(rec.get("origin", "prompted")),
        )


@dataclass(frozen=True)
class SensorReading:
    sensor: str
    zone: int
    timestamp: datetime
    illuminance: float
    sound_pressure: float
    motion: float
    temperature: float
    relative_humidity: float

    def __post_init__(self):
        validate_zone(self.zone)
        if self.illuminance < 0:
            raise ValueError(f"illuminance must be >= 0, got {self.illuminance}")
        if self.sound_pressure < 0:
            raise ValueError(f"sound_pressure must be >= 0, got {self.sound_pressure}")
        if self.motion < 0:
            raise ValueError(f"motion must be >= 0, got {self.motion}")
        if not -40.0 <= self.temperature <= 60.0:
            raise ValueError(f"temperature out of sane range [-40, 60]: {self.temperature}")
        if not 0.0 <= self.relative_humidity <= 100.0:
            raise ValueError(f"relative_humidity must be in [0, 100]: {self.relative_humidity}")

    def to_record(self) -> dict:
        return {
            "sensor": self.sensor,
            "zone": self.zone,
            "timestamp": format_timestamp(self.timestamp),
            "illuminance": self.illuminance,
            "sound_pressure": self.sound_pressure,
            "motion": self.motion,
            "temperature": self.temperature,
            "relative_humidity": self.relative_humidity,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "SensorReading":
        return cls(
            sensor=str(rec["sensor"]),
            zone=int(rec["zone"]),
            timestamp=parse_timestamp(rec["timestamp"]),
            illuminance=float(rec["illuminance"]),
            sound_pressure=float(rec["sound_pressure"]),
            motion=float(rec["motion"]),
            temperature=float(rec["temperature"]),
            relative_humidity=float(rec["relative_humidity"]),
        )


@dataclass(frozen=True)
class WeatherSample:
    timestamp: datetime
    outside_temperature: float
    outside_relative_humidity: float
    uv_index: float

    def __post_init__(self):
        if not 0.0 <= self.outside_relative_humidity <= 100.0:
            raise ValueError(
                f"outside_relative_humidity must be in [0, 100]: {self.outside_relative_humidity}"
            )
        if not 0.0 <= self.uv_index <= 15.0:
            raise ValueError(f"uv_index must be in [0, 15]: {self.uv_index}")

    def to_record(self) -> dict:
        return {
            "timestamp": format_timestamp(self.timestamp),
            "outside_temperature": self.outside_temperature,
            "outside_relative_humidity": self.outside_relative_humidity,
            "uv_index": self.uv_index,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "WeatherSample":
        return cls(
            timestamp=parse_timestamp(rec["timestamp"]),
            outside_temperature=float(rec["outside_temperature"]),
            outside_relative_humidity=float(rec["outside_relative_humidity"]),
            uv_index=float(rec["uv_index"]),
        )


def record_fields(cls) -> list[str]:
    return [f.name for f in fields(cls)]
