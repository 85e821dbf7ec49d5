import math
from datetime import datetime, timezone

import pytest
from hypothesis import given, strategies as st

from zonecomfort.core import (
    ComfortLabel,
    ComfortVote,
    RECOMMENDATION_LABELS,
    SensorReading,
    VOTE_LABELS,
    WeatherSample,
    format_timestamp,
    parse_timestamp,
    scalar_to_label,
    validate_zone,
    vote_to_scalar,
)


def test_vote_to_scalar_endpoints_and_good():
    assert vote_to_scalar("good") == 0.0
    assert vote_to_scalar("very_cold") == -3.0
    assert vote_to_scalar("hot") == 2.0
    assert vote_to_scalar("very_hot") == 3.0


def test_vote_to_scalar_strictly_monotone():
    values = [vote_to_scalar(lbl) for lbl in VOTE_LABELS]
    assert all(b - a == 1.0 for a, b in zip(values, values[1:]))


def test_vote_to_scalar_rejects_unknown():
    with pytest.raises(ValueError):
        vote_to_scalar("lukewarm")


@pytest.mark.parametrize(
    "x,expected",
    [
        (0.3, "comfortable"),
        (-1.6, "cold"),
        (2.7, "very_hot"),
        (0.5, "slightly_hot"),  # closed at the lower bound
        (-0.5, "comfortable"),
        (-2.5, "cold"),
        (2.5, "very_hot"),
        (-10.0, "very_cold"),
    ],
)
def test_scalar_to_label_bands(x, expected):
    assert scalar_to_label(x) == expected


@pytest.mark.parametrize("bad", [float("nan"), float("inf"), float("-inf")])
def test_scalar_to_label_rejects_non_finite(bad):
    with pytest.raises(ValueError):
        scalar_to_label(bad)


def test_round_trip_votes_to_recommendation_labels():
    for label in VOTE_LABELS:
        expected = "comfortable" if label == "good" else label
        assert scalar_to_label(vote_to_scalar(label)) == expected


@given(st.floats(min_value=-6, max_value=6, allow_nan=False))
def test_scalar_to_label_monotone_step(x):
    # Monotone: moving right never moves to a colder label.
    y = x + 0.25
    order = {lbl: i for i, lbl in enumerate(RECOMMENDATION_LABELS)}
    assert order[scalar_to_label(y)] >= order[scalar_to_label(x)]


def test_validate_zone():
    assert validate_zone(1) == 1
    assert validate_zone(4) == 4
    for bad in (0, 5, -1, 1.5, True):
        with pytest.raises(ValueError):
            validate_zone(bad)


def test_timestamp_round_trip():
    ts = datetime(2018, 11, 28, 9, 30, 0, tzinfo=timezone.utc)
    assert format_timestamp(ts) == "2018-11-28T09:30:00Z"
    assert parse_timestamp("2018-11-28T09:30:00Z") == ts
    assert parse_timestamp("2018-11-28T10:30:00+01:00") == ts


def test_vote_record_round_trip():
    vote = ComfortVote(
        user="u1",
        zone=2,
        label=ComfortLabel.SLIGHTLY_HOT,
        timestamp=datetime(2018, 12, 3, 13, 30, tzinfo=timezone.utc),
        origin="active_trigger",
    )
    rec = vote.to_record()
    assert rec["label"] == "slightly_hot"
    assert ComfortVote.from_record(rec) == vote


def test_sensor_reading_sanity_bounds():
    ok = dict(
        sensor="s1",
        zone=1,
        timestamp=datetime(2018, 12, 3, tzinfo=timezone.utc),
        illuminance=300.0,
        sound_pressure=45.0,
        motion=2.0,
        temperature=22.5,
        relative_humidity=40.0,
    )
    reading = SensorReading(**ok)
    assert SensorReading.from_record(reading.to_record()) == reading
    for field, bad in [
        ("temperature", 80.0),
        ("relative_humidity", 120.0),
        ("illuminance", -1.0),
        ("sound_pressure", -0.1),
        ("motion", -2.0),
    ]:
        with pytest.raises(ValueError):
            SensorReading(**{**ok, field: bad})


def test_weather_sample_bounds():
    ok = dict(
        timestamp=datetime(2018, 12, 3, tzinfo=timezone.utc),
        outside_temperature=4.0,
        outside_relative_humidity=70.0,
        uv_index=1.0,
    )
    sample = WeatherSample(**ok)
    assert WeatherSample.from_record(sample.to_record()) == sample
    with pytest.raises(ValueError):
        WeatherSample(**{**ok, "uv_index": 16.0})
    with pytest.raises(ValueError):
        WeatherSample(**{**ok, "outside_relative_humidity": -5.0})
