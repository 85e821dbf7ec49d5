"""Feedback service: scheduled comfort prompts, vote intake, response-rate
analytics, training-data export, and atomic model deployment.

All state is an append-only event log (one line-delimited JSON file per day);
replaying it from empty reconstructs prompts, rates, and exports. The deployed
model set lives behind a snapshot reference that is swapped atomically.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field, replace
from datetime import date, datetime, time, timedelta
from pathlib import Path
from zoneinfo import ZoneInfo

import numpy as np

from .core import (
    VOTE_LABELS,
    ComfortVote,
    SensorReading,
    VoteOrigin,
    WeatherSample,
    format_timestamp,
    parse_timestamp,
    validate_zone,
)
from .ingest import MinMaxParams, nearest_timestamp_join, write_jsonl
from .learners import model_from_artifact
from .pmv import DEFAULT_ASSUMPTIONS, PmvAssumptions
from .recommender import (
    DEFAULT_FLOORPLAN,
    DEFAULT_STALENESS_LIMIT,
    Recommendation,
    ZoneModelBundle,
    latest_zone_conditions,
    recommend,
)

DEFAULT_PROMPT_SLOTS = (time(9, 30), time(13, 30), time(16, 30))

# Event types in the daily log files.
EVENT_PROMPT = "prompt"
EVENT_VOTE = "vote"
EVENT_NOT_IN_AREA = "not_in_area"
EVENT_OUT_OF_OFFICE = "out_of_office"

RESPONSE_EVENTS = (EVENT_VOTE, EVENT_NOT_IN_AREA, EVENT_OUT_OF_OFFICE)


class VoteRejectedError(ValueError):
    """A vote failed validation; `field` names the offending field."""

    def __init__(self, field_name: str, message: str):
        super().__init__(message)
        self.field = field_name


@dataclass(frozen=True)
class ServiceConfig:
    data_dir: Path
    users: tuple[str, ...] = ()
    timezone: str = "UTC"
    prompt_slots: tuple[time, ...] = DEFAULT_PROMPT_SLOTS
    staleness_limit: timedelta = DEFAULT_STALENESS_LIMIT
    zone_count: int = 4
    pmv_assumptions: PmvAssumptions = DEFAULT_ASSUMPTIONS

    @property
    def tzinfo(self) -> ZoneInfo:
        return ZoneInfo(self.timezone)


def slot_name(slot: time) -> str:
    return f"{slot.hour:02d}:{slot.minute:02d}"


@dataclass(frozen=True)
class ResponseRateReport:
    overall: dict  # mean/std/min/q25/median/q75/max over daily aggregate rates
    per_person: dict  # same statistics over per-user rates
    omitted_users: list[str]  # zero delivered prompts in the period

    def to_payload(self) -> dict:
        def clean(stats):
            return {k: (None if v != v else v) for k, v in stats.items()}

        return {
            "overall": clean(self.overall),
            "per_person": clean(self.per_person),
            "omitted_users": self.omitted_users,
        }


def describe(values) -> dict:
    """Summary statistics in spreadsheet conventions: sample std (ddof=1) and
    linearly interpolated quartiles."""
    v = np.asarray(sorted(values), dtype=float)
    if v.size == 0:
        return {k: float("nan") for k in ("mean", "std", "min", "q25", "median", "q75", "max")}
    return {
        "mean": float(v.mean()),
        "std": float(v.std(ddof=1)) if v.size > 1 else float("nan"),
        "min": float(v[0]),
        "q25": float(np.percentile(v, 25)),
        "median": float(np.percentile(v, 50)),
        "q75": float(np.percentile(v, 75)),
        "max": float(v[-1]),
    }


# -- Event log -------------------------------------------------------------------


class EventLog:
    """Append-only daily JSONL files under <data_dir>/events/."""

    def __init__(self, data_dir):
        self.directory = Path(data_dir) / "events"
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()  # single-writer append discipline

    def append(self, event: dict) -> dict:
        day = event["timestamp"][:10]
        line = json.dumps(event, sort_keys=True)
        with self._lock:
            with (self.directory / f"{day}.jsonl").open("a") as fh:
                fh.write(line + "\n")
        return event

    def read_all(self) -> list[dict]:
        events = []
        for path in sorted(self.directory.glob("*.jsonl")):
            with path.open() as fh:
                events.extend(json.loads(line) for line in fh if line.strip())
        return events


def events_in_period(events, start: date, end: date) -> list[dict]:
    """Events whose calendar day lies in [start, end]."""
    return [e for e in events if start.isoformat() <= e["timestamp"][:10] <= end.isoformat()]


# -- Response-rate analytics -------------------------------------------------------


def response_rate_report(events: list[dict], start: date, end: date) -> ResponseRateReport:
    """Rates = responses of any origin over delivered prompts.

    not_in_area and out_of_office count as responses; suppressed prompts after
    an out_of_office never appear in the log, so the denominator only holds
    delivered prompts. Overall statistics run over daily aggregate rates,
    per-person statistics over whole-period user rates; users with zero
    delivered prompts are omitted and listed.
    """
    if end < start:
        raise ValueError("period is empty")
    period = events_in_period(events, start, end)

    delivered_by_day: dict[str, int] = {}
    responses_by_day: dict[str, int] = {}
    delivered_by_user: dict[str, int] = {}
    responses_by_user: dict[str, int] = {}
    for e in period:
        day = e["timestamp"][:10]
        user = e["user"]
        if e["type"] == EVENT_PROMPT:
            delivered_by_day[day] = delivered_by_day.get(day, 0) + 1
            delivered_by_user[user] = delivered_by_user.get(user, 0) + 1
        elif e["type"] in RESPONSE_EVENTS:
            responses_by_day[day] = responses_by_day.get(day, 0) + 1
            responses_by_user[user] = responses_by_user.get(user, 0) + 1

    daily_rates = [
        responses_by_day.get(day, 0) / n for day, n in sorted(delivered_by_day.items()) if n > 0
    ]
    user_rates = {
        u: responses_by_user.get(u, 0) / n for u, n in delivered_by_user.items() if n > 0
    }
    omitted = sorted(set(responses_by_user) - set(delivered_by_user))
    return ResponseRateReport(
        overall=describe(daily_rates),
        per_person=describe(list(user_rates.values())),
        omitted_users=omitted,
    )


# -- Model deployment ---------------------------------------------------------------


@dataclass(frozen=True)
class ModelSetSnapshot:
    version: int
    bundles: dict  # zone -> ZoneModelBundle


def bundle_from_artifact(artifact: dict) -> ZoneModelBundle:
    """Build a scoring bundle from a persisted model artifact.

    The artifact must carry zone, user_registry, sensors, scaling, and
    provenance next to the versioned model payload; its schema hash is
    validated by model_from_artifact.
    """
    model = model_from_artifact(artifact)
    for key in ("zone", "user_registry", "sensors", "scaling", "provenance", "family"):
        if key not in artifact:
            raise ValueError(f"artifact missing deployment field {key!r}")
    return ZoneModelBundle(
        zone=int(artifact["zone"]),
        family=artifact["family"],
        model=model,
        user_registry=list(artifact["user_registry"]),
        sensors=list(artifact["sensors"]),
        scaling=MinMaxParams.from_lists(artifact["scaling"]),
        provenance=artifact["provenance"],
    )


# -- Service -------------------------------------------------------------------------


class FeedbackService:
    """Event-sourced prompt/vote loop plus recommendation serving.

    The in-memory index (issued prompts, open prompts, out-of-office days) is
    rebuilt from the log on start; every mutation appends an event first.
    """

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.log = EventLog(config.data_dir)
        self.readings_path = Path(config.data_dir) / "readings.jsonl"
        self.weather_path = Path(config.data_dir) / "weather.jsonl"
        self._snapshot = ModelSetSnapshot(version=0, bundles={})
        self._issued: set[tuple[str, str, str]] = set()  # (user, date, slot)
        self._open_prompts: dict[str, tuple[str, str]] = {}  # user -> (date, slot)
        self._ooo: set[tuple[str, str]] = set()  # (user, date)
        self._last_tick: datetime | None = None
        self._replay()

    # -- state reconstruction

    def _replay(self) -> None:
        for event in self.log.read_all():
            self._apply(event)

    def _apply(self, event: dict) -> None:
        kind = event["type"]
        user = event["user"]
        day = event["timestamp"][:10]
        if kind == EVENT_PROMPT:
            self._issued.add((user, event["date"], event["slot"]))
            self._open_prompts[user] = (event["date"], event["slot"])
        elif kind == EVENT_VOTE:
            if event.get("origin") == VoteOrigin.PROMPTED.value:
                self._open_prompts.pop(user, None)
        elif kind == EVENT_NOT_IN_AREA:
            self._open_prompts.pop(user, None)
        elif kind == EVENT_OUT_OF_OFFICE:
            self._ooo.add((user, day))
            self._open_prompts.pop(user, None)

    def _append(self, event: dict) -> dict:
        self.log.append(event)
        self._apply(event)
        return event

    # -- prompt scheduling

    def scheduler_tick(self, now: datetime) -> list[dict]:
        """Issue every due prompt exactly once per (user, date, slot); skip
        users who sent out_of_office earlier that local day. Clock regressions
        are ignored."""
        if self._last_tick is not None and now < self._last_tick:
            return []
        self._last_tick = now
        local = now.astimezone(self.config.tzinfo)
        day = local.date().isoformat()
        issued = []
        for slot in self.config.prompt_slots:
            if local.time() < slot:
                continue
            name = slot_name(slot)
            for user in self.config.users:
                if (user, day) in self._ooo or (user, day, name) in self._issued:
                    continue
                issued.append(
                    self._append(
                        {
                            "type": EVENT_PROMPT,
                            "user": user,
                            "date": day,
                            "slot": name,
                            "delivered": True,
                            "timestamp": format_timestamp(now),
                        }
                    )
                )
        return issued

    def open_prompt(self, user: str):
        return self._open_prompts.get(user)

    # -- vote intake

    def submit_vote(
        self,
        user: str,
        zone: int | None,
        label: str,
        origin: str = VoteOrigin.PROMPTED.value,
        timestamp: datetime | None = None,
    ) -> dict:
        """Record a comfort vote or a not_in_area / out_of_office reply.

        Raises VoteRejectedError with the offending field on bad input.
        """
        now = timestamp or datetime.now(self.config.tzinfo)
        ts = format_timestamp(now)
        if not user:
            raise VoteRejectedError("user", "user is required")

        if label == EVENT_OUT_OF_OFFICE:
            day = now.astimezone(self.config.tzinfo).date().isoformat()
            if (user, day) in self._ooo:
                raise VoteRejectedError("label", "out_of_office already recorded today")
            return self._append(
                {"type": EVENT_OUT_OF_OFFICE, "user": user, "timestamp": ts}
            )
        if label == EVENT_NOT_IN_AREA:
            return self._append({"type": EVENT_NOT_IN_AREA, "user": user, "timestamp": ts})

        if label not in VOTE_LABELS:
            raise VoteRejectedError("label", f"unknown label {label!r}")
        try:
            zone = validate_zone(zone, self.config.zone_count)
        except (ValueError, TypeError) as exc:
            raise VoteRejectedError("zone", f"unknown zone: {exc}") from exc
        try:
            origin_value = VoteOrigin(origin)
        except ValueError as exc:
            raise VoteRejectedError("origin", f"unknown origin {origin!r}") from exc
        if origin_value is VoteOrigin.PROMPTED and user not in self._open_prompts:
            raise VoteRejectedError("origin", "no open prompt for this user")

        vote = ComfortVote(user=user, zone=zone, label=label, timestamp=now, origin=origin_value)
        return self._append({"type": EVENT_VOTE, **vote.to_record()})

    # -- sensor / weather intake

    def submit_reading(self, reading: SensorReading) -> None:
        with self.log._lock:
            with self.readings_path.open("a") as fh:
                fh.write(json.dumps(reading.to_record(), sort_keys=True) + "\n")

    def submit_weather(self, sample: WeatherSample) -> None:
        with self.log._lock:
            with self.weather_path.open("a") as fh:
                fh.write(json.dumps(sample.to_record(), sort_keys=True) + "\n")

    def _load_records(self, path, cls):
        if not Path(path).exists():
            return []
        with Path(path).open() as fh:
            return [cls.from_record(json.loads(line)) for line in fh if line.strip()]

    def sensor_log(self) -> list[SensorReading]:
        return self._load_records(self.readings_path, SensorReading)

    def weather_log(self) -> list[WeatherSample]:
        return self._load_records(self.weather_path, WeatherSample)

    # -- analytics / export

    def response_rates(self, start: date, end: date) -> ResponseRateReport:
        return response_rate_report(self.log.read_all(), start, end)

    def export_training_data(self, out_dir) -> dict:
        """Write the ingest input files plus a manifest; deterministic for a
        fixed log."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        votes = [
            e for e in self.log.read_all() if e["type"] == EVENT_VOTE
        ]
        vote_records = [{k: v for k, v in e.items() if k != "type"} for e in votes]
        readings = [r.to_record() for r in self.sensor_log()]
        weather = [w.to_record() for w in self.weather_log()]
        write_jsonl(vote_records, out_dir / "votes.jsonl")
        write_jsonl(readings, out_dir / "readings.jsonl")
        write_jsonl(weather, out_dir / "weather.jsonl")

        drop_report = None
        if vote_records and readings and weather:
            _, join = nearest_timestamp_join(
                [ComfortVote.from_record(r) for r in vote_records],
                self.sensor_log(),
                self.weather_log(),
                assumptions=self.config.pmv_assumptions,
            )
            drop_report = {
                "matched": join.matched,
                "dropped": join.dropped,
                "dropped_by_reason": join.dropped_by_reason,
            }
        manifest = {
            "votes": len(vote_records),
            "readings": len(readings),
            "weather": len(weather),
            "join": drop_report,
        }
        (out_dir / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2))
        return manifest

    # -- deployment and recommendation

    def deploy_models(self, artifacts: list[dict]) -> dict:
        """Validate every artifact, then swap the whole set atomically.

        Any invalid artifact rejects the entire deployment; the old set stays
        live."""
        bundles = {}
        for artifact in artifacts:
            bundle = bundle_from_artifact(artifact)
            bundles[bundle.zone] = bundle
        old = self._snapshot
        version = old.version + 1
        stamped = {
            zone: replace(b, provenance=f"{b.provenance} [set v{version}]")
            for zone, b in bundles.items()
        }
        self._snapshot = ModelSetSnapshot(version=version, bundles=stamped)
        return {"version": version, "zones": sorted(stamped)}

    def model_snapshot(self) -> ModelSetSnapshot:
        return self._snapshot

    def recommend_for(self, user: str, now: datetime | None = None) -> Recommendation:
        snapshot = self._snapshot  # one atomic read; never re-fetched mid-request
        now = now or datetime.now(self.config.tzinfo)
        sensor_log = self.sensor_log()
        weather = self.weather_log()
        conditions = {
            zone: latest_zone_conditions(
                zone,
                sensor_log,
                weather,
                staleness_limit=self.config.staleness_limit,
                now=now,
                assumptions=self.config.pmv_assumptions,
            )
            for zone in snapshot.bundles
        }
        return recommend(user, snapshot.bundles, conditions, now=now)


# -- REST API -----------------------------------------------------------------------


def create_app(service: FeedbackService):
    """FastAPI application exposing the service over HTTP."""
    from fastapi import FastAPI, HTTPException, Query
    from fastapi.responses import JSONResponse

    app = FastAPI(title="zonecomfort feedback service")

    @app.post("/votes")
    def post_vote(body: dict):
        try:
            ts = parse_timestamp(body["timestamp"]) if "timestamp" in body else None
            event = service.submit_vote(
                user=body.get("user", ""),
                zone=body.get("zone"),
                label=body.get("label", ""),
                origin=body.get("origin", VoteOrigin.PROMPTED.value),
                timestamp=ts,
            )
        except VoteRejectedError as exc:
            raise HTTPException(
                status_code=422,
                detail={"code": "vote_rejected", "field": exc.field, "message": str(exc)},
            )
        return {"status": "recorded", "event": event}

    @app.get("/prompts")
    def get_prompts(user: str = Query(...)):
        prompt = service.open_prompt(user)
        if prompt is None:
            return {"user": user, "open_prompt": None}
        return {"user": user, "open_prompt": {"date": prompt[0], "slot": prompt[1]}}

    @app.post("/readings")
    def post_reading(body: dict):
        try:
            service.submit_reading(SensorReading.from_record(body))
        except (KeyError, ValueError) as exc:
            raise HTTPException(status_code=422, detail={"code": "bad_reading", "message": str(exc)})
        return {"status": "recorded"}

    @app.post("/weather")
    def post_weather(body: dict):
        try:
            service.submit_weather(WeatherSample.from_record(body))
        except (KeyError, ValueError) as exc:
            raise HTTPException(status_code=422, detail={"code": "bad_weather", "message": str(exc)})
        return {"status": "recorded"}

    @app.get("/recommendation")
    def get_recommendation(user: str = Query(...), now: str | None = None):
        from .recommender import NoRecommendationError

        try:
            rec = service.recommend_for(user, parse_timestamp(now) if now else None)
        except NoRecommendationError as exc:
            return JSONResponse(
                status_code=404,
                content={"code": "no_recommendation_available", "message": str(exc)},
            )
        return rec.to_payload()

    @app.get("/stats/response-rate")
    def get_response_rate(
        from_: str = Query(..., alias="from"), to: str = Query(...)
    ):
        try:
            report = service.response_rates(date.fromisoformat(from_), date.fromisoformat(to))
        except ValueError as exc:
            raise HTTPException(status_code=422, detail={"code": "bad_period", "message": str(exc)})
        return report.to_payload()

    @app.get("/zones")
    def get_zones():
        return {"zones": [g.to_payload() for g in DEFAULT_FLOORPLAN.values()]}

    @app.post("/admin/deploy")
    def post_deploy(body: dict):
        try:
            receipt = service.deploy_models(body["artifacts"])
        except (KeyError, ValueError) as exc:
            raise HTTPException(
                status_code=422, detail={"code": "deploy_rejected", "message": str(exc)}
            )
        return receipt

    @app.get("/export/training-data")
    def get_export():
        out = Path(service.config.data_dir) / "export"
        manifest = service.export_training_data(out)
        return {"directory": str(out), "manifest": manifest}

    return app
