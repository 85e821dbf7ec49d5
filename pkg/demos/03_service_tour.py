"""Tour of the HTTP feedback service: prompts, votes, out-of-office handling,
and the response-rate dashboard fed by the fixed 30-day reference schedule.
"""

import json
import tempfile
from datetime import datetime, timezone
from pathlib import Path

from fastapi.testclient import TestClient

from zonecomfort.service import EventLog, FeedbackService, ServiceConfig, create_app
from zonecomfort.synthetic import build_table_one_events

root = Path(tempfile.mkdtemp(prefix="zonecomfort-service-"))

# Preload the event log with the reference 30-weekday schedule.
log = EventLog(root)
for event in build_table_one_events():
    log.append(event)

service = FeedbackService(ServiceConfig(data_dir=root, users=("u01", "u02", "u03")))
client = TestClient(create_app(service))

print("== scheduler ==")
issued = service.scheduler_tick(datetime(2019, 3, 4, 13, 31, tzinfo=timezone.utc))
print(f"tick at 13:31 issued {len(issued)} prompts (09:30 and 13:30 for 3 users)")
print("second tick issues", len(service.scheduler_tick(datetime(2019, 3, 4, 13, 32, tzinfo=timezone.utc))))

print("\n== voting ==")
r = client.post(
    "/votes",
    json={"user": "u01", "zone": 2, "label": "slightly_hot", "timestamp": "2019-03-04T13:35:00Z"},
)
print("prompted vote:", r.json()["status"])
r = client.post("/votes", json={"user": "u02", "label": "out_of_office", "timestamp": "2019-03-04T13:36:00Z"})
print("out-of-office:", r.json()["status"])
r = client.post("/votes", json={"user": "u01", "zone": 9, "label": "good"})
print("zone 9 rejected:", r.json()["detail"]["message"])

print("\n== response-rate dashboard (reference period) ==")
r = client.get("/stats/response-rate", params={"from": "2019-01-07", "to": "2019-02-15"})
stats = r.json()
for row in ("overall", "per_person"):
    cells = "  ".join(f"{k}={v:.3f}" for k, v in stats[row].items() if v is not None)
    print(f"{row:>10}: {cells}")
print("note the per-person max above 1.0 — active triggers add responses")
print("beyond the delivered prompts.")

print("\n== floorplan ==")
zones = client.get("/zones").json()["zones"]
print(json.dumps(zones[0], indent=2))
