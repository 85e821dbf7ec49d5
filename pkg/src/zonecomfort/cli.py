"""Command-line entry point chaining the pipeline:
simulate -> export -> ingest -> train/evaluate -> recommend -> serve.

Every run writes a self-describing run directory: the resolved configuration,
persisted CV folds, the per-zone report, champion summary, and (for `train`)
deployable model artifacts.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

from .core import format_timestamp, parse_timestamp
from .evaluation import (
    DEFAULT_INNER_K,
    DEFAULT_NRMSE_NORMALIZER,
    DEFAULT_OUTER_ITERATIONS,
    ParameterGrid,
    RfConfig,
    SvrConfig,
    default_grid,
    derive_seed,
    nested_cv,
    save_champions,
    save_folds,
    save_report_tsv,
    select_zone_champion,
)
from .ingest import (
    DEFAULT_MIN_SAMPLES,
    build_feature_matrix,
    build_user_registry,
    export_dataset,
    load_readings,
    load_votes,
    load_weather,
    nearest_timestamp_join,
    partition_by_zone,
)
from .learners import model_to_artifact, train_rf, train_svr
from .service import FeedbackService, ServiceConfig, create_app
from .synthetic import default_occupants, simulate_period, write_simulation


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"pipeline stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class RunConfig:
    data_dir: str = "data"
    run_dir: str = "runs/latest"
    seed: int = 1
    join_tolerance_minutes: float = 30.0
    min_samples: int = DEFAULT_MIN_SAMPLES
    outer_iterations: int = DEFAULT_OUTER_ITERATIONS
    inner_k: int = DEFAULT_INNER_K
    nrmse_normalizer: float = DEFAULT_NRMSE_NORMALIZER
    occupants: int = 36
    days: int = 42
    timezone: str = "UTC"
    staleness_minutes: float = 60.0
    grid: dict | None = None  # None -> full default grids

    def parameter_grid(self) -> ParameterGrid:
        if self.grid is None:
            return default_grid()
        svr = tuple(SvrConfig(**c) for c in self.grid.get("svr", []))
        rf = tuple(RfConfig(**c) for c in self.grid.get("rf", []))
        return ParameterGrid(svr=svr, rf=rf)

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls(**json.loads(Path(path).read_text()))

    def save(self, path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def load_dataset(config: RunConfig):
    data = Path(config.data_dir)
    votes = load_votes(data / "votes.jsonl")
    readings = load_readings(data / "readings.jsonl")
    weather = load_weather(data / "weather.jsonl")
    return votes, readings, weather


def ingest_stage(config: RunConfig, run_dir: Path):
    """Join the raw streams and build per-zone feature matrices; persists the
    join report and the excluded-zones list."""
    votes, readings, weather = load_dataset(config)
    samples, join_report = nearest_timestamp_join(
        votes, readings, weather, tolerance=timedelta(minutes=config.join_tolerance_minutes)
    )
    kept, excluded = partition_by_zone(samples, min_samples=config.min_samples)
    registry = build_user_registry(votes)
    matrices = {zone: build_feature_matrix(rows, registry) for zone, rows in kept.items()}

    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "join_report.json").write_text(
        json.dumps(
            {
                "matched": join_report.matched,
                "dropped": join_report.dropped,
                "dropped_by_reason": join_report.dropped_by_reason,
                "excluded_zones": excluded,
                "kept_zones": sorted(matrices),
            },
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    return matrices, excluded, registry


def evaluate_stage(config: RunConfig, run_dir: Path, matrices: dict):
    """Nested CV per zone; persists folds, report.tsv, and champions.txt."""
    grid = config.parameter_grid()
    reports = []
    champions = {}
    for zone, matrix in sorted(matrices.items()):
        _log(f"nested CV on zone {zone} ({matrix.y.size} samples)")
        report = nested_cv(
            matrix,
            grid,
            outer_iterations=config.outer_iterations,
            inner_k=config.inner_k,
            seed=derive_seed(config.seed, zone),
            nrmse_normalizer=config.nrmse_normalizer,
        )
        save_folds(report, run_dir / f"zone-{zone}")
        reports.append(report)
        champions[zone] = select_zone_champion(report)
    save_report_tsv(reports, run_dir / "report.tsv")
    save_champions(champions, run_dir / "champions.txt")
    return reports, champions


def deploy_stage(config: RunConfig, run_dir: Path, matrices: dict, champions: dict):
    """Refit each zone champion on the whole zone dataset and write artifacts."""
    models_dir = run_dir / "models"
    models_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    for zone, (family, params) in sorted(champions.items()):
        matrix = matrices[zone]
        scaling = matrix.fit_scaling()
        X = matrix.scaled_rows(scaling)
        if family == "svr":
            model = train_svr(X, matrix.y, params.to_kernel(), C=params.C)
        else:
            model = train_rf(
                X,
                matrix.y,
                params.n_estimators,
                params.max_depth,
                seed=derive_seed(config.seed, zone, 999),
            )
        artifact = model_to_artifact(
            model,
            matrix.schema,
            extra={
                "zone": zone,
                "user_registry": matrix.user_registry,
                "sensors": matrix.sensors,
                "scaling": scaling.to_lists(),
                "provenance": f"{family} {params.describe()}",
                "family": family,
            },
        )
        path = models_dir / f"zone-{zone}.json"
        path.write_text(json.dumps(artifact, sort_keys=True))
        paths[zone] = path
    return paths


def run_pipeline(config: RunConfig, with_artifacts: bool = True):
    """ingest -> nested CV -> champion selection -> final refit.

    Any stage failure raises PipelineError naming the stage; outputs written
    before the failure stay on disk for inspection."""
    run_dir = Path(config.run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    config.save(run_dir / "config.json")

    try:
        matrices, excluded, registry = ingest_stage(config, run_dir)
    except Exception as exc:
        raise PipelineError("ingest", exc) from exc
    try:
        reports, champions = evaluate_stage(config, run_dir, matrices)
    except Exception as exc:
        raise PipelineError("evaluate", exc) from exc
    artifacts = {}
    if with_artifacts:
        try:
            artifacts = deploy_stage(config, run_dir, matrices, champions)
        except Exception as exc:
            raise PipelineError("deploy", exc) from exc
    return {
        "run_dir": run_dir,
        "matrices": matrices,
        "excluded_zones": excluded,
        "reports": reports,
        "champions": champions,
        "artifacts": artifacts,
    }


# -- subcommands ------------------------------------------------------------------


def _config_from_args(args) -> RunConfig:
    config = RunConfig.load(args.config) if args.config else RunConfig()
    for key in vars(config):
        value = getattr(args, key, None)
        if value is not None:
            setattr(config, key, value)
    return config


def cmd_simulate(args) -> int:
    config = _config_from_args(args)
    result = simulate_period(
        occupants=default_occupants(n=config.occupants),
        days=config.days,
        seed=config.seed,
    )
    out = Path(args.out or config.data_dir)
    write_simulation(result, out)
    _log(f"simulated {len(result.events)} events into {out}")
    return 0


def cmd_export(args) -> int:
    config = _config_from_args(args)
    service = FeedbackService(ServiceConfig(data_dir=Path(config.data_dir)))
    manifest = service.export_training_data(args.out)
    _log(f"exported {manifest['votes']} votes to {args.out}")
    return 0


def cmd_ingest(args) -> int:
    config = _config_from_args(args)
    run_dir = Path(config.run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    config.save(run_dir / "config.json")
    matrices, excluded, _ = ingest_stage(config, run_dir)
    for zone, matrix in sorted(matrices.items()):
        export_dataset(matrix, run_dir / f"zone-{zone}" / "dataset.tsv")
    _log(f"kept zones {sorted(matrices)}, excluded {excluded}")
    return 0


def cmd_evaluate(args) -> int:
    config = _config_from_args(args)
    run_pipeline(config, with_artifacts=False)
    _log(f"report written to {Path(config.run_dir) / 'report.tsv'}")
    return 0


def cmd_train(args) -> int:
    config = _config_from_args(args)
    outcome = run_pipeline(config, with_artifacts=True)
    _log(f"artifacts: {sorted(str(p) for p in outcome['artifacts'].values())}")
    return 0


def _service_from_config(config: RunConfig, models_dir=None) -> FeedbackService:
    votes_users = ()
    votes_path = Path(config.data_dir) / "votes.jsonl"
    if votes_path.exists():
        votes_users = tuple(build_user_registry(load_votes(votes_path)))
    service = FeedbackService(
        ServiceConfig(
            data_dir=Path(config.data_dir),
            users=votes_users,
            timezone=config.timezone,
            staleness_limit=timedelta(minutes=config.staleness_minutes),
        )
    )
    if models_dir:
        artifacts = [json.loads(p.read_text()) for p in sorted(Path(models_dir).glob("zone-*.json"))]
        if artifacts:
            service.deploy_models(artifacts)
    return service


def cmd_recommend(args) -> int:
    config = _config_from_args(args)
    service = _service_from_config(config, models_dir=args.models)
    now = parse_timestamp(args.now) if args.now else datetime.now(timezone.utc)
    from .recommender import NoRecommendationError

    try:
        rec = service.recommend_for(args.user, now=now)
    except NoRecommendationError as exc:
        _log(str(exc))
        return 1
    print(json.dumps(rec.to_payload(), indent=2, sort_keys=True))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    config = _config_from_args(args)
    service = _service_from_config(config, models_dir=args.models)
    app = create_app(service)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zonecomfort")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run-configuration file")
        p.add_argument("--data-dir", dest="data_dir")
        p.add_argument("--run-dir", dest="run_dir")
        p.add_argument("--seed", type=int)
        p.add_argument("--min-samples", dest="min_samples", type=int)

    p = sub.add_parser("simulate", help="generate a seeded synthetic scenario")
    common(p)
    p.add_argument("--occupants", type=int)
    p.add_argument("--days", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("export", help="export training data from a service data dir")
    common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("ingest", help="join streams and write per-zone datasets")
    common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("evaluate", help="nested cross-validation report")
    common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("train", help="full pipeline incl. deployable artifacts")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("recommend", help="one-shot recommendation for a user")
    common(p)
    p.add_argument("--user", required=True)
    p.add_argument("--models", help="directory of zone-*.json artifacts")
    p.add_argument("--now", help="RFC3339 scoring instant")
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("serve", help="run the HTTP feedback service")
    common(p)
    p.add_argument("--models", help="directory of zone-*.json artifacts")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PipelineError as exc:
        _log(str(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())
