"""Command line entry points: artifact compilation, cache building, model
training, offline evaluation, synthetic data and the HTTP service."""

from __future__ import annotations

import json
import logging
import sys

import click

from .config import BindConfig, EngineConfig, RankParams, WeightConfig, load_toml

log = logging.getLogger(__name__)


def _serving_stations(dataset):
    """Stations that appear on at least one line; only these are bind targets."""
    served = {stop for line in dataset.lines.values() for stop in line.stops}
    return [dataset.stations[s] for s in sorted(served)]


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="debug logging")
def main(verbose):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


@main.command("compile")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def compile_cmd(data_dir, out_path, config_path):
    """Compile a city dataset into a transportation graph artifact."""
    from .model import load_city_dataset
    from .ptg import compile_ptg, save_ptg

    config = load_toml(config_path, WeightConfig) if config_path else WeightConfig()
    dataset = load_city_dataset(data_dir)
    ptg = compile_ptg({dataset.city: dataset}, config)
    save_ptg(ptg, out_path)
    cp = ptg.cities[dataset.city]
    click.echo(
        f"compiled {dataset.city}: {len(cp.physical.stations)} stations, "
        f"{len(cp.physical.edges)} physical edges, "
        f"{len(next(iter(cp.virtuals.values())).nodes)} virtual nodes -> {out_path}"
    )


@main.command("bind-cache")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--ptg", "ptg_path", required=True, type=click.Path(exists=True))
@click.option("--lambda", "lambda_m", default=BindConfig.lambda_m, show_default=True, type=float)
@click.option("--cell-size", default=BindConfig.cell_size_m, show_default=True, type=float)
@click.option("--out", "out_path", required=True, type=click.Path())
def bind_cache_cmd(data_dir, ptg_path, lambda_m, cell_size, out_path):
    """Precompute road distances from intersections to nearby stations."""
    from .binding import build_station_cache, save_station_cache
    from .model import load_city_dataset
    from .ptg import load_ptg

    dataset = load_city_dataset(data_dir)
    load_ptg(ptg_path)  # version check: fail before the expensive build
    cache = build_station_cache(
        dataset.road, _serving_stations(dataset), dataset.pois, lambda_m=lambda_m, cell_size_m=cell_size
    )
    save_station_cache(cache, out_path)
    n_pairs = sum(len(v) for v in cache.per_intersection.values())
    click.echo(
        f"cached {n_pairs} intersection-station distances "
        f"({cache.unprojectable} stations unprojectable) -> {out_path}"
    )


@main.command("train")
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--ptg", "ptg_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--params", "params_path", type=click.Path(exists=True), default=None)
def train_cmd(log_path, data_dir, ptg_path, out_path, params_path):
    """Train the pairwise reranking model from a query log."""
    from . import evaluation
    from .features import FeatureEnvironment
    from .model import load_city_dataset, load_query_log
    from .ptg import load_ptg
    from .ranker import save_model

    params = load_toml(params_path, RankParams) if params_path else RankParams()
    dataset = load_city_dataset(data_dir)
    ptg = load_ptg(ptg_path)
    env = FeatureEnvironment(dataset, ptg.cities[dataset.city])
    entries = load_query_log(log_path)
    model, report = evaluation.train_from_log(entries, env, params)
    save_model(model, out_path)
    click.echo(f"trained {len(model.trees)} rounds, final objective {model.train_loss[-1]:.3f} -> {out_path}")
    if report:
        _echo_ndcg_table(report)


@main.command("importance")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--top", default=20, show_default=True)
def importance_cmd(model_path, top):
    """Print features ranked by cumulative split gain."""
    from .ranker import feature_importance, load_model

    ranked = feature_importance(load_model(model_path))
    if not ranked:
        click.echo("model has no informative splits")
        return
    width = max(len(name) for name, _ in ranked[:top])
    for name, gain in ranked[:top]:
        click.echo(f"{name:<{width}}  {gain:.4f}")


def _echo_ndcg_table(table: dict):
    ks = sorted(next(iter(table.values())))
    click.echo("method         " + "".join(f"  NDCG@{k}" for k in ks))
    for method, row in table.items():
        click.echo(f"{method:<15}" + "".join(f"  {row[k]:.4f}" for k in ks))


@main.command("eval")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--ptg", "ptg_path", required=True, type=click.Path(exists=True))
@click.option("--cache", "cache_path", type=click.Path(exists=True), default=None)
@click.option("--model", "model_path", type=click.Path(exists=True), default=None)
@click.option("--log", "log_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), default=None)
def eval_cmd(data_dir, ptg_path, cache_path, model_path, log_path, out_path):
    """NDCG of the baselines and the reranker over a query log."""
    from . import evaluation
    from .features import FeatureEnvironment
    from .model import load_city_dataset, load_query_log
    from .ptg import load_ptg
    from .ranker import load_model

    dataset = load_city_dataset(data_dir)
    ptg = load_ptg(ptg_path)
    env = FeatureEnvironment(dataset, ptg.cities[dataset.city])
    model = load_model(model_path) if model_path else None
    entries = load_query_log(log_path)
    table = evaluation.evaluate(entries, env, model)
    _echo_ndcg_table(table)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump({"queries": len(entries), "ndcg": table}, fh, indent=2, sort_keys=True)
        click.echo(f"report -> {out_path}")


@main.command("synth-city")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--name", default="gridville", show_default=True)
@click.option("--stations", default=100, show_default=True)
@click.option("--lines", default=20, show_default=True)
@click.option("--seed", default=0, show_default=True)
def synth_city_cmd(out_dir, name, stations, lines, seed):
    """Generate a deterministic synthetic grid city dataset."""
    from .model import save_city_dataset
    from .synth import synth_city

    dataset = synth_city(name=name, n_stations=stations, n_lines=lines, seed=seed)
    save_city_dataset(dataset, out_dir)
    click.echo(f"{dataset.city}: {len(dataset.stations)} stations, {len(dataset.lines)} lines -> {out_dir}")


@main.command("synth-log")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--ptg", "ptg_path", required=True, type=click.Path(exists=True))
@click.option("--cache", "cache_path", required=True, type=click.Path(exists=True))
@click.option("--n", "n_queries", default=5000, show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--epsilon", default=0.05, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def synth_log_cmd(data_dir, ptg_path, cache_path, n_queries, seed, epsilon, out_path):
    """Simulate queries with planted-preference feedback."""
    from .binding import load_station_cache
    from .engine import Engine
    from .model import load_city_dataset, save_query_log
    from .ptg import load_ptg
    from .synth import synth_query_log

    dataset = load_city_dataset(data_dir)
    ptg = load_ptg(ptg_path)
    cache = load_station_cache(cache_path, dataset.road)
    engine = Engine(dataset, ptg, cache, None, EngineConfig(data_dir=data_dir))
    entries = synth_query_log(engine, n_queries, seed=seed, epsilon=epsilon)
    save_query_log(entries, out_path)
    with_fb = sum(1 for e in entries if e.feedback)
    click.echo(f"{len(entries)} queries ({with_fb} with feedback) -> {out_path}")


def _load_engine(config_path) -> "Engine":
    from .engine import Engine

    config = load_toml(config_path, EngineConfig)
    return Engine.from_config(config)


@main.command("serve")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def serve_cmd(config_path):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    engine = _load_engine(config_path)
    host, _, port = engine.config.listen.partition(":")
    app = create_app(engine, webui_dir=engine.config.webui_dir)
    click.echo(f"listening on {engine.config.listen} (rerank {'on' if engine.model else 'off'})")
    uvicorn.run(app, host=host, port=int(port or 8340), log_level="info")


@main.command("query")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--o", "origin", required=True, help="lat,lon")
@click.option("--d", "dest", required=True, help="lat,lon")
@click.option("--t", "depart", type=int, default=None, help="epoch seconds (default: now)")
@click.option("--weather", default=None)
def query_cmd(config_path, origin, dest, depart, weather):
    """One routing query, printed as a table."""
    import time as _time

    from .geo import GeoPoint

    engine = _load_engine(config_path)
    o = GeoPoint(*(float(v) for v in origin.split(",")))
    d = GeoPoint(*(float(v) for v in dest.split(",")))
    result = engine.query(o, d, depart if depart is not None else int(_time.time()), weather_hint=weather)
    if result.status != "ok":
        click.echo(f"status: {result.status}")
        sys.exit(1)
    click.echo(f"{'#':>2} {'eta':>7} {'dist':>8} {'fare':>5} {'walk':>6} {'xfer':>4}  route")
    for route in result.routes:
        t = route["totals"]
        walk = t["start_walk_m"] + t["end_walk_m"] + t["transfer_walk_m"]
        legs = " > ".join(f"{s['line']}({s['board']}->{s['alight']})" for s in route["segments"])
        click.echo(
            f"{route['rank']:>2} {t['duration_s'] / 60:6.1f}m {t['distance_m'] / 1000:6.2f}km "
            f"{t['fare']:5.1f} {walk:5.0f}m {t['n_transfers']:>4}  {legs}"
        )
    if result.flags:
        click.echo("flags: " + ", ".join(result.flags))


if __name__ == "__main__":
    main()
