"""Serve the six-station fixture city with a hand-built weather-sensitive
ranking model, for exercising the web client against a live engine.

The model is a single depth-two tree over the real feature schema: routes
whose total walk exceeds the shortlist midpoint get a score bonus in clear
weather and a penalty under Snow, so switching the weather selector from
Sunny to Snow visibly reorders the route cards.

Usage: python3 frontend/scripts/serve_fixture.py [--port 8340]
"""

import argparse
import pathlib
import sys

import numpy as np
import uvicorn

ROOT = pathlib.Path(__file__).resolve().parents[2]
sys.path.insert(0, str(ROOT))

from polestar.binding import build_station_cache  # noqa: E402
from polestar.config import EngineConfig, RankParams, WeightConfig  # noqa: E402
from polestar.engine import Engine  # noqa: E402
from polestar.features import FeatureSchema, TravelContext, build_raw_features  # noqa: E402
from polestar.model import WeatherRecord  # noqa: E402
from polestar.ptg import compile_ptg  # noqa: E402
from polestar.ranker import RankModel, Tree  # noqa: E402
from polestar.service import create_app  # noqa: E402
from tests.conftest import pt, worked_example_dataset  # noqa: E402

DEPART_TS = 1_772_440_200  # a Monday morning


def weather_sensitive_model(engine: Engine) -> RankModel:
    origin, dest = pt(20, 10), pt(1080, 290)
    base = engine.shortlist_for(origin, dest)
    assert base.status == "ok" and len(base.shortlist) >= 2, base.status
    raws = []
    for category in ("Sunny", "Snow"):
        ctx = TravelContext(
            timestamp=DEPART_TS,
            origin=origin,
            destination=dest,
            weather=WeatherRecord(DEPART_TS, category, 15.0, 0, 1, 50),
        )
        raws.extend(
            build_raw_features(c, base.shortlist, ctx, engine.env) for c in base.shortlist
        )
    schema = FeatureSchema.fit(raws)
    names = schema.feature_names
    walk_idx = names.index("walk_total_m")
    snow_idx = names.index("weather=Snow")
    walks = sorted({schema.vectorize(r)[walk_idx] for r in raws})
    assert len(walks) >= 2, "fixture shortlist needs distinct walk totals"
    threshold = (walks[-1] + walks[-2]) / 2.0  # isolate the walk-heaviest route

    # node 0: walk_total above threshold? node 2: is it snowing?
    tree = Tree(
        children_left=np.array([1, -1, 3, -1, -1], dtype=np.int64),
        children_right=np.array([2, -1, 4, -1, -1], dtype=np.int64),
        feature=np.array([walk_idx, 0, snow_idx, 0, 0], dtype=np.int64),
        threshold=np.array([threshold, 0.0, 0.5, 0.0, 0.0]),
        value=np.array([0.0, 0.0, 0.0, -2000.0, 2000.0]),
    )
    params = RankParams(n_rounds=1)
    return RankModel(
        trees=[tree], params=params, schema=schema,
        feature_gain=np.zeros(schema.dim, dtype=np.float64),
    )


def build_engine() -> Engine:
    ds = worked_example_dataset()
    ptg = compile_ptg({ds.city: ds}, WeightConfig())
    cache = build_station_cache(ds.road, list(ds.stations.values()), ds.pois)
    bare = Engine(ds, ptg, cache, None, EngineConfig(deterministic=True))
    model = weather_sensitive_model(bare)
    engine = Engine(ds, ptg, cache, model, EngineConfig(deterministic=True))
    origin, dest = pt(20, 10), pt(1080, 290)
    sunny = [r["signature"] for r in engine.query(origin, dest, DEPART_TS, "Sunny").routes]
    snowy = [r["signature"] for r in engine.query(origin, dest, DEPART_TS, "Snow").routes]
    assert sunny != snowy, "fixture model failed to reorder between Sunny and Snow"
    print(f"fixture ready; Sunny order {sunny}")
    print(f"               Snow order {snowy}")
    return engine


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--port", type=int, default=8340)
    parser.add_argument("--webui", default="", help="built webui dir to serve at /")
    args = parser.parse_args()
    app = create_app(build_engine(), webui_dir=args.webui)
    uvicorn.run(app, host="127.0.0.1", port=args.port, log_level="warning")


if __name__ == "__main__":
    main()
