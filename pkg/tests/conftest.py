import numpy as np
import pytest

from sgdemu import AttenuationSeries, GatewayConfig, NetworkConfig, SeriesSet, SiteMeta, TimeGrid


def make_meta(site_id, region="r1", frequency=39.4):
    return SiteMeta(site_id=site_id, region_tag=region, latitude=45.0, longitude=0.0,
                    elevation_angle=30.0, frequency_ghz=frequency)


def make_series(values, valid=None, step=1, start=0, site_id="x"):
    values = np.asarray(values, dtype=float)
    if valid is None:
        valid = np.ones(len(values), dtype=bool)
    grid = TimeGrid(start_epoch=start, step=step, count=len(values))
    return AttenuationSeries(site_id=site_id, grid=grid, values=values,
                             valid=np.asarray(valid, dtype=bool))


def make_set(site_values, regions=None, valid=None, step=1, start=0):
    """site_values: dict site_id -> value list; all on one grid."""
    members = []
    n = None
    for i, (sid, vals) in enumerate(site_values.items()):
        region = regions[sid] if regions else f"r{i}"
        v = valid[sid] if isinstance(valid, dict) else valid
        s = make_series(vals, valid=v, step=step, start=start, site_id=sid)
        members.append((make_meta(sid, region), s))
        n = s.grid
    return SeriesSet(grid=n, members=tuple(members))


def make_network(site_ids, n_active, fm=5.0, sst=None, w=0.0,
                 policy="first-in-order", seed=None, regions=None, **kw):
    gws = tuple(
        GatewayConfig(site_id=s, region_tag=(regions[s] if regions else f"r{i}"),
                      fade_margin_db=fm, sst_db=sst if sst is not None else fm)
        for i, s in enumerate(site_ids)
    )
    return NetworkConfig(gateways=gws, n_active=n_active,
                         n_redundant=len(site_ids) - n_active,
                         switching_delay_s=w, selection_policy=policy, seed=seed, **kw)


@pytest.fixture
def meta_factory():
    return make_meta
