import dataclasses
import random
import warnings

import pytest

from instgen import random_instance
from rollhorizon.engine import ConfigError, run, run_baseline
from rollhorizon.instance_io import Instance, make_fleet
from rollhorizon.model import (
    Location,
    Request,
    SolverConfig,
    derive_earliest_dropoff,
)
from rollhorizon.travel import EuclideanTravel


def two_request_instance():
    travel = EuclideanTravel(1.0)
    reqs = tuple(
        derive_earliest_dropoff(r, travel)
        for r in (
            Request(0, Location(1, 0), Location(4, 4), 60, 0),
            Request(1, Location(2, 1), Location(5, 5), 300, 0),
        )
    )
    inst = Instance(requests=reqs, vehicles=make_fleet(1, 2, Location(0, 0)),
                    travel=travel)
    cfg = SolverConfig(horizon=1200, step=300, rh_factor=1, max_wait=900,
                       max_delay=900, dwell=30, fleet_size=1, capacity=2)
    return inst, cfg


def test_smoke_pinned_schedule():
    inst, cfg = two_request_instance()
    rep = run(inst, cfg)
    by_id = {r.request_id: r for r in rep.records}
    assert (by_id[0].served, by_id[0].vehicle_id) == (True, 0)
    assert (by_id[0].actual_pickup_time, by_id[0].actual_dropoff_time) == (60, 547)
    assert (by_id[1].actual_pickup_time, by_id[1].actual_dropoff_time) == (300, 662)
    assert rep.summary.service_rate == 1.0
    assert rep.summary.avg_delay_min == pytest.approx(2.075)
    assert rep.summary.avg_wait_min == 0.0
    assert rep.summary.total_vmt == pytest.approx(7.4339784002101785, abs=1e-12)
    assert rep.summary.iterations == 4
    (route,) = rep.routes
    assert route.committed_prefix_len == len(route.stops)
    assert [(s.kind, s.request_id, s.scheduled_time) for s in route.stops] == [
        ("pickup", 0, 60), ("pickup", 1, 300),
        ("dropoff", 0, 547), ("dropoff", 1, 662),
    ]


def test_every_request_gets_exactly_one_record():
    for seed in range(12):
        rng = random.Random(1000 + seed)
        inst, cfg = random_instance(rng, max_requests=20, max_vehicles=3)
        rep = run(inst, cfg)
        assert sorted(r.request_id for r in rep.records) == sorted(
            r.id for r in inst.requests)
        for rec in rep.records:
            if rec.served:
                assert rec.actual_pickup_time is not None
            else:
                assert rec.vehicle_id is None


def test_committed_stops_never_change():
    rng = random.Random(42)
    inst, cfg = random_instance(rng, max_requests=25, max_vehicles=3,
                                rh_choices=(2,))
    snapshots = []

    def hook(t, states):
        snapshots.append({vid: st.committed for vid, st in states.items()})

    rep = run(inst, cfg, iteration_hook=hook)
    assert snapshots
    final = {rt.vehicle_id: rt.stops for rt in rep.routes}
    for snap in snapshots:
        for vid, committed in snap.items():
            assert final[vid][:len(committed)] == committed


def test_pickup_beyond_coverage_is_rejected_up_front():
    inst, cfg = two_request_instance()
    late = derive_earliest_dropoff(
        Request(9, Location(1, 1), Location(2, 2), 5000, 0), inst.travel)
    inst = dataclasses.replace(inst, requests=inst.requests + (late,))
    with pytest.warns(UserWarning, match="after the last batching step"):
        rep = run(inst, cfg)
    rec = next(r for r in rep.records if r.request_id == 9)
    assert not rec.served
    # rh_factor 1 covers the whole horizon, so only past-horizon times trip it
    ok = dataclasses.replace(late, id=10, desired_pickup_time=1100)
    ok = derive_earliest_dropoff(ok, inst.travel)
    inst2 = dataclasses.replace(inst, requests=inst.requests[:2] + (ok,))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        run(inst2, cfg)


def test_drain_finishes_rides_started_late():
    # desired right at the last grid step: dropoff can only land in the drain
    travel = EuclideanTravel(1.0)
    req = derive_earliest_dropoff(
        Request(0, Location(0.5, 0), Location(8, 0), 870, 0), travel)
    inst = Instance(requests=(req,), vehicles=make_fleet(1, 2, Location(0, 0)),
                    travel=travel)
    cfg = SolverConfig(horizon=900, step=300, rh_factor=1, max_wait=600,
                       max_delay=900, dwell=0, fleet_size=1, capacity=2)
    rep = run(inst, cfg)
    (rec,) = rep.records
    assert rec.served
    assert rec.actual_dropoff_time > cfg.horizon


def test_config_errors():
    inst, cfg = two_request_instance()
    with pytest.raises(ConfigError, match="step"):
        run(inst, dataclasses.replace(cfg, step=0))
    with pytest.raises(ConfigError, match="fleet"):
        run(inst, dataclasses.replace(cfg, fleet_size=3))
    with pytest.raises(ConfigError, match="capacity"):
        run(inst, dataclasses.replace(cfg, capacity=5))
    dup = dataclasses.replace(inst, requests=inst.requests + (inst.requests[0],))
    with pytest.raises(ConfigError, match="duplicate"):
        run(dup, cfg)


def test_same_input_same_report():
    rng = random.Random(7)
    inst, cfg = random_instance(rng, max_requests=15, max_vehicles=3)
    a = run(inst, cfg)
    b = run(inst, cfg)
    assert a.records == b.records
    assert a.routes == b.routes
    assert a.summary.total_vmt == b.summary.total_vmt


def test_run_baseline_is_rh_zero():
    inst, cfg = two_request_instance()
    base = run_baseline(inst, cfg)
    assert base.config.rh_factor == 0
    assert base.config.step == cfg.step
    via_replace = run(inst, dataclasses.replace(cfg, rh_factor=0))
    assert base.records == via_replace.records
