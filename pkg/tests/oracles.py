"""Independent reference implementations used to cross-check the solver.

Everything here is deliberately written from the constraint definitions,
not by calling the library's routing, assignment, or engine code, so tests
compare two separately derived answers.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Mapping, Optional, Sequence

from rollhorizon.model import DROPOFF, PICKUP, Location, Request, SolverConfig, Stop


def stop_sort_key(kind: str, request_id: int) -> tuple[int, int]:
    return (request_id, 0 if kind == PICKUP else 1)


def naive_schedule(
    start_loc: Location,
    start_time: int,
    seq: Sequence[tuple[str, int]],
    requests_by_id: Mapping[int, Request],
    travel,
    config: SolverConfig,
    initial_onboard: Iterable[int] = (),
):
    """Walk a stop sequence and time it directly from the definitions.

    Returns (feasible, total_distance, stops). A pickup starts at
    max(arrival, desired); a dropoff starts at max(arrival, earliest
    possible); each stop occupies the vehicle for `dwell` seconds after
    service starts. Infeasible when any waiting or delay limit breaks,
    capacity is exceeded, or the sequence itself is invalid.
    """
    onboard = set(initial_onboard)
    load = sum(requests_by_id[r].load for r in onboard)
    if load > config.capacity:
        return False, 0.0, []
    loc = start_loc
    free = start_time
    total = 0.0
    stops: list[Stop] = []
    for kind, rid in seq:
        req = requests_by_id[rid]
        target = req.pickup if kind == PICKUP else req.dropoff
        arrival = free + travel.travel_time(loc, target)
        total += travel.distance(loc, target)
        if kind == PICKUP:
            if rid in onboard:
                return False, 0.0, []
            service = max(arrival, req.desired_pickup_time)
            if service - req.desired_pickup_time > config.max_wait:
                return False, 0.0, []
            onboard.add(rid)
            load += req.load
            if load > config.capacity:
                return False, 0.0, []
        else:
            if rid not in onboard:
                return False, 0.0, []
            service = max(arrival, req.earliest_dropoff_time)
            if service - req.earliest_dropoff_time > config.max_delay:
                return False, 0.0, []
            onboard.discard(rid)
            load -= req.load
        stops.append(Stop(kind, rid, target, service, load))
        free = service + config.dwell
        loc = target
    return True, total, stops


def all_stop_orders(new_ids: Sequence[int], onboard_ids: Sequence[int]):
    """Yield every precedence-valid ordering of the required stops."""
    items = [(PICKUP, r) for r in new_ids] + [(DROPOFF, r) for r in new_ids]
    items += [(DROPOFF, r) for r in onboard_ids]
    seen = set()
    for perm in itertools.permutations(items):
        if perm in seen:
            continue
        seen.add(perm)
        ok = True
        picked = set(onboard_ids)
        for kind, rid in perm:
            if kind == PICKUP:
                picked.add(rid)
            elif rid not in picked:
                ok = False
                break
        if ok:
            yield perm


def brute_force_best_route(
    start_loc: Location,
    start_time: int,
    new_ids: Sequence[int],
    onboard_ids: Sequence[int],
    requests_by_id: Mapping[int, Request],
    travel,
    config: SolverConfig,
):
    """Try every valid stop ordering; keep the cheapest feasible one.

    Ties broken by the lexicographically smallest sequence of
    (request_id, kind) stop keys. Returns (cost, seq, stops) or None.
    """
    best = None
    for seq in all_stop_orders(new_ids, onboard_ids):
        feasible, cost, stops = naive_schedule(
            start_loc, start_time, seq, requests_by_id, travel, config, onboard_ids
        )
        if not feasible:
            continue
        key = tuple(stop_sort_key(k, r) for k, r in seq)
        if best is None or (cost, key) < (best[0], best[3]):
            best = (cost, seq, stops, key)
    if best is None:
        return None
    return best[0], best[1], best[2]


def canonical_objective(
    chosen: Iterable[tuple[frozenset, int, float]],
    ignored: Iterable[int],
    penalty: float,
) -> float:
    """Sum edge costs and penalties in a fixed order.

    The order (edges by sorted trip ids then vehicle id, then penalties by
    request id) pins down float accumulation so two implementations agree
    bit for bit.
    """
    total = 0.0
    for trip, veh, cost in sorted(
        chosen, key=lambda e: (tuple(sorted(e[0])), e[1])
    ):
        total += cost
    for _rid in sorted(ignored):
        total += penalty
    return total


def enumerate_assignments(
    edges: Sequence[tuple[frozenset, int, float]],
    request_ids: Iterable[int],
    vehicle_ids: Sequence[int],
    must_serve: Iterable[int],
    penalty: float,
    vehicles_requiring_route: Iterable[int] = (),
):
    """Exhaustively try every per-vehicle edge choice; return the best.

    Each vehicle picks one of its edges or none (vehicles listed in
    vehicles_requiring_route may not pick none). Chosen trips must be
    pairwise disjoint; requests outside every chosen trip pay the penalty
    and may not be in must_serve. Returns (objective, chosen, ignored) or
    None when no valid combination exists.
    """
    request_ids = set(request_ids)
    must = set(must_serve) & request_ids
    requiring = set(vehicles_requiring_route)
    per_vehicle: dict[int, list] = {v: [] for v in vehicle_ids}
    for e in edges:
        per_vehicle[e[1]].append(e)
    options = []
    for v in vehicle_ids:
        opts = list(per_vehicle[v])
        if v not in requiring:
            opts.append(None)
        options.append(opts)
    best = None
    for combo in itertools.product(*options):
        served: set[int] = set()
        valid = True
        for e in combo:
            if e is None:
                continue
            if served & e[0]:
                valid = False
                break
            served |= e[0]
        if not valid:
            continue
        ignored = request_ids - served
        if must & ignored:
            continue
        chosen = tuple(e for e in combo if e is not None)
        obj = canonical_objective(chosen, ignored, penalty)
        key = (
            obj,
            tuple(sorted((tuple(sorted(e[0])), e[1]) for e in chosen)),
            tuple(sorted(ignored)),
        )
        if best is None or key < best[0]:
            best = (key, chosen, ignored)
    if best is None:
        return None
    return best[0][0], best[1], best[2]


def global_best_service(
    requests: Sequence[Request],
    depots: Mapping[int, Location],
    travel,
    config: SolverConfig,
):
    """Whole-horizon brute force: best (served count, total distance).

    Considers every split of requests among vehicles (or unserved) and
    every stop ordering per vehicle, vehicles starting at their depot at
    time 0. Maximizes served count, then minimizes summed route distance
    including the leg from depot to first stop. Returns
    (served_count, total_distance, assignment) where assignment maps
    vehicle_id to its request id tuple.
    """
    requests_by_id = {r.id: r for r in requests}
    vehicle_ids = sorted(depots)
    n_opts = len(vehicle_ids) + 1

    route_cache: dict[tuple[int, tuple[int, ...]], Optional[float]] = {}

    def best_cost(vid: int, rids: tuple[int, ...]) -> Optional[float]:
        key = (vid, rids)
        if key not in route_cache:
            got = brute_force_best_route(
                depots[vid], 0, list(rids), [], requests_by_id, travel, config
            )
            route_cache[key] = None if got is None else got[0]
        return route_cache[key]

    best: Optional[tuple[int, float, dict[int, tuple[int, ...]]]] = None
    ids = [r.id for r in requests]
    for choice in itertools.product(range(n_opts), repeat=len(ids)):
        groups: dict[int, list[int]] = {v: [] for v in vehicle_ids}
        served = 0
        for rid, c in zip(ids, choice):
            if c < len(vehicle_ids):
                groups[vehicle_ids[c]].append(rid)
                served += 1
        total = 0.0
        ok = True
        assignment = {}
        for vid in vehicle_ids:
            rids = tuple(groups[vid])
            assignment[vid] = rids
            if not rids:
                continue
            cost = best_cost(vid, rids)
            if cost is None:
                ok = False
                break
            total += cost
        if not ok:
            continue
        if best is None or (-served, total) < (-best[0], best[1]):
            best = (served, total, assignment)
    assert best is not None  # serving nobody is always valid
    return best


def route_violations(route, requests_by_id: Mapping[int, Request], depot: Location,
                     travel, config: SolverConfig) -> list[str]:
    """Everything wrong with one executed route, as human-readable strings.

    Walks the recorded stop list against the raw constraint definitions:
    stops must pair up and respect pickup-before-dropoff, the vehicle must
    be able to physically reach each stop by its recorded time starting
    from the depot at time zero, nobody is served before their window
    opens, waiting and delay stay inside their limits, and the load never
    exceeds capacity. Empty list means the route is clean.
    """
    out = []
    vid = route.vehicle_id
    onboard: set[int] = set()
    done: set[int] = set()
    load = 0
    loc = depot
    free = 0
    for i, s in enumerate(route.stops):
        req = requests_by_id.get(s.request_id)
        if req is None:
            out.append(f"vehicle {vid}: stop {i} names unknown request {s.request_id}")
            return out
        if s.kind == PICKUP:
            if s.request_id in onboard or s.request_id in done:
                out.append(f"vehicle {vid}: request {s.request_id} picked up twice")
            if s.location != req.pickup:
                out.append(f"vehicle {vid}: pickup of {s.request_id} at the wrong place")
            wait = s.scheduled_time - req.desired_pickup_time
            if wait < 0:
                out.append(f"vehicle {vid}: request {s.request_id} picked up early")
            elif wait > config.max_wait:
                out.append(f"vehicle {vid}: request {s.request_id} waits {wait}s, "
                           f"limit {config.max_wait}")
            onboard.add(s.request_id)
            load += req.load
            if load > config.capacity:
                out.append(f"vehicle {vid}: load {load} over capacity at stop {i}")
        elif s.kind == DROPOFF:
            if s.request_id not in onboard:
                out.append(f"vehicle {vid}: request {s.request_id} dropped off "
                           "before any pickup")
                return out
            if s.location != req.dropoff:
                out.append(f"vehicle {vid}: dropoff of {s.request_id} at the wrong place")
            delay = s.scheduled_time - req.earliest_dropoff_time
            if delay < 0:
                out.append(f"vehicle {vid}: request {s.request_id} delivered "
                           "impossibly early")
            elif delay > config.max_delay:
                out.append(f"vehicle {vid}: request {s.request_id} delayed {delay}s, "
                           f"limit {config.max_delay}")
            onboard.discard(s.request_id)
            done.add(s.request_id)
            load -= req.load
        else:
            out.append(f"vehicle {vid}: stop {i} has unknown kind {s.kind!r}")
            return out
        earliest = free + travel.travel_time(loc, s.location)
        if s.scheduled_time < earliest:
            out.append(f"vehicle {vid}: stop {i} scheduled at {s.scheduled_time}s "
                       f"but unreachable before {earliest}s")
        if s.onboard_after != load:
            out.append(f"vehicle {vid}: recorded load {s.onboard_after} at stop {i}, "
                       f"walk says {load}")
        loc = s.location
        free = s.scheduled_time + config.dwell
    if onboard:
        out.append(f"vehicle {vid}: picked up but never delivered: {sorted(onboard)}")
    return out


def record_violations(record, requests_by_id: Mapping[int, Request],
                      config: SolverConfig) -> list[str]:
    """Constraint breaches visible in one passenger's service record."""
    out = []
    rid = record.request_id
    req = requests_by_id.get(rid)
    if req is None:
        return [f"record for unknown request {rid}"]
    details = (record.vehicle_id, record.actual_pickup_time, record.actual_dropoff_time)
    if not record.served:
        if any(d is not None for d in details):
            out.append(f"unserved request {rid} carries service details")
        return out
    if any(d is None for d in details):
        return [f"served request {rid} is missing service details"]
    wait = record.actual_pickup_time - req.desired_pickup_time
    if wait < 0 or wait > config.max_wait:
        out.append(f"request {rid}: waiting time {wait}s outside [0, {config.max_wait}]")
    delay = record.actual_dropoff_time - req.earliest_dropoff_time
    if delay < 0 or delay > config.max_delay:
        out.append(f"request {rid}: delay {delay}s outside [0, {config.max_delay}]")
    if record.actual_dropoff_time < record.actual_pickup_time:
        out.append(f"request {rid}: delivered before pickup")
    return out


def coverage_violations(routes, records) -> list[str]:
    """Cross-checks between the route plans and the passenger records.

    A served passenger must appear exactly once, on the vehicle the record
    names, at the recorded times; an unserved one must appear nowhere.
    """
    out = []
    where: dict[tuple[str, int], list[tuple[int, int]]] = {}
    for rt in routes:
        for s in rt.stops:
            where.setdefault((s.kind, s.request_id), []).append(
                (rt.vehicle_id, s.scheduled_time))
    for rec in records:
        picks = where.get((PICKUP, rec.request_id), [])
        drops = where.get((DROPOFF, rec.request_id), [])
        if not rec.served:
            if picks or drops:
                out.append(f"unserved request {rec.request_id} appears in a route")
            continue
        if len(picks) != 1 or len(drops) != 1:
            out.append(f"request {rec.request_id} appears {len(picks)}x/{len(drops)}x "
                       "across routes, want exactly one pickup and dropoff")
            continue
        (pv, pt), (dv, dt) = picks[0], drops[0]
        if pv != rec.vehicle_id or dv != rec.vehicle_id:
            out.append(f"request {rec.request_id} recorded on vehicle "
                       f"{rec.vehicle_id} but routed by {pv} and {dv}")
        if pt != rec.actual_pickup_time or dt != rec.actual_dropoff_time:
            out.append(f"request {rec.request_id}: record times disagree "
                       "with the route")
    return out
