import numpy as np
import pytest

from drivescope.config import SimConfig
from drivescope.control.command import ControlCommand
from drivescope.data.routes import route_from_lanes
from drivescope.sim import maps
from drivescope.sim.infractions import (InfractionKind, InfractionMonitor,
                                        detect_infractions)
from drivescope.sim.road import LightColor
from drivescope.sim.world import AgentState, WorldState, step_world

CFG = SimConfig()


def corridor(schedule=((LightColor.RED, 1e6),)):
    scn = maps.light_corridor_map(light_at=20.0, length=100.0, schedule=schedule)
    route = route_from_lanes(scn.network, ["main"], seed=0)
    return scn, route


def state_at(scn, x, speed=5.0, agents=(), tick=0):
    ego = AgentState(id="ego", x=x, y=0.0, yaw=0.0, speed=speed,
                     length=4.5, width=2.0, role="EGO")
    colors = {l.id: l.color_at(tick * CFG.dt) for l in scn.lights}
    return WorldState(sim_time=tick * CFG.dt, tick=tick, ego=ego,
                      agents=tuple(agents), light_colors=colors)


def test_red_light_crossing():
    scn, route = corridor()
    prev = state_at(scn, 19.5, tick=0)
    nxt = state_at(scn, 20.5, tick=1)
    events = detect_infractions(prev, nxt, scn, route)
    assert [e.kind for e in events] == [InfractionKind.RED_LIGHT]


def test_green_light_no_event():
    scn, route = corridor(schedule=((LightColor.GREEN, 1e6),))
    prev = state_at(scn, 19.5, tick=0)
    nxt = state_at(scn, 20.5, tick=1)
    assert detect_infractions(prev, nxt, scn, route) == []


def test_collision_vehicle_and_debounce():
    scn, route = corridor()
    other = AgentState(id="v", x=21.0, y=0.0, yaw=0.0, speed=0.0,
                       length=4.4, width=1.9, role="VEHICLE")
    mon = InfractionMonitor(scn, route, CFG)
    prev = state_at(scn, 15.0, agents=[other], tick=0)
    overlapping = state_at(scn, 19.0, agents=[other], tick=1)
    ev1 = mon.update(prev, overlapping)
    assert [e.kind for e in ev1] == [InfractionKind.COLLISION_VEHICLE]
    still = state_at(scn, 19.2, agents=[other], tick=2)
    assert mon.update(overlapping, still) == []


def test_collision_kinds():
    scn, route = corridor()
    ped = AgentState(id="p", x=19.0, y=0.0, yaw=0.0, speed=0.0,
                     length=0.6, width=0.6, role="PEDESTRIAN")
    stat = AgentState(id="s", x=19.0, y=0.0, yaw=0.0, speed=0.0,
                      length=2.0, width=2.0, role="VEHICLE", static=True)
    for agent, kind in ((ped, InfractionKind.COLLISION_PEDESTRIAN),
                        (stat, InfractionKind.COLLISION_STATIC)):
        events = detect_infractions(state_at(scn, 12.0, agents=[agent]),
                                    state_at(scn, 18.5, agents=[agent], tick=1),
                                    scn, route)
        assert [e.kind for e in events] == [kind]


def test_off_road_once_per_excursion():
    scn, route = corridor()
    mon = InfractionMonitor(scn, route, CFG)
    on = state_at(scn, 10.0)
    off = WorldState(sim_time=0.05, tick=1, ego=AgentState(
        id="ego", x=10.0, y=9.0, yaw=0.0, speed=5.0, length=4.5, width=2.0,
        role="EGO"), light_colors=on.light_colors)
    ev = mon.update(on, off)
    assert InfractionKind.OFF_ROAD in [e.kind for e in ev]
    off2 = WorldState(sim_time=0.10, tick=2, ego=AgentState(
        id="ego", x=10.5, y=9.5, yaw=0.0, speed=5.0, length=4.5, width=2.0,
        role="EGO"), light_colors=on.light_colors)
    assert mon.update(off, off2) == []


def test_route_deviation_threshold():
    scn, route = corridor()
    mon = InfractionMonitor(scn, route, CFG)
    near = WorldState(sim_time=0.0, tick=0, ego=AgentState(
        id="ego", x=10.0, y=7.0, yaw=0.0, speed=5.0, length=4.5, width=2.0,
        role="EGO"), light_colors={})
    far = WorldState(sim_time=0.05, tick=1, ego=AgentState(
        id="ego", x=10.0, y=8.5, yaw=0.0, speed=5.0, length=4.5, width=2.0,
        role="EGO"), light_colors={})
    ev0 = mon.update(near, near)
    assert InfractionKind.ROUTE_DEVIATION not in [e.kind for e in ev0]
    ev1 = mon.update(near, far)
    assert InfractionKind.ROUTE_DEVIATION in [e.kind for e in ev1]


def test_blocked_after_timeout_with_debounce():
    # stationary at a green light: 61 s -> exactly one BLOCKED event
    scn, route = corridor(schedule=((LightColor.GREEN, 1e6),))
    mon = InfractionMonitor(scn, route, CFG)
    kinds = []
    prev = state_at(scn, 10.0, speed=0.0, tick=0)
    n = int(61.0 / CFG.dt)
    for k in range(1, n):
        nxt = state_at(scn, 10.0, speed=0.0, tick=k)
        kinds += [e.kind for e in mon.update(prev, nxt)]
        prev = nxt
    assert kinds.count(InfractionKind.BLOCKED) == 1


def test_blocked_excused_by_red_light():
    scn, route = corridor(schedule=((LightColor.RED, 1e6),))
    mon = InfractionMonitor(scn, route, CFG)
    prev = state_at(scn, 15.0, speed=0.0, tick=0)  # 5 m before the red line
    kinds = []
    for k in range(1, int(70.0 / CFG.dt)):
        nxt = state_at(scn, 15.0, speed=0.0, tick=k)
        kinds += [e.kind for e in mon.update(prev, nxt)]
        prev = nxt
    assert InfractionKind.BLOCKED not in kinds


def test_stop_sign_run_and_honored():
    scn = maps.sign_corridor_map(sign_at=20.0, length=100.0, hold=1.0)
    route = route_from_lanes(scn.network, ["main"], seed=0)
    # running the sign
    mon = InfractionMonitor(scn, route, CFG)
    ev = mon.update(state_at(scn, 19.5, speed=6.0), state_at(scn, 20.5, speed=6.0, tick=1))
    assert [e.kind for e in ev] == [InfractionKind.STOP_SIGN]
    # honoring it: hold 1 s within the approach zone, then cross
    mon2 = InfractionMonitor(scn, route, CFG)
    prev = state_at(scn, 18.5, speed=0.0, tick=0)
    assert mon2.sign_active("ss0")
    for k in range(1, 25):
        nxt = state_at(scn, 18.5, speed=0.0, tick=k)
        assert mon2.update(prev, nxt) == []
        prev = nxt
    assert not mon2.sign_active("ss0")
    ev = mon2.update(prev, state_at(scn, 20.5, speed=3.0, tick=26))
    assert ev == []
