"""Unit-level drives of the per-agent controller, one protocol rule at a time."""

import random

import pytest

from gridswarm.agent import Agent
from gridswarm.messages import (
    MSG_AXES, MSG_BORDER_COUNT, MSG_BORDER_COUNT_NC, MSG_COORD, MSG_DEGREE,
    MSG_ID, MSG_ID_RELAY, MSG_REPAIR, MSG_SYNC, MSG_TOKEN, MSG_TOTALS, Msg,
)
from gridswarm.protocol import (
    GROUP_BORDER, GROUP_CORNER, GROUP_MIDDLE,
    PH_AXES, PH_BORDER_COUNT, PH_COORDS, PH_ELECT, PH_GROUP, PH_ID_ASSIGN,
    PH_ID_DEDUP, PH_NBR_FILTER, PH_NBR_REPAIR, PH_TOTALS, ProtocolParams,
)


class StubCtx:
    def __init__(self):
        self.events = []

    def __getattr__(self, name):
        if name.startswith("note_"):
            def note(*args):
                self.events.append((name[5:], args))
            return note
        raise AttributeError(name)

    def of(self, kind):
        return [e for e in self.events if e[0] == kind]


def make_agent(phase=PH_ID_ASSIGN, my_id=9, seed=0, **params):
    ctx = StubCtx()
    agent = Agent(0, random.Random(seed), ProtocolParams(**params), ctx)
    agent.phase = phase
    agent.deadline = None
    agent.my_id = my_id
    return agent, ctx


def add_neighbor(agent, nid, dist=35.0, degree=None):
    agent._add_neighbor(nid, dist)
    agent.neighbors[nid].degree = degree
    return agent.neighbors[nid]


class TestIdAssignment:
    def test_collision_forces_fresh_id(self):
        agent, _ = make_agent(my_id=9)
        agent.on_message(Msg(MSG_ID, a=9), 35.0)
        assert agent.my_id != 9
        assert 9 in agent.blacklist

    def test_other_ids_only_blacklisted(self):
        agent, _ = make_agent(my_id=9)
        agent.on_message(Msg(MSG_ID, a=77), 35.0)
        assert agent.my_id == 9
        assert 77 in agent.blacklist

    def test_own_echo_with_own_nonce_is_ignored(self):
        agent, _ = make_agent(phase=PH_ID_DEDUP, my_id=9)
        agent.nonce = 4
        agent.on_message(Msg(MSG_ID_RELAY, a=77, b=12, c=9, d=4), 35.0)
        assert agent.my_id == 9

    def test_foreign_nonce_echo_forces_fresh_id(self):
        agent, _ = make_agent(phase=PH_ID_DEDUP, my_id=9)
        agent.nonce = 4
        agent.on_message(Msg(MSG_ID_RELAY, a=77, b=12, c=9, d=200), 35.0)
        assert agent.my_id != 9
        assert 9 in agent.blacklist

    def test_direct_reception_of_own_id_always_duplicates(self):
        agent, _ = make_agent(phase=PH_ID_DEDUP, my_id=9)
        agent.nonce = 4
        agent.on_message(Msg(MSG_ID_RELAY, a=9, b=4, c=None, d=None), 35.0)
        assert agent.my_id != 9

    def test_min_distance_tracked_with_body_floor(self):
        agent, _ = make_agent(phase=PH_ID_DEDUP)
        agent.on_message(Msg(MSG_ID, a=1), 20.0)   # below body length: discarded
        assert agent.min_dist == 255.0
        agent.on_message(Msg(MSG_ID, a=1), 36.0)
        agent.on_message(Msg(MSG_ID, a=2), 34.0)
        agent.on_message(Msg(MSG_ID, a=3), 50.0)
        assert agent.min_dist == 34.0

    def test_conflicting_nonces_get_relay_priority(self):
        agent, _ = make_agent(phase=PH_ID_DEDUP, my_id=1)
        agent.on_message(Msg(MSG_ID_RELAY, a=40, b=100, c=None, d=None), 35.0)
        agent.on_message(Msg(MSG_ID_RELAY, a=41, b=200, c=None, d=None), 35.0)
        agent.on_message(Msg(MSG_ID_RELAY, a=40, b=999, c=None, d=None), 35.0)
        assert agent.conflicts == [40]
        msg = agent._compose_relay()
        assert (msg.c, msg.d) == (40, 999)


class TestNeighborFilter:
    def test_filter_threshold(self):
        agent, _ = make_agent(phase=PH_NBR_FILTER)
        agent.min_dist = 33.0  # radius 59.5
        agent.filter_candidate(5, 50.0)
        assert 5 in agent.neighbors
        agent.filter_candidate(6, 60.0)
        assert 6 not in agent.neighbors
        before = len(agent.neighbors)
        agent.filter_candidate(5, 50.0)  # dedupe
        assert len(agent.neighbors) == before

    def test_smoothing_window_defers_admission(self):
        agent, _ = make_agent(phase=PH_NBR_FILTER)
        agent.min_dist = 33.0
        agent.on_message(Msg(MSG_ID, a=5), 50.0)
        agent.on_message(Msg(MSG_ID, a=5), 50.0)
        assert 5 not in agent.neighbors
        agent.on_message(Msg(MSG_ID, a=5), 50.0)
        assert 5 in agent.neighbors

    def test_smoothing_absorbs_single_outlier(self):
        agent, _ = make_agent(phase=PH_NBR_FILTER)
        agent.min_dist = 33.0
        # one wild low sample from a two-cells-away sender must not admit it
        for d in (70.0, 49.0, 70.0):
            agent.on_message(Msg(MSG_ID, a=8), d)
        assert 8 not in agent.neighbors
        # a genuine diagonal with one high outlier still gets in on the
        # rolling window
        for d in (49.5, 70.0, 49.5, 49.5, 49.5):
            agent.on_message(Msg(MSG_ID, a=9), d)
        assert 9 in agent.neighbors


class TestRepair:
    def test_adds_sender_listing_me_regardless_of_distance(self):
        agent, _ = make_agent(phase=PH_NBR_REPAIR, my_id=9)
        agent.min_dist = 33.0
        agent.on_message(Msg(MSG_REPAIR, a=17, ids=(3, 9, 4)), 90.0)
        assert 17 in agent.neighbors

    def test_ignores_lists_without_me(self):
        agent, _ = make_agent(phase=PH_NBR_REPAIR, my_id=9)
        agent.on_message(Msg(MSG_REPAIR, a=17, ids=(3, 4)), 35.0)
        assert 17 not in agent.neighbors

    def test_idempotent(self):
        agent, _ = make_agent(phase=PH_NBR_REPAIR, my_id=9)
        add_neighbor(agent, 17)
        agent.on_message(Msg(MSG_REPAIR, a=17, ids=(9,)), 35.0)
        assert len(agent.neighbors) == 1

    def test_disabled_repair_ignores_lists(self):
        agent, _ = make_agent(phase=PH_NBR_REPAIR, my_id=9, repair_enabled=False)
        agent.min_dist = 33.0
        agent.on_message(Msg(MSG_REPAIR, a=17, ids=(9,)), 90.0)
        assert 17 not in agent.neighbors

    def test_repair_window_rotates(self):
        agent, _ = make_agent(phase=PH_NBR_REPAIR)
        for nid in range(10):
            add_neighbor(agent, nid)
        seen = set()
        for _ in range(10):
            seen.update(agent.compose().ids)  # compose advances the window
        assert seen == set(range(10))


class TestGroupPhase:
    def test_classification_after_all_degrees(self):
        agent, ctx = make_agent(phase=PH_NBR_REPAIR, my_id=1)
        for nid, deg in [(10, 5), (11, 5), (12, 8)]:
            agent._add_neighbor(nid, 35.0)
        agent._enter(PH_GROUP)
        agent.on_message(Msg(MSG_DEGREE, a=10, b=5), 35.0)
        agent.on_message(Msg(MSG_DEGREE, a=11, b=5), 35.0)
        assert agent.group == 0  # still unknown
        agent.on_message(Msg(MSG_DEGREE, a=12, b=8), 35.0)
        assert agent.group == GROUP_CORNER
        assert ctx.of("group")

    def test_degree_from_stranger_ignored(self):
        agent, _ = make_agent(phase=PH_NBR_REPAIR)
        agent._add_neighbor(10, 35.0)
        agent._enter(PH_GROUP)
        agent.on_message(Msg(MSG_DEGREE, a=99, b=5), 35.0)
        assert agent.group == 0

    def test_damage_flag_set_on_adjacent_degree(self):
        agent, _ = make_agent(phase=PH_NBR_REPAIR)
        for nid in range(7):
            agent._add_neighbor(nid, 35.0)
        agent._enter(PH_GROUP)
        for nid in range(7):
            agent.on_message(Msg(MSG_DEGREE, a=nid, b=8), 35.0)
        assert agent.group == GROUP_CORNER  # 7 < 8 everywhere
        assert agent.damaged

    def test_clean_corner_not_damaged(self):
        agent, _ = make_agent(phase=PH_NBR_REPAIR)
        for nid, deg in [(1, 5), (2, 5), (3, 8)]:
            agent._add_neighbor(nid, 35.0)
        agent._enter(PH_GROUP)
        for nid, deg in [(1, 5), (2, 5), (3, 8)]:
            agent.on_message(Msg(MSG_DEGREE, a=nid, b=deg), 35.0)
        assert agent.group == GROUP_CORNER
        assert not agent.damaged


def corner_agent(seed=0):
    """A classified clean corner ready for the election."""
    agent, ctx = make_agent(phase=PH_NBR_REPAIR, my_id=20, seed=seed)
    for nid, deg in [(10, 5), (12, 5), (14, 8)]:
        add_neighbor(agent, nid, degree=deg)
    agent.degree = 3
    agent.group = GROUP_CORNER
    return agent, ctx


class TestElection:
    def test_corner_drops_candidacy_on_smaller_token(self):
        agent, _ = corner_agent()
        agent._enter(PH_ELECT)
        assert agent.candidate
        agent.token = 500
        agent.on_message(Msg(MSG_TOKEN, a=200), 35.0)
        assert not agent.candidate
        msg = agent.compose()
        if msg is not None and msg.kind == MSG_SYNC:
            msg = agent.compose()
        assert msg is None  # defeated corners go silent

    def test_corner_keeps_candidacy_on_larger_token(self):
        agent, _ = corner_agent()
        agent._enter(PH_ELECT)
        agent.token = 500
        agent.on_message(Msg(MSG_TOKEN, a=900), 35.0)
        assert agent.candidate

    def test_noncorner_relays_minimum(self):
        agent, _ = make_agent(phase=PH_ELECT)
        agent.group = GROUP_BORDER
        agent.on_message(Msg(MSG_TOKEN, a=300), 35.0)
        assert agent.min_token == 300
        agent.on_message(Msg(MSG_TOKEN, a=200), 35.0)
        assert agent.min_token == 200
        agent.on_message(Msg(MSG_TOKEN, a=400), 35.0)
        assert agent.min_token == 200

    def test_unopposed_corner_becomes_origin(self):
        agent, ctx = corner_agent()
        agent._enter(PH_ELECT)
        agent.on_message(Msg(MSG_TOKEN, a=agent.token + 1), 35.0)
        agent._enter(PH_AXES)
        assert agent.is_origin
        assert agent.coord == (1, 1)
        assert agent.lower_id_border == 10
        msg = agent.compose()
        while msg is not None and msg.kind == MSG_SYNC:
            msg = agent.compose()
        assert msg.kind == MSG_AXES and msg.d == 10
        assert ctx.of("origin")

    def test_damaged_corner_declines_candidacy(self):
        agent, _ = corner_agent()
        agent.damaged = True
        agent._enter(PH_ELECT)
        assert not agent.candidate

    def test_degenerate_origin_faults(self):
        agent, ctx = make_agent(phase=PH_ELECT, my_id=20)
        for nid in (1, 2, 3):
            add_neighbor(agent, nid, degree=8)
        agent.degree = 3
        agent.group = GROUP_CORNER
        agent.candidate = True
        agent.token = 1
        agent._enter(PH_AXES)
        assert agent.fault is not None
        assert ctx.of("origin_degenerate")


class TestAxes:
    def make_border(self, my_id):
        agent, ctx = make_agent(phase=PH_AXES, my_id=my_id)
        add_neighbor(agent, 50, degree=3)  # the origin
        agent.degree = 5
        agent.group = GROUP_BORDER
        return agent, ctx

    def test_low_id_border_takes_2_1(self):
        agent, _ = self.make_border(12)
        agent.on_message(Msg(MSG_AXES, a=50, b=1, c=1, d=12), 35.0)
        assert agent.coord == (2, 1)
        assert agent.origin_id == 50

    def test_high_id_border_takes_1_2(self):
        agent, _ = self.make_border(200)
        agent.on_message(Msg(MSG_AXES, a=50, b=1, c=1, d=12), 35.0)
        assert agent.coord == (1, 2)

    def test_middle_ignores_axes(self):
        agent, _ = make_agent(phase=PH_AXES, my_id=12)
        add_neighbor(agent, 50, degree=3)
        agent.group = GROUP_MIDDLE
        agent.on_message(Msg(MSG_AXES, a=50, b=1, c=1, d=12), 35.0)
        assert agent.coord == (0, 0)

    def test_axes_from_non_neighbor_ignored(self):
        agent, _ = self.make_border(12)
        agent.on_message(Msg(MSG_AXES, a=99, b=1, c=1, d=12), 70.0)
        assert agent.coord == (0, 0)


def border_in_walk(my_id=30, coord=None, degree=5, nbr_degrees=((40, 5), (41, 5), (42, 8))):
    agent, ctx = make_agent(phase=PH_BORDER_COUNT, my_id=my_id)
    for nid, deg in nbr_degrees:
        add_neighbor(agent, nid, degree=deg)
    agent.degree = degree
    agent.group = GROUP_BORDER
    if coord:
        agent.cx, agent.cy = coord
    return agent, ctx


class TestBorderCount:
    def test_border_increments_and_copies_slots(self):
        agent, _ = border_in_walk()
        agent.on_message(Msg(MSG_BORDER_COUNT, a=40, b=4, ids=(0, 0, 0)), 35.0)
        assert agent.border_count == 5
        assert agent.count_source == 40
        msg = agent.compose()
        while msg.kind == MSG_SYNC:
            msg = agent.compose()
        assert msg.kind == MSG_BORDER_COUNT and msg.b == 5

    def test_border_accepts_only_first_count(self):
        agent, _ = border_in_walk()
        agent.on_message(Msg(MSG_BORDER_COUNT, a=40, b=4, ids=(0, 0, 0)), 35.0)
        agent.on_message(Msg(MSG_BORDER_COUNT, a=41, b=9, ids=(0, 0, 0)), 35.0)
        assert agent.border_count == 5

    def test_count_below_two_ignored(self):
        agent, _ = border_in_walk()
        agent.on_message(Msg(MSG_BORDER_COUNT, a=40, b=1, ids=(0, 0, 0)), 35.0)
        assert agent.border_count == 0

    def test_near_corner_header_skipped_by_borders(self):
        agent, _ = border_in_walk()
        agent.on_message(Msg(MSG_BORDER_COUNT_NC, a=40, b=4, ids=(0, 0, 0)), 35.0)
        assert agent.border_count == 0

    def test_one_two_accepts_only_above_three(self):
        agent, _ = border_in_walk(coord=(1, 2))
        agent.on_message(Msg(MSG_BORDER_COUNT, a=40, b=3, ids=(5, 9, 0)), 35.0)
        assert agent.border_count == 0
        agent.on_message(Msg(MSG_BORDER_COUNT, a=40, b=15, ids=(5, 9, 13)), 35.0)
        assert agent.border_count == 16

    def test_corner_writes_first_free_slot(self):
        agent, _ = make_agent(phase=PH_BORDER_COUNT, my_id=60)
        for nid, deg in [(40, 5), (41, 5), (42, 8)]:
            add_neighbor(agent, nid, degree=deg)
        agent.degree = 3
        agent.group = GROUP_CORNER
        agent.on_message(Msg(MSG_BORDER_COUNT_NC, a=40, b=4, ids=(0, 0, 0)), 35.0)
        assert agent.border_count == 5
        assert (agent.c1, agent.c2, agent.c3) == (5, 0, 0)
        agent2, _ = make_agent(phase=PH_BORDER_COUNT, my_id=61)
        add_neighbor(agent2, 40, degree=5)
        agent2.degree = 3
        agent2.group = GROUP_CORNER
        agent2.on_message(Msg(MSG_BORDER_COUNT_NC, a=40, b=8, ids=(5, 0, 0)), 35.0)
        assert (agent2.c1, agent2.c2, agent2.c3) == (5, 9, 0)

    def test_origin_closes_walk(self):
        agent, ctx = make_agent(phase=PH_BORDER_COUNT, my_id=50)
        add_neighbor(agent, 40, degree=5)
        add_neighbor(agent, 41, degree=5)
        add_neighbor(agent, 42, degree=8)
        agent.degree = 3
        agent.group = GROUP_CORNER
        agent.is_origin = True
        agent.cx = agent.cy = 1
        agent.border_count = 1
        agent.on_message(Msg(MSG_BORDER_COUNT, a=41, b=2, ids=(0, 0, 0)), 35.0)
        assert agent.total_count == 0  # two is not past the threshold
        agent.on_message(Msg(MSG_BORDER_COUNT, a=41, b=16, ids=(5, 9, 13)), 35.0)
        assert agent.total_count == 16
        assert agent.dims == (5, 5, 25)
        assert agent.phase == PH_TOTALS
        assert agent.origin_predecessor == 41
        assert ctx.of("dims")

    def test_damaged_agent_requires_adjacent_degree_source(self):
        # a true border robot missing one link (degree 4) still follows the
        # walk from a degree-5 peer, while a damaged interior robot
        # (degree 7 among 5s) stays out
        agent, _ = border_in_walk(degree=4, nbr_degrees=((40, 5), (41, 5), (42, 8)))
        agent.damaged = True
        agent.on_message(Msg(MSG_BORDER_COUNT, a=40, b=4, ids=(0, 0, 0)), 35.0)
        assert agent.border_count == 5
        spurious, _ = border_in_walk(degree=7, nbr_degrees=((40, 5), (41, 5), (42, 8)))
        spurious.damaged = True
        spurious.on_message(Msg(MSG_BORDER_COUNT, a=40, b=4, ids=(0, 0, 0)), 35.0)
        assert spurious.border_count == 0


class TestTotals:
    def walker(self):
        agent, ctx = border_in_walk()
        agent.border_count = 7
        agent.count_source = 40
        return agent, ctx

    def test_totals_accepted_from_walk_source_only(self):
        agent, _ = self.walker()
        agent._enter(PH_TOTALS)
        agent.on_message(Msg(MSG_TOTALS, a=41, b=16, ids=(5, 9, 13)), 35.0)
        assert not agent.totals_known
        agent.on_message(Msg(MSG_TOTALS, a=40, b=16, ids=(5, 9, 13)), 35.0)
        assert agent.totals_known
        assert (agent.c1, agent.c2, agent.c3) == (5, 9, 13)

    def test_middle_ignores_totals(self):
        agent, _ = make_agent(phase=PH_TOTALS)
        add_neighbor(agent, 40, degree=8)
        agent.group = GROUP_MIDDLE
        agent.on_message(Msg(MSG_TOTALS, a=40, b=16, ids=(5, 9, 13)), 35.0)
        assert not agent.totals_known

    def test_origin_advances_when_totals_return(self):
        agent, _ = make_agent(phase=PH_TOTALS, my_id=50)
        add_neighbor(agent, 41, degree=5)
        agent.group = GROUP_CORNER
        agent.is_origin = True
        agent.totals_known = True
        agent.origin_predecessor = 41
        agent.on_message(Msg(MSG_TOTALS, a=41, b=16, ids=(5, 9, 13)), 35.0)
        assert agent.phase == PH_COORDS


class TestCoordsPhase:
    def test_border_coord_from_walk_state(self):
        agent, ctx = border_in_walk()
        agent.border_count = 10
        agent.count_source = 40
        agent.totals_known = True
        agent.c1, agent.c2, agent.c3 = 5, 9, 13
        agent._enter(PH_COORDS)
        assert agent.coord == (4, 5)
        assert ctx.of("coord")

    def test_middle_inference_write_once(self):
        agent, ctx = make_agent(phase=PH_COORDS, my_id=7)
        for nid in (1, 2, 3, 4, 5):
            add_neighbor(agent, nid, degree=8)
        agent.group = GROUP_MIDDLE
        agent.on_message(Msg(MSG_COORD, a=1, b=3, c=7), 35.0)
        agent.on_message(Msg(MSG_COORD, a=2, b=4, c=7), 35.0)
        assert agent.coord == (0, 0)
        agent.on_message(Msg(MSG_COORD, a=3, b=5, c=7), 35.0)
        assert agent.cx == 4 and agent.cy == 0
        agent.on_message(Msg(MSG_COORD, a=4, b=4, c=8), 35.0)
        assert agent.coord == (4, 0)  # 6,7,8 not yet consecutive
        agent.on_message(Msg(MSG_COORD, a=5, b=3, c=6), 35.0)
        assert agent.coord == (4, 7)
        assert ctx.of("coord")

    def test_partial_coords_flow_through(self):
        agent, _ = make_agent(phase=PH_COORDS)
        for nid in (1, 2, 3):
            add_neighbor(agent, nid, degree=8)
        agent.group = GROUP_MIDDLE
        agent.on_message(Msg(MSG_COORD, a=1, b=3, c=0), 35.0)
        agent.on_message(Msg(MSG_COORD, a=2, b=4, c=0), 35.0)
        agent.on_message(Msg(MSG_COORD, a=3, b=5, c=0), 35.0)
        assert agent.cx == 4
        msg = agent.compose()
        while msg.kind == MSG_SYNC:
            msg = agent.compose()
        assert msg.kind == MSG_COORD and (msg.b, msg.c) == (4, 0)


class TestSync:
    def test_timer_advances_and_relays(self):
        agent, _ = make_agent()
        agent.phase_start = 0
        agent.deadline = 10
        for _ in range(10):
            agent.fire()
        assert agent.phase == PH_ID_DEDUP
        msg = agent.compose()
        assert msg.kind == MSG_SYNC and msg.a == PH_ID_DEDUP

    def test_sync_pulls_straggler_forward(self):
        agent, _ = make_agent()
        agent.on_message(Msg(MSG_SYNC, a=PH_ID_DEDUP), 35.0)
        assert agent.phase == PH_ID_DEDUP
        msg = agent.compose()
        assert msg.kind == MSG_SYNC and msg.a == PH_ID_DEDUP

    def test_stale_sync_ignored(self):
        agent, _ = make_agent(phase=PH_GROUP)
        agent.on_message(Msg(MSG_SYNC, a=PH_GROUP), 35.0)
        assert agent.phase == PH_GROUP
        agent.on_message(Msg(MSG_SYNC, a=PH_ID_DEDUP), 35.0)
        assert agent.phase == PH_GROUP

    def test_skipped_phase_recovers_and_is_counted(self):
        agent, ctx = make_agent()
        agent.on_message(Msg(MSG_SYNC, a=PH_NBR_FILTER), 35.0)
        assert agent.phase == PH_NBR_FILTER
        assert ctx.of("phase_skew")

    def test_relay_budget_is_one_send(self):
        agent, _ = make_agent()
        agent.on_message(Msg(MSG_SYNC, a=PH_ID_DEDUP), 35.0)
        assert agent.compose().kind == MSG_SYNC
        assert agent.compose().kind != MSG_SYNC
