"""The per-agent controller.

Every robot runs this identical state machine.  It consumes two kinds of
events, message receptions (with a distance estimate) and local clock ticks,
and exposes one output: the payload it would broadcast right now.  The
controller never talks to other agents directly; the transport layer decides
who hears a broadcast.

The run is a fixed sequence of phases (see :mod:`gridswarm.protocol`).  Timed
phases end when the local tick counter crosses the phase budget; a robot that
gets there first floods a synchronization message so stragglers jump along,
which keeps all clocks within one phase of each other.  The two border-walk
phases have no timer; the origin robot ends them by flooding the sync message
when the walking counter returns to it.
"""

from __future__ import annotations

from .messages import (
    MSG_AXES, MSG_BORDER_COUNT, MSG_BORDER_COUNT_NC, MSG_COORD, MSG_DEGREE,
    MSG_ID, MSG_ID_RELAY, MSG_REPAIR, MSG_SYNC, MSG_TOKEN, MSG_TOTALS,
    MAX_REPAIR_IDS, TOKEN_BITS, Msg,
)
from .protocol import (
    GROUP_BORDER, GROUP_CORNER, GROUP_FAULT, GROUP_MIDDLE, GROUP_UNKNOWN,
    PH_AXES, PH_BORDER_COUNT, PH_COORDS, PH_ELECT, PH_GROUP, PH_ID_ASSIGN,
    PH_ID_DEDUP, PH_NBR_FILTER, PH_NBR_REPAIR, PH_ROLE_BASE, PH_TOTALS,
    ProtocolParams, classify_position, corner_border_coords, infer_middle_coord,
    pick_fresh_id, swarm_dimensions,
)
from .errors import CountInconsistentError, FullBlacklistError

# distance sentinel mirroring an 8-bit range sensor's maximum reading
MAX_SENSOR_MM = 255.0


class NeighborRecord:
    """What an agent knows about one confirmed lattice neighbor."""

    __slots__ = ("id", "nonce", "last_dist", "degree", "cx", "cy")

    def __init__(self, nid, dist):
        self.id = nid
        self.nonce = None
        self.last_dist = dist
        self.degree = None  # neighbor count, learned in the group phase
        self.cx = 0
        self.cy = 0


class Agent:
    """One robot.  Mutated only by ``on_message`` and ``fire``."""

    __slots__ = (
        "idx", "rng", "params", "ctx", "plan", "role_step_ticks",
        "phase", "phase_start", "deadline", "local_tick", "sync_tx_left",
        "my_id", "nonce", "blacklist", "heard", "heard_order", "conflicts",
        "send_count",
        "min_dist", "dist_hist", "neighbors", "degree",
        "group", "pending_degrees", "damaged",
        "candidate", "token", "min_token",
        "is_origin", "origin_id", "lower_id_border",
        "cx", "cy", "border_count", "c1", "c2", "c3", "total_count",
        "totals_known", "use_nc", "count_source", "origin_predecessor", "dims",
        "role", "departed", "tx_stop_tick", "fault",
    )

    def __init__(self, idx, rng, params: ProtocolParams, ctx, plan=None,
                 role_step_ticks=None):
        self.idx = idx
        self.rng = rng
        self.params = params
        self.ctx = ctx
        self.plan = plan
        self.role_step_ticks = role_step_ticks

        self.local_tick = 0
        self.sync_tx_left = 0
        self.send_count = 0

        self.my_id = rng.randrange(256)
        self.nonce = 0
        self.blacklist = set()
        self.heard = {}          # id -> nonce or None, from the dedup phase
        self.heard_order = []
        self.conflicts = []      # ids seen under two nonces, relayed first

        self.min_dist = MAX_SENSOR_MM
        self.dist_hist = {}      # sender id -> up to dist_window recent samples
        self.neighbors = {}      # sender id -> NeighborRecord
        self.degree = 0
        self.group = GROUP_UNKNOWN
        self.pending_degrees = 0
        self.damaged = False

        self.candidate = False
        self.token = None
        self.min_token = None
        self.is_origin = False
        self.origin_id = None
        self.lower_id_border = None

        self.cx = 0
        self.cy = 0
        self.border_count = 0
        self.c1 = self.c2 = self.c3 = 0
        self.total_count = 0
        self.totals_known = False
        self.use_nc = False
        self.count_source = None
        self.origin_predecessor = None
        self.dims = None

        self.role = "off"
        self.departed = False
        self.tx_stop_tick = None
        self.fault = None

        self.phase = PH_ID_ASSIGN
        self.phase_start = 0
        self.deadline = params.phase_duration(PH_ID_ASSIGN, role_step_ticks)

    # ------------------------------------------------------------------
    # clock

    def fire(self):
        """One local control-loop iteration; called by the scheduler."""
        self.local_tick += 1
        if self.deadline is not None and self.local_tick - self.phase_start >= self.deadline:
            self._advance(self.phase + 1)

    def compose(self):
        """Payload to broadcast at this send slot, or None to stay silent."""
        if self.fault is not None:
            return None
        if self.departed and self.tx_stop_tick is not None and \
                self.local_tick >= self.tx_stop_tick:
            return None
        if self.sync_tx_left > 0:
            self.sync_tx_left -= 1
            return Msg(MSG_SYNC, a=self.phase)
        ph = self.phase
        self.send_count += 1
        if ph == PH_ID_ASSIGN or ph == PH_NBR_FILTER:
            return Msg(MSG_ID, a=self.my_id)
        if ph == PH_ID_DEDUP:
            return self._compose_relay()
        if ph == PH_NBR_REPAIR:
            if not self.params.repair_enabled:
                return Msg(MSG_ID, a=self.my_id)
            return self._compose_repair()
        if ph == PH_GROUP:
            return Msg(MSG_DEGREE, a=self.my_id, b=self.degree)
        if ph == PH_ELECT:
            if self.group == GROUP_CORNER:
                return Msg(MSG_TOKEN, a=self.token) if self.candidate else None
            return Msg(MSG_TOKEN, a=self.min_token) if self.min_token is not None else None
        if ph == PH_AXES:
            if self.is_origin:
                return Msg(MSG_AXES, a=self.my_id, b=1, c=1, d=self.lower_id_border)
            return None
        if ph == PH_BORDER_COUNT:
            if self.border_count > 0:
                kind = MSG_BORDER_COUNT_NC if self.use_nc else MSG_BORDER_COUNT
                return Msg(kind, a=self.my_id, b=self.border_count,
                           ids=(self.c1, self.c2, self.c3))
            return None
        if ph == PH_TOTALS:
            if self.totals_known:
                return Msg(MSG_TOTALS, a=self.my_id, b=self.total_count,
                           ids=(self.c1, self.c2, self.c3))
            return None
        if ph == PH_COORDS:
            # partial coordinates are announced too (0 marks the unknown
            # axis); interior inference stalls on lattices wider than three
            # if robots wait for both axes before speaking
            if self.cx > 0 or self.cy > 0:
                return Msg(MSG_COORD, a=self.my_id, b=self.cx, c=self.cy)
            return None
        return None  # role phases are quiet between step changes

    def _compose_relay(self):
        # ids this agent has watched flip between two nonces are proven
        # duplicates somewhere in range; relaying them first lets the losing
        # holder notice within a message period instead of a full list cycle
        while self.conflicts:
            nid = self.conflicts.pop(0)
            nonce = self.heard.get(nid)
            if nonce is not None:
                return Msg(MSG_ID_RELAY, a=self.my_id, b=self.nonce, c=nid, d=nonce)
        # otherwise cycle one (id, nonce) pair per send; entries without a
        # nonce yet cannot be vouched for and are skipped
        n = len(self.heard_order)
        for probe in range(n):
            nid = self.heard_order[(self.send_count + probe) % n]
            nonce = self.heard.get(nid)
            if nonce is not None:
                return Msg(MSG_ID_RELAY, a=self.my_id, b=self.nonce, c=nid, d=nonce)
        return Msg(MSG_ID_RELAY, a=self.my_id, b=self.nonce, c=None, d=None)

    def _compose_repair(self):
        ids = list(self.neighbors)
        if len(ids) <= MAX_REPAIR_IDS:
            window = tuple(ids)
        else:
            start = self.send_count % len(ids)
            window = tuple(ids[(start + i) % len(ids)] for i in range(MAX_REPAIR_IDS))
        return Msg(MSG_REPAIR, a=self.my_id, ids=window)

    # ------------------------------------------------------------------
    # phase transitions

    def _advance(self, target):
        if self.fault is not None:
            return
        while self.phase < target:
            self._enter(self.phase + 1)

    def _enter(self, ph):
        self.phase = ph
        self.phase_start = self.local_tick
        self.deadline = self.params.phase_duration(ph, self.role_step_ticks)
        self.sync_tx_left = self.params.sync_relay_sends
        self.ctx.note_phase(self.idx, ph, self.local_tick)

        if ph == PH_ID_DEDUP:
            self.nonce = self.rng.randrange(65536)
        elif ph == PH_GROUP:
            # freeze the neighbor list; counts exchanged from here on
            self.degree = len(self.neighbors)
            self.pending_degrees = sum(
                1 for rec in self.neighbors.values() if rec.degree is None)
            if self.degree == 0:
                self._fail("isolated: no neighbors at group identification")
        elif ph == PH_ELECT:
            if self.group == GROUP_UNKNOWN:
                self._classify(final=True)
            if self.group == GROUP_CORNER and not self.damaged:
                self.candidate = True
                self.token = self.rng.getrandbits(TOKEN_BITS)
        elif ph == PH_AXES:
            if self.group == GROUP_CORNER and self.candidate:
                self._become_origin()
        elif ph == PH_BORDER_COUNT:
            if self.is_origin:
                self.border_count = 1
            elif (self.cx, self.cy) == (2, 1):
                self.border_count = 2
                self.count_source = self.origin_id
                self.use_nc = self._special_header()
        elif ph == PH_COORDS:
            self._assign_border_coord()
        elif ph >= PH_ROLE_BASE:
            self._enter_role_step(ph - PH_ROLE_BASE)

    def _enter_role_step(self, step):
        self.ctx.note_role_step(self.idx, step, self.local_tick)
        if self.departed or self.plan is None:
            return
        if self.cx > 0 and self.cy > 0:
            role = self.plan.role_at((self.cx, self.cy), step)
        else:
            role = "off"
        if role == "departed":
            self.departed = True
            self.tx_stop_tick = self.local_tick + self.params.departed_tx_delay
        self.role = role

    def _fail(self, reason):
        self.fault = reason
        self.ctx.note_fault(self.idx, reason)

    # ------------------------------------------------------------------
    # message handling

    def on_message(self, msg: Msg, dist: float):
        if self.fault is not None:
            return
        kind = msg.kind
        if kind == MSG_SYNC:
            self._on_sync(msg.a)
            return
        ph = self.phase
        if ph == PH_ID_ASSIGN:
            if kind == MSG_ID or kind == MSG_ID_RELAY:
                self._on_id_first_phase(msg.a)
        elif ph == PH_ID_DEDUP:
            if kind == MSG_ID or kind == MSG_ID_RELAY:
                self._on_id_dedup(msg, dist)
        elif ph == PH_NBR_FILTER or ph == PH_NBR_REPAIR:
            if kind == MSG_ID or kind == MSG_ID_RELAY:
                self._track_and_filter(msg.a, dist)
            elif kind == MSG_REPAIR:
                self._track_and_filter(msg.a, dist)
                if self.params.repair_enabled and self.my_id in msg.ids:
                    self._add_neighbor(msg.a, dist)
        elif ph == PH_GROUP:
            if kind == MSG_DEGREE:
                self._on_degree(msg.a, msg.b)
        elif ph == PH_ELECT:
            if kind == MSG_TOKEN:
                self._on_token(msg.a)
        elif ph == PH_AXES:
            if kind == MSG_AXES:
                self._on_axes(msg)
        elif ph == PH_BORDER_COUNT:
            if kind == MSG_AXES:
                self._on_axes(msg)
            elif kind == MSG_BORDER_COUNT or kind == MSG_BORDER_COUNT_NC:
                self._on_border_count(msg)
        elif ph == PH_TOTALS:
            if kind == MSG_TOTALS:
                self._on_totals(msg)
        elif ph == PH_COORDS:
            if kind == MSG_TOTALS:
                self._on_totals(msg)
            elif kind == MSG_COORD:
                self._on_coord(msg)

    # --- ID assignment ------------------------------------------------

    def _on_id_first_phase(self, sender_id):
        self.blacklist.add(sender_id)
        if sender_id == self.my_id:
            self._repick()

    def _repick(self):
        # exclude everything this agent has ever heard, first or second hand
        exclusion = self.blacklist | set(self.heard)
        try:
            self.my_id = pick_fresh_id(exclusion, self.rng)
        except FullBlacklistError:
            self._fail("identifier space exhausted")
            return
        if self.phase == PH_ID_DEDUP:
            # fresh nonce with the fresh id: a re-pick landing on an id whose
            # holder shares the old nonce would otherwise stay invisible
            self.nonce = self.rng.randrange(65536)

    def _on_id_dedup(self, msg, dist):
        sender_id = msg.a
        if sender_id not in self.heard:
            self.heard_order.append(sender_id)
            self.heard[sender_id] = None
        if msg.kind == MSG_ID_RELAY:
            known = self.heard[sender_id]
            if known is not None and known != msg.b and sender_id not in self.conflicts:
                self.conflicts.append(sender_id)
            self.heard[sender_id] = msg.b
            if sender_id == self.my_id:
                # a robot never hears itself; a directly received own id is a
                # duplicate no matter what nonce it carries
                self.blacklist.add(self.my_id)
                self._repick()
            elif msg.c == self.my_id and msg.d != self.nonce:
                # my id relayed under a foreign nonce: some two-hop robot
                # shares it (my own echoes come back with my nonce)
                self.blacklist.add(self.my_id)
                self._repick()
            elif msg.c is not None:
                # remember relayed ids so a re-pick avoids two-hop clashes
                if msg.c not in self.heard:
                    self.heard_order.append(msg.c)
                    self.heard[msg.c] = None
        elif sender_id == self.my_id:
            self.blacklist.add(self.my_id)
            self._repick()
        if self.params.body_length_mm <= dist < self.min_dist:
            self.min_dist = dist

    # --- neighbor list -------------------------------------------------

    def _track_and_filter(self, sender_id, dist):
        hist = self.dist_hist.get(sender_id)
        if hist is None:
            hist = self.dist_hist[sender_id] = []
        hist.append(dist)
        window = self.params.dist_window
        if len(hist) > window:
            del hist[0]
        rec = self.neighbors.get(sender_id)
        if rec is not None:
            rec.last_dist = dist
            return
        if len(hist) == window:
            smoothed = sum(hist) / window
            self.filter_candidate(sender_id, smoothed)

    def filter_candidate(self, sender_id, dist):
        """Admit a sender iff its distance beats the adaptive radius."""
        if sender_id in self.neighbors:
            return
        if dist < 1.5 * self.min_dist + 10.0:
            self._add_neighbor(sender_id, dist)

    def _add_neighbor(self, sender_id, dist):
        if sender_id not in self.neighbors:
            self.neighbors[sender_id] = NeighborRecord(sender_id, dist)

    # --- group identification -------------------------------------------

    def _on_degree(self, sender_id, degree):
        rec = self.neighbors.get(sender_id)
        if rec is None:
            return
        if rec.degree is None:
            rec.degree = degree
            self.pending_degrees -= 1
            if self.pending_degrees == 0:
                self._classify(final=False)

    def _classify(self, final):
        if self.group != GROUP_UNKNOWN or not self.neighbors:
            if not self.neighbors:
                self._fail("no neighbors to classify against")
            return
        counts = [rec.degree for rec in self.neighbors.values()
                  if rec.degree is not None]
        if not counts:
            if final:
                self._fail("no neighbor counts received")
            return
        if final and len(counts) < len(self.neighbors):
            self.ctx.note_partial_classification(self.idx)
        self.group = classify_position(self.degree, counts)
        if self.group == GROUP_FAULT:
            self._fail("classification fault")
            return
        # A neighbor with exactly one more neighbor than me means a link is
        # missing from my own list (mutual overestimation the repair phase
        # cannot fix).  Clean regular lattices never produce adjacent degrees.
        self.damaged = any(c == self.degree + 1 for c in counts)
        self.ctx.note_group(self.idx, self.group)

    # --- origin election --------------------------------------------------

    def _on_token(self, token):
        if self.group == GROUP_CORNER:
            if self.candidate and token < self.token:
                self.candidate = False
        else:
            if self.min_token is None or token < self.min_token:
                self.min_token = token

    def _become_origin(self):
        self.is_origin = True
        self._set_coord(1, 1)
        borders = self._border_neighbors()
        if len(borders) != 2:
            self._fail(f"origin has {len(borders)} border neighbors, expected 2")
            self.ctx.note_origin_degenerate(self.idx)
            return
        self.lower_id_border = min(borders)
        self.origin_id = self.my_id
        self.ctx.note_origin(self.idx)

    def _border_neighbors(self):
        """A corner touches two edge robots and one interior robot; the
        interior one has the strictly largest neighbor count."""
        degrees = [rec.degree for rec in self.neighbors.values() if rec.degree is not None]
        if not degrees:
            return []
        top = max(degrees)
        return [rec.id for rec in self.neighbors.values()
                if rec.degree is not None and rec.degree < top]

    def _r2_group(self):
        """Damaged corner-classified robots behave as plain border robots for
        the whole coordinate construction; their count is off by one, so a
        corner's waypoint duties cannot be trusted to them."""
        if self.damaged and self.group == GROUP_CORNER:
            return GROUP_BORDER
        return self.group

    def _on_axes(self, msg):
        if self._r2_group() != GROUP_BORDER or (msg.b, msg.c) != (1, 1):
            return
        if msg.a not in self.neighbors:
            return
        if self.cx > 0:
            return
        self.origin_id = msg.a
        if msg.d == self.my_id:
            self._set_coord(2, 1)
            if self.phase >= PH_BORDER_COUNT and self.border_count == 0:
                self.border_count = 2
                self.count_source = msg.a
                self.use_nc = self._special_header()
        else:
            self._set_coord(1, 2)

    # --- border counting ---------------------------------------------------

    def _corner_neighbor_ids(self):
        """Neighbors with strictly fewer neighbors than this robot; on the
        border those are exactly the adjacent corners."""
        return [rec.id for rec in self.neighbors.values()
                if rec.degree is not None and rec.degree < self.degree]

    def _special_header(self):
        """A border robot flags its count so only corners read it when some
        adjacent corner other than its own count source (and other than the
        origin) still needs the counter.  Without the flag, the border robot
        diagonal to that corner would take the count one hop early."""
        for nid in self._corner_neighbor_ids():
            if nid == self.count_source:
                continue
            if self.origin_id is not None and nid == self.origin_id:
                continue
            return True
        return False

    def _on_border_count(self, msg):
        sender, count = msg.a, msg.b
        rec = self.neighbors.get(sender)
        if rec is None:
            return
        if self.damaged and rec.degree != self.degree + 1:
            # a robot missing one link only trusts counts from peers that can
            # see that link; anything else is a count leaking off the walk
            return
        group = self._r2_group()
        if group == GROUP_CORNER:
            if self.is_origin:
                if count > 3 and self.total_count == 0:
                    self._finish_border_count(msg)
                return
            if self.border_count == 0 and count >= 2:
                self.border_count = count + 1
                self.count_source = sender
                c1, c2, c3 = msg.ids
                slots = [c1, c2, c3]
                for i, v in enumerate(slots):
                    if v == 0:
                        slots[i] = self.border_count
                        break
                else:
                    self._fail("all corner slots taken before my turn")
                    return
                self.c1, self.c2, self.c3 = slots
                self.use_nc = False
            return
        if group != GROUP_BORDER or msg.kind == MSG_BORDER_COUNT_NC:
            return  # near-corner counts are for corners only
        if self.border_count != 0:
            return
        if (self.cx, self.cy) == (1, 2):
            if count <= 3:
                return
        elif count < 2:
            return
        self.border_count = count + 1
        self.count_source = sender
        self.c1, self.c2, self.c3 = msg.ids
        self.use_nc = self._special_header()

    def _finish_border_count(self, msg):
        c1, c2, c3 = msg.ids
        try:
            self.dims = swarm_dimensions(c1, c2, c3, msg.b)
        except CountInconsistentError as exc:
            self._fail(f"perimeter count inconsistent: {exc}")
            return
        self.total_count = msg.b
        self.c1, self.c2, self.c3 = c1, c2, c3
        self.totals_known = True
        self.origin_predecessor = msg.a
        self.ctx.note_dims(self.idx, self.dims)
        self._advance(PH_TOTALS)

    # --- totals distribution -------------------------------------------------

    def _on_totals(self, msg):
        if self._r2_group() not in (GROUP_BORDER, GROUP_CORNER):
            return
        if self.is_origin:
            # the circulating totals came back around the full border
            if msg.a == self.origin_predecessor and self.phase == PH_TOTALS:
                self._advance(PH_COORDS)
            return
        if self.totals_known or msg.a != self.count_source:
            return
        self.total_count = msg.b
        self.c1, self.c2, self.c3 = msg.ids
        self.totals_known = True
        if self.phase == PH_COORDS and self.cx == 0:
            self._assign_border_coord()

    # --- coordinates ---------------------------------------------------------

    def _assign_border_coord(self):
        if self.group not in (GROUP_BORDER, GROUP_CORNER):
            return
        if self.cx > 0 and self.cy > 0:
            return
        if not self.totals_known or self.border_count == 0:
            return  # robots off the walk fill in by inference instead
        try:
            x, y = corner_border_coords(self.border_count, self.c1, self.c2, self.c3)
        except CountInconsistentError as exc:
            self._fail(f"border coordinate inconsistent: {exc}")
            return
        self._set_coord(x, y)

    def _on_coord(self, msg):
        # interior robots fill in by inference; border and corner robots
        # listen too, so a robot the walk skipped still converges (axis
        # inference can only ever produce the robot's true value)
        rec = self.neighbors.get(msg.a)
        if rec is None:
            return
        changed = False
        if msg.b and rec.cx == 0:
            rec.cx = msg.b
            changed = True
        if msg.c and rec.cy == 0:
            rec.cy = msg.c
            changed = True
        if not changed or (self.cx > 0 and self.cy > 0):
            return
        coords = [(r.cx, r.cy) for r in self.neighbors.values()
                  if r.cx > 0 or r.cy > 0]
        ix, iy = infer_middle_coord(coords)
        if self.cx == 0 and ix is not None:
            self.cx = ix
        if self.cy == 0 and iy is not None:
            self.cy = iy
        self._maybe_coord_done()

    def _set_coord(self, x, y):
        if self.cx == 0:
            self.cx = x
        if self.cy == 0:
            self.cy = y
        self._maybe_coord_done()

    def _maybe_coord_done(self):
        if self.cx > 0 and self.cy > 0:
            self.ctx.note_coord(self.idx, (self.cx, self.cy))

    # --- synchronization -------------------------------------------------------

    def _on_sync(self, target):
        if target <= self.phase:
            return
        if target > self.phase + 1:
            self.ctx.note_phase_skew(self.idx, self.phase, target)
        self._advance(target)

    @property
    def coord(self):
        return (self.cx, self.cy)
