"""Deterministic discrete-time scheduler and broadcast medium.

One global random generator, seeded per run, drives everything in a fixed
order: world jitter first, then per-agent draws in index order (clock skew,
send slot offset, transmit bias, initial identifier), then runtime events in
tick order.  Within a tick all broadcasts queued on the previous tick are
delivered (senders in queue order, recipients in index order) before any
agent's control loop fires.  Identical inputs therefore produce bit-identical
results.

Messages model a single-slot radio: an agent broadcasts its current payload
once per message period, and composing a new payload replaces the old one.
Delivery is instantaneous to every agent within communication range, with
independent Bernoulli drops and per-delivery Gaussian distance noise.  A
transmit-side bias can be planted on a fraction of agents: their broadcasts
measure consistently too far at every receiver, which is the error mode the
neighbor-repair phase exists to absorb.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .agent import Agent
from .plan import ActionPlan
from .protocol import (
    GROUP_BORDER, GROUP_CORNER, GROUP_MIDDLE, PH_ROLE_BASE, ProtocolParams,
)
from .world import GroundTruth, LatticeSpec, RECTANGULAR, generate, verify_coords
from .errors import InvalidSpecError
from .geometry import neighborhood_radius

RUN_UNTIL_R1 = "r1"
RUN_UNTIL_R2 = "r2"
RUN_UNTIL_PLAN = "plan"
RUN_UNTIL_TIME = "time"


@dataclass
class NoiseModel:
    """All-zero fields give a perfectly noiseless simulation."""
    drop_prob: float = 0.0
    dist_noise_sigma: float = 0.0   # mm, resampled per delivery
    dist_noise_bias: float = 0.0    # mm, added to every estimate
    clock_skew_frac: float = 0.0    # per-agent rate drawn once in +-frac
    tx_bias_frac: float = 0.0       # fraction of agents with a weak transmitter
    tx_bias_mm: float = 15.0        # extra distance their messages appear to have

    def validate(self):
        if not 0.0 <= self.drop_prob <= 1.0:
            raise InvalidSpecError(f"drop_prob must be in [0,1], got {self.drop_prob}")
        if self.dist_noise_sigma < 0 or self.clock_skew_frac < 0:
            raise InvalidSpecError("noise magnitudes must be non-negative")
        if not 0.0 <= self.tx_bias_frac <= 1.0:
            raise InvalidSpecError("tx_bias_frac must be in [0,1]")


@dataclass
class SimConfig:
    comm_range: float = 100.0       # mm
    msg_rate: float = 2.0           # broadcasts per second per agent
    tick_rate: int = 32             # control loops per second
    max_sim_seconds: float = 600.0

    @property
    def msg_period_ticks(self) -> int:
        period = round(self.tick_rate / self.msg_rate)
        if period < 1:
            raise InvalidSpecError("message rate exceeds tick rate")
        return int(period)

    def validate(self):
        if self.comm_range <= 0 or self.msg_rate <= 0 or self.tick_rate <= 0:
            raise InvalidSpecError("rates and ranges must be positive")
        if self.max_sim_seconds <= 0:
            raise InvalidSpecError("max_sim_seconds must be positive")


@dataclass
class RunSetup:
    """Everything a single run needs; safe to ship to worker processes."""
    lattice: LatticeSpec
    noise: NoiseModel = field(default_factory=NoiseModel)
    sim: SimConfig = field(default_factory=SimConfig)
    proto: ProtocolParams = field(default_factory=ProtocolParams)
    plan: ActionPlan | None = None
    run_until: str = RUN_UNTIL_R2
    frames_every: int = 0

    def validate(self):
        self.lattice.validate()
        self.noise.validate()
        self.sim.validate()
        self.proto.validate()
        if self.run_until not in (RUN_UNTIL_R1, RUN_UNTIL_R2, RUN_UNTIL_PLAN,
                                  RUN_UNTIL_TIME):
            raise InvalidSpecError(f"unknown run_until {self.run_until!r}")
        if self.lattice.topology == RECTANGULAR:
            short = min(self.lattice.dx, self.lattice.dy)
            if short <= 20.0:
                raise InvalidSpecError(
                    "spacing at or below 20 mm leaves no radius under twice the spacing")
            radius = neighborhood_radius(short)
            diag = math.hypot(self.lattice.dx, self.lattice.dy)
            if diag >= radius:
                raise InvalidSpecError(
                    f"radius {radius:.1f} cannot reach the {diag:.1f} mm diagonal; "
                    "spacing too asymmetric for the filter formula")
            if radius > self.sim.comm_range:
                raise InvalidSpecError(
                    f"neighborhood radius {radius:.1f} exceeds communication range "
                    f"{self.sim.comm_range:.1f}; use an extended-range scenario")
        else:
            radius = neighborhood_radius(self.lattice.dx)
            if radius >= math.sqrt(3.0) * self.lattice.dx:
                raise InvalidSpecError(
                    f"radius {radius:.1f} would swallow the second hexagonal ring at "
                    f"{math.sqrt(3.0) * self.lattice.dx:.1f} mm; increase the spacing")
            if radius > self.sim.comm_range:
                raise InvalidSpecError("neighborhood radius exceeds communication range")
            if self.run_until not in (RUN_UNTIL_R1, RUN_UNTIL_TIME):
                # coordinate construction is defined for rectangles only
                self.run_until = RUN_UNTIL_R1


@dataclass
class RunResult:
    seed: int
    success: bool
    fail_reason: str
    completion_s: float          # last coordinate assigned, simulated seconds
    r1_s: float                  # all position groups known
    r2_s: float                  # alias of completion_s for rectangular runs
    origin_corner: str
    symmetry: str
    msgs_sent: int
    msgs_dropped: int
    ticks: int
    group_counts: tuple[int, int, int]   # corners, borders, middles
    dims_measured: tuple | None
    degree_histogram: dict
    coords: dict                 # agent index -> (x, y)
    groups: list
    faults: list
    election_tie: bool
    phase_skew_events: int
    partial_classifications: int
    step_switches: dict          # role step -> (first_tick, last_tick, agents)
    frames: list                 # (tick, {true_coord: role}) when enabled

    def csv_row(self) -> str:
        return ",".join([
            str(self.seed),
            "1" if self.success else "0",
            f"{self.completion_s:.3f}",
            f"{self.r1_s:.3f}",
            f"{self.r2_s:.3f}",
            self.origin_corner or "-",
            self.symmetry or "-",
            str(self.msgs_sent),
            str(self.msgs_dropped),
        ])


CSV_HEADER = ("seed,success,completion_s,phase_r1_s,phase_r2_s,"
              "origin_corner,symmetry,msgs_sent,msgs_dropped")


class _Metrics:
    """Event sink the agents report into; owned by one simulation."""

    def __init__(self, n):
        self.now = 0
        self.n = n
        self.msgs_sent = 0
        self.msgs_dropped = 0
        self.groups = [0] * n
        self.group_count = 0
        self.r1_tick = -1
        self.coord_done = [False] * n
        self.coord_count = 0
        self.r2_tick = -1
        self.origins = []
        self.origin_degenerate = False
        self.dims = None
        self.faults = []
        self.phase_skew = 0
        self.partial_classifications = 0
        self.step_switches = {}
        self.max_phase = 0

    # agent callbacks ---------------------------------------------------
    def note_phase(self, idx, phase, local_tick):
        if phase > self.max_phase:
            self.max_phase = phase

    def note_group(self, idx, group):
        if self.groups[idx] == 0:
            self.groups[idx] = group
            self.group_count += 1
            if self.group_count == self.n:
                self.r1_tick = self.now

    def note_coord(self, idx, coord):
        if not self.coord_done[idx]:
            self.coord_done[idx] = True
            self.coord_count += 1
            if self.coord_count == self.n:
                self.r2_tick = self.now

    def note_origin(self, idx):
        self.origins.append(idx)

    def note_origin_degenerate(self, idx):
        self.origin_degenerate = True

    def note_dims(self, idx, dims):
        self.dims = dims

    def note_fault(self, idx, reason):
        self.faults.append((idx, reason))

    def note_phase_skew(self, idx, have, target):
        self.phase_skew += 1

    def note_partial_classification(self, idx):
        self.partial_classifications += 1

    def note_role_step(self, idx, step, local_tick):
        entry = self.step_switches.get(step)
        if entry is None:
            self.step_switches[step] = [self.now, self.now, 1]
        else:
            entry[1] = self.now
            entry[2] += 1


class Simulation:
    """One seeded run over one world."""

    def __init__(self, setup: RunSetup, seed: int):
        setup.validate()
        self.setup = setup
        self.seed = seed
        self.rng = random.Random(seed)
        self.truth: GroundTruth = generate(setup.lattice, self.rng)
        n = self.truth.n
        self.metrics = _Metrics(n)

        sim = setup.sim
        self.period = sim.msg_period_ticks
        self.max_ticks = int(sim.max_sim_seconds * sim.tick_rate)

        noise = setup.noise
        role_step_ticks = None
        if setup.plan is not None:
            role_step_ticks = max(1, int(round(setup.plan.step_seconds * sim.tick_rate)))

        # per-agent draws, in index order
        self.rates = []
        self.offsets = []
        tx_bias = []
        for _ in range(n):
            if noise.clock_skew_frac > 0:
                self.rates.append(1.0 + self.rng.uniform(-noise.clock_skew_frac,
                                                         noise.clock_skew_frac))
            else:
                self.rates.append(1.0)
            self.offsets.append(self.rng.randrange(self.period))
            if noise.tx_bias_frac > 0:
                tx_bias.append(noise.tx_bias_mm
                               if self.rng.random() < noise.tx_bias_frac else 0.0)
            else:
                tx_bias.append(0.0)

        self.agents = [
            Agent(i, self.rng, setup.proto, self.metrics, setup.plan, role_step_ticks)
            for i in range(n)
        ]

        # static recipient lists with pre-biased base distances
        pos = self.truth.positions
        comm = sim.comm_range
        self.recipients = [[] for _ in range(n)]
        for i in range(n):
            xi, yi = pos[i]
            base_bias = noise.dist_noise_bias + tx_bias[i]
            row = self.recipients[i]
            for j in range(n):
                if j == i:
                    continue
                d = math.hypot(xi - pos[j][0], yi - pos[j][1])
                if d <= comm:
                    row.append((self.agents[j], d + base_bias))

        self.skewless = noise.clock_skew_frac == 0

    def run(self, probe=None, probe_every: int = 1) -> RunResult:
        setup, agents, metrics = self.setup, self.agents, self.metrics
        n = len(agents)
        noise = setup.noise
        drop = noise.drop_prob
        sigma = noise.dist_noise_sigma
        rnd = self.rng.random
        gauss = self.rng.gauss
        period = self.period
        recipients = self.recipients
        run_until = setup.run_until
        frames_every = setup.frames_every

        plan_end_phase = None
        if run_until == RUN_UNTIL_PLAN:
            if setup.plan is None or setup.plan.cyclic:
                run_until = RUN_UNTIL_TIME if setup.plan else RUN_UNTIL_R2
            else:
                plan_end_phase = PH_ROLE_BASE + len(setup.plan.steps)

        next_tx = [self.offsets[i] if self.offsets[i] > 0 else period
                   for i in range(n)]
        acc = [0.0] * n
        rates = self.rates
        pending: list = []
        frames: list = []
        end_tick = self.max_ticks
        completed = False

        tick = 0
        for tick in range(1, self.max_ticks + 1):
            metrics.now = tick

            if pending:
                out = pending
                pending = []
                if drop == 0.0 and sigma == 0.0:
                    for _si, msg in out:
                        for entry in recipients[_si]:
                            entry[0].on_message(msg, entry[1])
                else:
                    dropped = 0
                    for _si, msg in out:
                        for agent, base in recipients[_si]:
                            if drop and rnd() < drop:
                                dropped += 1
                                continue
                            d = base + gauss(0.0, sigma) if sigma else base
                            agent.on_message(msg, d if d > 0.0 else 0.0)
                    metrics.msgs_dropped += dropped

            if self.skewless:
                for i in range(n):
                    a = agents[i]
                    a.fire()
                    if a.local_tick == next_tx[i]:
                        next_tx[i] += period
                        m = a.compose()
                        if m is not None:
                            metrics.msgs_sent += 1
                            pending.append((i, m))
            else:
                for i in range(n):
                    acc[i] += rates[i]
                    a = agents[i]
                    while acc[i] >= 1.0:
                        acc[i] -= 1.0
                        a.fire()
                        if a.local_tick == next_tx[i]:
                            next_tx[i] += period
                            m = a.compose()
                            if m is not None:
                                metrics.msgs_sent += 1
                                pending.append((i, m))

            if frames_every and tick % frames_every == 0:
                frames.append((tick, self._snapshot_roles()))

            if probe is not None and tick % probe_every == 0:
                probe(self, tick)

            if run_until == RUN_UNTIL_R1:
                completed = metrics.group_count == n
            elif run_until == RUN_UNTIL_R2:
                completed = metrics.coord_count == n
            elif plan_end_phase is not None and tick % 64 == 0:
                completed = all(a.phase >= plan_end_phase or a.fault for a in agents)
            if completed:
                end_tick = tick
                break

        if frames_every and (not frames or frames[-1][0] != end_tick):
            frames.append((end_tick, self._snapshot_roles()))

        return self._finish(end_tick, completed, frames)

    def _snapshot_roles(self):
        roles = {}
        for i, a in enumerate(self.agents):
            tc = self.truth.true_coords[i]
            if tc:
                roles[tc] = a.role
        return roles

    def _finish(self, end_tick, completed, frames) -> RunResult:
        setup, metrics, truth = self.setup, self.metrics, self.truth
        tick_rate = setup.sim.tick_rate
        n = truth.n

        counts = [0, 0, 0]
        for g in metrics.groups:
            if g == GROUP_CORNER:
                counts[0] += 1
            elif g == GROUP_BORDER:
                counts[1] += 1
            elif g == GROUP_MIDDLE:
                counts[2] += 1

        coords = {i: self.agents[i].coord for i in range(n)}
        election_tie = len(metrics.origins) > 1
        origin_corner = ""
        if len(metrics.origins) == 1:
            origin_corner = truth.corner_label(metrics.origins[0])

        symmetry = ""
        fail_reason = ""
        rect = setup.lattice.topology == RECTANGULAR
        if setup.run_until == RUN_UNTIL_R1 or not rect:
            success = metrics.group_count == n and not metrics.faults
            if not success:
                fail_reason = "faults" if metrics.faults else "timeout"
        else:
            if metrics.faults:
                success = False
                fail_reason = f"fault: {metrics.faults[0][1]}"
            elif election_tie:
                success = False
                fail_reason = "election tie"
            elif metrics.coord_count < n:
                success = False
                fail_reason = "timeout"
            else:
                check = verify_coords(coords, truth)
                success = check.ok
                symmetry = check.symmetry
                if not check.ok:
                    fail_reason = f"verify: {check.detail}"

        r1_s = metrics.r1_tick / tick_rate if metrics.r1_tick >= 0 else -1.0
        r2_s = metrics.r2_tick / tick_rate if metrics.r2_tick >= 0 else -1.0

        return RunResult(
            seed=self.seed,
            success=success,
            fail_reason=fail_reason,
            completion_s=r2_s,
            r1_s=r1_s,
            r2_s=r2_s,
            origin_corner=origin_corner,
            symmetry=symmetry,
            msgs_sent=metrics.msgs_sent,
            msgs_dropped=metrics.msgs_dropped,
            ticks=end_tick,
            group_counts=tuple(counts),
            dims_measured=metrics.dims,
            degree_histogram=truth.degree_histogram(),
            coords=coords,
            groups=list(metrics.groups),
            faults=list(metrics.faults),
            election_tie=election_tie,
            phase_skew_events=metrics.phase_skew,
            partial_classifications=metrics.partial_classifications,
            step_switches={k: tuple(v) for k, v in metrics.step_switches.items()},
            frames=frames,
        )


def run_once(setup: RunSetup, seed: int, probe=None, probe_every: int = 1) -> RunResult:
    """Convenience wrapper: build and run one seeded simulation."""
    return Simulation(setup, seed).run(probe=probe, probe_every=probe_every)
