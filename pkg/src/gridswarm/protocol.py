"""Pure protocol rules: phase schedule, position groups, and the closed-form
coordinate assignment used by robots on the lattice border.

Everything in this module is a deterministic function of its inputs so that
each rule can be checked against an independent brute-force oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import CountInconsistentError, FullBlacklistError

ID_SPACE = 256

# Phase indices, in protocol order.  An agent's phase only ever increases.
PH_ID_ASSIGN = 0        # draw random IDs, blacklist collisions heard first-hand
PH_ID_DEDUP = 1         # relay (id, nonce) pairs to catch two-hop duplicates;
                        # also tracks the minimum message distance
PH_NBR_FILTER = 2       # build the neighbor list from the distance filter
PH_NBR_REPAIR = 3       # adopt senders that list us as their neighbor
PH_GROUP = 4            # exchange neighbor counts, classify corner/border/middle
PH_ELECT = 5            # corners flood random tokens, minimum wins the origin
PH_AXES = 6             # origin assigns (2,1) and (1,2) to its edge neighbors
PH_BORDER_COUNT = 7     # counter walks the perimeter, corners log waypoints
PH_TOTALS = 8           # perimeter totals circulate back around the border
PH_COORDS = 9           # border closed-form + interior consecutive-triple fill
PH_ROLE_BASE = 10       # role plan step k lives at index PH_ROLE_BASE + k

PHASE_NAMES = [
    "id_assign", "id_dedup", "nbr_filter", "nbr_repair", "group",
    "elect", "axes", "border_count", "totals", "coords",
]


def phase_name(phase: int) -> str:
    if phase < PH_ROLE_BASE:
        return PHASE_NAMES[phase]
    return f"role_step_{phase - PH_ROLE_BASE}"


# Position groups.
GROUP_UNKNOWN = 0
GROUP_CORNER = 1
GROUP_BORDER = 2
GROUP_MIDDLE = 3
GROUP_FAULT = 4

GROUP_NAMES = ["unknown", "corner", "border", "middle", "fault"]


@dataclass
class ProtocolParams:
    """Timer schedule and controller constants, in local clock ticks.

    Defaults follow the reference schedule at 32 ticks/s with 2 messages/s:
    ID assignment ends at tick 300, ID dedup at 800, the repair phase starts
    5 s (160 ticks) later and runs until 1600, group identification takes 400
    ticks and the origin election window is 25 message periods (400 ticks).
    """
    t1: int = 300                   # end of first ID phase
    t2: int = 800                   # end of ID dedup / min-distance window
    t3: int = 1600                  # end of neighbor list construction
    t4: int = 400                   # group identification window
    repair_delay: int = 160         # filter-only ticks before repair starts
    election_ticks: int = 400       # token flood window (25 message periods)
    axes_ticks: int = 160           # axes assignment window
    coords_ticks: int = 1280        # interior fill window before role steps
    body_length_mm: float = 33.0
    dist_window: int = 3            # rolling samples per sender before the
                                    # distance filter may admit it
    repair_enabled: bool = True
    sync_relay_sends: int = 1       # phase announcements relayed per advance
    departed_tx_delay: int = 64     # ticks a departed robot keeps its radio on

    def phase_duration(self, phase: int, role_step_ticks: int | None) -> int | None:
        """Tick budget for a phase, or None for event-driven phases."""
        if phase == PH_ID_ASSIGN:
            return self.t1
        if phase == PH_ID_DEDUP:
            return self.t2 - self.t1
        if phase == PH_NBR_FILTER:
            return self.repair_delay
        if phase == PH_NBR_REPAIR:
            return self.t3 - self.t2 - self.repair_delay
        if phase == PH_GROUP:
            return self.t4
        if phase == PH_ELECT:
            return self.election_ticks
        if phase == PH_AXES:
            return self.axes_ticks
        if phase in (PH_BORDER_COUNT, PH_TOTALS):
            return None  # advanced by the origin's synchronization message
        if phase == PH_COORDS:
            return self.coords_ticks
        return role_step_ticks

    def validate(self) -> None:
        if not (0 < self.t1 < self.t2 < self.t3):
            raise ValueError("phase boundaries must satisfy 0 < t1 < t2 < t3")
        if not (0 < self.repair_delay < self.t3 - self.t2):
            raise ValueError("repair must start inside the filter window")
        if self.t4 <= 0 or self.election_ticks <= 0 or self.axes_ticks <= 0:
            raise ValueError("phase windows must be positive")


def pick_fresh_id(blacklist, rng) -> int:
    """Uniform draw from [0, 256) excluding every blacklisted value.

    Raises FullBlacklistError when no identifier remains.
    """
    candidates = [v for v in range(ID_SPACE) if v not in blacklist]
    if not candidates:
        raise FullBlacklistError("all 256 identifiers are blacklisted")
    return candidates[rng.randrange(len(candidates))]


def classify_position(my_count: int, neighbor_counts) -> int:
    """Position group from the robot's own neighbor count and its neighbors'.

    Corner: strictly fewer neighbors than every neighbor.  Middle: the largest
    count in the whole neighborhood, own count included (an interior robot on
    an irregular lattice can exceed every neighbor's count).  Border: anything
    between.  A robot with no neighbors at all is faulted, never left unknown.
    """
    counts = list(neighbor_counts)
    if not counts:
        return GROUP_FAULT
    if my_count < min(counts):
        return GROUP_CORNER
    if my_count >= max(counts):
        return GROUP_MIDDLE
    return GROUP_BORDER


def corner_border_coords(my_count: int, c1: int, c2: int, c3: int) -> tuple[int, int]:
    """Coordinates of a perimeter robot from its walk count and the three
    corner waypoints.

    The border counter starts at 1 on the origin, walks the full perimeter and
    passes the corners at counts c1, c2 and c3.  Unfolding the walk:

        count <= c1:        (count, 1)                  first edge
        c1 < count <= c2:   (c1, count - c1 + 1)        second edge
        c2 < count <= c3:   (c1 + c2 - count, c2 - c1 + 1)   third edge
        count > c3:         (1, c2 + c3 - c1 - count + 1)    closing edge
    """
    if not (0 < c1 < c2 < c3):
        raise CountInconsistentError(f"corner counts not increasing: {(c1, c2, c3)}")
    if my_count < 1:
        raise CountInconsistentError(f"walk count must be >= 1, got {my_count}")
    if my_count <= c1:
        coord = (my_count, 1)
    elif my_count <= c2:
        coord = (c1, my_count - c1 + 1)
    elif my_count <= c3:
        coord = (c1 + c2 - my_count, c2 - c1 + 1)
    else:
        coord = (1, c2 + c3 - c1 - my_count + 1)
    width, height = c1, c2 - c1 + 1
    if not (1 <= coord[0] <= width and 1 <= coord[1] <= height):
        raise CountInconsistentError(
            f"count {my_count} with corners {(c1, c2, c3)} lands outside the "
            f"{width}x{height} grid at {coord}"
        )
    return coord


def infer_middle_coord(neighbor_coords) -> tuple[int | None, int | None]:
    """Interior coordinate inference from neighbors' announced coordinates.

    If three neighbors carry consecutive values v-1, v, v+1 on one axis, the
    robot sits at v on that axis.  Returns the inferable value per axis, or
    None where no consecutive triple exists.  Two values with a gap are never
    enough.  Entries may be partial: an axis given as 0 or None is unknown
    and contributes nothing (robots announce each axis as they learn it).
    """
    xs = set()
    ys = set()
    for x, y in neighbor_coords:
        if x:
            xs.add(x)
        if y:
            ys.add(y)

    def middle(values: set) -> int | None:
        for v in sorted(values):
            if v - 1 in values and v + 1 in values:
                return v
        return None

    return middle(xs), middle(ys)


def swarm_dimensions(c1: int, c2: int, c3: int, total_count: int) -> tuple[int, int, int]:
    """(width, height, population) from the distributed perimeter counts.

    Consistency requires the fourth edge to mirror the first
    (c3 - c2 + 1 == c1) and the total to close the perimeter
    (total == 2*(width+height) - 4).
    """
    if not (0 < c1 < c2 < c3 <= total_count):
        raise CountInconsistentError(
            f"perimeter counts not increasing: {(c1, c2, c3, total_count)}"
        )
    width = c1
    height = c2 - c1 + 1
    if c3 - c2 + 1 != c1:
        raise CountInconsistentError(
            f"third edge length {c3 - c2 + 1} does not match width {c1}"
        )
    if total_count != 2 * (width + height) - 4:
        raise CountInconsistentError(
            f"total {total_count} does not close a {width}x{height} perimeter"
        )
    return width, height, width * height
