"""Ground-truth world: lattice placement, true adjacency, and verification of
protocol outcomes up to the coordinate system's dihedral symmetry."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InvalidSpecError
from .geometry import spacing_feasible

RECTANGULAR = "rectangular"
HEXAGONAL = "hexagonal"

# The eight dihedral placements of an m x n grid.  Each maps a true coordinate
# (x in 1..m, y in 1..n) to the coordinate the protocol may have assigned.
_TRANSFORMS = (
    ("identity",      lambda x, y, m, n: (x, y)),
    ("mirror_x",      lambda x, y, m, n: (m + 1 - x, y)),
    ("mirror_y",      lambda x, y, m, n: (x, n + 1 - y)),
    ("rot180",        lambda x, y, m, n: (m + 1 - x, n + 1 - y)),
    ("transpose",     lambda x, y, m, n: (y, x)),
    ("rot90",         lambda x, y, m, n: (n + 1 - y, x)),
    ("rot270",        lambda x, y, m, n: (y, m + 1 - x)),
    ("antitranspose", lambda x, y, m, n: (n + 1 - y, m + 1 - x)),
)

TRANSFORM_NAMES = tuple(name for name, _ in _TRANSFORMS)


@dataclass
class LatticeSpec:
    """World description: topology, dimensions, spacing and placement jitter.

    Rectangular lattices use cols x rows; hexagonal (equilateral triangular)
    lattices take a row-length list such as (4, 3, 4) and only the horizontal
    spacing dx.  jitter_eps displaces each robot uniformly within a disc of
    radius jitter_eps * min(dx, dy).
    """
    topology: str = RECTANGULAR
    cols: int = 5
    rows: int = 5
    row_list: tuple[int, ...] = ()
    dx: float = 35.0
    dy: float = 35.0
    jitter_eps: float = 0.0

    def validate(self) -> None:
        if self.topology == RECTANGULAR:
            if self.cols < 3 or self.rows < 3:
                raise InvalidSpecError(
                    f"rectangular lattice needs cols, rows >= 3, got {self.cols}x{self.rows}")
            if self.dx <= 0 or self.dy <= 0:
                raise InvalidSpecError("spacing must be positive")
            if not spacing_feasible(min(self.dx, self.dy), max(self.dx, self.dy),
                                    self.jitter_eps):
                raise InvalidSpecError(
                    f"spacing {self.dx}x{self.dy} with jitter {self.jitter_eps} "
                    "leaves no valid neighborhood radius")
        elif self.topology == HEXAGONAL:
            if len(self.row_list) < 2 or any(r < 2 for r in self.row_list):
                raise InvalidSpecError(
                    f"hexagonal lattice needs >= 2 rows of >= 2 robots, got {self.row_list}")
            if self.dx <= 0:
                raise InvalidSpecError("spacing must be positive")
        else:
            raise InvalidSpecError(f"unknown topology {self.topology!r}")

    @property
    def population(self) -> int:
        if self.topology == RECTANGULAR:
            return self.cols * self.rows
        return sum(self.row_list)


@dataclass
class GroundTruth:
    """Immutable after construction; adjacency always reflects the ideal grid,
    jitter only perturbs the physical positions."""
    spec: LatticeSpec
    positions: list  # (x_mm, y_mm) per agent
    true_coords: list  # (col, row) 1-based per agent; () entries for hexagonal
    adjacency: list  # tuple of neighbor indices per agent
    n: int = field(init=False)

    def __post_init__(self):
        self.n = len(self.positions)

    def degree_histogram(self) -> dict:
        hist: dict[int, int] = {}
        for nbrs in self.adjacency:
            hist[len(nbrs)] = hist.get(len(nbrs), 0) + 1
        return hist

    def corner_label(self, idx: int) -> str:
        """Which ground-truth corner an agent occupies: bl, br, tl, tr, or ''."""
        if not self.true_coords[idx]:
            return ""
        x, y = self.true_coords[idx]
        m, n = self.spec.cols, self.spec.rows
        return {(1, 1): "bl", (m, 1): "br", (1, n): "tl", (m, n): "tr"}.get((x, y), "")


def _rect_layout(spec: LatticeSpec):
    positions = []
    coords = []
    for row in range(1, spec.rows + 1):
        for col in range(1, spec.cols + 1):
            positions.append(((col - 1) * spec.dx, (row - 1) * spec.dy))
            coords.append((col, row))
    return positions, coords


def _hex_layout(spec: LatticeSpec):
    positions = []
    dy = spec.dx * math.sqrt(3.0) / 2.0
    max_len = max(spec.row_list)
    for r, length in enumerate(spec.row_list):
        x0 = (max_len - length) * spec.dx / 2.0
        for i in range(length):
            positions.append((x0 + i * spec.dx, r * dy))
    return positions, [()] * len(positions)


def _adjacency_from_ideal(positions, threshold: float):
    n = len(positions)
    out = []
    for i in range(n):
        xi, yi = positions[i]
        nbrs = []
        for j in range(n):
            if j == i:
                continue
            xj, yj = positions[j]
            if math.hypot(xi - xj, yi - yj) <= threshold:
                nbrs.append(j)
        out.append(tuple(nbrs))
    return out


def generate(spec: LatticeSpec, rng) -> GroundTruth:
    """Lay out the lattice, derive true adjacency, then apply jitter.

    Adjacency is computed on the ideal grid: jitter models placement error,
    not topology change.  Deterministic for a given (spec, rng state).
    """
    spec.validate()
    if spec.topology == RECTANGULAR:
        ideal, coords = _rect_layout(spec)
        # Moore neighborhood: anything within one grid step on both axes.
        threshold = math.hypot(spec.dx, spec.dy) * 1.001
    else:
        ideal, coords = _hex_layout(spec)
        threshold = spec.dx * 1.001
    adjacency = _adjacency_from_ideal(ideal, threshold)

    positions = ideal
    if spec.jitter_eps > 0:
        radius = spec.jitter_eps * (min(spec.dx, spec.dy)
                                    if spec.topology == RECTANGULAR else spec.dx)
        positions = []
        for (x, y) in ideal:
            # uniform over the disc
            r = radius * math.sqrt(rng.random())
            theta = rng.random() * 2.0 * math.pi
            positions.append((x + r * math.cos(theta), y + r * math.sin(theta)))
    return GroundTruth(spec=spec, positions=positions, true_coords=coords,
                       adjacency=adjacency)


def expected_group_counts(spec: LatticeSpec) -> tuple[int, int, int]:
    """(corners, borders, middles) for a rectangular m x n lattice."""
    if spec.topology != RECTANGULAR:
        raise InvalidSpecError("group-count formula applies to rectangular lattices")
    m, n = spec.cols, spec.rows
    return 4, 2 * (m + n) - 8, (m - 2) * (n - 2)


@dataclass
class VerifyResult:
    ok: bool
    symmetry: str = ""
    detail: str = ""

    def __bool__(self):
        return self.ok


def apply_transform(name: str, coord: tuple[int, int], cols: int, rows: int) -> tuple[int, int]:
    """Apply one named dihedral placement to a true coordinate."""
    for tname, fn in _TRANSFORMS:
        if tname == name:
            return fn(coord[0], coord[1], cols, rows)
    raise ValueError(f"unknown transform {name!r}")


def verify_coords(assigned, truth: GroundTruth) -> VerifyResult:
    """Check an assignment against ground truth modulo dihedral symmetry.

    ``assigned`` maps agent index to an (x, y) pair.  Passes iff some single
    dihedral placement maps every agent's true coordinate to its assigned one;
    the matching placement is reported.  Fails fast on missing agents.
    """
    m, n = truth.spec.cols, truth.spec.rows
    for i in range(truth.n):
        got = assigned.get(i)
        if not got or got[0] < 1 or got[1] < 1:
            return VerifyResult(False, detail=f"agent {i} has no assigned coordinate")
    for name, fn in _TRANSFORMS:
        match = True
        for i in range(truth.n):
            tx, ty = truth.true_coords[i]
            if fn(tx, ty, m, n) != tuple(assigned[i]):
                match = False
                break
        if match:
            return VerifyResult(True, symmetry=name)
    # report the first mismatch under the identity for diagnosis
    for i in range(truth.n):
        tx, ty = truth.true_coords[i]
        if (tx, ty) != tuple(assigned[i]):
            return VerifyResult(
                False,
                detail=f"agent {i}: true {(tx, ty)} assigned {tuple(assigned[i])} "
                       "matches no dihedral placement")
    return VerifyResult(False, detail="unreachable")
