"""Spacing geometry for lattice neighbor identification.

A robot filters neighbor candidates by distance alone, so the admissible
radius must separate the farthest true lattice neighbor (the rectangle
diagonal) from the nearest non-neighbor (twice the short spacing).  The
filter radius is computed from the smallest distance a robot has measured.
"""

from __future__ import annotations

import math

from .errors import EpsOutOfRangeError

# Estimates below a robot body length are sensor garbage and are discarded
# by the minimum-distance tracker.
BODY_LENGTH_MM = 33.0


def neighborhood_radius(min_dist: float) -> float:
    """Distance filter threshold derived from the shortest measured distance.

    r = 1.5 * x + 10 (millimeters).  Sits between the rectangle diagonal and
    twice the short spacing for square-ish lattices, and scales with spacing.
    """
    return 1.5 * min_dist + 10.0


def spacing_bound(x: float, eps: float) -> float:
    """Largest long-spacing y admitting a valid filter radius, given short
    spacing x and placement/sensing error fraction eps.

    y < x * sqrt(3*eps^2 - 10*eps + 3) / (eps + 1)

    With eps = 0 this reduces to y < sqrt(3) * x.  The radicand is positive
    only for eps < 1/3; beyond that no radius separates neighbors from
    non-neighbors and EpsOutOfRangeError is raised.
    """
    if x <= 0:
        raise ValueError(f"spacing must be positive, got {x}")
    if eps < 0:
        raise ValueError(f"error fraction must be non-negative, got {eps}")
    q = 3.0 * eps * eps - 10.0 * eps + 3.0
    if q <= 0.0:
        raise EpsOutOfRangeError(
            f"eps={eps} voids the spacing bound (3*eps^2-10*eps+3 = {q:.6f} <= 0)"
        )
    # sqrt(eps^2 + 2*eps + 1) == eps + 1 for eps >= 0
    return x * math.sqrt(q) / (eps + 1.0)


def spacing_feasible(x: float, y: float, eps: float) -> bool:
    """True iff a rectangular lattice with spacings x, y tolerates error eps.

    Inputs may be given in either order; the bound applies to the longer one.
    """
    if x > y:
        x, y = y, x
    return y < spacing_bound(x, eps)


def sandwich_upper(x: float) -> float:
    """Hard upper limit for any filter radius: twice the short spacing."""
    return 2.0 * x


def sandwich_lower(x: float, y: float) -> float:
    """Hard lower limit for any filter radius: the lattice diagonal."""
    return math.hypot(x, y)


def radius_covers_diagonal(x: float, y: float) -> bool:
    """True iff the concrete 1.5x+10 radius reaches the (x, y) diagonal.

    Solving hypot(x, y) < 1.5x + 10 for y gives y < sqrt(1.25x^2 + 30x + 100).
    The general feasibility bound (spacing_bound) only guarantees that *some*
    radius exists; this checks the one the robots actually use.
    """
    return math.hypot(x, y) < neighborhood_radius(x)
