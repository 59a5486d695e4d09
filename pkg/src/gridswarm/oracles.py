"""Independent brute-force oracles for the closed-form protocol rules.

These enumerate the expected answers directly from first principles and are
deliberately kept free of the implementations they check.
"""

from __future__ import annotations

import math

from .errors import EpsOutOfRangeError
from .geometry import neighborhood_radius, spacing_bound


def perimeter_walk(cols: int, rows: int) -> list[tuple[int, int]]:
    """Perimeter coordinates of a cols x rows grid in walk order.

    Position k of the result (0-based) is the coordinate of the robot whose
    walk count is k+1: up the first column edge is NOT how it goes; the walk
    starts at (1,1), runs along y=1 to (cols,1), up the far column to
    (cols,rows), back along y=rows to (1,rows), and down to (1,2).
    """
    if cols < 3 or rows < 3:
        raise ValueError("perimeter walk defined for grids of at least 3x3")
    walk = [(x, 1) for x in range(1, cols + 1)]
    walk += [(cols, y) for y in range(2, rows + 1)]
    walk += [(x, rows) for x in range(cols - 1, 0, -1)]
    walk += [(1, y) for y in range(rows - 1, 1, -1)]
    return walk


def perimeter_corner_counts(cols: int, rows: int) -> tuple[int, int, int, int]:
    """(c1, c2, c3, total) the walk produces: corner waypoints and perimeter."""
    return cols, cols + rows - 1, 2 * cols + rows - 2, 2 * (cols + rows) - 4


def fill_middles(cols: int, rows: int, infer) -> dict:
    """Fixed-point interior fill given correct border coordinates.

    ``infer`` is the axis-inference function under test: it receives every
    Moore neighbor's announced coordinate, where a not-yet-known axis shows
    as None, and returns a per-axis value or None.  Interior robots announce
    each axis as soon as they learn it.  Returns the final announcement map
    (true coordinate -> (x, y)), so the caller can compare to the identity.
    """
    state: dict[tuple, list] = {}
    for x in range(1, cols + 1):
        for y in range(1, rows + 1):
            on_border = x in (1, cols) or y in (1, rows)
            state[(x, y)] = [x, y] if on_border else [None, None]
    pending = {(x, y) for x in range(2, cols) for y in range(2, rows)}
    changed = True
    while changed and pending:
        changed = False
        for (x, y) in sorted(pending):
            nbr_coords = []
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    if dx == dy == 0:
                        continue
                    slot = state.get((x + dx, y + dy))
                    if slot is not None and (slot[0] is not None or slot[1] is not None):
                        nbr_coords.append((slot[0], slot[1]))
            ix, iy = infer(nbr_coords)
            slot = state[(x, y)]
            if ix is not None and slot[0] is None:
                slot[0] = ix
                changed = True
            if iy is not None and slot[1] is None:
                slot[1] = iy
                changed = True
            if slot[0] is not None and slot[1] is not None:
                pending.discard((x, y))
    return {cell: (s[0], s[1]) for cell, s in state.items()}


def sweep_radius_properties(x_lo: int = 33, x_hi: int = 110, eps: float = 0.0):
    """Numerical audit of the spacing geometry over a 1 mm grid.

    For every short spacing x the radius formula must undercut twice the
    spacing, and for every admissible long spacing y the diagonal must stay
    under that same hard cap.  The formula itself is additionally required to
    cover the diagonal wherever it reaches it at all (every square lattice,
    and rectangles up to the formula's own asymmetry limit).  Returns a list
    of violation strings, empty when the audit passes.
    """
    failures = []
    for x in range(x_lo, x_hi + 1):
        r = neighborhood_radius(x)
        if not r < 2.0 * x:
            failures.append(f"x={x}: radius {r} does not undercut 2x")
        if not math.hypot(x, x) < r:
            failures.append(f"x={x}: radius {r} misses the square diagonal")
        # the largest y for which the formula still covers the diagonal
        y_formula = math.sqrt(1.25 * x * x + 30.0 * x + 100.0)
        y = float(x)
        y_max = math.sqrt(3.0) * x
        while y < y_max:
            diag = math.hypot(x, y)
            if not diag < 2.0 * x:
                failures.append(f"x={x} y={y}: diagonal {diag} exceeds 2x")
            if y < y_formula and not diag < r:
                failures.append(f"x={x} y={y}: formula {r} misses diagonal {diag}")
            y += 1.0
    # eps-bound sanity on the same grid
    try:
        prev = None
        e = 0.0
        while e < 0.3:
            b = spacing_bound(100.0, e)
            if prev is not None and not b < prev:
                failures.append(f"eps={e:.2f}: bound {b} not strictly decreasing")
            prev = b
            e += 0.01
        exact = spacing_bound(100.0, 0.0)
        if abs(exact - 100.0 * math.sqrt(3.0)) > 1e-9 * exact:
            failures.append(f"eps=0 bound {exact} != sqrt(3)*x")
    except EpsOutOfRangeError as exc:  # pragma: no cover - eps < 0.3 is in range
        failures.append(f"unexpected domain error: {exc}")
    if eps > 0:
        try:
            spacing_bound(100.0, eps)
        except EpsOutOfRangeError:
            pass  # out-of-domain eps is reported by the caller, not a failure
    return failures
