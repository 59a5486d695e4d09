"""Role plans: time-stepped mappings from lattice coordinates to roles.

Plan files are line oriented::

    step_seconds = 8
    cyclic = true

    step
    rect 1 1 5 5 -> blue
    glyph .#. ### .#. -> red at 2,2

    step
    rect 1 1 5 5 -> green

Rules inside a step apply first-match; coordinates matching no rule are off.
``rect x1 y1 x2 y2 -> role`` lights an inclusive rectangle.  ``glyph`` takes
space-separated rows of ``.``/``#`` (first row is the top of the artwork) and
anchors the bottom-left cell at ``x,y``.  Roles are color names, ``off``, or
``departed``; departed is absorbing for the rest of the run.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import PlanParseError

ROLE_OFF = "off"
ROLE_DEPARTED = "departed"

COLORS = ("red", "green", "blue", "cyan", "magenta", "yellow", "white")
VALID_ROLES = COLORS + (ROLE_OFF, ROLE_DEPARTED)

ROLE_CHARS = {
    ROLE_OFF: ".",
    ROLE_DEPARTED: " ",
    "red": "R", "green": "G", "blue": "B", "cyan": "C",
    "magenta": "M", "yellow": "Y", "white": "W",
}

ROLE_RGB = {
    ROLE_OFF: (40, 40, 40),
    ROLE_DEPARTED: (0, 0, 0),
    "red": (220, 40, 40), "green": (40, 200, 60), "blue": (50, 80, 230),
    "cyan": (40, 200, 200), "magenta": (200, 50, 200),
    "yellow": (220, 210, 40), "white": (235, 235, 235),
}


@dataclass
class ActionPlan:
    step_seconds: float
    cyclic: bool
    steps: list  # one dict per step: (x, y) -> role

    def __post_init__(self):
        if not self.steps:
            raise PlanParseError("plan has no steps")

    def step_index(self, k: int) -> int:
        return k % len(self.steps) if self.cyclic else k

    def role_at(self, coord, step: int) -> str:
        """Role for a coordinate at a plan step; cyclic plans wrap."""
        if self.cyclic:
            step = step % len(self.steps)
        elif step >= len(self.steps):
            return ROLE_OFF
        return self.steps[step].get(tuple(coord), ROLE_OFF)

    def lit_cells(self, step: int) -> dict:
        """Cells with a color at a step (off and departed excluded)."""
        if self.cyclic:
            step = step % len(self.steps)
        return {c: r for c, r in self.steps[step].items()
                if r not in (ROLE_OFF, ROLE_DEPARTED)}


def _parse_role(word: str, lineno: int) -> str:
    role = word.strip().lower()
    if role not in VALID_ROLES:
        raise PlanParseError(f"unknown role {word!r}", lineno)
    return role


def _glyph_cells(rows: list[str], x0: int, y0: int, lineno: int):
    height = len(rows)
    for r, row in enumerate(rows):
        if set(row) - {".", "#"}:
            raise PlanParseError(f"glyph rows may only contain '.' and '#', got {row!r}",
                                 lineno)
        for c, ch in enumerate(row):
            if ch == "#":
                yield (x0 + c, y0 + (height - 1 - r))


def parse_plan(text: str) -> ActionPlan:
    """Parse plan text; raises PlanParseError with a line number on bad input."""
    step_seconds = 8.0
    cyclic = True
    steps: list[list[tuple]] = []
    current: list[tuple] | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        # glyph rows contain '#', so only a leading '#' marks a comment line
        if not line or line.startswith("#"):
            continue
        if "=" in line and current is None and not line.startswith(("rect", "glyph")):
            key, _, value = line.partition("=")
            key = key.strip().lower()
            value = value.strip().lower()
            if key == "step_seconds":
                try:
                    step_seconds = float(value)
                except ValueError:
                    raise PlanParseError(f"bad step_seconds {value!r}", lineno)
                if step_seconds <= 0:
                    raise PlanParseError("step_seconds must be positive", lineno)
            elif key == "cyclic":
                if value not in ("true", "false", "yes", "no", "1", "0"):
                    raise PlanParseError(f"bad cyclic flag {value!r}", lineno)
                cyclic = value in ("true", "yes", "1")
            else:
                raise PlanParseError(f"unknown plan setting {key!r}", lineno)
            continue
        if line.lower() == "step":
            current = []
            steps.append(current)
            continue
        if current is None:
            raise PlanParseError("rule before the first 'step' line", lineno)
        if "->" not in line:
            raise PlanParseError(f"rule needs '-> role': {line!r}", lineno)
        lhs, _, rhs = line.partition("->")
        lhs = lhs.strip()
        rhs = rhs.strip()
        if lhs.startswith("rect"):
            parts = lhs.split()
            if len(parts) != 5:
                raise PlanParseError("rect rule needs 4 coordinates", lineno)
            try:
                x1, y1, x2, y2 = (int(p) for p in parts[1:])
            except ValueError:
                raise PlanParseError(f"bad rect coordinates in {lhs!r}", lineno)
            if x2 < x1 or y2 < y1:
                raise PlanParseError("rect corners must be ordered", lineno)
            role = _parse_role(rhs, lineno)
            cells = [(x, y) for x in range(x1, x2 + 1) for y in range(y1, y2 + 1)]
            current.append((cells, role))
        elif lhs.startswith("glyph"):
            rows = lhs.split()[1:]
            if not rows:
                raise PlanParseError("glyph rule needs at least one row", lineno)
            if " at " not in f" {rhs} ":
                raise PlanParseError("glyph rule needs 'role at x,y'", lineno)
            role_word, _, anchor = rhs.partition(" at ")
            role = _parse_role(role_word, lineno)
            try:
                x0, y0 = (int(v) for v in anchor.replace(" ", "").split(","))
            except ValueError:
                raise PlanParseError(f"bad glyph anchor {anchor!r}", lineno)
            if len({len(r) for r in rows}) != 1:
                raise PlanParseError("glyph rows must have equal width", lineno)
            cells = list(_glyph_cells(rows, x0, y0, lineno))
            current.append((cells, role))
        else:
            raise PlanParseError(f"unknown rule {line!r}", lineno)

    if not steps:
        raise PlanParseError("plan has no steps")
    compiled = []
    for rules in steps:
        table: dict[tuple, str] = {}
        # first-match wins: apply rules in reverse so earlier rules overwrite
        for cells, role in reversed(rules):
            for cell in cells:
                table[cell] = role
        compiled.append(table)
    return ActionPlan(step_seconds=step_seconds, cyclic=cyclic, steps=compiled)


def load_plan(path) -> ActionPlan:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_plan(fh.read())


def render_ascii(roles_by_true_coord: dict, cols: int, rows: int) -> str:
    """One character per lattice cell, top row printed first."""
    lines = []
    for y in range(rows, 0, -1):
        line = []
        for x in range(1, cols + 1):
            role = roles_by_true_coord.get((x, y), ROLE_OFF)
            line.append(ROLE_CHARS.get(role, "?"))
        lines.append("".join(line))
    return "\n".join(lines) + "\n"


def render_ppm(roles_by_true_coord: dict, cols: int, rows: int, scale: int = 1) -> bytes:
    """Binary portable pixmap of the same frame, ``scale`` pixels per cell."""
    if scale < 1:
        raise ValueError("scale must be >= 1")
    width, height = cols * scale, rows * scale
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    body = bytearray()
    for y in range(rows, 0, -1):
        row = bytearray()
        for x in range(1, cols + 1):
            role = roles_by_true_coord.get((x, y), ROLE_OFF)
            row += bytes(ROLE_RGB.get(role, (255, 0, 255))) * scale
        body += row * scale
    return header + bytes(body)
