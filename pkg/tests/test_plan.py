import pytest

from gridswarm.errors import PlanParseError
from gridswarm.plan import (
    ROLE_OFF, load_plan, parse_plan, render_ascii, render_ppm,
)

SIMPLE = """
step_seconds = 4
cyclic = true

step
rect 1 1 2 2 -> red

step
rect 1 1 5 5 -> green
"""


def test_parse_rect_plan():
    plan = parse_plan(SIMPLE)
    assert plan.step_seconds == 4
    assert plan.cyclic
    assert len(plan.steps) == 2
    assert sorted(plan.lit_cells(0)) == [(1, 1), (1, 2), (2, 1), (2, 2)]
    assert plan.role_at((1, 1), 0) == "red"
    assert plan.role_at((3, 3), 0) == ROLE_OFF
    assert plan.role_at((3, 3), 1) == "green"
    # cyclic wrap
    assert plan.role_at((1, 1), 2) == "red"


def test_glyph_anchor_and_orientation():
    plan = parse_plan("step\nglyph ## .# -> blue at 2,3\n")
    # first row of the artwork is the top: '##' sits one above the anchor row
    assert plan.lit_cells(0) == {(2, 4): "blue", (3, 4): "blue", (3, 3): "blue"}


def test_first_match_wins():
    text = "step\nrect 1 1 1 1 -> red\nrect 1 1 2 1 -> blue\n"
    plan = parse_plan(text)
    assert plan.role_at((1, 1), 0) == "red"
    assert plan.role_at((2, 1), 0) == "blue"


def test_departed_and_noncyclic():
    plan = parse_plan("cyclic = false\nstep\nrect 1 1 1 1 -> departed\n")
    assert plan.role_at((1, 1), 0) == "departed"
    assert plan.role_at((1, 1), 5) == ROLE_OFF  # past the end


@pytest.mark.parametrize("text,fragment", [
    ("step\nrect 1 1 2 -> red\n", "4 coordinates"),
    ("step\nrect 1 1 2 2 -> vermilion\n", "unknown role"),
    ("step\nglyph #- ## -> red at 1,1\n", "'.' and '#'"),
    ("step\nglyph ## # -> red at 1,1\n", "equal width"),
    ("rect 1 1 2 2 -> red\n", "before the first"),
    ("step\nrect 2 2 1 1 -> red\n", "ordered"),
    ("step_seconds = -2\nstep\nrect 1 1 1 1 -> red\n", "positive"),
    ("", "no steps"),
])
def test_parse_errors(text, fragment):
    with pytest.raises(PlanParseError) as err:
        parse_plan(text)
    assert fragment in str(err.value)


def test_parse_error_carries_line_number():
    with pytest.raises(PlanParseError) as err:
        parse_plan("step\nrect 1 1 2 2 -> red\nbogus line\n")
    assert err.value.line == 3


def test_shipped_plans_parse(scenarios_dir):
    njit = load_plan(scenarios_dir / "plans" / "njit.plan")
    assert len(njit.steps) == 4 and njit.cyclic
    swarm = load_plan(scenarios_dir / "plans" / "swarm.plan")
    assert len(swarm.steps) == 2
    # the second word is the first shifted right by two columns
    shifted = {(x + 2, y): role for (x, y), role in swarm.lit_cells(0).items()}
    assert shifted == swarm.lit_cells(1)
    hello = load_plan(scenarios_dir / "plans" / "hello_world.plan")
    assert len(hello.steps) == 2
    for step in range(2):
        cells = hello.lit_cells(step)
        assert cells and all(1 <= x <= 10 and 1 <= y <= 10 for x, y in cells)


def test_render_ascii():
    roles = {(1, 1): "red", (2, 2): "off", (1, 2): "departed"}
    out = render_ascii(roles, 2, 2)
    assert out == " .\nR.\n"


def test_render_ppm_deterministic():
    roles = {(1, 1): "red", (2, 1): "blue"}
    img1 = render_ppm(roles, 2, 1, scale=2)
    img2 = render_ppm(roles, 2, 1, scale=2)
    assert img1 == img2
    assert img1.startswith(b"P6\n4 2\n255\n")
    assert len(img1) == len(b"P6\n4 2\n255\n") + 4 * 2 * 3
