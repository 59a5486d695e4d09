"""Scenario files: plain text, one ``key = value`` per line, '#' comments.

Keys (all optional unless noted)::

    topology      rectangular | hexagonal      (default rectangular)
    cols, rows    lattice dimensions           (rectangular, required)
    row_list      e.g. 4,3,4                   (hexagonal, required)
    dx_mm, dy_mm  spacing                      (default 35 / dx)
    jitter_eps    placement error fraction     (default 0)
    seed          default seed                 (default 1)
    drop_prob, sigma_mm, bias_mm, skew_frac    noise model (default 0)
    tx_bias_frac, tx_bias_mm                   weak-transmitter stress
    comm_range_mm, msg_rate, tick_rate, max_sim_s
    t1, t2, t3, t4, repair_delay, election_ticks, axes_ticks, coords_ticks
    repair        on | off
    plan          path to a role plan, relative to the scenario file
    run_until     r1 | r2 | plan | time        (default r2, hexagonal forces r1)
    frames_every  frame capture interval in ticks (default 0 = off)
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

from .engine import NoiseModel, RunSetup, SimConfig
from .errors import InvalidSpecError
from .plan import load_plan
from .protocol import ProtocolParams
from .world import HEXAGONAL, LatticeSpec, RECTANGULAR

_BOOL = {"on": True, "true": True, "yes": True, "1": True,
         "off": False, "false": False, "no": False, "0": False}


@dataclass
class Scenario:
    setup: RunSetup
    seed: int
    path: Path | None = None


def _parse_kv(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidSpecError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        values[key.strip().lower()] = value.strip()
    return values


def _get(values, key, cast, default):
    if key not in values:
        return default
    try:
        return cast(values[key])
    except (TypeError, ValueError) as exc:
        raise InvalidSpecError(f"bad value for {key}: {values[key]!r} ({exc})")


def _bool(word: str) -> bool:
    try:
        return _BOOL[word.lower()]
    except KeyError:
        raise ValueError(f"expected on/off, got {word!r}")


def parse_scenario(text: str, base_dir: Path | None = None) -> Scenario:
    v = _parse_kv(text)

    topology = _get(v, "topology", str, RECTANGULAR).lower()
    if topology == RECTANGULAR:
        lattice = LatticeSpec(
            topology=RECTANGULAR,
            cols=_get(v, "cols", int, 5),
            rows=_get(v, "rows", int, 5),
            dx=_get(v, "dx_mm", float, 35.0),
            dy=_get(v, "dy_mm", float, _get(v, "dx_mm", float, 35.0)),
            jitter_eps=_get(v, "jitter_eps", float, 0.0),
        )
    elif topology == HEXAGONAL:
        if "row_list" not in v:
            raise InvalidSpecError("hexagonal scenario needs row_list")
        row_list = tuple(int(p) for p in v["row_list"].split(",") if p.strip())
        lattice = LatticeSpec(
            topology=HEXAGONAL,
            row_list=row_list,
            dx=_get(v, "dx_mm", float, 60.0),
            jitter_eps=_get(v, "jitter_eps", float, 0.0),
        )
    else:
        raise InvalidSpecError(f"unknown topology {topology!r}")

    noise = NoiseModel(
        drop_prob=_get(v, "drop_prob", float, 0.0),
        dist_noise_sigma=_get(v, "sigma_mm", float, 0.0),
        dist_noise_bias=_get(v, "bias_mm", float, 0.0),
        clock_skew_frac=_get(v, "skew_frac", float, 0.0),
        tx_bias_frac=_get(v, "tx_bias_frac", float, 0.0),
        tx_bias_mm=_get(v, "tx_bias_mm", float, 15.0),
    )
    sim = SimConfig(
        comm_range=_get(v, "comm_range_mm", float, 100.0),
        msg_rate=_get(v, "msg_rate", float, 2.0),
        tick_rate=_get(v, "tick_rate", int, 32),
        max_sim_seconds=_get(v, "max_sim_s", float, 600.0),
    )
    proto = ProtocolParams(
        t1=_get(v, "t1", int, 300),
        t2=_get(v, "t2", int, 800),
        t3=_get(v, "t3", int, 1600),
        t4=_get(v, "t4", int, 400),
        repair_delay=_get(v, "repair_delay", int, 160),
        election_ticks=_get(v, "election_ticks", int, 400),
        axes_ticks=_get(v, "axes_ticks", int, 160),
        coords_ticks=_get(v, "coords_ticks", int, 1280),
        repair_enabled=_get(v, "repair", _bool, True),
    )

    plan = None
    if "plan" in v and v["plan"]:
        plan_path = Path(v["plan"])
        if base_dir is not None and not plan_path.is_absolute():
            plan_path = base_dir / plan_path
        plan = load_plan(plan_path)

    default_until = "r1" if topology == HEXAGONAL else ("plan" if plan else "r2")
    setup = RunSetup(
        lattice=lattice,
        noise=noise,
        sim=sim,
        proto=proto,
        plan=plan,
        run_until=_get(v, "run_until", str, default_until).lower(),
        frames_every=_get(v, "frames_every", int, 0),
    )
    setup.validate()
    return Scenario(setup=setup, seed=_get(v, "seed", int, 1))


def load_scenario(path) -> Scenario:
    path = Path(path)
    scenario = parse_scenario(path.read_text(encoding="utf-8"), base_dir=path.parent)
    scenario.path = path
    return scenario


def apply_overrides(scenario: Scenario, *, seed=None, drop=None, sigma=None,
                    bias_frac=None, skew=None, plan_path=None, frames_every=None,
                    timers=None, repair=None, max_sim_s=None) -> Scenario:
    """Command-line overrides; scenario file values are the defaults."""
    setup = scenario.setup
    noise = setup.noise
    if drop is not None or sigma is not None or bias_frac is not None or skew is not None:
        noise = replace(
            noise,
            drop_prob=noise.drop_prob if drop is None else drop,
            dist_noise_sigma=noise.dist_noise_sigma if sigma is None else sigma,
            tx_bias_frac=noise.tx_bias_frac if bias_frac is None else bias_frac,
            clock_skew_frac=noise.clock_skew_frac if skew is None else skew,
        )
    proto = setup.proto
    if timers or repair is not None:
        kwargs = dict(timers or {})
        if repair is not None:
            kwargs["repair_enabled"] = repair
        proto = replace(proto, **kwargs)
    sim = setup.sim
    if max_sim_s is not None:
        sim = replace(sim, max_sim_seconds=max_sim_s)
    plan = setup.plan
    run_until = setup.run_until
    if plan_path is not None:
        plan = load_plan(plan_path)
        if run_until == "r2":
            run_until = "plan"
    new_setup = RunSetup(
        lattice=setup.lattice, noise=noise, sim=sim, proto=proto, plan=plan,
        run_until=run_until,
        frames_every=setup.frames_every if frames_every is None else frames_every,
    )
    new_setup.validate()
    return Scenario(setup=new_setup,
                    seed=scenario.seed if seed is None else seed,
                    path=scenario.path)
