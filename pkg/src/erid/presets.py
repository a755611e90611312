"""Named experiment presets that regenerate the four standard figures as CSV + SVG.

Every preset is a pure function of ``(name, scale, seed, protocol)``: run lengths
are multiplied by ``scale`` and learning rates divided by it, so the total
policy motion per phase or segment is preserved at desk-scale settings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from .agents import ProtocolKind
from .dynamics import OdeConfig, integrate
from .games import GameSchedule, biased_rps, matching_pennies
from .harness import AgentKind, AgentSpec, ExperimentConfig, compare_to_ode, run_learning
from .output import write_manifest, write_trajectory_csv
from .simplex import PolicyProfile
from .svg import write_svg
from .trajectory import Trajectory

BASE_ALPHA = 1e-5
BASE_BUFFER = 1000
ODE_STEP = 1e-3

# (P(action 0) for player 1, P(action 0) for player 2)
MATCHING_PENNIES_STARTS = ((0.5, 0.6), (0.2, 0.2), (0.3, 0.7), (0.8, 0.2), (0.9, 0.9))
RPS_STARTS = (((0.1, 0.1, 0.8), (0.8, 0.1, 0.1)), ((0.8, 0.1, 0.1), (0.1, 0.1, 0.8)))

DEFAULT_SCALE = {"fig1": 1.0, "fig2": 0.1, "fig3": 0.1, "fig4": 0.1}
DEFAULT_SEED = {"fig1": 0, "fig2": 1, "fig3": 1, "fig4": 0}


@dataclass
class FigureResult:
    name: str
    files: list[Path] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    trajectories: dict[str, Trajectory] = field(default_factory=dict)


def _steps(n: float, scale: float) -> int:
    return max(1, int(round(n * scale)))


def _emit_csv(result: FigureResult, out: Path, name: str, traj: Trajectory) -> None:
    path = out / f"{name}.csv"
    write_trajectory_csv(traj, path)
    result.files.append(path)
    result.trajectories[name] = traj


def _emit_svg(result: FigureResult, out: Path, name: str, trajs, kind: str, **kw) -> None:
    path = out / f"{name}.svg"
    write_svg(path, trajs, kind, **kw)
    result.files.append(path)


def fig1(out: Path, scale: float = 1.0, seed: int = 0, protocol: str = "bnn") -> FigureResult:
    """Self-play on RPS whose scaled matchup switches every phase (RP, SR, PS).

    ERID is shown as played; cross learning and Hedge are shown as running
    averages, the form in which no-regret learners are usually reported.
    """
    phase = _steps(3000, scale)
    schedule = GameSchedule.phase_switched(phase, 6.0)
    n_steps = 3 * phase
    record = max(1, _steps(10, scale))
    runs = [
        ("erid", AgentSpec(AgentKind.ERID, ProtocolKind(protocol), alpha=2e-3 / scale, buffer_size=50), False),
        ("cross_avg", AgentSpec(AgentKind.CROSS, alpha=min(1.0, 2e-2 / scale)), True),
        ("hedge_avg", AgentSpec(AgentKind.HEDGE, hedge_rate=1e-2 / scale), True),
    ]
    result = FigureResult("fig1")
    for name, spec, avg in runs:
        cfg = ExperimentConfig(schedule, (spec,), n_steps, seed, record, self_play=True,
                               report_running_average=avg)
        _emit_csv(result, out, f"fig1_{name}", run_learning(cfg))
    trajs = list(result.trajectories.values())
    labels = [f"ERID-{protocol.upper()}", "cross learning (time avg)", "Hedge (time avg)"]
    _emit_svg(result, out, "fig1_nashconv", trajs, "line_nashconv", labels=labels,
              title="NashConv under switching RPS payoffs")
    result.summary = {"phase_length": phase, "phase_end_nashconv": {
        name: [float(t.nashconv[(t.t >= e - phase // 10) & (t.t < e)].mean())
               for e in range(phase, n_steps + 1, phase)]
        for name, t in result.trajectories.items()}}
    return result


def _ode_and_learner(game, start, protocol: str, scale: float, seed: int):
    alpha = BASE_ALPHA / scale
    n_steps = _steps(2e6, scale)
    record = _steps(1000, scale)
    cfg = ExperimentConfig(game, (AgentSpec(AgentKind.ERID, ProtocolKind(protocol), alpha, BASE_BUFFER),),
                           n_steps, seed, record, initial=start)
    learner = run_learning(cfg)
    ode_cfg = OdeConfig(ODE_STEP, int(round(n_steps * alpha / ODE_STEP)),
                        max(1, int(round(record * alpha / ODE_STEP))))
    ode = integrate(protocol, game, start, ode_cfg)
    gap = compare_to_ode(learner, protocol, OdeConfig(ODE_STEP))
    return ode, learner, gap


def fig2(out: Path, scale: float = 0.1, seed: int = 1, protocol: str = "bnn") -> FigureResult:
    """Matching pennies from five starts: ODE and ERID learner in the unit square."""
    game = matching_pennies()
    result = FigureResult("fig2")
    odes, learners, gaps = [], [], []
    for i, (p, q) in enumerate(MATCHING_PENNIES_STARTS, start=1):
        start = PolicyProfile((p, 1 - p), (q, 1 - q))
        ode, learner, gap = _ode_and_learner(game, start, protocol, scale, seed)
        _emit_csv(result, out, f"fig2_ode_ic{i}", ode)
        _emit_csv(result, out, f"fig2_learner_ic{i}", learner)
        odes.append(ode)
        learners.append(learner)
        gaps.append(gap)
    labels = [f"start ({p}, {q})" for p, q in MATCHING_PENNIES_STARTS]
    _emit_svg(result, out, "fig2_ode", odes, "square_phase", labels=labels,
              title=f"{protocol.upper()} dynamics, matching pennies")
    _emit_svg(result, out, "fig2_learner", learners, "square_phase", labels=labels,
              title=f"ERID-{protocol.upper()}, matching pennies")
    result.summary = {"sup_gap_to_ode": gaps}
    return result


def fig3(out: Path, scale: float = 0.1, seed: int = 1, protocol: str = "bnn") -> FigureResult:
    """Biased RPS from a pair of corner-heavy starts: ODE and learner on the simplex."""
    game = biased_rps()
    start = PolicyProfile(*RPS_STARTS[0])
    ode, learner, gap = _ode_and_learner(game, start, protocol, scale, seed)
    result = FigureResult("fig3")
    _emit_csv(result, out, "fig3_ode", ode)
    _emit_csv(result, out, "fig3_learner", learner)
    _emit_svg(result, out, "fig3_ode", ode, "ternary", labels=[f"{protocol.upper()} ODE"],
              title=f"{protocol.upper()} dynamics, biased RPS")
    _emit_svg(result, out, "fig3_learner", learner, "ternary", labels=[f"ERID-{protocol.upper()}"],
              title=f"ERID-{protocol.upper()}, biased RPS")
    result.summary = {"sup_gap_to_ode": gap}
    return result


def segment_means(traj: Trajectory, schedule: GameSchedule, fraction: float = 0.1) -> list[float]:
    """Mean relative NashConv over the final ``fraction`` of every schedule segment."""
    out = []
    for start, stop in schedule.segment_bounds():
        lo = stop - max(1, int((stop - start) * fraction))
        mask = (traj.t >= lo) & (traj.t < stop)
        out.append(float(traj.relative_nashconv[mask].mean()) if mask.any() else float("nan"))
    return out


def fig4(out: Path, scale: float = 0.1, seed: int = 0, protocol: str = "bnn") -> FigureResult:
    """Self-play on continuously rescaled RPS: ERID-BNN, ERID-Smith and cross learning."""
    schedule = GameSchedule.continuous_scaled(_steps(6e5, scale), _steps(3e5, scale), 6.0)
    n_steps = schedule.total_length
    alpha = BASE_ALPHA / scale
    record = _steps(1000, scale)
    runs = [
        ("erid_bnn", AgentSpec(AgentKind.ERID, ProtocolKind("bnn"), alpha, BASE_BUFFER)),
        ("erid_smith", AgentSpec(AgentKind.ERID, ProtocolKind("smith"), alpha, BASE_BUFFER)),
        ("cross", AgentSpec(AgentKind.CROSS, alpha=min(1.0, alpha))),
    ]
    result = FigureResult("fig4")
    for name, spec in runs:
        cfg = ExperimentConfig(schedule, (spec,), n_steps, seed, record, self_play=True)
        _emit_csv(result, out, f"fig4_{name}", run_learning(cfg))
    trajs = list(result.trajectories.values())
    labels = ["ERID-BNN", "ERID-Smith", "cross learning"]
    _emit_svg(result, out, "fig4_nashconv", trajs, "line_nashconv", labels=labels,
              title="NashConv under continuously rescaled RPS")
    _emit_svg(result, out, "fig4_relative", trajs, "line_relative", labels=labels,
              title="Relative NashConv under continuously rescaled RPS")
    result.summary = {"segments": schedule.segment_bounds(),
                      "segment_final_relative_nashconv": {
                          name: segment_means(t, schedule) for name, t in result.trajectories.items()}}
    summary_path = out / "fig4_segments.json"
    summary_path.write_text(json.dumps(result.summary, indent=2) + "\n", encoding="utf-8")
    result.files.append(summary_path)
    return result


PRESETS: dict[str, Callable[..., FigureResult]] = {"fig1": fig1, "fig2": fig2, "fig3": fig3, "fig4": fig4}


def run_preset(name: str, out, scale: Optional[float] = None, seed: Optional[int] = None,
               protocol: str = "bnn") -> FigureResult:
    """Run a named preset into directory ``out`` and write ``<name>_manifest.json``."""
    if name not in PRESETS:
        raise ValueError(f"unknown figure {name!r}; choose from {sorted(PRESETS)}")
    if scale is None:
        scale = DEFAULT_SCALE[name]
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if seed is None:
        seed = DEFAULT_SEED[name]
    result = PRESETS[name](out, scale=scale, seed=seed, protocol=protocol)
    config = {"figure": name, "scale": scale, "seed": seed, "protocol": protocol}
    write_manifest(out / f"{name}_manifest.json", config, result.files)
    result.files.append(out / f"{name}_manifest.json")
    return result
