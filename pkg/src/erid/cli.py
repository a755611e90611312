"""Command-line entry point: ``erid {integrate,learn,validate,figure}``.

Settings come from built-in defaults, then an optional TOML file
(``--config``), then command-line flags; later sources win. ``ERID_SEED``
supplies the seed when neither the file nor a flag does.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from .agents import ProtocolKind
from .dynamics import BoxBounds, Dynamics, DynamicsKind, OdeConfig, integrate
from .games import Game2P, GameSchedule, biased_rps, load_game, matching_pennies, scaled_rps
from .harness import (AgentKind, AgentSpec, ExperimentConfig, cross_learning_drift_validate,
                      drift_validate, run_learning)
from .output import write_manifest, write_trajectory_csv
from .presets import PRESETS, run_preset
from .simplex import PolicyProfile

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

BUILTIN_GAMES = {
    "matching-pennies": matching_pennies,
    "biased-rps": biased_rps,
    "rps": lambda: scaled_rps(1.0),
}
SCHEDULES = ("static", "phase-switched", "continuous-scaled")

# section -> field -> expected python type(s)
CONFIG_SCHEMA: dict[str, dict[str, tuple]] = {
    "game": {"name": (str,), "path": (str,)},
    "schedule": {"kind": (str,), "v_max": (int, float), "phase_length": (int,),
                 "segment_length": (int,), "initial_length": (int,)},
    "agent": {"kind": (str,), "protocol": (str,), "alpha": (int, float), "buffer": (int,),
              "hedge_rate": (int, float), "lower": (list,), "upper": (list,)},
    "run": {"steps": (int,), "seed": (int,), "record_every": (int,), "init": (str, list),
            "self_play": (bool,), "running_average": (bool,), "out": (str,)},
    "ode": {"dynamics": (str,), "step_size": (int, float)},
    "validate": {"trials": (int,), "profile": (str, list), "buffer": (int,)},
    "figure": {"name": (str,), "scale": (int, float)},
}

CONFIG_CHOICES = {
    ("schedule", "kind"): SCHEDULES + ("phase_switched", "continuous_scaled"),
    ("agent", "kind"): tuple(k.value for k in AgentKind),
    ("agent", "protocol"): ("bnn", "smith", "srp"),
    ("ode", "dynamics"): tuple(d.value for d in Dynamics),
    ("figure", "name"): tuple(sorted(PRESETS)),
}

# flag destination -> (section, field)
FLAG_TO_CONFIG = {
    "game": ("game", "name"), "schedule": ("schedule", "kind"), "agent": ("agent", "kind"),
    "protocol": ("agent", "protocol"), "alpha": ("agent", "alpha"), "buffer": ("agent", "buffer"),
    "hedge_rate": ("agent", "hedge_rate"), "steps": ("run", "steps"), "seed": ("run", "seed"),
    "record_every": ("run", "record_every"), "init": ("run", "init"),
    "self_play": ("run", "self_play"), "running_average": ("run", "running_average"),
    "out": ("run", "out"), "dynamics": ("ode", "dynamics"), "step_size": ("ode", "step_size"),
    "trials": ("validate", "trials"), "profile": ("validate", "profile"),
    "scale": ("figure", "scale"),
}

DEFAULTS = {
    ("game", "name"): "matching-pennies", ("schedule", "kind"): "static",
    ("agent", "kind"): "erid", ("agent", "protocol"): "bnn", ("agent", "alpha"): 1e-5,
    ("agent", "buffer"): 1000, ("agent", "hedge_rate"): 0.01,
    ("run", "steps"): 10_000, ("run", "seed"): 0, ("run", "record_every"): 100,
    ("run", "self_play"): False, ("run", "running_average"): False, ("run", "out"): ".",
    ("ode", "dynamics"): "bnn", ("ode", "step_size"): 1e-3,
    ("validate", "trials"): 20_000,
}


class ConfigError(Exception):
    """Invalid configuration file or value; reported with exit status 1."""


def _add_common(p: argparse.ArgumentParser, *, agent: bool = False) -> None:
    p.add_argument("--config", type=Path, help="TOML file with [game], [schedule], [agent], [run], ... sections")
    p.add_argument("--game", help=f"built-in game ({', '.join(BUILTIN_GAMES)}) or path to a game JSON file")
    p.add_argument("--schedule", choices=SCHEDULES, help="payoff schedule (non-static ones use scaled RPS)")
    p.add_argument("--steps", type=int, help="number of steps")
    p.add_argument("--record-every", type=int, help="record one sample every N steps")
    p.add_argument("--init", help="initial policies 'p1;p2', e.g. '0.3,0.7;0.8,0.2'")
    p.add_argument("--out", help="output directory")
    if agent:
        p.add_argument("--agent", choices=[k.value for k in AgentKind])
        p.add_argument("--protocol", choices=["bnn", "smith", "srp"])
        p.add_argument("--alpha", type=float, help="learning rate")
        p.add_argument("--buffer", type=int, help="replay buffer capacity")
        p.add_argument("--hedge-rate", type=float)
        p.add_argument("--seed", type=int, help="RNG seed (default: $ERID_SEED or 0)")
        p.add_argument("--self-play", action="store_true", default=None,
                       help="one agent plays both seats of a symmetric game")
        p.add_argument("--running-average", action="store_true", default=None,
                       help="record the time-averaged policy")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="erid", description="Experience-replay innovative dynamics")
    sub = parser.add_subparsers(dest="command", required=True, metavar="{integrate,learn,validate,figure}")

    p = sub.add_parser("integrate", help="integrate an evolutionary dynamic with RK4")
    _add_common(p)
    p.add_argument("--dynamics", choices=[d.value for d in Dynamics])
    p.add_argument("--step-size", type=float)

    p = sub.add_parser("learn", help="simulate learners playing a game")
    _add_common(p, agent=True)

    p = sub.add_parser("validate", help="Monte-Carlo check of the expected update against the ODE field")
    p.add_argument("--config", type=Path)
    p.add_argument("--game")
    p.add_argument("--agent", choices=["erid", "cross"])
    p.add_argument("--protocol", choices=["bnn", "smith", "srp"])
    p.add_argument("--buffer", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--profile", help="frozen profile 'x;y'")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    p = sub.add_parser("figure", help="regenerate a named figure preset as CSV + SVG")
    p.add_argument("name", choices=sorted(PRESETS))
    p.add_argument("--config", type=Path)
    p.add_argument("--scale", type=float, help="run-length factor (learning rates scale inversely)")
    p.add_argument("--seed", type=int)
    p.add_argument("--protocol", choices=["bnn", "smith", "srp"])
    p.add_argument("--out")
    return parser


def load_config(path: Path) -> dict:
    """Read and schema-check a TOML config file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for section, body in data.items():
        if section not in CONFIG_SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}] "
                              f"(expected one of {', '.join(sorted(CONFIG_SCHEMA))})")
        if not isinstance(body, dict):
            raise ConfigError(f"{path}: [{section}] must be a table")
        for key, value in body.items():
            types = CONFIG_SCHEMA[section].get(key)
            if types is None:
                raise ConfigError(f"{path}: unknown field '{key}' in [{section}] "
                                  f"(expected one of {', '.join(CONFIG_SCHEMA[section])})")
            if isinstance(value, bool) and bool not in types or not isinstance(value, types):
                names = " or ".join(t.__name__ for t in types)
                raise ConfigError(f"{path}: [{section}].{key} must be {names}, got {value!r}")
            choices = CONFIG_CHOICES.get((section, key))
            if choices is not None and value not in choices:
                raise ConfigError(f"{path}: [{section}].{key} must be one of {', '.join(choices)}, "
                                  f"got {value!r}")
    return data


class Settings:
    """Merged view over defaults, config file, ``ERID_SEED`` and flags."""

    def __init__(self, args: argparse.Namespace):
        self.file = load_config(args.config) if getattr(args, "config", None) else {}
        self.source = str(args.config) if getattr(args, "config", None) else "defaults"
        self.values: dict[tuple[str, str], Any] = dict(DEFAULTS)
        env_seed = os.environ.get("ERID_SEED")
        if env_seed is not None:
            try:
                self.values[("run", "seed")] = int(env_seed)
            except ValueError:
                raise ConfigError(f"ERID_SEED must be an integer, got {env_seed!r}") from None
        for section, body in self.file.items():
            for key, value in body.items():
                self.values[(section, key)] = value
        self.flags: set[tuple[str, str]] = set()
        for dest, key in FLAG_TO_CONFIG.items():
            value = getattr(args, dest, None)
            if value is not None:
                self.values[key] = value
                self.flags.add(key)
        if getattr(args, "buffer", None) is not None:
            self.values[("validate", "buffer")] = args.buffer

    def get(self, section: str, key: str, default=None):
        return self.values.get((section, key), default)

    def where(self, section: str, key: str) -> str:
        return f"[{section}].{key}"


def parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise ConfigError(f"cannot parse probability vector {text!r}") from None


def parse_profile(value, self_play: bool = False) -> PolicyProfile:
    """``'0.3,0.7;0.8,0.2'`` (or a TOML list of two lists); one vector means both players."""
    if isinstance(value, list):
        parts = [np.asarray(v, dtype=float) for v in value]
    else:
        parts = [parse_vector(s) for s in str(value).split(";")]
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2:
        raise ConfigError(f"profile needs one or two vectors, got {len(parts)}")
    try:
        return PolicyProfile(*parts)
    except ValueError as exc:
        raise ConfigError(f"invalid profile {value!r}: {exc}") from None


def resolve_game(s: Settings) -> Game2P:
    path = s.get("game", "path")
    name = s.get("game", "name")
    if path is not None and ("game", "name") not in s.flags:
        return _load(path)
    if name in BUILTIN_GAMES:
        return BUILTIN_GAMES[name]()
    if Path(name).suffix == ".json" or Path(name).exists():
        return _load(name)
    raise ConfigError(f"{s.where('game', 'name')}: unknown game {name!r} "
                      f"(built-ins: {', '.join(BUILTIN_GAMES)}; or a JSON file)")


def _load(path) -> Game2P:
    try:
        return load_game(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load game {path}: {exc}") from None


def resolve_schedule(s: Settings):
    kind = s.get("schedule", "kind").replace("_", "-")
    if kind == "static":
        return resolve_game(s)
    v_max = float(s.get("schedule", "v_max", 6.0))
    if kind == "phase-switched":
        return GameSchedule.phase_switched(int(s.get("schedule", "phase_length", 3000)), v_max)
    if kind == "continuous-scaled":
        return GameSchedule.continuous_scaled(int(s.get("schedule", "segment_length", 600_000)),
                                              s.get("schedule", "initial_length"), v_max)
    raise ConfigError(f"{s.where('schedule', 'kind')}: unknown schedule {kind!r} "
                      f"(expected one of {', '.join(SCHEDULES)})")


def _bounds(s: Settings) -> Optional[BoxBounds]:
    lower, upper = s.get("agent", "lower"), s.get("agent", "upper")
    if lower is None and upper is None:
        return None
    if lower is None or upper is None:
        raise ConfigError("[agent] needs both lower and upper bounds")
    return BoxBounds(np.asarray(lower, float), np.asarray(upper, float))


def _protocol(s: Settings) -> ProtocolKind:
    bounds = _bounds(s)
    return ProtocolKind(Dynamics(s.get("agent", "protocol")), bounds)


def agent_spec(s: Settings) -> AgentSpec:
    kind = AgentKind(s.get("agent", "kind"))
    return AgentSpec(kind, _protocol(s) if kind is AgentKind.ERID else None,
                     alpha=float(s.get("agent", "alpha")), buffer_size=int(s.get("agent", "buffer")),
                     hedge_rate=float(s.get("agent", "hedge_rate")))


def _out_dir(s: Settings) -> Path:
    out = Path(s.get("run", "out"))
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror or exc}") from None
    return out


def _snapshot(s: Settings, command: str) -> dict:
    out: dict = {"command": command}
    for (section, key), value in sorted(s.values.items()):
        if (section, key) == ("run", "out"):
            continue
        out.setdefault(section, {})[key] = value
    return out


def cmd_integrate(s: Settings) -> int:
    game = resolve_schedule(s)
    dyn = Dynamics(s.get("ode", "dynamics"))
    kind = DynamicsKind(dyn, _bounds(s)) if dyn is Dynamics.SRP else DynamicsKind(dyn)
    init = s.get("run", "init")
    shape = game.shape
    start = parse_profile(init) if init is not None else PolicyProfile(np.full(shape[0], 1 / shape[0]),
                                                                       np.full(shape[1], 1 / shape[1]))
    cfg = OdeConfig(float(s.get("ode", "step_size")), int(s.get("run", "steps")),
                    int(s.get("run", "record_every")))
    traj = integrate(kind, game, start, cfg)
    return _emit(s, "integrate", traj)


def cmd_learn(s: Settings) -> int:
    game = resolve_schedule(s)
    self_play = bool(s.get("run", "self_play"))
    init = s.get("run", "init")
    cfg = ExperimentConfig(game, (agent_spec(s),), int(s.get("run", "steps")), int(s.get("run", "seed")),
                           int(s.get("run", "record_every")),
                           initial=parse_profile(init) if init is not None else None,
                           self_play=self_play,
                           report_running_average=bool(s.get("run", "running_average")))
    return _emit(s, "learn", run_learning(cfg))


def _emit(s: Settings, command: str, traj) -> int:
    out = _out_dir(s)
    csv_path = out / f"{command}.csv"
    write_trajectory_csv(traj, csv_path)
    write_manifest(out / f"{command}_manifest.json", _snapshot(s, command), [csv_path])
    final = traj.final_profile
    print(f"wrote {csv_path} ({len(traj)} samples); final nashconv {traj.nashconv[-1]:.6g}; "
          f"final policies {np.round(final.player1.probs, 4).tolist()} "
          f"{np.round(final.player2.probs, 4).tolist()}")
    return 0


def cmd_validate(s: Settings) -> int:
    game = resolve_game(s)
    profile_value = s.get("validate", "profile")
    if profile_value is None:
        m1, m2 = game.shape
        profile = PolicyProfile(np.full(m1, 1 / m1), np.full(m2, 1 / m2))
    else:
        profile = parse_profile(profile_value)
    trials = int(s.get("validate", "trials"))
    seed = int(s.get("run", "seed"))
    if s.get("agent", "kind") == "cross":
        report = cross_learning_drift_validate(game, profile, trials, seed)
    else:
        buffer = int(s.get("validate", "buffer", s.get("agent", "buffer")))
        report = drift_validate(game, profile, _protocol(s), buffer, trials, seed)
    out = _out_dir(s)
    path = out / "validate.json"
    path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    write_manifest(out / "validate_manifest.json", _snapshot(s, "validate"), [path])
    verdict = "within" if report.max_z < 3 else "OUTSIDE"
    print(f"wrote {path}; max |z| = {report.max_z:.3f} ({verdict} 3 standard errors)")
    return 0


def cmd_figure(s: Settings, args: argparse.Namespace) -> int:
    name = args.name
    scale = s.get("figure", "scale")
    explicit = ("run", "seed") in s.flags or "seed" in s.file.get("run", {}) or "ERID_SEED" in os.environ
    seed = s.get("run", "seed") if explicit else None
    result = run_preset(name, _out_dir(s), scale=scale, seed=seed, protocol=s.get("agent", "protocol"))
    for path in result.files:
        print(f"wrote {path}")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        s = Settings(args)
        if args.command == "integrate":
            return cmd_integrate(s)
        if args.command == "learn":
            return cmd_learn(s)
        if args.command == "validate":
            return cmd_validate(s)
        return cmd_figure(s, args)
    except ConfigError as exc:
        print(f"erid: config error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"erid: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
