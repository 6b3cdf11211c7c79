"""Flat `key = value` run configuration covering every tunable parameter.

Defaults reproduce the nominal quadrotor, reward and PPO settings.  Unknown
keys are rejected by name, as are values violating the parameter invariants,
and a dumped configuration parses back to an identical one.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .dynamics import QuadParams
from .env import RewardParams
from .ppo import TrainConfig


class ConfigError(Exception):
    """Raised for unknown keys, unparsable values or invariant violations."""


@dataclass(frozen=True)
class RunConfig:
    quad: QuadParams
    reward: RewardParams
    train: TrainConfig
    dt: float = 0.1
    substeps: int = 10
    perturb_pos: float = 0.1
    perturb_att: float = 0.05

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.substeps < 1:
            raise ValueError("substeps must be at least 1")
        if self.perturb_pos < 0.0 or self.perturb_att < 0.0:
            raise ValueError("perturbation scales must be non-negative")


# config key -> (section, dataclass field, type)
_QUAD_KEYS = {
    "m": "m", "ix0": "ix0", "iy0": "iy0", "iz0": "iz0", "k_f": "k_f",
    "k_m": "k_m", "m_mot": "m_mot", "g": "g", "l_min": "l_min",
    "l_max": "l_max", "n_max": "n_max",
}
_REWARD_KEYS = {
    "c_x_tilde": "c_x_tilde", "c_varpi": "c_varpi",
    "c_x_tilde_dot": "c_x_tilde_dot", "c_varpi_dot": "c_varpi_dot",
    "c_u": "c_u", "c_e": "c_e", "r_c": "r_c", "r_t": "r_t",
    "d_crash": "d_crash", "t_e": "t_e",
}
_TRAIN_KEYS = {
    "t_max": "t_max", "n_buffer": "n_buffer", "k_epochs": "k_epochs",
    "minibatch": "minibatch", "c_entropy": "c_entropy",
    "epsilon_clip": "epsilon_clip", "gamma": "gamma", "lambda": "gae_lambda",
    "eta_a": "eta_a", "eta_c": "eta_c", "epsilon_adam": "epsilon_adam",
    "grad_clip": "grad_clip", "reward_scaling": "reward_scaling",
}
_ENV_KEYS = {
    "dt": "dt", "substeps": "substeps", "perturb_pos": "perturb_pos",
    "perturb_att": "perturb_att",
}

_INT_FIELDS = {"t_e", "t_max", "n_buffer", "k_epochs", "minibatch", "substeps"}
_BOOL_FIELDS = {"reward_scaling"}


def default_config() -> RunConfig:
    return RunConfig(quad=QuadParams(), reward=RewardParams(),
                     train=TrainConfig())


def _convert(key: str, raw: str):
    raw = raw.strip()
    try:
        if key in _BOOL_FIELDS:
            low = raw.lower()
            if low in ("true", "1", "yes"):
                return True
            if low in ("false", "0", "no"):
                return False
            raise ValueError("expected a boolean")
        if key in _INT_FIELDS:
            val = float(raw)
            if val != int(val):
                raise ValueError("expected an integer")
            return int(val)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"invalid value for '{key}': {raw!r} ({exc})") from None


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse `key = value` lines ('#' comments) on top of `base` or defaults."""
    cfg = base if base is not None else default_config()
    quad = {f.name: getattr(cfg.quad, f.name) for f in fields(QuadParams)}
    reward = {f.name: getattr(cfg.reward, f.name) for f in fields(RewardParams)}
    train = {f.name: getattr(cfg.train, f.name) for f in fields(TrainConfig)}
    env = {"dt": cfg.dt, "substeps": cfg.substeps,
           "perturb_pos": cfg.perturb_pos, "perturb_att": cfg.perturb_att}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', "
                              f"got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in _QUAD_KEYS:
            quad[_QUAD_KEYS[key]] = _convert(key, value)
        elif key in _REWARD_KEYS:
            reward[_REWARD_KEYS[key]] = _convert(key, value)
        elif key in _TRAIN_KEYS:
            train[_TRAIN_KEYS[key]] = _convert(key, value)
        elif key in _ENV_KEYS:
            env[_ENV_KEYS[key]] = _convert(key, value)
        else:
            raise ConfigError(f"unknown key '{key}' (line {lineno})")
    try:
        return RunConfig(quad=QuadParams(**quad), reward=RewardParams(**reward),
                         train=TrainConfig(**train), **env)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path, base: RunConfig | None = None) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read(), base=base)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, float) else str(v)


def dump_config(cfg: RunConfig) -> str:
    """Canonical text form; parse_config(dump_config(c)) == c."""
    out = ["# quadrotor"]
    for key, name in _QUAD_KEYS.items():
        out.append(f"{key} = {_fmt(getattr(cfg.quad, name))}")
    out.append("")
    out.append("# reward")
    for key, name in _REWARD_KEYS.items():
        out.append(f"{key} = {_fmt(getattr(cfg.reward, name))}")
    out.append("")
    out.append("# training")
    for key, name in _TRAIN_KEYS.items():
        out.append(f"{key} = {_fmt(getattr(cfg.train, name))}")
    out.append("")
    out.append("# environment")
    out.append(f"dt = {_fmt(cfg.dt)}")
    out.append(f"substeps = {cfg.substeps}")
    out.append(f"perturb_pos = {_fmt(cfg.perturb_pos)}")
    out.append(f"perturb_att = {_fmt(cfg.perturb_att)}")
    return "\n".join(out) + "\n"
