"""Command-line entry points for training, weight solving and scenario runs.

Subcommands: train, solve-weights, run-scenario, eval, print-config.  All
commands are deterministic given (arguments, config, seed); errors exit
nonzero with a single `error: ...` line on stderr.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources

import numpy as np

from . import ccomb, ppo, runtime
from .checkpoint import (Checkpoint, CheckpointError, load_checkpoint,
                         save_checkpoint)
from .config import ConfigError, RunConfig, default_config, dump_config, load_config
from .env import QuadrotorEnv, write_telemetry_csv
from .ppo import TrainConfig

DEFAULT_SCHEDULE_RESOURCE = "asymmetric_morph.txt"


class CliError(Exception):
    """User-facing command failure; message becomes the error line."""


def _actor_name(mode: int) -> str:
    return f"mode_{mode:02d}_actor.ckpt"


def _critic_name(mode: int) -> str:
    return f"mode_{mode:02d}_critic.ckpt"


def _load_run_config(path) -> RunConfig:
    if path is None:
        return default_config()
    try:
        return load_config(path)
    except FileNotFoundError:
        raise CliError(f"config file not found: {path}")
    except ConfigError as exc:
        raise CliError(f"bad config: {exc}")


def _env_factory(cfg: RunConfig):
    def make_env(arms):
        return QuadrotorEnv(quad=cfg.quad, reward=cfg.reward, arms=arms,
                            dt=cfg.dt, substeps=cfg.substeps,
                            perturb_pos=cfg.perturb_pos,
                            perturb_att=cfg.perturb_att)
    return make_env


def _vertex_set(cfg: RunConfig) -> ccomb.VertexSet:
    return ccomb.VertexSet(cfg.quad.l_min, cfg.quad.l_max)


def _parse_arms(cfg: RunConfig, values) -> np.ndarray:
    arms = np.asarray([float(v) for v in values])
    if arms.shape != (4,):
        raise CliError("expected four arm lengths")
    if np.any(arms < cfg.quad.l_min) or np.any(arms > cfg.quad.l_max):
        raise CliError(f"arm lengths {arms.tolist()} outside "
                       f"[{cfg.quad.l_min}, {cfg.quad.l_max}]")
    return arms


def _train_single(cfg: RunConfig, mode, arms, seed: int, out_dir) -> dict:
    """Train one mode and persist checkpoints plus the training log."""
    import os
    os.makedirs(out_dir, exist_ok=True)
    train_cfg = cfg.train
    result = ppo.train(_env_factory(cfg), arms, train_cfg, seed)
    label = f"{mode:02d}" if isinstance(mode, int) else "custom"
    meta = {
        "mode": str(mode) if isinstance(mode, int) else "custom",
        "arms": " ".join(repr(v) for v in arms),
        "steps": str(result.total_steps),
        "seed": str(seed),
    }
    prefix = os.path.join(out_dir, f"mode_{label}" if isinstance(mode, int)
                          else "custom")
    actor_path = prefix + "_actor.ckpt"
    critic_path = prefix + "_critic.ckpt"
    save_checkpoint(actor_path, Checkpoint("actor", result.actor,
                                           result.adam_actor, meta))
    save_checkpoint(critic_path, Checkpoint("critic", result.critic,
                                            result.adam_critic, meta))
    log_path = prefix + "_training_log.csv"
    ppo.write_training_log(log_path, result)
    rewards = [ep.reward for ep in result.episodes]
    tail = rewards[-10:] if rewards else []
    return {
        "mode": mode,
        "actor": actor_path,
        "critic": critic_path,
        "log": log_path,
        "episodes": len(rewards),
        "updates": len(result.updates),
        "final10_mean": float(np.mean(tail)) if tail else float("nan"),
    }


def _train_mode_worker(args):
    cfg, mode, arms, seed, out_dir = args
    return _train_single(cfg, mode, arms, seed, out_dir)


def cmd_train(args) -> int:
    cfg = _load_run_config(args.config)
    if args.steps is not None:
        if args.steps < 1:
            raise CliError("--steps must be at least 1")
        train = {f: getattr(cfg.train, f) for f in TrainConfig.__dataclass_fields__}
        train["t_max"] = args.steps
        cfg = RunConfig(quad=cfg.quad, reward=cfg.reward,
                        train=TrainConfig(**train), dt=cfg.dt,
                        substeps=cfg.substeps, perturb_pos=cfg.perturb_pos,
                        perturb_att=cfg.perturb_att)
    vs = _vertex_set(cfg)
    if args.all_modes:
        jobs = [(cfg, i + 1, vs.vertices[i], args.seed + i, args.out)
                for i in range(16)]
        if args.parallel > 1:
            with ProcessPoolExecutor(max_workers=args.parallel) as pool:
                summaries = list(pool.map(_train_mode_worker, jobs))
        else:
            summaries = [_train_mode_worker(job) for job in jobs]
    elif args.mode is not None:
        if not 1 <= args.mode <= 16:
            raise CliError("--mode must be in 1..16")
        arms = vs.vertices[args.mode - 1]
        summaries = [_train_single(cfg, args.mode, arms, args.seed, args.out)]
    elif args.arms is not None:
        arms = _parse_arms(cfg, args.arms)
        summaries = [_train_single(cfg, "custom", arms, args.seed, args.out)]
    else:
        raise CliError("one of --mode, --arms or --all-modes is required")
    for s in summaries:
        print(f"mode {s['mode']}: episodes={s['episodes']} "
              f"updates={s['updates']} final10_mean={s['final10_mean']:.4f} "
              f"actor={s['actor']}")
    return 0


def cmd_solve_weights(args) -> int:
    cfg = _load_run_config(args.config)
    vs = _vertex_set(cfg)
    arms = _parse_arms(cfg, args.lengths)
    if args.sqp:
        chi = ccomb.solve_weights_sqp(vs, arms, seed=args.seed)
    else:
        chi = ccomb.solve_weights(vs, arms)
    report = ccomb.verify_weights(vs, chi, arms)
    for i in range(16):
        pattern = "".join(str(int(b)) for b in vs.bits[i])
        print(f"mode {i + 1:2d} ({pattern}): {chi[i]:.12f}")
    print(f"support = {report.support_size}")
    print(f"objective = {ccomb.objective(chi):.12f}")
    print(f"sum_violation = {report.sum_violation:.3e}")
    print(f"recon_violation = {report.recon_violation:.3e}")
    return 0


def _load_bank(cfg: RunConfig, bank_dir) -> runtime.PolicyBank:
    import os
    missing = []
    actors = []
    for i in range(1, 17):
        path = os.path.join(bank_dir, _actor_name(i))
        if not os.path.exists(path):
            missing.append(i)
            continue
        ckpt = load_checkpoint(path)
        if ckpt.head != "actor":
            raise CliError(f"{path} is not an actor checkpoint")
        actors.append(ckpt.params)
    if missing:
        raise CliError("missing checkpoints for modes: "
                       + ", ".join(str(i) for i in missing))
    return runtime.PolicyBank(actors=actors, vertex_set=_vertex_set(cfg))


def _default_schedule_text() -> str:
    return (resources.files("ccdrl") / "data" /
            DEFAULT_SCHEDULE_RESOURCE).read_text()


def cmd_run_scenario(args) -> int:
    cfg = _load_run_config(args.config)
    bank = _load_bank(cfg, args.bank)
    if args.schedule is None:
        schedule = runtime.ArmCommandSchedule.parse(_default_schedule_text(),
                                                    rate=args.rate)
    else:
        try:
            schedule = runtime.ArmCommandSchedule.load(args.schedule,
                                                       rate=args.rate)
        except FileNotFoundError:
            raise CliError(f"schedule file not found: {args.schedule}")
        except ValueError as exc:
            raise CliError(f"bad schedule: {exc}")
    env = _env_factory(cfg)(np.full(4, cfg.quad.l_min))
    result = runtime.run_scenario(env, bank, schedule, args.seed)
    write_telemetry_csv(args.out, result.rows)
    print(f"steps = {result.steps}")
    print(f"crashed = {result.crashed}")
    print(f"accumulated_reward = {result.accumulated_reward:.6f}")
    print("power = " + " ".join(f"{p:.6f}" for p in result.power))
    print(f"max_err = {result.max_err:.6f}")
    print(f"mean_err = {result.mean_err:.6f}")
    print(f"telemetry = {args.out}")
    return 0


def cmd_eval(args) -> int:
    cfg = _load_run_config(args.config)
    try:
        ckpt = load_checkpoint(args.checkpoint)
    except FileNotFoundError:
        raise CliError(f"checkpoint not found: {args.checkpoint}")
    if ckpt.head != "actor":
        raise CliError(f"{args.checkpoint} is not an actor checkpoint")
    arms = _parse_arms(cfg, args.arms)
    env = _env_factory(cfg)(arms)
    result = runtime.evaluate_policy(env, ckpt.params, args.seed)
    write_telemetry_csv(args.out, result.rows)
    print(f"steps = {result.steps}")
    print(f"crashed = {result.crashed}")
    print(f"accumulated_reward = {result.accumulated_reward:.6f}")
    print("power = " + " ".join(f"{p:.6f}" for p in result.power))
    print(f"max_err = {result.max_err:.6f}")
    print(f"mean_err = {result.mean_err:.6f}")
    print(f"telemetry = {args.out}")
    return 0


def cmd_print_config(args) -> int:
    cfg = _load_run_config(args.config)
    sys.stdout.write(dump_config(cfg))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccdrl",
        description="Blended-policy flight control for a morphing quadrotor")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train PPO controllers")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--mode", type=int, help="vertex mode index (1..16)")
    group.add_argument("--arms", nargs=4, metavar=("L1", "L2", "L3", "L4"),
                       help="fixed arm lengths in meters")
    group.add_argument("--all-modes", action="store_true",
                       help="train all 16 vertex modes")
    p.add_argument("--config", help="run configuration file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int,
                   help="override total training steps (t_max)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--parallel", type=int, default=1,
                   help="worker processes for --all-modes")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("solve-weights",
                       help="solve the vertex-weight program for a target")
    p.add_argument("lengths", nargs=4, metavar=("L1", "L2", "L3", "L4"))
    p.add_argument("--config", help="run configuration file")
    p.add_argument("--sqp", action="store_true",
                   help="use the iterative SLSQP solver instead of enumeration")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_solve_weights)

    p = sub.add_parser("run-scenario",
                       help="fly the blended controller under an arm schedule")
    p.add_argument("--bank", required=True,
                   help="directory with mode_NN_actor.ckpt files")
    p.add_argument("--schedule", help="schedule file (default: shipped scenario)")
    p.add_argument("--rate", type=float, default=runtime.DEFAULT_SLEW_RATE,
                   help="arm slew rate limit, m/s")
    p.add_argument("--config", help="run configuration file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="telemetry CSV path")
    p.set_defaults(func=cmd_run_scenario)

    p = sub.add_parser("eval", help="fly one fixed-arm policy deterministically")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--arms", nargs=4, required=True,
                   metavar=("L1", "L2", "L3", "L4"))
    p.add_argument("--config", help="run configuration file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="telemetry CSV path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("print-config", help="dump the effective configuration")
    p.add_argument("--config", help="run configuration file")
    p.set_defaults(func=cmd_print_config)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, CheckpointError, ConfigError, ValueError,
            RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
