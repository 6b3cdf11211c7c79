"""Blended deep-RL flight control for an arm-length-morphing quadrotor.

Per-mode optimal controllers are trained with PPO at the 16 vertex modes of
the arm-length hypercube; online, the controller for an arbitrary arm
configuration is the convex combination of the vertex policies under
maximum-norm weights.
"""

from .ccomb import (VertexSet, WeightReport, normalize_lengths, objective,
                    solve_weights, solve_weights_sqp, verify_weights)
from .checkpoint import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint
from .config import ConfigError, RunConfig, default_config, dump_config, \
    load_config, parse_config
from .dynamics import (QuadParams, RigidState, forces_torques, inertia_from_arms,
                       inertia_rate, integrate_step, rotation_matrix,
                       state_derivative)
from .env import (FigureEightTrajectory, QuadrotorEnv, RewardParams, StepResult,
                  power_metric, reward_of)
from .net import (AdamState, MlpSpec, NetParams, adam_step, backward,
                  clip_grad_norm, digamma, forward, init_orthogonal, log_gamma)
from .policy import ActionSample, BetaParams, entropy, log_density, mean_action, sample
from .ppo import (ReplayBuffer, RunningScale, TrainConfig, Transition,
                  actor_objective, compute_gae, critic_loss, train, update)
from .runtime import (ArmCommandSchedule, PolicyBank, ScenarioResult, cc_action,
                      evaluate_policy, ramp_arm_lengths, run_scenario)

__version__ = "0.1.0"
