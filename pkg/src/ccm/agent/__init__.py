from ._enums import FcrLossKind, LowLevelAction
from ._utils import avg_low_reward, box_reward, box_reward_literal, encode, high_reward
from .base import GoalBox, HighLevelTransition, HyperParams, LowLevelTransition
from .ccm import CcmAgent, cascade_goals
from .exceptions import ChainError
from .fcr import FcrModule, RunningRange, fcr_loss, fcr_loss_grad, fcr_predict
from .flat import FlatAgent, RandomAgent
from .trainer import SeedRun, TrainResult, global_goal, make_agent, rollout, run_episode, to_frame, train, train_seed

__all__ = (
    "CcmAgent",
    "ChainError",
    "FcrLossKind",
    "FcrModule",
    "FlatAgent",
    "GoalBox",
    "HighLevelTransition",
    "HyperParams",
    "LowLevelAction",
    "LowLevelTransition",
    "RandomAgent",
    "RunningRange",
    "SeedRun",
    "TrainResult",
    "avg_low_reward",
    "box_reward",
    "box_reward_literal",
    "cascade_goals",
    "encode",
    "fcr_loss",
    "fcr_loss_grad",
    "fcr_predict",
    "global_goal",
    "high_reward",
    "make_agent",
    "rollout",
    "run_episode",
    "to_frame",
    "train",
    "train_seed",
)
