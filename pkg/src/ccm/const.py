CYCLE_ERROR_MSG = "edges contain a cycle"

ARITY_ERROR_MSG = "equation parent count does not match the adjacency"

INTERVENTION_ERROR_MSG = "only modifiable nodes can be intervened"

HILL_DOMAIN_ERROR_MSG = "hill regulation is defined for x >= 0 only"

NO_PATH_ERROR_MSG = "sinks are unreachable from sources"

BOUNDARY_ERROR_MSG = "cut and boundary sets intersect"

CHAIN_ERROR_MSG = "view boundaries do not line up"

NON_FINITE_LOSS_ERROR_MSG = "non-finite loss, update skipped"

CONFIG_HASH_LENGTH = 16

DEFAULT_LOG_LEVEL = "INFO"

LOG_LEVEL_ENV_VAR = "CCM_LOG_LEVEL"

EPISODE_LOG_COLUMNS: tuple[str, ...] = (
    "seed",
    "episode",
    "t",
    "level",
    "view",
    "cut_id",
    "goal_center",
    "action",
    "reward",
    "target_value",
    "loss_policy",
    "loss_value",
    "loss_fcr",
)
