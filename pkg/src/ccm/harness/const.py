from ccm.envs import ScenarioName

DEFAULT_BUDGET = 200_000

SCENARIO_BUDGETS: dict[ScenarioName, int] = {ScenarioName.glucose: 500_000}

DEFAULT_SEEDS: tuple[int, ...] = (0, 1, 2, 3, 4)

DEFAULT_EVAL_EPISODES = 20

DEFAULT_BASELINE_EPISODES = 20

DEFAULT_COHORT_SIZE = 30

DEFAULT_NOISE_TRIGGER_PROB = 0.05

FINAL_EPISODES = 100

REPORT_RTOL = 1e-9

CONFIG_FILE_NAME = "config.json"

REPORT_FILE_NAME = "report.json"

EPISODE_LOG_FILE_NAME = "episode_log.csv"

EVAL_LOG_FILE_NAME = "eval_log.csv"

METRICS_PER_SEED_FILE_NAME = "metrics_per_seed.csv"

METRICS_AGGREGATE_FILE_NAME = "metrics_aggregate.csv"

CURVES_LOW_FILE_NAME = "curves_low.csv"

CURVES_HIGH_FILE_NAME = "curves_high.csv"

CURVES_FCR_FILE_NAME = "curves_fcr.csv"

CUT_HISTOGRAM_FILE_NAME = "cut_histogram.csv"

TIR_TABLE_FILE_NAME = "tir_table.csv"

COHORT_LOG_FILE_NAME = "cohort_log.csv"

COMPARE_FILE_NAME = "compare.csv"

JOBS_FILE_NAME = "jobs.sqlite"

CHECKPOINTS_DIR_NAME = "checkpoints"

SEED_LOGS_DIR_NAME = "logs"

SEEDS_EMPTY_ERROR_MSG = "seeds must be a non-empty list of distinct integers"

BUDGET_NEGATIVE_ERROR_MSG = "budget must be >= 0"

AGENT_KIND_ERROR_MSG = "agent must be one of: ccm, flat"

SCENARIO_MISMATCH_ERROR_MSG = "reports were produced on different scenarios"

SEEDS_MISMATCH_ERROR_MSG = "reports were produced with different seeds"
