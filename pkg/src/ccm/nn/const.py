LOG_STD_MIN = -5.0

LOG_STD_MAX = 2.0

DEFAULT_HIDDEN: tuple[int, ...] = (64, 64)

DEFAULT_RECURRENT_HIDDEN = 32

DEFAULT_POLICY_LR = 3e-4

DEFAULT_VALUE_LR = 1e-3

DEFAULT_MOMENTUM = 0.9

DEFAULT_ENTROPY_COEF = 0.01

DEFAULT_MAX_GRAD_NORM = 1.0

CHECKPOINT_VERSION = 1

CHECKPOINT_META_KEY = "__meta__"
