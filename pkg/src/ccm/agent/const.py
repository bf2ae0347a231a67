DEFAULT_C = 10

DEFAULT_GAMMA = 0.99

DEFAULT_ALPHA = 1.0

DEFAULT_M = 1.0

DEFAULT_N = 0.1

DEFAULT_OMEGA = 24.0

DEFAULT_UPSILON = 0.1

# fraction of a node's half-range used as the half width of cascaded goals
DEFAULT_SUBGOAL_HALF_WIDTH = 0.05

DEFAULT_DEPTH = 2

DEFAULT_EXPLORE_START = 0.3

DEFAULT_EXPLORE_END = 0.05

DEFAULT_EXPLORE_STEPS = 100_000

DEFAULT_FCR_LR = 1e-2

DEFAULT_FCR_WINDOW = 32

FCR_CLAMP_MARGIN = 1e-6

FCR_DOMAIN_ERROR_MSG = "normalized values must lie in [0, 1]"
