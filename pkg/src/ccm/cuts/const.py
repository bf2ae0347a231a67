MAX_CUTS = 64

MAX_CLOSURE_LEAVES = 4096

FEATURE_NAMES: tuple[str, ...] = ("isCon", "dis", "num", "in_degree", "out_degree")

SUPER_SOURCE = "__source__"

SUPER_SINK = "__sink__"
