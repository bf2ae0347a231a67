PARENTLESS_NOISE_SD = 0.1

MIN_MAGNITUDE_FACTOR = 10.0

DEFAULT_MAGNITUDE_FACTOR = 12.0

DEFAULT_BOUNDS: tuple[float, float] = (-1.0, 1.0)

GRAPH_SPEC_VERSION = 1
