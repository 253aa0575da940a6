# Bernoulli degrees with stored closed forms
SUPPORTED_DEGREES = (2, 4, 6, 8)

# Smoothness values for which CBC and the circulant system have closed forms
CLOSED_FORM_ALPHAS = (2, 4)

DEFAULT_SERIES_TRUNCATION = 10_000
NULL_SPACE_RTOL = 1e-12

# scipy's Sobol' direction numbers cover this many dimensions
SOBOL_MAX_DIM = 21201

DEFAULT_SHIFTS = 100
DEFAULT_S_INITIAL = 8
DEFAULT_S_MAX = 512
DEFAULT_CI_RATIO = 0.1
CI_LEVEL = 0.95

# desk-scale cap on the sample size of the preset grids
DESK_MAX_M = 10**6

WEIGHT_PRESETS = ("power", "unit")

OUTDIR_ENVVAR = "KORD_OUTDIR"
DEFAULT_OUTDIR = "results"

# scale of the rate-optimal regularization used by the fig7 preset
RATE_LAMBDA_SCALE = {2: 1000.0, 4: 5000.0}

REPORT_COLUMNS = [
    "d",
    "alpha",
    "N",
    "lambda",
    "M",
    "S_used",
    "mise",
    "ci_half_width",
    "integral_mean",
    "seed",
    "wall_time_s",
]
