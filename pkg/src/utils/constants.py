from fractions import Fraction

## One machine word per EventSet in the default profile; the wide profile lifts it.
MAX_ATOMS = 64

## enumerate_members refuses algebras with more blocks than this
ENUMERATION_LIMIT = 20

## Total nontrivial choices the brute-force oracle may visit
BRUTEFORCE_BUDGET = 2**20

DEFAULT_WORKERS = 1

# CLT precondition for PerCoordinate sequences: lindeberg_sum(n, eps) <= threshold
LINDEBERG_CHECK_EPSILON = Fraction(1, 10)
LINDEBERG_THRESHOLD = Fraction(1, 20)

## log log n must be comfortably positive before the LIL statistic means anything
LIL_MIN_HORIZON = 100

KOLMOGOROV_TOLERANCE = Fraction(1, 10**6)
KOLMOGOROV_MAX_TERMS = 10**5

# checkpoints per decade for trajectories
CHECKPOINTS_PER_DECADE = 10

# points where the CLT report tabulates the empirical CDF next to the normal CDF
ECDF_GRID = (-3.0, -2.5, -2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0)

FLOAT_SIGNIFICANT_DIGITS = 12

PROBLEM_FILE_VERSION = "1"

BUNDLED_EXAMPLES = {
    "coin": "coin.json",
    "limits": "limits.json",
}

EXIT_ALL_PASS = 0
EXIT_FALSE_VERDICT = 1
EXIT_ERROR = 2
