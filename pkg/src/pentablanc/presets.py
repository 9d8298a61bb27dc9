"""Reference configurations used by the CLI defaults and the acceptance suite."""
from .blancgeom import CubicCurve

# generic admissible side lengths: smooth surface, all five distinct
GENERIC_LENGTHS = ("1", "13/10", "17/10", "21/10", "13/5")

# y^2 = x^3 - x + 1 has one real component
CUBIC = (0, -1, 1)
# four real points (x, sign of y) satisfying Hyp1-4 on CUBIC
CUBIC_QS = ((-1.0, 1), (0.5, 1), (1.5, -1), (2.5, 1))


def blanc_reference():
    C = CubicCurve(*CUBIC)
    return C, [C.point(x, s) for x, s in CUBIC_QS]
