"""Exception hierarchy shared by all modules."""


class PentablancError(Exception):
    """Base class; every error carries a machine-readable code."""

    code = "error"

    def to_dict(self):
        return {"error": self.code, "message": str(self)}


class NonConvergence(PentablancError):
    code = "non_convergence"


class OrderBoundExceeded(PentablancError):
    code = "order_bound_exceeded"


class NotIsometry(PentablancError):
    code = "not_isometry"


class Indeterminacy(PentablancError):
    code = "indeterminacy"

    def __init__(self, msg, pair=None):
        super().__init__(msg)
        self.pair = pair


class OnCommonLine(PentablancError):
    code = "on_common_line"


class ChartDegenerate(PentablancError):
    code = "chart_degenerate"


class AdmissibilityFailure(PentablancError):
    code = "admissibility_failure"


class DegenerateAxis(PentablancError):
    code = "degenerate_axis"


class NotRealLocus(PentablancError):
    code = "not_real_locus"


class InflexionPoint(PentablancError):
    code = "inflexion_point"


class BaseLocus(PentablancError):
    code = "base_locus"


class TangentLine(PentablancError):
    code = "tangent_line"


class InconsistentConfig(PentablancError):
    code = "inconsistent_config"


class IntertwiningFailure(PentablancError):
    code = "intertwining_failure"


class Budget(PentablancError):
    code = "budget"


class GridMismatch(PentablancError):
    code = "grid_mismatch"


class ValidationError(PentablancError):
    code = "validation"


class ErrorCeiling(PentablancError):
    code = "error_ceiling"
