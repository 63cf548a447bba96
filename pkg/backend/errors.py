"""
Exception hierarchy shared by the library, the CLI and the HTTP service.

Each class carries the CLI exit code and the HTTP status it maps to.
"""


class CellipticError(Exception):
    exit_code = 1
    http_status = 400

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class InputParseError(CellipticError):
    """Unreadable or malformed operator, grid, measure or region input"""
    exit_code = 1
    http_status = 400


class InputInvariantError(CellipticError):
    """Input parsed fine but violates an invariant of its type"""
    exit_code = 2
    http_status = 422


class OperatorError(InputInvariantError):
    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("invalid operator: " + "; ".join(self.violations))


class DimensionMismatchError(InputInvariantError):
    pass


class LadderError(InputInvariantError):
    pass


class RegionError(InputInvariantError):
    pass


class OrderMismatchError(InputInvariantError):
    pass


class NumericalError(CellipticError):
    exit_code = 3
    http_status = 500


class SingularGramError(NumericalError):
    pass


class GridTooSmallError(NumericalError):
    pass
