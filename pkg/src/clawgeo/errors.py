"""Exception hierarchy. Every library error derives from ``ClawGeoError``."""


class ClawGeoError(Exception):
    pass


class ParseError(ClawGeoError, ValueError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")
        self.message = message


class UnknownVariableError(ParseError):
    def __init__(self, name, line=None, column=None):
        self.name = name
        super().__init__(f"unknown variable {name!r}", line, column)


class DuplicateNameError(ParseError):
    pass


class InvalidEtaError(ParseError):
    pass


class EvaluationSingularError(ClawGeoError, ArithmeticError):
    """Division by zero (or a non-finite value) while evaluating."""

    def __init__(self, subexpression, point=None):
        self.subexpression = subexpression
        self.point = point
        at = f" at {[float(x) for x in point]}" if point is not None else ""
        super().__init__(f"singular evaluation of {subexpression}{at}")


class NotStrictlyHyperbolicError(ClawGeoError):
    pass


class SingularPencilError(ClawGeoError):
    pass


class DegenerateInputError(ClawGeoError, ValueError):
    pass


class SingularDensityJacobianError(ClawGeoError):
    pass


class ReciprocalSingularError(ClawGeoError):
    """BM - AN vanishes at a sample point."""


class DependentDensitiesError(ClawGeoError, ValueError):
    pass


class DegenerateHypersurfaceError(ClawGeoError):
    pass


class DualUndefinedError(ClawGeoError):
    pass


class CanonicalSpeedError(ClawGeoError):
    pass


class DependentLawsError(ClawGeoError, ValueError):
    pass


class CoincidentPointsError(ClawGeoError, ValueError):
    pass
