"""Exception hierarchy.

Three families map onto the CLI exit codes: invalid input (2),
non-generic geometry (3) and numerical failure (4).
"""


class EquidistError(Exception):
    exit_code = 4


class InvalidInput(EquidistError):
    exit_code = 2


class IrregularCurve(InvalidInput):
    pass


class NonGeneric(EquidistError):
    exit_code = 3


class DegenerateInflexion(NonGeneric):
    pass


class OriginOnInflexion(NonGeneric):
    pass


class TangentCoincidence(NonGeneric):
    pass


class NonGenericBranching(NonGeneric):
    pass


class TangentialRoot(NonGeneric):
    pass


class DegenerateQuartic(NonGeneric):
    pass


class HypothesisViolated(NonGeneric):
    pass


class NumericalFailure(EquidistError):
    exit_code = 4


class LiftInconsistent(NumericalFailure):
    pass


class ContinuationStall(NumericalFailure):
    pass


class ArcAccountingMismatch(NumericalFailure):
    pass


class AtCusp(NumericalFailure):
    pass


class CurvaturePole(NumericalFailure):
    pass
