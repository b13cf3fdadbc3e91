"""Exception hierarchy.

Every error carries a CLI exit code: input problems map to 2, numerical
breakdowns to 3.  Dynamical terminations of an orbit (escape, grazing hit,
light-like normal) are errors when raised by a single operation and become
a trajectory status inside :func:`projbilliard.flow.orbit`.
"""


class BilliardError(Exception):
    exit_code = 3
    status = "error"


class InputError(BilliardError, ValueError):
    exit_code = 2
    status = "input-error"


class ParseError(InputError):
    """Syntax error in an expression; ``offset`` is a UTF-8 byte offset."""

    def __init__(self, message, offset):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset


class EvalError(BilliardError, ArithmeticError):
    """Domain violation while evaluating an expression node."""

    status = "eval-error"

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class NumericalFailure(BilliardError):
    status = "NumericalFailure"


class DegenerateMember(InputError):
    """The requested pencil parameter sits on a pole of the pencil.

    ``index`` is the 1-based coordinate whose denominator vanishes.
    """

    def __init__(self, lam, index):
        super().__init__(f"pencil member at lambda={lam!r} is degenerate in coordinate x{index}")
        self.lam = lam
        self.index = index


class SingularPoint(NumericalFailure):
    status = "SingularPoint"


class DegenerateSecondFundamentalForm(NumericalFailure):
    status = "DegenerateSecondFundamentalForm"


class DegenerateField(NumericalFailure):
    status = "DegenerateField"


class NonTransverseField(NumericalFailure):
    """The line field is tangent (or nearly so) to the surface."""

    status = "NonTransverse"


class LightLikeNormal(NonTransverseField):
    """The Q-orthogonal line of the tangent plane lies in the tangent plane."""

    status = "LightLikeNormal"


class GrazingHit(NumericalFailure):
    status = "GrazingHit"


class Escape(NumericalFailure):
    status = "Escape"


class SpectrumMismatch(NumericalFailure):
    status = "SpectrumMismatch"
