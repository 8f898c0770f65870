"""Exception hierarchy.

Two families matter to callers: :class:`InputError` for malformed or
mismatched inputs and :class:`InfeasibleError` for mathematically
ill-posed requests (infinite log-partition, unattainable budget, support
violations).  The CLI maps them to exit codes 1 and 2.
"""


class TiltgapError(Exception):
    """Base class for every error raised by this package."""


class InputError(TiltgapError, ValueError):
    pass


class InfeasibleError(TiltgapError, ArithmeticError):
    pass


class NegativeWeight(InputError):
    pass


class NonFiniteWeight(InputError):
    pass


class ZeroTotalMass(InputError):
    pass


class LengthMismatch(InputError):
    pass


class DuplicateLabel(InputError):
    pass


class AlphabetMismatch(InputError):
    pass


class UnknownModel(InputError):
    pass


class WeightOutOfRange(InputError):
    pass


class NonPositiveBeta(InputError):
    pass


class NonPositiveLambda(InputError):
    pass


class InfeasibleTemperature(InfeasibleError):
    pass


class GammaInfeasible(InfeasibleError):
    def __init__(self, gamma, gamma_sup):
        self.gamma = gamma
        self.gamma_sup = gamma_sup
        super().__init__(
            f"budget gamma={gamma!r} is not attainable; "
            f"gamma must be below gamma_sup={gamma_sup!r}"
        )


class ConstantLossNonzeroGamma(InfeasibleError):
    pass


class DegenerateBeta(InfeasibleError):
    pass


class NotAbsContinuous(InfeasibleError):
    def __init__(self, message, point=None):
        self.point = point
        super().__init__(message)


class InfiniteLoss(InfeasibleError):
    pass


class InfiniteLautum(InfeasibleError):
    pass


class EnumerationCapExceeded(InfeasibleError):
    def __init__(self, required, cap):
        self.required = required
        self.cap = cap
        super().__init__(
            f"exhaustive enumeration needs {required} datasets, above the cap "
            f"of {cap}; reduce n or the alphabet size"
        )


class NonConvergence(TiltgapError, RuntimeError):
    pass
