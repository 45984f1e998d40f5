"""Exception types shared by the modules.

The CLI maps each class to an exit code through ``exit_code``.
"""


class ApollonianError(Exception):
    exit_code = 1


class ConfigError(ApollonianError):
    exit_code = 2


class BudgetError(ApollonianError):
    exit_code = 3


class NumericError(ApollonianError):
    exit_code = 4


# geometry
class CenterSingularity(NumericError):
    pass


class PoleAtInput(NumericError):
    pass


class IdentityMap(NumericError):
    pass


class ParabolicDegenerate(NumericError):
    pass


class DegenerateTriple(ConfigError):
    pass


# enumeration
class BudgetExceeded(BudgetError):
    pass


class IncompleteEnumeration(BudgetError):
    pass


# thermodynamic formalism
class NonSummable(NumericError):
    pass


class NonRegular(NumericError):
    pass


class NoConvergence(NumericError):
    pass


class InsufficientWitnesses(ConfigError):
    pass


class NotPeriodic(ConfigError):
    pass


class TailNotBounded(NumericError):
    pass


class InconsistentVerdict(NumericError):
    pass


# content and number theory
class PoleInDenominator(NumericError):
    pass


class OutOfRange(ConfigError):
    pass


class DomainError(ConfigError):
    pass


class NoRoot(NumericError):
    pass


class ConditionViolated(ConfigError):
    pass
