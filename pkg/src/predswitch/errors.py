"""Exception hierarchy shared by all predswitch modules."""


class PredswitchError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(PredswitchError):
    """Arguments violate a documented precondition (shape, range, finiteness)."""


class NotSchurStable(PredswitchError):
    """A matrix required to be Schur stable has spectral radius >= 1."""


class NoUniqueLimitCycle(PredswitchError):
    """I - Phi is singular: the periodic fixed point is not unique."""


class MuTooLarge(PredswitchError):
    """The mu-scaled monodromy matrix is not Schur stable."""


class MuInfeasible(PredswitchError):
    """No decay rate mu in (0, 1) exists because the monodromy is unstable."""


class Infeasible(PredswitchError):
    """LMI feasibility search terminated without a strictly feasible point."""

    def __init__(self, message, best_margin=None, assignment=None):
        super().__init__(message)
        self.best_margin = best_margin
        self.assignment = assignment


class InvalidCertificatePair(PredswitchError):
    """Nominal/robust certificates are incompatible (e.g. P_i - R not PD)."""


class Diverged(PredswitchError):
    """Closed-loop state became non-finite during simulation."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ConfigError(PredswitchError):
    """Configuration file missing, unparsable, or semantically invalid."""
