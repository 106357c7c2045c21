"""Exception types shared across the package.

Exit-code mapping used by the command line front end:
ConfigError and ModelContractError are validation failures (exit 2),
NumericalError is a solver failure on valid input (exit 3).
"""


class NlpfError(Exception):
    """Base class for package errors."""


class ConfigError(NlpfError):
    """Invalid configuration, file format, or argument."""


class ModelContractError(NlpfError):
    """A constitutive model or operator input violates a stated contract.

    ``violation`` carries a short machine-readable name of the broken
    contract item (for example ``"c4"`` or ``"k-bounds"``).
    """

    def __init__(self, violation: str, message: str = ""):
        self.violation = violation
        super().__init__(f"{violation}: {message}" if message else violation)


class NumericalError(NlpfError):
    """An iteration failed to converge or a solution left its admissible set."""


class ModeError(ConfigError):
    """Operation requested in a mode whose preconditions do not hold."""
