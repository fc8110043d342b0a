"""! @brief Exceptions raised by the simulator and the exit codes they map to. """
##
# @file Errors.py
#
# @brief Exception hierarchy shared by all modules. The command line
#        driver maps every class to an exit code:
#        0 success, 2 configuration error, 3 numerical-tolerance failure.
#

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class QndError(Exception):
    """! Base class of all simulator errors """
    exit_code = EXIT_FAILURE


class ConfigError(QndError, ValueError):
    """! Invalid or unknown configuration entries """
    exit_code = EXIT_CONFIG


class InvalidDimensionError(QndError, ValueError):
    """! A Fock truncation below two levels or a malformed dimension list """
    exit_code = EXIT_CONFIG


class SpaceMismatchError(QndError, ValueError):
    """! Operators, states or fields defined on different spaces or grids """
    exit_code = EXIT_CONFIG


class TruncationError(QndError, ValueError):
    """! The truncated Fock space cannot hold the requested state

    @param message       Human readable description
    @param required_dim  Smallest dimension that would satisfy the tolerance
    """
    exit_code = EXIT_CONFIG

    def __init__(self, message, required_dim=None):
        super().__init__(message)
        self.required_dim = required_dim


class DomainError(QndError, ValueError):
    """! A wave packet does not fit into the numerical domain """
    exit_code = EXIT_CONFIG


class CflError(QndError, ValueError):
    """! The time step violates the advection stability limit """
    exit_code = EXIT_CONFIG


class NumericalError(QndError, ArithmeticError):
    """! Base class of failures detected while integrating """
    exit_code = EXIT_NUMERICAL


class StiffnessError(NumericalError):
    """! Step-size refinement underflowed before the audit was satisfied """


class ToleranceError(NumericalError):
    """! A conserved quantity or state invariant drifted beyond tolerance """


class DetectionError(QndError, ValueError):
    """! Invalid arguments to the detection figures of merit """
    exit_code = EXIT_CONFIG
