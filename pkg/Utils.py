"""! @brief This module contains utilities used by the other modules. """
##
# @file Utils.py
#
# @brief This module contains utilities used by the other modules, such as
#        reading the global configuration, parsing the command line and
#        formatting numbers for the data files
#
import os
import math
import numbers
import yaml
import argparse

from Errors import ConfigError

SCENARIOS = ("singlemode", "sweep", "wigner", "cascade", "multimode")

_CONFIG_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), "config.yaml")

__cfg = None
def get_config(attribute):
    """! Returns the value of a global configuration attribute from 'config.yaml'
    @param attribute  Name of the attribute
    @return The configured value
    """
    global __cfg

    if __cfg is None:
        with open(_CONFIG_PATH) as f:
            __cfg = yaml.load(f, Loader=yaml.FullLoader)

    if attribute in __cfg:
        return __cfg[attribute]
    raise ConfigError("Unknown config attribute: '%s'" % (attribute,))


def config_or(value, attribute):
    """! Returns 'value' unless it is None, in which case the configured default is used
    """
    return get_config(attribute) if value is None else value


LO_NOTE = """\
Detection displaces the probe by the local oscillator alpha_p * exp(-gamma_p * z / 2),
the input amplitude damped by the probe loss, so the vacuum branch stays dark.
Set "detection": {"calibrate_displacement": false} in the run configuration
to displace by alpha_p exactly.
"""


def get_args(argv=None):
    """! Prepares and parses the command arguments
    @param argv  Optional argument list, defaults to sys.argv
    """
    parser = argparse.ArgumentParser(prog="qnd",
            description="Nondestructive single-photon detection simulator",
            epilog=LO_NOTE, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("scenario", choices=SCENARIOS, help="The scenario to run")
    parser.add_argument("--config", required=True, help="Path to the JSON run configuration")
    parser.add_argument("--out", required=True, help="Output directory, created if missing")
    parser.add_argument("--threads", type=int, default=1, help="Worker processes for sweep points")
    parser.add_argument("--render", action="store_true", help="Also render maps as PNG images")
    return parser.parse_args(argv)


def format_float(value):
    """! Shortest round-trip representation of a real number
    """
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)


def format_value(value):
    """! Formats a CSV cell: floats round-trip exactly, None is an empty cell
    """
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, numbers.Integral):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    try:
        return format_float(value)
    except (TypeError, ValueError):
        return str(value)
