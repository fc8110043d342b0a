#!/usr/bin/env python3
from Scenarios import load_run_config, run_scenario
from Errors import QndError, EXIT_OK, EXIT_FAILURE
from Utils import get_args, get_config
import logging
import sys

logger = logging.getLogger(__name__)


def setup_logging():
    logging.basicConfig(level=getattr(logging, str(get_config("LOG_LEVEL")).upper(), logging.INFO),
            format='%(process)d %(asctime)s - %(name)s - %(levelname)s - \t%(message)s')


def main(argv=None):
    """! Parses the command line, runs one scenario and returns the exit code
    """
    args = get_args(argv)
    setup_logging()

    try:
        config = load_run_config(args.config)
        out = args.out or config.output
        logger.info("Running scenario '%s' from '%s' into '%s'" % (args.scenario, args.config, out))
        run_scenario(args.scenario, config, out, threads=args.threads, render=args.render or None)

    except QndError as e:
        logger.error("%s: %s" % (type(e).__name__, e))
        return e.exit_code
    except KeyboardInterrupt:
        logger.error("Interrupted")
        return EXIT_FAILURE
    except Exception as e:
        logger.exception("Unexpected failure: %s" % (e,))
        return EXIT_FAILURE

    logger.info("Scenario '%s' finished" % (args.scenario,))
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
