"""
Logging setup for the command line entry point
"""
import logging

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(verbosity=0):
    """Configure the root logger once; verbosity 0 = WARNING, 1 = INFO, 2+ = DEBUG"""
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)
    return logging.getLogger("risbeam")
