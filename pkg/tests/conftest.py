import logging

import pytest


@pytest.fixture(autouse=True)
def _restore_package_logger():
    """`cli.main` installs its own handler and stops propagation; undo that per test."""
    package_logger = logging.getLogger("clarify_timing")
    handlers = list(package_logger.handlers)
    level, propagate = package_logger.level, package_logger.propagate
    yield
    package_logger.handlers[:] = handlers
    package_logger.setLevel(level)
    package_logger.propagate = propagate
