import os
import unittest

_TRUE = {'y', 'yes', 't', 'true', 'on', '1'}
_FALSE = {'n', 'no', 'f', 'false', 'off', '0', ''}


def parse_flag_from_env(key, default=False):
    """Reads a yes/no environment flag; unset means `default`."""
    if key not in os.environ:
        return default
    value = os.environ[key].strip().lower()
    if value in _TRUE:
        return True
    if value in _FALSE:
        return False
    raise ValueError(f"If set, {key} must be yes or no, got {os.environ[key]!r}.")


RUN_SLOW = parse_flag_from_env('RUN_SLOW', default=False)


def slow(test_case):
    """Skips extrapolation-heavy and large Monte Carlo tests unless RUN_SLOW is set."""
    return unittest.skipUnless(RUN_SLOW, "slow numerical test, set RUN_SLOW=1 to run")(test_case)
