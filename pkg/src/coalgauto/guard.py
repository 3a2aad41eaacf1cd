"""Size cap for exponential enumerations."""

import os
from contextlib import contextmanager
from contextvars import ContextVar

from .errors import BlowupGuard

DEFAULT_CAP = 2 ** 20
ENV_VAR = "COALGAUTO_CAP"

_override = ContextVar("coalgauto_cap", default=None)


def blowup_cap():
    cap = _override.get()
    if cap is not None:
        return cap
    env = os.environ.get(ENV_VAR)
    if env:
        return int(env)
    return DEFAULT_CAP


@contextmanager
def cap_override(cap):
    token = _override.set(int(cap))
    try:
        yield
    finally:
        _override.reset(token)


def check_size(count, what):
    cap = blowup_cap()
    if count > cap:
        raise BlowupGuard(f"{what}: {count} values exceed the cap of {cap}")
