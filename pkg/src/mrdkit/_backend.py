"""Selects the compiled core or the numpy fallback.

The compiled module is used when it imports cleanly, unless the environment
variable ``MRDKIT_BACKEND`` is set to ``python``. Setting it to ``cython``
makes a missing extension an import error instead of a silent fallback.
"""
import os
from contextlib import contextmanager

from mrdkit import _fallback

try:
    from mrdkit import _core
except ImportError:  # extension not built
    _core = None

_BACKENDS = {"python": _fallback}
if _core is not None:
    _BACKENDS["cython"] = _core


def available():
    return sorted(_BACKENDS)


def get(name):
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ImportError(f"mrdkit backend {name!r} is not available; have {available()}") from None


def _initial():
    want = os.environ.get("MRDKIT_BACKEND", "auto").strip().lower()
    if want in ("", "auto"):
        return _BACKENDS.get("cython", _fallback)
    return get(want)


_active = _initial()


def current():
    """The backend module in use."""
    return _active


@contextmanager
def use(name):
    """Temporarily switch backends (process-wide; for tests and benchmarks)."""
    global _active
    previous = _active
    _active = get(name)
    try:
        yield _active
    finally:
        _active = previous
