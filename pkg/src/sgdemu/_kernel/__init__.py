"""Switching-core backend selection.

The compiled Cython kernel is used when its extension module is
importable; otherwise the pure-Python twin takes over. Set
SGDEMU_PURE_KERNEL=1 to force the pure kernel, e.g. for benchmarking
or to rule the extension out when debugging.
"""

import os

from . import _switchcore_py

POLICY_FIRST = _switchcore_py.POLICY_FIRST
POLICY_RANDOM = _switchcore_py.POLICY_RANDOM
POLICY_ROUND_ROBIN = _switchcore_py.POLICY_ROUND_ROBIN
FREEZE_NETWORK = _switchcore_py.FREEZE_NETWORK
FREEZE_GATEWAY = _switchcore_py.FREEZE_GATEWAY

if os.environ.get("SGDEMU_PURE_KERNEL") == "1":
    _impl = _switchcore_py
else:
    try:
        from . import _switchcore as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _switchcore_py

run_switching = _impl.run_switching
BACKEND = _impl.BACKEND


def available_backends():
    """Names of the kernel implementations importable in this environment."""
    names = []
    try:
        from . import _switchcore  # noqa: F401
        names.append("compiled")
    except ImportError:
        pass
    names.append("python")
    return names
