"""Backend selection for the radial flux-system integrator.

The compiled Cython kernel is preferred; the pure-Python twin is used when
the extension is unavailable or when PLAPLAB_PURE_PYTHON is set.  Both
expose the same ``integrate_radial`` contract and produce matching results.
"""

from __future__ import annotations

import os

from . import _stepper_py

if os.environ.get("PLAPLAB_PURE_PYTHON"):
    _impl = _stepper_py
    BACKEND = "python"
else:
    try:
        from . import _stepper as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = _stepper_py
        BACKEND = "python"

integrate_radial = _impl.integrate_radial

OK = _stepper_py.OK
POSITIVITY_LOST = _stepper_py.POSITIVITY_LOST
STEP_FAILURE = _stepper_py.STEP_FAILURE
NONFINITE = _stepper_py.NONFINITE
MAX_STEPS_EXCEEDED = _stepper_py.MAX_STEPS_EXCEEDED

FAM_ZERO = _stepper_py.FAM_ZERO
FAM_POWER = _stepper_py.FAM_POWER
FAM_LOG_POWER = _stepper_py.FAM_LOG_POWER
FAM_CONSTANT = _stepper_py.FAM_CONSTANT
FAM_TABULATED = _stepper_py.FAM_TABULATED

SGN_PLUS = _stepper_py.SGN_PLUS
SGN_MINUS = _stepper_py.SGN_MINUS
SGN_OSCILLATING = _stepper_py.SGN_OSCILLATING

__all__ = [
    "BACKEND",
    "integrate_radial",
    "OK",
    "POSITIVITY_LOST",
    "STEP_FAILURE",
    "NONFINITE",
    "MAX_STEPS_EXCEEDED",
    "FAM_ZERO",
    "FAM_POWER",
    "FAM_LOG_POWER",
    "FAM_CONSTANT",
    "FAM_TABULATED",
    "SGN_PLUS",
    "SGN_MINUS",
    "SGN_OSCILLATING",
]
