"""Kernel backend selection.

The compiled extension is preferred when it importable; set
``WEILCALC_BACKEND=py`` or ``WEILCALC_BACKEND=c`` to force a choice
(forcing ``c`` raises if the extension was not built).
"""

import os

_forced = os.environ.get("WEILCALC_BACKEND")

if _forced == "py":
    from . import _kernel_py as kernel
elif _forced == "c":
    from . import _kernel as kernel  # type: ignore[attr-defined]
else:
    try:
        from . import _kernel as kernel  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernel_py as kernel

BACKEND_NAME = kernel.BACKEND
