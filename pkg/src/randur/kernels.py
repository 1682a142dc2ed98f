"""Backend selection for the hot batch kernel.

The compiled extension is used when it imports; otherwise the numpy
implementation.  Setting ``RANDUR_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _lrt_py

try:
    if os.environ.get("RANDUR_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("compiled kernel disabled by RANDUR_PURE_PYTHON")
    from . import _lrt_kernel as _compiled
except ImportError:
    _compiled = None

BACKENDS = {"python": _lrt_py.lrt_batch}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled.lrt_batch

DEFAULT_BACKEND = "compiled" if _compiled is not None else "python"


def lrt_batch(y, mu1, mu2, sigma, p1, p2, p1_tail, p2_tail, paper_init=False,
              renorm_every=1, backend=None):
    name = backend or DEFAULT_BACKEND
    if renorm_every != 1:
        name = "python"
    try:
        fn = BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
    return fn(y, mu1, mu2, sigma, p1, p2, p1_tail, p2_tail, paper_init, renorm_every)
