"""Backend selection for the Monte Carlo kernels.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``ALLPAYSEARCH_PURE_PYTHON`` is set to a non-empty
value other than ``0``, the numpy implementation is used.
"""
import os

from . import _kernels_py

FORMAT_CODES = {"allpay": 0, "first": 1, "second": 2, "standard": 1}


def _load():
    if os.environ.get("ALLPAYSEARCH_PURE_PYTHON", "0") not in ("", "0"):
        return _kernels_py, "python"
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        return _kernels_py, "python"
    return _kernels, "compiled"


_impl, BACKEND = _load()

draw_bids = _impl.draw_bids
play_stores = _impl.play_stores


def get_backend(name):
    """Return the kernel module for ``"compiled"`` or ``"python"``."""
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from . import _kernels  # type: ignore[attr-defined]

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
