"""Rate-kernel backends: compiled extension with pure-numpy fallback.

The compiled kernel is preferred when importable; set the environment
variable ``FRENET_ADP_BACKEND`` to ``python`` or ``compiled`` to force a
choice (``compiled`` raises if the extension is unavailable).
"""

from __future__ import annotations

import logging
import os

import numpy as np

from ..errors import NonFiniteRate, PhiOutOfRange
from .pack import NSTATE, POSE, WA, WC, ZETA, KernelPack
from .pybackend import PythonBackend

log = logging.getLogger(__name__)

try:
    from . import _ckernel

    HAVE_COMPILED = True
except ImportError:
    _ckernel = None
    HAVE_COMPILED = False


class CompiledBackend:
    name = "compiled"

    def __init__(self, pack: KernelPack):
        self.pack = pack
        self._kernel = _ckernel.CompiledKernel(pack)

    def rates(self, state: np.ndarray) -> np.ndarray:
        out = np.empty(NSTATE)
        code = self._kernel.rates_into(state, out)
        if code == _ckernel.ERR_PHI:
            raise PhiOutOfRange(f"phi = {state[3]} at rate evaluation")
        if code == _ckernel.ERR_NONFINITE:
            raise NonFiniteRate("non-finite closed-loop rate")
        return out


def select_backend(pack: KernelPack, prefer: str | None = None):
    """Instantiate a rate backend for the given parameter pack."""
    choice = prefer or os.environ.get("FRENET_ADP_BACKEND", "auto")
    if choice not in ("auto", "python", "compiled"):
        raise ValueError(f"unknown backend {choice!r}")
    if choice == "compiled" and not HAVE_COMPILED:
        raise ImportError("compiled kernel requested but the extension is not built")
    if choice in ("auto", "compiled") and HAVE_COMPILED:
        log.info("using compiled rate kernel")
        return CompiledBackend(pack)
    log.info("using pure-numpy rate kernel")
    return PythonBackend(pack)


__all__ = [
    "HAVE_COMPILED",
    "KernelPack",
    "CompiledBackend",
    "PythonBackend",
    "select_backend",
    "NSTATE",
    "ZETA",
    "POSE",
    "WC",
    "WA",
]
