"""Central finite-difference gradient checking.

The numeric side here is the independent oracle used throughout the test
suite: it only ever evaluates a forward function at perturbed inputs and
never touches the tape's backward pass.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


def finite_difference(f: Callable[[], float], arrays: Sequence[np.ndarray],
                      eps: float = 1e-5) -> list[np.ndarray]:
    """Central-difference gradient of scalar ``f()`` w.r.t. each array.

    Each array is perturbed in place one coordinate at a time and restored,
    so ``f`` must read the live arrays on every call.
    """
    grads = []
    for arr in arrays:
        grad = np.zeros_like(arr)
        flat, gflat = arr.ravel(), grad.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            fp = f()
            flat[i] = orig - eps
            fm = f()
            flat[i] = orig
            gflat[i] = (fp - fm) / (2.0 * eps)
        grads.append(grad)
    return grads


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray,
                       floor: float = 1e-6) -> float:
    """Worst-case |analytic - numeric| / max(|analytic|, |numeric|, floor).

    The floor keeps finite-difference noise on near-zero gradients from
    registering as a relative blow-up.
    """
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    if a.shape != n.shape:
        raise ValueError(f"gradient shapes differ: {a.shape} vs {n.shape}")
    if a.size == 0:
        return 0.0
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / denom))
