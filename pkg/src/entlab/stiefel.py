"""Gradient descent on the complex Stiefel manifold of isometries.

Shared by the convex-roof solver, the Kraus-mixing search and the Schmidt
number search.  Retraction is sign-fixed QR; gradients are Euclidean
conjugate-Wirtinger gradients projected onto the tangent space; trial steps
use the Barzilai-Borwein spectral length safeguarded by a monotone Armijo
backtracking line search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ARMIJO_C = 1e-4
MIN_STEP = 1e-14
MAX_STEP = 1e3
PLATEAU_WINDOW = 40
PLATEAU_REL = 1e-11


def qf_retract(a: np.ndarray) -> np.ndarray:
    """Q factor of the QR decomposition with positive real diagonal of R."""
    q, r = np.linalg.qr(a)
    diag = np.diagonal(r).copy()
    diag[np.abs(diag) < 1e-300] = 1.0
    return q * (diag / np.abs(diag))


def project_tangent(v: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Project a Euclidean gradient onto the tangent space at isometry v."""
    vhg = v.conj().T @ g
    return g - v @ ((vhg + vhg.conj().T) / 2.0)


@dataclass(frozen=True)
class StiefelResult:
    point: np.ndarray
    value: float
    converged: bool
    stop_reason: str  # 'gradient' | 'stalled' | 'plateau' | 'max_iterations'
    iterations: int
    history: tuple[float, ...]


def minimize_on_stiefel(fun, v0: np.ndarray, *, max_iterations: int = 300,
                        gradient_tolerance: float = 1e-8,
                        callback=None) -> StiefelResult:
    """Minimize fun over isometries by safeguarded spectral descent.

    ``fun(v, need_grad)`` returns ``(value, grad_or_None)``.  Accepted steps
    are monotone by construction (Armijo condition); a collapsed line search
    or a plateau (no measurable progress over a 40-iteration window) counts
    as convergence at a stationary point to working precision.
    """
    v = v0
    value, grad = fun(v, True)
    history = [value]
    step = 1.0
    prev_v = None
    prev_gt = None
    stop = "max_iterations"
    it = 0
    for it in range(1, max_iterations + 1):
        gt = project_tangent(v, grad)
        gn2 = float(np.vdot(gt, gt).real)
        if np.sqrt(gn2) < gradient_tolerance:
            stop = "gradient"
            break
        if it > PLATEAU_WINDOW:
            window_gain = history[-PLATEAU_WINDOW - 1] - value
            if window_gain < PLATEAU_REL * max(1.0, abs(value)):
                stop = "plateau"
                break
        if prev_v is not None:
            # Barzilai-Borwein trial length from ambient differences
            s = v - prev_v
            y = gt - prev_gt
            sy = abs(float(np.vdot(s, y).real))
            if sy > 1e-300:
                step = float(np.vdot(s, s).real) / sy
            else:
                step = step * 2.0
        else:
            step = step * 2.0
        step = float(np.clip(step, MIN_STEP, MAX_STEP))
        accepted = False
        while step >= MIN_STEP:
            vn = qf_retract(v - step * gt)
            new_value, _ = fun(vn, False)
            if new_value <= value - ARMIJO_C * step * gn2:
                accepted = True
                break
            step /= 2.0
        if not accepted:
            stop = "stalled"
            break
        prev_v, prev_gt = v, gt
        v = vn
        value, grad = fun(v, True)
        history.append(value)
        if callback is not None:
            callback(v)
    return StiefelResult(point=v, value=value,
                         converged=stop in ("gradient", "stalled", "plateau"),
                         stop_reason=stop, iterations=it,
                         history=tuple(history))
