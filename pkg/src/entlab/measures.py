"""SL-invariant pure-state entanglement measures.

Every measure here has the form ``scale * |f(psi)|**(2/degree)`` where ``f``
is a polynomial of the stated degree in the amplitudes, invariant under
determinant-1 local transformations.  With the exponent 2/degree the value is
homogeneous of degree 1 in the density operator, which is what makes the
evolution identities of the channel module exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .linalg import DensityMatrix, LocalDims, PureState, _as_local_dims

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)

# sigma_y (x) sigma_y, the symmetric bilinear form behind the two-qubit
# concurrence.  Real-valued: [[0,0,0,-1],[0,0,1,0],[0,1,0,0],[-1,0,0,0]].
_YY = np.kron(SIGMA_Y, SIGMA_Y).real.astype(np.complex128)

_FD_STEP = 1e-6


@dataclass(frozen=True)
class Measure:
    """An SL-invariant measure ``scale * |poly|**(2/degree)``.

    ``poly`` maps an amplitude vector to a complex number and must be
    homogeneous of ``degree`` in the amplitudes.  ``poly_grad`` returns the
    holomorphic gradient of ``poly``; when absent it is approximated by
    central finite differences.  The batch variants take an (m, D) stack of
    amplitude rows; they exist so optimizers can evaluate whole ensembles in
    one numpy call.
    """

    name: str
    dims: LocalDims
    degree: int
    scale: float
    poly: Callable[[np.ndarray], complex]
    poly_grad: Callable[[np.ndarray], np.ndarray] | None = None
    poly_batch: Callable[[np.ndarray], np.ndarray] | None = None
    poly_grad_batch: Callable[[np.ndarray], np.ndarray] | None = None

    def check_dims(self, dims) -> None:
        dims = _as_local_dims(dims)
        if dims.dims != self.dims.dims:
            raise ValueError(
                f"measure {self.name!r} requires local dimensions {self.dims.dims}, "
                f"got {dims.dims}"
            )

    def eval_poly_batch(self, rows: np.ndarray) -> np.ndarray:
        if self.poly_batch is not None:
            return self.poly_batch(rows)
        return np.array([self.poly(r) for r in rows], dtype=np.complex128)

    def eval_grad_batch(self, rows: np.ndarray) -> np.ndarray:
        if self.poly_grad_batch is not None:
            return self.poly_grad_batch(rows)
        if self.poly_grad is not None:
            return np.stack([self.poly_grad(r) for r in rows])
        return np.stack([_fd_poly_grad(self.poly, r) for r in rows])


def _fd_poly_grad(poly, psi: np.ndarray) -> np.ndarray:
    """Central-difference holomorphic gradient (real step, step 1e-6)."""
    out = np.empty(psi.size, dtype=np.complex128)
    for j in range(psi.size):
        e = np.zeros(psi.size, dtype=np.complex128)
        e[j] = _FD_STEP
        out[j] = (poly(psi + e) - poly(psi - e)) / (2.0 * _FD_STEP)
    return out


def concurrence() -> Measure:
    """Wootters concurrence of two qubits, |<psi*| sigma_y x sigma_y |psi>|."""
    def poly(psi):
        return complex(psi @ _YY @ psi)

    def grad(psi):
        return 2.0 * (_YY @ psi)

    def poly_batch(rows):
        return np.einsum("ij,jk,ik->i", rows, _YY, rows)

    def grad_batch(rows):
        return 2.0 * rows @ _YY.T

    return Measure("concurrence", LocalDims((2, 2)), degree=2, scale=1.0,
                   poly=poly, poly_grad=grad,
                   poly_batch=poly_batch, poly_grad_batch=grad_batch)


def _adjugate(m: np.ndarray) -> np.ndarray:
    """Adjugate matrix, satisfying adj(m) @ m = det(m) I."""
    d = m.shape[0]
    if d == 1:
        return np.ones((1, 1), dtype=np.complex128)
    if d == 2:
        return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])
    det = np.linalg.det(m)
    smin = np.linalg.svd(m, compute_uv=False)[-1]
    if smin > 1e-8 * max(1.0, np.abs(m).max()):
        return det * np.linalg.inv(m)
    cof = np.empty((d, d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            minor = np.delete(np.delete(m, i, axis=0), j, axis=1)
            cof[i, j] = (-1) ** (i + j) * np.linalg.det(minor)
    return cof.T


def g_concurrence(d: int) -> Measure:
    """G-concurrence on d x d bipartite states, d * |det M|^(2/d).

    M is the d x d coefficient matrix of the state.  The scale d makes the
    maximally entangled state score 1, and d=2 reproduces the concurrence.
    """
    if d < 2:
        raise ValueError("G-concurrence needs local dimension >= 2")

    def poly(psi):
        return complex(np.linalg.det(psi.reshape(d, d)))

    def grad(psi):
        # d(det M)/dM = adj(M)^T, flattened back to amplitude order
        return _adjugate(psi.reshape(d, d)).T.reshape(-1)

    def poly_batch(rows):
        return np.linalg.det(rows.reshape(-1, d, d))

    def grad_batch(rows):
        return np.stack([grad(r) for r in rows])

    return Measure(f"g_concurrence({d})", LocalDims((d, d)), degree=d,
                   scale=float(d), poly=poly, poly_grad=grad,
                   poly_batch=poly_batch, poly_grad_batch=grad_batch)


# 2x2x2 hyperdeterminant in Cayley form.  With amplitudes indexed a[ijk] ->
# a[4i+2j+k], the four "pair products" are a0*a7, a1*a6, a2*a5, a3*a4 and
#   d1 = sum of squared pairs, d2 = sum of the six cross products,
#   d3 = a0*a3*a5*a6 + a1*a2*a4*a7,
#   Det = d1 - 2*d2 + 4*d3 = 2*sum(p^2) - (sum p)^2 + 4*d3.
_PAIR_PARTNER = np.array([7, 6, 5, 4, 3, 2, 1, 0])
_PAIR_SLOT = np.array([0, 1, 2, 3, 3, 2, 1, 0])
_QUAD = {0: (3, 5, 6), 3: (0, 5, 6), 5: (0, 3, 6), 6: (0, 3, 5),
         1: (2, 4, 7), 2: (1, 4, 7), 4: (1, 2, 7), 7: (1, 2, 4)}


def _hyperdet_batch(rows: np.ndarray) -> np.ndarray:
    a = rows
    p = np.stack([a[:, 0] * a[:, 7], a[:, 1] * a[:, 6],
                  a[:, 2] * a[:, 5], a[:, 3] * a[:, 4]], axis=1)
    s = p.sum(axis=1)
    d3 = a[:, 0] * a[:, 3] * a[:, 5] * a[:, 6] + a[:, 1] * a[:, 2] * a[:, 4] * a[:, 7]
    return 2.0 * (p * p).sum(axis=1) - s * s + 4.0 * d3


def _hyperdet_grad(psi: np.ndarray) -> np.ndarray:
    a = psi
    p = np.array([a[0] * a[7], a[1] * a[6], a[2] * a[5], a[3] * a[4]])
    s = p.sum()
    out = np.empty(8, dtype=np.complex128)
    for m in range(8):
        i, j, k = _QUAD[m]
        out[m] = (4.0 * p[_PAIR_SLOT[m]] - 2.0 * s) * a[_PAIR_PARTNER[m]] \
            + 4.0 * a[i] * a[j] * a[k]
    return out


def sqrt_three_tangle() -> Measure:
    """Square root of the three-tangle, sqrt(4 |Det222|), on three qubits."""
    def poly(psi):
        return complex(_hyperdet_batch(psi.reshape(1, 8))[0])

    def grad_batch(rows):
        return np.stack([_hyperdet_grad(r) for r in rows])

    return Measure("sqrt_three_tangle", LocalDims((2, 2, 2)), degree=4,
                   scale=2.0, poly=poly, poly_grad=_hyperdet_grad,
                   poly_batch=_hyperdet_batch, poly_grad_batch=grad_batch)


def polynomial_measure(poly, degree: int, dims, grad=None,
                       name: str = "polynomial") -> Measure:
    """Wrap a user-supplied homogeneous SL-invariant polynomial.

    ``degree`` counts the degree in the amplitudes.  SL-invariance of ``poly``
    is the caller's responsibility; :func:`sl_invariance_deviation` gives a
    numerical spot check.
    """
    if degree < 1:
        raise ValueError("polynomial degree must be >= 1")
    return Measure(name, _as_local_dims(dims), degree=int(degree), scale=1.0,
                   poly=poly, poly_grad=grad)


def _value_from_poly(measure: Measure, f: complex) -> float:
    return measure.scale * abs(f) ** (2.0 / measure.degree)


def measure_pure(measure: Measure, psi: PureState) -> float:
    """Measure value of a normalized pure state."""
    measure.check_dims(psi.dims)
    psi.require_normalized()
    return _value_from_poly(measure, measure.poly(psi.amps))


def measure_unnormalized(measure: Measure, psi: PureState) -> float:
    """Degree-1 homogeneous extension to unnormalized vectors.

    Equals ``<psi|psi> * measure_pure(psi / ||psi||)``; computed directly as
    ``scale * |poly(psi)|**(2/degree)``, which is the same thing.
    """
    measure.check_dims(psi.dims)
    if psi.weight <= 0.0:
        raise ValueError("measure of the zero vector is undefined")
    return _value_from_poly(measure, measure.poly(psi.amps))


def wootters_concurrence(rho: DensityMatrix) -> float:
    """Closed-form two-qubit mixed-state concurrence.

    max(0, l1 - l2 - l3 - l4) with the descending square roots of the
    eigenvalues of rho (sy x sy) rho* (sy x sy).  This is the exact convex
    roof of the pure-state concurrence and serves as the oracle for the
    roof optimizer.
    """
    if rho.dims.dims != (2, 2):
        raise ValueError(f"wootters_concurrence needs dims (2, 2), got {rho.dims.dims}")
    # The l_i are the singular values of sqrt(rho) (sy x sy) sqrt(rho)*,
    # a numerically better-conditioned form than the eigenvalues of the
    # non-Hermitian product rho (sy x sy) rho* (sy x sy).
    w, v = np.linalg.eigh(rho.mat)
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    lam = np.linalg.svd(root @ _YY @ root.conj(), compute_uv=False)
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def sl_invariance_deviation(measure: Measure, rng, trials: int = 20) -> float:
    """Largest relative deviation of the measure under random SL factors.

    Numerical spot check for plug-in polynomial measures; a genuinely
    SL-invariant measure stays below ~1e-8 on well-conditioned draws.
    """
    from .linalg import kron_all
    from .sampling import as_generator, random_pure_state, random_sl

    g = as_generator(rng)
    worst = 0.0
    for _ in range(trials):
        psi = random_pure_state(measure.dims, g)
        sl = kron_all([random_sl(d, g) for d in measure.dims])
        mapped = PureState(sl @ psi.amps, measure.dims)
        before = measure_unnormalized(measure, psi)
        after = measure_unnormalized(measure, mapped)
        worst = max(worst, abs(after - before) / max(before, 1e-12))
    return worst
