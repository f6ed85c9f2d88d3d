"""Schmidt rank and number machinery and partial entanglement-breaking tests.

Exact separability statements are confined to where the positive partial
transpose criterion is decisive (2x2 and 2x3); everywhere else the module
emits certified upper bounds (a found decomposition) or explicit not-found
results, never an unproved negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import apply_kraus
from .families import max_entangled_state
from .linalg import (DensityMatrix, LocalDims, PureState, as_complex_matrix,
                     partial_transpose, schmidt_decompose)
from .sampling import RandomStream, as_generator, random_isometry, random_pure_state
from .stiefel import minimize_on_stiefel

PPT_EIGENVALUE_TOL = -1e-10
FULL_RANK_COEFF = 1e-4
TAIL_COEFF_TOL = 1e-6
PROBE_REDRAWS = 100


@dataclass(frozen=True)
class SchmidtReport:
    """Schmidt evidence for one state.

    ``method`` is one of 'exact-pure', 'ppt-2x2', 'ppt-2x3' or 'roof-search'.
    Pure states carry an exact ``rank``; mixed states carry either an exact
    separability verdict (small dims) or a certified ``number_upper``.
    """

    method: str
    rank: int | None = None
    number_upper: int | None = None
    separable: bool | None = None
    coefficients: tuple[float, ...] = ()


def schmidt_rank(psi: PureState, cut, tol: float = 1e-8) -> int:
    """Number of Schmidt coefficients above ``tol`` across the bipartition."""
    dec = schmidt_decompose(psi, cut)
    return int(np.sum(dec.coeffs > tol))


def is_ppt(rho: DensityMatrix, cut=(1,), tol: float = PPT_EIGENVALUE_TOL) -> bool:
    """Positive partial transpose across the given transposed-party set."""
    pt = partial_transpose(rho.mat, rho.dims, cut)
    return bool(np.min(np.linalg.eigvalsh(pt)) >= tol)


def is_separable_small(rho: DensityMatrix) -> bool:
    """Exact separability in 2x2 and 2x3, where PPT is decisive."""
    dims = tuple(sorted(rho.dims.dims))
    if rho.dims.n_parties != 2 or dims not in ((2, 2), (2, 3)):
        raise ValueError(
            f"exact separability supported only on 2x2 and 2x3, got {rho.dims.dims}; "
            "use is_ppt for the necessary condition"
        )
    return is_ppt(rho)


@dataclass(frozen=True)
class SchmidtNumberCertificate:
    """Result of the rank-constrained ensemble search.

    ``found=True`` certifies SN(rho) <= target via the returned ensemble;
    ``found=False`` only means the search failed, not a lower bound.
    """

    found: bool
    target: int
    max_tail_coefficient: float
    ensemble: tuple[tuple[float, PureState], ...] = ()


@dataclass(frozen=True)
class SchmidtSearchOptions:
    ensemble_size: int | None = None
    restarts: int = 8
    max_iterations: int = 250
    seed: int = 0


def schmidt_number_upper(rho: DensityMatrix, target: int,
                         opts: SchmidtSearchOptions = SchmidtSearchOptions()
                         ) -> SchmidtNumberCertificate:
    """Search for an ensemble whose members all have Schmidt rank <= target.

    Ensembles are parametrized by isometries on the eigendecomposition of
    rho, as in the convex-roof solver; the objective is the summed squared
    Schmidt tail beyond index ``target`` of every unnormalized member.  A
    decomposition counts as a certificate when every member's normalized
    coefficients beyond the target are below 1e-6.
    """
    if rho.dims.n_parties != 2:
        raise ValueError("Schmidt number needs a bipartite state")
    d_a, d_b = rho.dims.dims
    if target < 1:
        raise ValueError("target rank must be >= 1")
    if target >= min(d_a, d_b):
        # every state trivially satisfies SN <= min(dA, dB)
        lam, vecs = np.linalg.eigh(rho.mat)
        keep = lam > 1e-12
        ens = tuple((float(l), PureState(vecs[:, i], rho.dims))
                    for i, l in enumerate(lam) if keep[i])
        return SchmidtNumberCertificate(True, target, 0.0, ens)

    lam, vecs = np.linalg.eigh(rho.mat)
    keep = lam > 1e-12 * max(1.0, lam[-1])
    lam = lam[keep]
    vecs = vecs[:, keep]
    rank = lam.size
    m = opts.ensemble_size if opts.ensemble_size is not None else max(rank * rank, target * rank)
    basis = np.sqrt(lam)[:, None] * vecs.T
    basis_h = basis.conj().T

    def fun(v, need_grad):
        states = v @ basis
        mats = states.reshape(-1, d_a, d_b)
        value = 0.0
        w = np.zeros_like(states) if need_grad else None
        for i, mat in enumerate(mats):
            uu, ss, vvh = np.linalg.svd(mat, full_matrices=False)
            tail2 = float(np.sum(ss[target:] ** 2))
            value += tail2
            if need_grad:
                # gradient of the tail energy is the tail part of the matrix
                tail_mat = (uu[:, target:] * ss[target:]) @ vvh[target:, :]
                w[i] = tail_mat.reshape(-1)
        if not need_grad:
            return value, None
        return value, w @ basis_h

    stream = RandomStream(opts.seed)
    best = None
    for r in range(max(1, opts.restarts)):
        v0 = random_isometry(m, rank, stream.child(r))
        res = minimize_on_stiefel(fun, v0, max_iterations=opts.max_iterations,
                                  gradient_tolerance=1e-10)
        if best is None or res.value < best.value:
            best = res
        if best.value < 1e-16:
            break

    states = best.point @ basis
    weights = np.einsum("ij,ij->i", states, states.conj()).real
    max_tail = 0.0
    ensemble = []
    for w, s in zip(weights, states):
        if w <= 1e-14:
            continue
        member = PureState(s / np.sqrt(w), rho.dims)
        coeffs = schmidt_decompose(member, (0,)).coeffs
        if coeffs.size > target:
            max_tail = max(max_tail, float(coeffs[target]))
        ensemble.append((float(w), member))
    found = max_tail < TAIL_COEFF_TOL
    return SchmidtNumberCertificate(found, target, max_tail,
                                    tuple(ensemble) if found else ())


# ---------------------------------------------------------------------------
# partial entanglement breaking

@dataclass(frozen=True)
class ProbeVerdict:
    probe_index: int  # -1 is the maximally entangled probe
    report: SchmidtReport
    breaking: bool | None  # exact verdict where available


@dataclass(frozen=True)
class PebReport:
    """Evidence that a local channel is r-partially entanglement breaking."""

    target: int
    dimension: int
    breaking: bool | None
    verdicts: tuple[ProbeVerdict, ...]
    agreement: bool
    divergent_probes: tuple[int, ...] = ()


def _full_rank_probe(d: int, rng) -> PureState:
    g = as_generator(rng)
    for _ in range(PROBE_REDRAWS):
        psi = random_pure_state((d, d), g)
        coeffs = schmidt_decompose(psi, (0,)).coeffs
        if coeffs[-1] > FULL_RANK_COEFF:
            return psi
    raise RuntimeError(f"no full-Schmidt-rank probe found in {PROBE_REDRAWS} draws")


def _extended_output(local_ops, probe: PureState, d: int) -> DensityMatrix:
    """(Phi x I) applied to a probe on the d x d doubled space."""
    eye = np.eye(d, dtype=np.complex128)
    ops = [np.kron(as_complex_matrix(k, d, d), eye) for k in local_ops]
    out = apply_kraus(ops, probe.density().mat)
    return DensityMatrix(out, LocalDims((d, d)))


def _probe_verdict(out: DensityMatrix, target: int,
                   opts: SchmidtSearchOptions) -> tuple[SchmidtReport, bool | None]:
    d_a, d_b = out.dims.dims
    small = tuple(sorted((d_a, d_b))) in ((2, 2), (2, 3))
    if target == 1 and small:
        sep = is_separable_small(out)
        method = "ppt-2x2" if (d_a, d_b) == (2, 2) else "ppt-2x3"
        return SchmidtReport(method=method, separable=sep,
                             number_upper=1 if sep else None), sep
    if target == 1 and not is_ppt(out):
        # NPT is an exact negative for separability in any dimension
        return SchmidtReport(method="roof-search", separable=False), False
    cert = schmidt_number_upper(out, target, opts)
    if cert.found:
        return SchmidtReport(method="roof-search", number_upper=target), True
    return SchmidtReport(method="roof-search", number_upper=None), None


def r_peb_test(local_ops, target: int, probes: int = 20,
               seed: int = 0,
               search_opts: SchmidtSearchOptions | None = None) -> PebReport:
    """Probe whether (Phi x I) keeps every output at Schmidt number <= target.

    Uses the maximally entangled probe plus random full-Schmidt-rank probes;
    by the state-invariance of the disentangling power, their verdicts must
    agree, and any divergence is flagged.  Exact verdicts exist for d=2,
    target=1; elsewhere evidence is certificate-based.
    """
    local_ops = [as_complex_matrix(k) for k in local_ops]
    d = local_ops[0].shape[0]
    acc = sum(k.conj().T @ k for k in local_ops)
    if np.linalg.norm(acc - np.eye(d)) >= 1e-10:
        raise ValueError("local Kraus list does not close")
    opts = search_opts if search_opts is not None else SchmidtSearchOptions(seed=seed)

    stream = RandomStream(seed)
    verdicts = []
    out = _extended_output(local_ops, max_entangled_state(d), d)
    report, flag = _probe_verdict(out, target, opts)
    verdicts.append(ProbeVerdict(-1, report, flag))
    for i in range(probes):
        probe = _full_rank_probe(d, stream.child(i))
        out = _extended_output(local_ops, probe, d)
        report, flag = _probe_verdict(out, target, opts)
        verdicts.append(ProbeVerdict(i, report, flag))

    reference = verdicts[0].breaking
    divergent = tuple(v.probe_index for v in verdicts[1:]
                      if v.breaking is not None and reference is not None
                      and v.breaking != reference)
    return PebReport(target=target, dimension=d, breaking=reference,
                     verdicts=tuple(verdicts), agreement=not divergent,
                     divergent_probes=divergent)


@dataclass(frozen=True)
class ThresholdReport:
    threshold: float | None
    bracket: tuple[float, float] | None
    grid: tuple[tuple[float, bool | None], ...]
    never_breaking: bool
    always_breaking: bool


def eb_threshold_scan(family, target: int, lo: float = 0.0, hi: float = 1.0,
                      tol: float = 1e-3, grid_points: int = 9,
                      seed: int = 0) -> ThresholdReport:
    """Bisect the onset of entanglement breaking in a parametrized family.

    ``family(param)`` must return a local Kraus list.  A coarse grid first
    checks that the breaking verdict is monotone in the parameter; a
    non-monotone scan raises with the offending bracket.  Verdicts come from
    the maximally entangled probe (exact for qubit families at target 1).
    """
    def verdict(param: float) -> bool | None:
        report = r_peb_test(family(param), target, probes=0, seed=seed)
        return report.breaking

    grid = np.linspace(lo, hi, grid_points)
    flags = [verdict(p) for p in grid]
    pairs = tuple((float(p), f) for p, f in zip(grid, flags))

    known = [(p, f) for p, f in pairs if f is not None]
    if not known:
        raise ValueError("no decisive breaking verdicts on the scanned grid")
    for (p0, f0), (p1, f1) in zip(known, known[1:]):
        if f0 and not f1:
            raise ValueError(
                f"breaking verdict is not monotone on [{p0:g}, {p1:g}]"
            )
    if all(f is False for _, f in known):
        return ThresholdReport(None, None, pairs, True, False)
    if all(f is True for _, f in known):
        return ThresholdReport(float(lo), None, pairs, False, True)

    last_false = max(p for p, f in known if f is False)
    first_true = min(p for p, f in known if f is True)
    a, b = last_false, first_true
    while b - a > tol:
        mid = (a + b) / 2.0
        if verdict(mid):
            b = mid
        else:
            a = mid
    return ThresholdReport((a + b) / 2.0, (a, b), pairs, False, False)
