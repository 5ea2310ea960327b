"""Moment map, the functional F, static and soliton detection, fingerprints."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from . import kernels
from .algebra import (
    AlgebraDescriptor,
    BracketTensor,
    _arr,
    act,
    bracket_inner,
    derivation_space,
    endo_inner,
    pi_action,
    validate,
)
from .conventions import ORDERED_PAIR_WEIGHT
from .curvature import k_matrix, static_residual_from_matrix
from .errors import BadParameter, BadSupport, NotFixedPoint, ZeroBracket
from .flow import IntegratorConfig, integrate_normalized_flow

SOLITON_RTOL = 1e-8
STEADY_DEAD_ZONE = 1e-10


def _desc(mu) -> AlgebraDescriptor:
    if isinstance(mu, AlgebraDescriptor):
        return mu
    return validate(mu if isinstance(mu, BracketTensor) else BracketTensor(mu))


def _nonzero(m):
    nsq = bracket_inner(m, m).real
    if nsq == 0.0:
        raise ZeroBracket("operation undefined for the zero bracket")
    return nsq


# --------------------------------------------------------------- moment map


def moment_map(mu) -> np.ndarray:
    """``2 K_mu / ||mu||^2``."""
    m = _desc(mu).bracket.data
    nsq = _nonzero(m)
    return 2.0 * k_matrix(m) / nsq


def center_supported(E, desc: AlgebraDescriptor, tol: float = 1e-10) -> bool:
    E = np.asarray(E)
    Pp = np.eye(desc.dim) - desc.center_projector
    scale = max(np.linalg.norm(E), 1.0)
    return bool(np.linalg.norm(E @ Pp) <= tol * scale and np.linalg.norm(Pp @ E) <= tol * scale)


def moment_defect(mu, E) -> float:
    """``<K_mu, E> - 1/2 <pi(E) mu, mu>`` for Hermitian center-supported ``E``."""
    desc = _desc(mu)
    E = np.asarray(E, dtype=np.complex128)
    if np.linalg.norm(E - E.conj().T) > 1e-12 * max(np.linalg.norm(E), 1.0):
        raise BadSupport("E must be Hermitian")
    if not center_supported(E, desc):
        raise BadSupport("E must vanish on the complement of the center and preserve the center")
    m = desc.bracket.data
    lhs = endo_inner(k_matrix(m), E)
    rhs = 0.5 * bracket_inner(pi_action(E, m), m)
    d = lhs - rhs
    scale = max(abs(lhs), abs(rhs), 1e-300)
    if abs(d.imag) > 1e-12 * max(scale, 1.0):
        raise AssertionError(f"moment defect has imaginary part {d.imag!r}")
    return float(d.real)


def functional_F(mu) -> float:
    """``||K_mu||^2 / ||mu||^4`` (scale invariant)."""
    m = _arr(mu.bracket if isinstance(mu, AlgebraDescriptor) else mu)
    nsq = _nonzero(m)
    return float(np.sum(np.abs(k_matrix(m)) ** 2)) / nsq**2


def F_gradient(nu, E) -> float:
    """Derivative of ``F`` along ``t -> exp(tE) . nu`` at ``t = 0``.

    For Hermitian center-supported ``E``:
    ``dF = (4 tr(K^2 E) - 2 F d||nu||^2) / ||nu||^4`` with
    ``d||nu||^2 = 2 <pi(E) nu, nu> = 4 <K, E>`` by the moment-map identity.
    """
    m = _arr(nu.bracket if isinstance(nu, AlgebraDescriptor) else nu)
    nsq = _nonzero(m)
    K = k_matrix(m)
    F = float(np.sum(np.abs(K) ** 2)) / nsq**2
    dK2 = 4.0 * np.trace(K @ K @ E).real
    dnorm = 4.0 * endo_inner(K, E).real
    return (dK2 / nsq**2) - 2.0 * F * dnorm / nsq


# ----------------------------------------------------------------- statics


def static_check(mu) -> dict:
    m = _desc(mu).bracket.data
    _nonzero(m)
    K = k_matrix(m)
    n = K.shape[0]
    return {"c_candidate": float(np.trace(K).real) / n, "residual": static_residual_from_matrix(K)}


# ---------------------------------------------------------------- solitons


@dataclass
class SolitonReport:
    c: float
    D: np.ndarray
    soliton_residual: float
    derivation_residual: float
    classification: str
    symmetric: bool
    certified: bool
    K_norm: float
    extras: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "c": self.c,
            "D": _matrix_json(self.D),
            "soliton_residual": self.soliton_residual,
            "derivation_residual": self.derivation_residual,
            "classification": self.classification,
            "symmetric": self.symmetric,
            "certified": self.certified,
            "K_norm": self.K_norm,
            **self.extras,
        }


def _matrix_json(A):
    A = np.asarray(A)
    return [[[float(z.real), float(z.imag)] for z in row] for row in A]


def _classify(c, certified):
    if not certified:
        return "not_soliton"
    if abs(c) <= STEADY_DEAD_ZONE:
        return "steady"
    return "expanding" if c < 0 else "shrinking"


def _hermitian_flat(A):
    return np.concatenate([A.real.ravel(), A.imag.ravel()])


def soliton_solve(mu, *, rtol: float = SOLITON_RTOL) -> SolitonReport:
    """Least squares for ``K_mu = c Id + 1/2 (D + D^H)`` over ``c`` and ``D in Der(mu)``.

    ``c`` is fitted as a complex number and its imaginary part must vanish.
    All solutions share the Hermitian part ``K - c Id``; it is returned when
    it is itself a derivation, otherwise the minimum-norm solution is.
    """
    desc = _desc(mu)
    m = desc.bracket.data
    _nonzero(m)
    n = desc.dim
    K = k_matrix(m)
    K_norm = float(np.linalg.norm(K))
    basis = desc.derivation_basis
    eye = np.eye(n, dtype=np.complex128)
    # real unknowns: Re c, Im c, then (Re z_k, Im z_k) for D = sum z_k B_k
    cols = [_hermitian_flat(eye), _hermitian_flat(1j * eye)]
    for B in basis:
        cols.append(_hermitian_flat(0.5 * (B + B.conj().T)))
        cols.append(_hermitian_flat(0.5 * (1j * B + (1j * B).conj().T)))
    A = np.stack(cols, axis=1)
    x, *_ = np.linalg.lstsq(A, _hermitian_flat(K), rcond=None)
    c_re, c_im = x[0], x[1]
    if abs(c_im) > 1e-12 * max(1.0, K_norm):
        raise AssertionError(f"soliton constant has imaginary part {c_im!r}")
    D = np.zeros((n, n), dtype=np.complex128)
    for k, B in enumerate(basis):
        D += (x[2 + 2 * k] + 1j * x[3 + 2 * k]) * B
    # every solution has the same Hermitian part; prefer it when it is a derivation
    D_herm = 0.5 * (D + D.conj().T)
    tol = rtol * K_norm
    if _pi_norm(D_herm, m) <= max(tol, _pi_norm(D, m)):
        D = D_herm
    sol_res = float(np.linalg.norm(K - c_re * eye - 0.5 * (D + D.conj().T)))
    der_res = _pi_norm(D, m)
    certified = sol_res <= tol and der_res <= tol
    symmetric = bool(np.linalg.norm(D - D.conj().T) <= 1e-10 * max(1.0, np.linalg.norm(D)))
    # shortcut: D = K - c Id with the best scalar c
    nsq = bracket_inner(m, m).real
    pk = pi_action(K, m).data
    c_short = -bracket_inner(pk, m).real / nsq
    short_res = _pi_norm(K - c_short * eye, m)
    extras = {
        "c_imag": float(c_im),
        "der_dim": len(basis),
        "shortcut_c": float(c_short),
        "shortcut_derivation_residual": short_res,
    }
    return SolitonReport(
        float(c_re), D, sol_res, der_res, _classify(c_re, certified), symmetric, certified, K_norm, extras
    )


def _pi_norm(A, m) -> float:
    p = kernels.pi_action(np.asarray(A, dtype=np.complex128), m)
    return math.sqrt(max(kernels.pair_inner(p, p, ORDERED_PAIR_WEIGHT).real, 0.0))


def fixed_point_is_soliton(nu, r: float | None = None, *, tol: float = 1e-8) -> SolitonReport:
    """Certificate ``D = K_nu + r Id in Der(nu)``, ``c = -r`` at a normalized-flow fixed point."""
    m = _arr(nu.bracket if isinstance(nu, AlgebraDescriptor) else nu)
    nsq = _nonzero(m)
    m = m / math.sqrt(nsq)
    v, r_nu = kernels.normalized_velocity(m, ORDERED_PAIR_WEIGHT)
    residual = math.sqrt(kernels.pair_inner(v, v, ORDERED_PAIR_WEIGHT).real)
    if residual > tol:
        raise NotFixedPoint(f"fixed-point residual {residual:.3e} exceeds {tol:g}")
    r = float(r_nu if r is None else r)
    K = k_matrix(m)
    n = K.shape[0]
    D = K + r * np.eye(n)
    c = -r
    der_res = _pi_norm(D, m)
    sol_res = float(np.linalg.norm(K - c * np.eye(n) - 0.5 * (D + D.conj().T)))
    K_norm = float(np.linalg.norm(K))
    certified = der_res <= max(tol, SOLITON_RTOL * K_norm) and sol_res <= SOLITON_RTOL * K_norm
    return SolitonReport(
        c, D, sol_res, der_res, _classify(c, certified), True, certified, K_norm,
        {"fixed_point_residual": residual, "one_sided_residual": _pi_norm(K - c * np.eye(n), m),
         "trK": float(np.trace(K).real)},
    )


# ------------------------------------------------------------ fingerprints


@dataclass(frozen=True)
class Fingerprint:
    spectrum: np.ndarray
    F: float
    center_dim: int
    der_dim: int
    image_profile: np.ndarray
    two_form_profile: np.ndarray
    wedge_norm: float | None

    def as_dict(self):
        return {
            "spectrum": self.spectrum.tolist(),
            "F": self.F,
            "center_dim": self.center_dim,
            "der_dim": self.der_dim,
            "image_profile": self.image_profile.tolist(),
            "two_form_profile": self.two_form_profile.tolist(),
            "wedge_norm": self.wedge_norm,
        }


def _wedge_square_norm(A) -> float:
    """Norm of ``omega ^ omega`` for ``omega = sum_{i<j} A_ij e_i ^ e_j``."""
    n = A.shape[0]
    total = 0.0
    for i, j, k, l in itertools.combinations(range(n), 4):
        v = 2.0 * (A[i, j] * A[k, l] - A[i, k] * A[j, l] + A[i, l] * A[j, k])
        total += abs(v) ** 2
    return math.sqrt(total)


def fingerprint(mu) -> Fingerprint:
    """Unitary invariants of ``mu / ||mu||``.

    ``image_profile`` holds the singular values of the bracket as a map
    ``Lambda^2 -> image``.  When the image is one-dimensional the bracket is
    a single 2-form; its singular values and ``||omega ^ omega||`` are added,
    since K-spectra alone cannot tell such forms apart.
    """
    desc = _desc(mu)
    m = desc.bracket.data
    nsq = _nonzero(m)
    nu = m / math.sqrt(nsq)
    ndesc = validate(BracketTensor(nu, check=False))
    n = desc.dim
    K = k_matrix(nu)
    iu, ju = np.triu_indices(n, k=1)
    Mmap = nu[iu, ju, :]  # rows: pairs, columns: output components
    sv = np.linalg.svd(Mmap, compute_uv=False)
    image_rank = int(np.sum(sv > 1e-10 * sv[0])) if sv.size else 0
    two_form = np.zeros(0)
    wedge = None
    if image_rank == 1:
        _, _, vh = np.linalg.svd(Mmap)
        w = vh[0]  # unit vector spanning the image
        A = np.einsum("ijk,k->ij", nu, w.conj())
        two_form = np.sort(np.linalg.svd(A, compute_uv=False))[::-1]
        wedge = _wedge_square_norm(A)
    return Fingerprint(
        spectrum=np.sort(np.linalg.eigvalsh(K)),
        F=float(np.sum(np.abs(K) ** 2)),
        center_dim=ndesc.center_dim,
        der_dim=len(ndesc.derivation_basis),
        image_profile=np.sort(sv)[::-1],
        two_form_profile=two_form,
        wedge_norm=wedge,
    )


def compare(f1: Fingerprint, f2: Fingerprint, tol: float = 1e-8) -> dict:
    """Per-field absolute differences and an overall match flag."""

    def vec_diff(a, b):
        if a.shape != b.shape:
            return math.inf
        return float(np.max(np.abs(a - b), initial=0.0))

    diffs = {
        "spectrum": vec_diff(f1.spectrum, f2.spectrum),
        "F": abs(f1.F - f2.F),
        "center_dim": abs(f1.center_dim - f2.center_dim),
        "der_dim": abs(f1.der_dim - f2.der_dim),
        "image_profile": vec_diff(f1.image_profile, f2.image_profile),
        "two_form_profile": vec_diff(f1.two_form_profile, f2.two_form_profile),
        "wedge_norm": (
            0.0 if f1.wedge_norm is None and f2.wedge_norm is None
            else math.inf if f1.wedge_norm is None or f2.wedge_norm is None
            else abs(f1.wedge_norm - f2.wedge_norm)
        ),
    }
    return {"diffs": diffs, "max_diff": max(diffs.values()), "match": max(diffs.values()) <= tol}


# ------------------------------------------------------- uniqueness probes


def center_transformation(desc: AlgebraDescriptor, E) -> np.ndarray:
    """``Id`` on the complement, ``exp(E)`` on the center (``E`` in center coordinates)."""
    Q = desc.center_basis
    Pp = np.eye(desc.dim) - desc.center_projector
    return Pp + Q @ expm(np.asarray(E, dtype=np.complex128)) @ Q.conj().T


def uniqueness_probe(mu, seeds, *, scale: float = 1.0, outside: int = 0, cfg: IntegratorConfig | None = None,
                     tol: float = 1e-8) -> dict:
    """Normalized flow from ``exp(E) . mu`` for random center-block ``E``, one per seed.

    All limits must share one fingerprint.  ``outside`` extra starts use
    random transformations of the whole space; they are reported only.
    """
    desc = _desc(mu).require_two_step()
    _nonzero(desc.bracket.data)
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise BadParameter("uniqueness probe needs at least one seed")
    cfg = cfg or IntegratorConfig(t_end=1e3)
    q = desc.center_dim
    runs = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        E = scale * (rng.standard_normal((q, q)) + 1j * rng.standard_normal((q, q)))
        phi = center_transformation(desc, E)
        start = act(phi, desc.bracket)
        runs.append(_probe_run(start, cfg, seed, "center"))
    reference = runs[0]["fingerprint"]
    comparisons = [compare(reference, r["fingerprint"], tol) for r in runs]
    report = {
        "runs": [{k: v for k, v in r.items() if k != "fingerprint"} | {"fingerprint": r["fingerprint"].as_dict()}
                 for r in runs],
        "max_fingerprint_diff": max(c["max_diff"] for c in comparisons),
        "unique_within_orbit": all(c["match"] for c in comparisons) and all(r["converged"] for r in runs),
        "reference": reference.as_dict(),
    }
    if outside:
        rng = np.random.default_rng(seeds[-1] + 7919 if seeds else 0)
        extra = []
        for k in range(outside):
            n = desc.dim
            phi = np.eye(n) + 0.5 * scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
            run = _probe_run(act(phi, desc.bracket), cfg, k, "general")
            run["diff_to_reference"] = compare(reference, run["fingerprint"], tol)["max_diff"]
            run["fingerprint"] = run["fingerprint"].as_dict()
            extra.append(run)
        report["outside_orbit"] = extra
    return report


def _probe_run(start, cfg, seed, kind):
    start = start / start.norm()
    trace = integrate_normalized_flow(start, cfg)
    limit = trace.final_bracket()
    return {
        "seed": int(seed),
        "kind": kind,
        "converged": trace.converged,
        "t_final": trace.final.t,
        "residual": trace.final.diagnostics.residual,
        "fingerprint": fingerprint(limit),
    }
