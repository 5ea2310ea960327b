"""Bracket flow, normalized bracket flow, norm companion and metric flow.

The bracket flow is ``d/dt mu = -pi(K_mu) mu``.  Its norm-normalized
version ``d/dt nu = -pi(K_nu + r_nu Id) nu`` with ``r_nu = <pi(K_nu) nu, nu>``
has the algebraic solitons as fixed points.  Writing ``mu = sqrt(y) nu`` the
unnormalized flow becomes the pair ``d nu/dt = y V(nu)``,
``dy/dt = -4 y^2 ||K_nu||^2``, which is what long horizons integrate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .algebra import AlgebraDescriptor, BracketTensor, _arr, jacobi_residual, two_step_residual, validate
from .conventions import ORDERED_PAIR_WEIGHT
from .curvature import k_from_metric, k_matrix, operator_spectrum, unitary_frame
from .errors import BadParameter, NotUnitNorm, StepFailure, StructureDrift, ZeroBracket
from .rk import dopri5

W = ORDERED_PAIR_WEIGHT

# unnormalized integration beyond this time switches to the (nu, ||mu||^2) form
LONG_HORIZON = 1e2
DECAY_CHECK_TOL = 1e-9
DRIFT_ABORT = 1e-6


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "dopri5"
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    initial_step: float | None = None
    max_step: float = math.inf
    t_end: float = 10.0
    max_steps: int = 1_000_000
    fixed_point_tol: float = 1e-10
    # None records every accepted step
    sample_times: tuple | None = None

    def __post_init__(self):
        if self.method != "dopri5":
            raise BadParameter(f"unsupported method {self.method!r}")
        if not (self.rel_tol > 0 and self.abs_tol > 0 and self.fixed_point_tol > 0):
            raise BadParameter("tolerances must be positive")
        if not self.t_end > 0:
            raise BadParameter("t_end must be positive")
        if self.max_step <= 0 or self.max_steps < 1:
            raise BadParameter("max_step and max_steps must be positive")

    def with_samples(self, count: int, spacing: str = "log") -> "IntegratorConfig":
        return replace(self, sample_times=tuple(sample_grid(self.t_end, count, spacing)))


def sample_grid(t_end, count, spacing="log"):
    """``count`` output times in ``(0, t_end]``, plus ``t = 0``."""
    if count < 2:
        return np.array([0.0, t_end])
    if spacing == "linear":
        return np.linspace(0.0, t_end, count)
    lo = min(1e-2, t_end / 10.0)
    return np.concatenate([[0.0], np.geomspace(lo, t_end, count - 1)])


@dataclass(frozen=True)
class Diagnostics:
    norm_sq: float
    F: float
    F_defined: bool
    trK: float
    residual: float
    r: float
    spectrum: np.ndarray

    def as_dict(self):
        return {
            "norm_sq": self.norm_sq,
            "F": self.F,
            "F_defined": self.F_defined,
            "trK": self.trK,
            "residual": self.residual,
            "r": self.r,
            "spectrum": [float(x) for x in self.spectrum],
        }


def pair_norm(x) -> float:
    return math.sqrt(max(kernels.pair_inner(x, x, W).real, 0.0))


def diagnostics(mu) -> Diagnostics:
    """Norm, ``F``, ``tr K``, spectrum and fixed-point residual of ``mu / ||mu||``."""
    m = _bracket_array(mu)
    K = k_matrix(m)
    spectrum = np.linalg.eigvalsh(K)
    trK = float(np.trace(K).real)
    nsq = kernels.pair_inner(m, m, W).real
    if nsq == 0.0:
        return Diagnostics(0.0, 0.0, False, trK, 0.0, 0.0, spectrum)
    nu = m / math.sqrt(nsq)
    v, r = kernels.normalized_velocity(nu, W)
    F = float(np.sum(np.abs(K) ** 2)) / nsq**2
    return Diagnostics(float(nsq), F, True, trK, pair_norm(v), float(r), spectrum)


def bracket_velocity(mu) -> BracketTensor:
    """``-pi(K_mu) mu`` for a validated 2-step bracket."""
    _require_two_step(mu)
    return BracketTensor(kernels.bracket_velocity(_bracket_array(mu), W), check=False)


def normalized_velocity(nu, tol: float = 1e-9) -> tuple[BracketTensor, float]:
    """``(-pi(K_nu + r Id) nu, r)`` for a unit-norm bracket."""
    m = _bracket_array(nu)
    nsq = kernels.pair_inner(m, m, W).real
    if abs(nsq - 1.0) > tol:
        raise NotUnitNorm(f"||nu||^2 = {nsq!r} is not 1")
    v, r = kernels.normalized_velocity(m, W)
    return BracketTensor(v, check=False), float(r)


# ------------------------------------------------------------------ traces


@dataclass(frozen=True)
class Sample:
    t: float
    bracket: np.ndarray
    diagnostics: Diagnostics


@dataclass
class FlowTrace:
    dim: int
    kind: str
    samples: list = field(default_factory=list)
    termination: str = "t_end"
    converged: bool = False
    steps: int = 0
    max_drift: float = 0.0
    method: str = "direct"
    # companion traces: ||mu||^2 at each sample (same as diagnostics.norm_sq there)
    norm_sq_path: list = field(default_factory=list)

    def append(self, t, bracket, diag=None):
        b = np.array(bracket, dtype=np.complex128)
        b.setflags(write=False)
        self.samples.append(Sample(float(t), b, diag if diag is not None else diagnostics(b)))

    def column(self, name):
        return np.array([getattr(s.diagnostics, name) for s in self.samples], dtype=float)

    @property
    def times(self):
        return np.array([s.t for s in self.samples], dtype=float)

    @property
    def norm_sq(self):
        return self.column("norm_sq")

    @property
    def F(self):
        return self.column("F")

    @property
    def trK(self):
        return self.column("trK")

    @property
    def residual(self):
        return self.column("residual")

    @property
    def spectra(self):
        return np.array([s.diagnostics.spectrum for s in self.samples]).reshape(len(self.samples), self.dim)

    @property
    def final(self) -> Sample:
        return self.samples[-1]

    def final_bracket(self) -> BracketTensor:
        return BracketTensor(self.final.bracket, check=False)

    def summary(self) -> dict:
        out = {
            "kind": self.kind,
            "method": self.method,
            "dim": self.dim,
            "termination": self.termination,
            "converged": self.converged,
            "steps": self.steps,
            "samples": len(self.samples),
            "max_structure_drift": self.max_drift,
        }
        if self.samples:
            out["t_final"] = self.final.t
            out["final"] = self.final.diagnostics.as_dict()
        return out


def _bracket_array(mu) -> np.ndarray:
    if isinstance(mu, AlgebraDescriptor):
        return mu.bracket.data
    return _arr(mu)


def _require_two_step(mu) -> AlgebraDescriptor:
    desc = mu if isinstance(mu, AlgebraDescriptor) else validate(BracketTensor(_bracket_array(mu)))
    return desc.require_two_step()


class SplittingProjector:
    """Orthogonal projection onto brackets ``Lambda^2 z_perp -> z`` for a fixed splitting.

    The exact flows never leave this subspace, but it is transversally
    unstable, so roundoff is removed after every accepted step.  The size of
    what was removed is the drift measure.
    """

    def __init__(self, desc: AlgebraDescriptor):
        self.Pz = desc.center_projector
        self.Pp = np.eye(desc.dim) - self.Pz

    def __call__(self, m):
        return np.einsum("km,abm,ai,bj->ijk", self.Pz, m, self.Pp, self.Pp, optimize=True)

    def leak(self, m) -> float:
        nrm = pair_norm(m)
        return 0.0 if nrm == 0.0 else pair_norm(m - self(m)) / nrm


def _check_drift(trace, m, proj=None):
    """Jacobi/2-step residuals of ``m`` and, with ``proj``, the off-subspace leak."""
    d = max(jacobi_residual(m)[0], two_step_residual(m))
    if proj is not None:
        d = max(d, proj.leak(m))
    trace.max_drift = max(trace.max_drift, d)
    if d > DRIFT_ABORT:
        raise StructureDrift(f"structure drift {d:.3e} exceeds {DRIFT_ABORT:g}", trace)


def _run(gen, trace, on_step):
    try:
        for item in gen:
            trace.steps += 1
            if on_step(*item):
                return True
    except StepFailure as exc:
        trace.termination = "step_failure"
        exc.trace = trace
        raise
    except StructureDrift:
        trace.termination = "step_failure"
        raise
    return False


def integrate_bracket_flow(mu0, cfg: IntegratorConfig = IntegratorConfig()) -> FlowTrace:
    """Integrate ``d/dt mu = -pi(K_mu) mu`` up to ``cfg.t_end``.

    Every accepted step checks ``d/dt ||mu||^2 = -4 ||K_mu||^2`` against the
    integrator's derivative and the Jacobi/2-step residuals.  For
    ``t_end > LONG_HORIZON`` the equivalent ``(nu, ||mu||^2)`` system is used.
    """
    desc = _require_two_step(mu0)
    m0 = desc.bracket.data
    nsq0 = kernels.pair_inner(m0, m0, W).real
    if cfg.t_end > LONG_HORIZON and nsq0 > 0:
        trace = integrate_norm_companion(m0 / math.sqrt(nsq0), cfg, norm_sq0=nsq0)
        trace.kind = "bracket"
        return trace

    n = desc.dim
    trace = FlowTrace(n, "bracket")
    trace.append(0.0, m0)
    record_all = cfg.sample_times is None
    proj = SplittingProjector(desc)

    def f(t, y):
        return kernels.bracket_velocity(y, W)

    def project(y):
        _check_drift(trace, y, proj)
        return proj(y)

    def on_step(t, y, dy, hit):
        K = k_matrix(y)
        knsq = float(np.sum(np.abs(K) ** 2))
        dnorm = 2.0 * kernels.pair_inner(dy, y, W).real
        if abs(dnorm + 4.0 * knsq) > DECAY_CHECK_TOL * (1.0 + knsq):
            raise StructureDrift(
                f"norm decay law violated at t = {t:.6g}: {dnorm!r} vs {-4 * knsq!r}", trace
            )
        if record_all or hit:
            trace.append(t, y)
        return False

    gen = dopri5(
        f, 0.0, m0, cfg.t_end, rtol=cfg.rel_tol, atol=cfg.abs_tol, h0=cfg.initial_step,
        max_step=cfg.max_step, max_steps=cfg.max_steps, stops=cfg.sample_times or (),
        project=project,
    )
    _run(gen, trace, on_step)
    trace.termination = "t_end"
    return trace


def _normalize(y):
    return y / pair_norm(y)


def integrate_normalized_flow(nu0, cfg: IntegratorConfig = IntegratorConfig()) -> FlowTrace:
    """Integrate the normalized bracket flow until a fixed point or ``t_end``.

    The state is renormalized after every accepted step.  The run stops as
    soon as ``||pi(K_nu + r Id) nu|| < cfg.fixed_point_tol``; reaching
    ``t_end`` first leaves ``converged = False``.
    """
    desc = _require_two_step(nu0)
    m0 = desc.bracket.data
    if kernels.pair_inner(m0, m0, W).real == 0.0:
        raise ZeroBracket("normalized flow is undefined for the zero bracket")
    y0 = _normalize(m0)
    n = desc.dim
    trace = FlowTrace(n, "normalized")
    d0 = diagnostics(y0)
    trace.append(0.0, y0, d0)
    if d0.residual < cfg.fixed_point_tol:
        trace.termination, trace.converged = "fixed_point", True
        return trace
    record_all = cfg.sample_times is None
    proj = SplittingProjector(desc)

    def f(t, y):
        return kernels.normalized_velocity(y, W)[0]

    def project(y):
        _check_drift(trace, y, proj)
        return _normalize(proj(y))

    def on_step(t, y, dy, hit):
        res = pair_norm(dy)
        if res < cfg.fixed_point_tol:
            trace.append(t, y)
            return True
        if record_all or hit:
            trace.append(t, y)
        return False

    gen = dopri5(
        f, 0.0, y0, cfg.t_end, rtol=cfg.rel_tol, atol=cfg.abs_tol, h0=cfg.initial_step,
        max_step=cfg.max_step, max_steps=cfg.max_steps, stops=cfg.sample_times or (),
        project=project,
    )
    if _run(gen, trace, on_step):
        trace.termination, trace.converged = "fixed_point", True
    else:
        trace.termination = "t_end"
        trace.converged = trace.final.diagnostics.residual < cfg.fixed_point_tol
    return trace


def integrate_norm_companion(start, cfg: IntegratorConfig = IntegratorConfig(), norm_sq0=None) -> FlowTrace:
    """Integrate ``(nu, y = ||mu||^2)`` in the unnormalized time variable.

    ``start`` is a bracket or a normalized-flow trace (its first sample).
    ``norm_sq0`` defaults to the squared norm of ``start`` (1 for a trace).
    Samples hold the reconstructed ``mu = sqrt(y) nu``; see
    ``asymptotic_limit`` for ``t * ||mu_t||^2``.
    """
    if isinstance(start, FlowTrace):
        desc = _require_two_step(start.samples[0].bracket)
    else:
        desc = _require_two_step(start)
    m0 = desc.bracket.data
    proj = SplittingProjector(desc)
    nsq = kernels.pair_inner(m0, m0, W).real
    if nsq == 0.0:
        raise ZeroBracket("companion integration needs a nonzero bracket")
    y_init = float(norm_sq0) if norm_sq0 is not None else nsq
    nu0 = m0 / math.sqrt(nsq)
    n = nu0.shape[0]
    size = n**3
    trace = FlowTrace(n, "companion", method="companion")
    record_all = cfg.sample_times is None

    def unpack(state):
        return state[:size].reshape(n, n, n), state[size].real

    def f(t, state):
        nu, y = unpack(state)
        v, r = kernels.normalized_velocity(nu, W)
        # r = 2 ||K_nu||^2
        out = np.empty_like(state)
        out[:size] = (y * v).ravel()
        out[size] = -2.0 * r * y * y
        return out

    def project(state):
        nu, y = unpack(state)
        _check_drift(trace, nu, proj)
        out = state.copy()
        out[:size] = _normalize(proj(nu)).ravel()
        out[size] = y
        return out

    def record(t, state):
        nu, y = unpack(state)
        mu = math.sqrt(max(y, 0.0)) * nu
        d = diagnostics(nu)
        d = replace(
            d,
            norm_sq=float(y),
            trK=d.trK * y,
            spectrum=d.spectrum * y,
        )
        trace.append(t, mu, d)
        trace.norm_sq_path.append(float(y))

    state0 = np.concatenate([nu0.ravel(), [y_init]]).astype(np.complex128)
    record(0.0, state0)

    def on_step(t, state, dy, hit):
        nu, y = unpack(state)
        if not y > 0:
            raise StructureDrift(f"||mu||^2 left the positive axis at t = {t:.6g}", trace)
        if record_all or hit:
            record(t, state)
        return False

    gen = dopri5(
        f, 0.0, state0, cfg.t_end, rtol=cfg.rel_tol, atol=cfg.abs_tol, h0=cfg.initial_step,
        max_step=cfg.max_step, max_steps=cfg.max_steps, stops=cfg.sample_times or (),
        project=project,
    )
    _run(gen, trace, on_step)
    trace.termination = "t_end"
    return trace


def asymptotic_limit(trace: FlowTrace) -> dict:
    """``t * ||mu_t||^2`` at the last sample against ``1 / (4 F)`` there."""
    s = trace.final
    F = s.diagnostics.F
    return {
        "t": s.t,
        "t_norm_sq": s.t * s.diagnostics.norm_sq,
        "F": F,
        "predicted": 1.0 / (4.0 * F) if F > 0 else math.inf,
    }


# ------------------------------------------------------------ metric flow


@dataclass(frozen=True)
class MetricSample:
    t: float
    metric: np.ndarray
    spectrum: np.ndarray


@dataclass
class MetricTrace:
    dim: int
    samples: list = field(default_factory=list)
    termination: str = "t_end"
    steps: int = 0

    @property
    def times(self):
        return np.array([s.t for s in self.samples])

    @property
    def spectra(self):
        return np.array([s.spectrum for s in self.samples])


def matching_bracket(mu, h0, method="cholesky") -> BracketTensor:
    """Bracket written in an ``h0``-unitary frame (initial data for the bracket flow)."""
    from .algebra import act

    C = unitary_frame(h0, method)
    return act(np.linalg.inv(C), _bracket_array(mu))


def integrate_metric_flow(mu, h0, cfg: IntegratorConfig = IntegratorConfig()) -> MetricTrace:
    """Integrate ``d/dt h = -K(h)`` with the bracket held fixed.

    Sample spectra are those of the operator ``h^-1 K(h)``.
    """
    desc = _require_two_step(mu)
    m = desc.bracket.data
    h0 = np.array(h0, dtype=np.complex128)
    n = desc.dim
    trace = MetricTrace(n)
    record_all = cfg.sample_times is None

    def f(t, h):
        h = 0.5 * (h + h.conj().T)
        return -k_from_metric(m, h).matrix

    def record(t, h):
        K = k_from_metric(m, h).matrix
        hh = np.array(h)
        hh.setflags(write=False)
        trace.samples.append(MetricSample(float(t), hh, operator_spectrum(K, h)))

    unitary_frame(h0)  # raises NotPositiveDefinite early
    record(0.0, h0)

    def on_step(t, h, dh, hit):
        if record_all or hit:
            record(t, h)
        else:
            unitary_frame(h)
        return False

    gen = dopri5(
        f, 0.0, h0, cfg.t_end, rtol=cfg.rel_tol, atol=cfg.abs_tol, h0=cfg.initial_step,
        max_step=cfg.max_step, max_steps=cfg.max_steps, stops=cfg.sample_times or (),
        project=lambda h: 0.5 * (h + h.conj().T),
    )
    try:
        for item in gen:
            trace.steps += 1
            on_step(*item)
    except StepFailure:
        trace.termination = "step_failure"
        raise
    return trace
