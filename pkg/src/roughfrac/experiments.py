"""Experiment drivers: concentration limits, norm identities, and monitors.

The central object is a limit run: push the rescaled profile f_t toward a
point mass and measure, in the weak quasi-norm over an annulus away from
the origin, the distance between the operator output and the homogeneous
limit field times the mass of f.  Runs record the rate coefficient, the
theoretical decay bound, analytic tail certificates for the truncated
region, and a fitted log-log slope.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .fields import Exponents, HomogeneousField, beta_t, homog_field_eval, \
    homog_weak_norm_closed, level_products
from .functions import TestFunction, VectorTestFunction, first_moment, \
    normalize, rescale
from .kernels import SphereKernel, kernel_difference, lipschitz_estimate, \
    mollify_kernel, sphere_norm
from .lorentz import distribution_measure, tail_bound_weak, weak_quasinorm
from .operators import AnnulusGrid, QuadratureSpec, annulus_grid, grid_apply, \
    vector_lr_field

DEFAULT_RMAX_FACTOR = 64.0
MOMENT_TOLERANCE = 1e-12


def default_run_grid(n: int, rho: float, r_max: float | None = None,
                     resolution: int | None = None) -> AnnulusGrid:
    """Annulus grid used by limit runs and norm sweeps."""
    r_max = r_max if r_max is not None else DEFAULT_RMAX_FACTOR * rho
    if resolution is None:
        resolution = 512 if n == 1 else 96
    return annulus_grid(n, rho, r_max, resolution)


def identity_grid(n: int, doubling: int = 1) -> AnnulusGrid:
    """Wide annulus for the exact-identity comparison.

    The limit field carries weak-norm mass at every scale, so the
    comparison window must span a large radius ratio; dense log rings keep
    the level-set counting error below the acceptance budget.
    """
    if n == 1:
        # the one-dimensional truncation bias scales like rho/r_max
        return annulus_grid(1, 2.0 ** -7, 2.0 ** 7, 2048 * doubling)
    return annulus_grid(2, 2.0 ** -4, 2.0 ** 4, 1024 * doubling, 256 * doubling)


# ----------------------------------------------------------------------------
# Limit runs

@dataclass
class LimitRun:
    """Schedule of scales with the type-1 metric and its rate data."""

    op_kind: str
    rho: float
    r_max: float
    t_schedule: list
    metrics: list = field(default_factory=list)       # D(t)
    betas: list = field(default_factory=list)
    bounds: list = field(default_factory=list)        # (1+beta)t + beta
    tail_certificates: list = field(default_factory=list)
    certified: bool = False
    decay_gamma: float = 0.0
    slope: float = math.nan
    lipschitz: float = math.nan
    finite_tail_note: float = 0.0     # l^r mass beyond the stored entries
    kernel: SphereKernel | None = None
    exps: Exponents | None = None


def _validate_schedule(t_schedule, rho, support_radius):
    ts = list(t_schedule)
    if not ts:
        raise ParameterError("t_schedule: must be nonempty")
    if any(t2 >= t1 for t1, t2 in zip(ts, ts[1:])):
        raise ParameterError("t_schedule: must be strictly decreasing")
    for t in ts:
        if not 0 < t < rho / 2:
            raise ParameterError("t_schedule: t must be < rho/2")
        if t * support_radius >= rho:
            raise ParameterError(
                "t_schedule: t*support_radius must be < rho")
    return ts


def _fit_slope(ts, ds):
    pairs = [(t, d) for t, d in zip(ts, ds) if d > 0]
    if len(pairs) < 2:
        return math.nan
    lt = np.log([p[0] for p in pairs])
    ld = np.log([p[1] for p in pairs])
    return float(np.polyfit(lt, ld, 1)[0])


def _difference_field(op_kind, k, e, f_profile, mass, t_eff, k_vals, grid,
                      quad, workers):
    vals = grid_apply(op_kind, k, e, rescale(f_profile, t_eff), grid, quad,
                      workers)
    return mass * (vals - k_vals)


def limit_run(op_kind: str, k: SphereKernel, e: Exponents, f: TestFunction,
              rho: float, t_schedule, grid: AnnulusGrid | None = None,
              quad: QuadratureSpec | None = None,
              workers: int = 1) -> LimitRun:
    """Measure D(t) = || A f_t - K ||f||_1 ||  over the annulus grid.

    The limit field K uses |Omega| for the maximal and absolute-kernel
    operators and signed Omega for ``T_signed``.  The profile is reduced
    internally to a unit-mass, unit-support version, which only rescales
    the quadrature, not the reported metrics.  Tail certificates use the
    pointwise decay |difference| <= C * t * |x|^(-gamma) with gamma one
    order better than the field when f has zero first moment; a
    certificate with gamma*q <= n is recorded as uncertified.
    """
    quad = quad or QuadratureSpec()
    if grid is None:
        grid = default_run_grid(e.n, rho)
    ts = _validate_schedule(t_schedule, rho, f.support_radius)
    run = LimitRun(op_kind, rho, grid.r_max, ts, kernel=k, exps=e)
    run.lipschitz = lipschitz_estimate(k)

    moment = float(np.max(np.abs(first_moment(f)))) if f.l1 > 0 else 0.0
    zero_moment = moment <= MOMENT_TOLERANCE * max(1.0, f.l1 * f.support_radius)
    gamma = (e.n - e.alpha) + (1.0 if zero_moment else 0.0)
    run.decay_gamma = gamma
    run.certified = gamma * e.q > e.n

    signed = op_kind == "T_signed"
    k_vals = homog_field_eval(HomogeneousField(k, e, signed=signed),
                              grid.points)
    mass = f.l1
    profile = normalize(f) if mass > 0 else f
    scale_factor = f.support_radius

    for t in ts:
        diff = _difference_field(op_kind, k, e, profile, mass,
                                 t * scale_factor, k_vals, grid, quad, workers)
        res = weak_quasinorm(diff, grid.measures, e.q)
        run.metrics.append(res.value)
        beta = beta_t(e, rho, t)
        run.betas.append(beta)
        run.bounds.append((1.0 + beta) * t + beta)
        outer = np.abs(diff[grid.outer_mask])
        c_run = float(np.max(outer)) * grid.r_max ** gamma / t if outer.size else 0.0
        if run.certified:
            run.tail_certificates.append(
                tail_bound_weak(c_run * t, gamma, e.q, grid.r_max, e.n))
        else:
            run.tail_certificates.append(None)
    run.slope = _fit_slope(ts, run.metrics)
    return run


@dataclass
class RateReport:
    status: str                   # 'pass' | 'fail' | 'inconclusive'
    smallest_c: float
    messages: list = field(default_factory=list)


def rate_check(run: LimitRun, c: float) -> RateReport:
    """Assert D(t) <= C * ((1+beta_t) t + beta_t) and decay of D.

    Requires certified tails and a kernel with a finite Lipschitz
    estimate; otherwise the report is inconclusive.
    """
    if not run.certified or any(v is None for v in run.tail_certificates):
        return RateReport("inconclusive", math.nan,
                          ["uncertified tail; no rate asserted"])
    if not math.isfinite(run.lipschitz):
        return RateReport("inconclusive", math.nan,
                          ["kernel Lipschitz estimate unbounded; no rate asserted"])
    messages = []
    totals = [d + cert for d, cert in zip(run.metrics, run.tail_certificates)]
    smallest = max((tot / b for tot, b in zip(totals, run.bounds)), default=0.0)
    status = "pass"
    if smallest > c:
        status = "fail"
        messages.append(f"needs C = {smallest:.6g} > {c:.6g}")
    for i in range(len(run.metrics) - 1):
        if run.metrics[i + 1] > 1.05 * run.metrics[i]:
            status = "fail"
            messages.append(
                f"metric not nonincreasing at t = {run.t_schedule[i + 1]:.6g}")
    return RateReport(status, smallest, messages)


# ----------------------------------------------------------------------------
# Exact-identity comparison

@dataclass
class IdentityReport:
    closed_form: float
    numeric: float
    rel_err: float
    level_rel_errs: list = field(default_factory=list)


IDENTITY_LEVELS = (0.1, 0.5, 1.0, 2.0, 10.0)


def identity_check(k: SphereKernel, e: Exponents,
                   grid: AnnulusGrid | None = None,
                   quad: QuadratureSpec | None = None) -> IdentityReport:
    """Compare the sampled weak norm of the limit field to its closed form.

    Also checks, at five levels, that level^q times the superlevel measure
    of the field is level-independent.  The field's decay is exactly
    critical (gamma * q = n), so no tail certificate applies; a wide
    annulus keeps the truncation bias inside the comparison budget.
    """
    if grid is None:
        grid = identity_grid(e.n)
    closed = homog_weak_norm_closed(k, e)
    vals = homog_field_eval(HomogeneousField(k, e, signed=False), grid.points)
    numeric = weak_quasinorm(vals, grid.measures, e.q).value
    if closed == 0.0:
        rel = 0.0 if numeric == 0.0 else math.inf
    else:
        rel = abs(numeric - closed) / closed
    target = closed ** e.q
    level_errs = []
    for prod in level_products(k, e, IDENTITY_LEVELS):
        if target == 0.0:
            level_errs.append(0.0 if prod == 0.0 else math.inf)
        else:
            level_errs.append(abs(prod - target) / target)
    return IdentityReport(closed, numeric, rel, level_errs)


# ----------------------------------------------------------------------------
# Operator-norm sweeps

@dataclass
class SweepReport:
    value: float
    ratios: list = field(default_factory=list)    # (entry index, l1, weak norm, ratio)


def opnorm_lower_bound(op_kind: str, k: SphereKernel, e: Exponents, family,
                       grid: AnnulusGrid | None = None,
                       quad: QuadratureSpec | None = None,
                       workers: int = 1) -> SweepReport:
    """Best ratio ||A f|| / ||f||_1 over the family: an operator-norm lower bound."""
    if not family:
        raise ParameterError("family: must be nonempty")
    quad = quad or QuadratureSpec()
    if grid is None:
        grid = default_run_grid(e.n, 1.0)
    report = SweepReport(0.0)
    for i, f in enumerate(family):
        if f.l1 == 0.0:
            warnings.warn(f"opnorm_lower_bound: entry {i} has zero mass, skipped")
            continue
        vals = grid_apply(op_kind, k, e, f, grid, quad, workers)
        weak = weak_quasinorm(vals, grid.measures, e.q).value
        ratio = weak / f.l1
        report.ratios.append((i, f.l1, weak, ratio))
        report.value = max(report.value, ratio)
    return report


def young_monitor(k: SphereKernel, e: Exponents, family,
                  grid: AnnulusGrid | None = None,
                  quad: QuadratureSpec | None = None,
                  workers: int = 1) -> SweepReport:
    """Ratios ||T_|Omega| f|| / (closed-form field norm * ||f||_1).

    Monitors the weak-type convolution bound; the implicit constant is
    not pinned by theory, so the sweep records an empirical ceiling.
    """
    if not family:
        raise ParameterError("family: must be nonempty")
    quad = quad or QuadratureSpec()
    if grid is None:
        grid = default_run_grid(e.n, 1.0)
    closed = homog_weak_norm_closed(k, e)
    report = SweepReport(0.0)
    for i, f in enumerate(family):
        denom = closed * f.l1
        if f.l1 == 0.0:
            warnings.warn(f"young_monitor: entry {i} has zero mass, skipped")
            continue
        vals = grid_apply("T_abs", k, e, f, grid, quad, workers)
        weak = weak_quasinorm(vals, grid.measures, e.q).value
        if denom == 0.0:
            ratio = 0.0 if weak == 0.0 else math.inf
        else:
            ratio = weak / denom
        report.ratios.append((i, f.l1, weak, ratio))
        report.value = max(report.value, ratio)
    return report


# ----------------------------------------------------------------------------
# Convergence-type monitors

@dataclass
class TypeMetrics:
    t: float
    type1: float
    type2: dict = field(default_factory=dict)
    type3: dict = field(default_factory=dict)


def convergence_types(family: dict, target, lambdas, measures,
                      q: float) -> list:
    """Per-scale traces of the three convergence metrics.

    type-1: weak quasi-norm of the difference over the region; type-2:
    superlevel measure of the difference per level; type-3: absolute gap
    between the superlevel measures of the two fields per level.
    """
    target = np.asarray(target, dtype=float)
    measures = np.asarray(measures, dtype=float)
    if target.shape != measures.shape:
        raise ParameterError("target: field and region measures disagree")
    rows = []
    for t in sorted(family, reverse=True):
        vals = np.asarray(family[t], dtype=float)
        if vals.shape != target.shape:
            raise ParameterError("family: field grids disagree")
        diff = vals - target
        row = TypeMetrics(t, weak_quasinorm(diff, measures, q).value)
        for lam in lambdas:
            row.type2[lam] = distribution_measure(diff, measures, lam)
            row.type3[lam] = abs(
                distribution_measure(vals, measures, lam)
                - distribution_measure(target, measures, lam))
        rows.append(row)
    return rows


# ----------------------------------------------------------------------------
# Vector-valued runs

def vector_limit_run(op_kind: str, k: SphereKernel, e: Exponents,
                     vf: VectorTestFunction, rho: float, t_schedule,
                     grid: AnnulusGrid | None = None,
                     quad: QuadratureSpec | None = None,
                     workers: int = 1) -> LimitRun:
    """Limit run for the pointwise l^r composite of a finite family.

    Entries beyond the stored list are identically zero, so the cut-off
    tail of the l^r mass is exactly zero; the run records that bound.
    """
    quad = quad or QuadratureSpec()
    if grid is None:
        grid = default_run_grid(e.n, rho)
    ts = list(t_schedule)
    for f in vf.entries:
        _validate_schedule(ts, rho, f.support_radius)
    run = LimitRun(op_kind, rho, grid.r_max, ts, kernel=k, exps=e)
    run.lipschitz = lipschitz_estimate(k)
    moments = [float(np.max(np.abs(first_moment(f)))) for f in vf.entries]
    zero_moment = all(
        m <= MOMENT_TOLERANCE * max(1.0, f.l1 * f.support_radius)
        for m, f in zip(moments, vf.entries))
    gamma = (e.n - e.alpha) + (1.0 if zero_moment else 0.0)
    run.decay_gamma = gamma
    run.certified = gamma * e.q > e.n
    run.finite_tail_note = 0.0

    for t in ts:
        composite = vector_lr_field(op_kind, k, e, vf, grid, quad,
                                    subtract_limit=True, t=t, workers=workers)
        res = weak_quasinorm(composite, grid.measures, e.q)
        run.metrics.append(res.value)
        beta = beta_t(e, rho, t)
        run.betas.append(beta)
        run.bounds.append((1.0 + beta) * t + beta)
        outer = composite[grid.outer_mask]
        c_run = float(np.max(outer)) * grid.r_max ** gamma / t if outer.size else 0.0
        if run.certified:
            run.tail_certificates.append(
                tail_bound_weak(c_run * t, gamma, e.q, grid.r_max, e.n))
        else:
            run.tail_certificates.append(None)
    run.slope = _fit_slope(ts, run.metrics)
    return run


# ----------------------------------------------------------------------------
# Rough-kernel reduction

@dataclass
class ReductionRow:
    eps: float
    kernel_dist: float       # L^q sphere distance between kernel and mollification
    d_rough: float
    d_smooth: float
    cross_term: float        # weak norm of the operator with the residual kernel
    field_term: float        # mass times weak norm of the residual limit field
    holds: bool


def reduction_decomposition(k_rough: SphereKernel, eps_schedule, e: Exponents,
                            f: TestFunction, rho: float, t: float,
                            grid: AnnulusGrid | None = None,
                            quad: QuadratureSpec | None = None,
                            workers: int = 1) -> list:
    """Three-term mollification split of the limit metric for a rough kernel.

    For each cap radius eps the rough metric is compared against the
    smooth-kernel metric plus two residual-kernel corrections; the
    inequality holds with quasi-norm constant at most 4.
    """
    eps_list = list(eps_schedule)
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ParameterError("eps_schedule: must be strictly decreasing")
    quad = quad or QuadratureSpec()
    if grid is None:
        grid = default_run_grid(e.n, rho)
    _validate_schedule([t], rho, f.support_radius)
    mass = f.l1
    profile = normalize(f) if mass > 0 else f
    t_eff = t * f.support_radius
    q = e.q

    def metric(kernel):
        k_vals = homog_field_eval(HomogeneousField(kernel, e, signed=False),
                                  grid.points)
        diff = _difference_field("M", kernel, e, profile, mass, t_eff,
                                 k_vals, grid, quad, workers)
        return weak_quasinorm(diff, grid.measures, q).value

    d_rough = metric(k_rough)
    rows = []
    for eps in eps_list:
        k_eps = mollify_kernel(k_rough, eps)
        k_res = kernel_difference(k_rough, k_eps)
        d_smooth = metric(k_eps)
        cross_vals = mass * grid_apply("M", k_res, e,
                                       rescale(profile, t_eff), grid, quad,
                                       workers)
        cross = weak_quasinorm(cross_vals, grid.measures, q).value
        res_field = homog_field_eval(HomogeneousField(k_res, e, signed=False),
                                     grid.points)
        field_term = mass * weak_quasinorm(res_field, grid.measures, q).value
        rhs = 4.0 * (d_smooth + cross + field_term)
        rows.append(ReductionRow(
            eps, sphere_norm(k_res, q), d_rough, d_smooth, cross, field_term,
            d_rough <= rhs + 1e-9 * max(1.0, abs(rhs))))
    return rows
