"""Power-law limit fields Omega(x/|x|) / |x|^(n-alpha) and derived exponents.

The weak L^(q,infty) quasi-norm of such a field over all of R^n, with
q = n/(n-alpha), has an exact closed form: lambda^q times the measure of
the superlevel set {|field| > lambda} does not depend on lambda and equals
the q-th power of the kernel's sphere L^q norm divided by n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError
from .kernels import SphereKernel, eval_kernel_angle, sphere_norm

ALPHA_MARGIN = 1e-6


@dataclass(frozen=True)
class Exponents:
    """Dimension n, order alpha in (0, n), and the derived q = n/(n-alpha)."""

    n: int
    alpha: float

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ParameterError("n: dimension must be 1 or 2")
        if not ALPHA_MARGIN <= self.alpha <= self.n - ALPHA_MARGIN:
            raise ParameterError("alpha: must lie strictly inside (0, n)")

    @property
    def q(self) -> float:
        return self.n / (self.n - self.alpha)


@dataclass(frozen=True)
class HomogeneousField:
    kernel: SphereKernel
    exps: Exponents
    signed: bool = False

    def __post_init__(self):
        if self.kernel.dim != self.exps.n:
            raise ParameterError("dim: kernel and exponents disagree")


def homog_field_eval(field: HomogeneousField, x):
    """Omega(x/|x|) / |x|^(n-alpha), with |Omega| when the field is unsigned."""
    e = field.exps
    k = field.kernel
    x = np.asarray(x, dtype=float)
    if e.n == 1:
        radius = np.abs(x)
        if np.any(radius == 0.0):
            raise DomainError("homog_field_eval: x must be nonzero")
        omega = np.where(x > 0, k.coeffs[1], k.coeffs[0])
    else:
        radius = np.hypot(x[..., 0], x[..., 1])
        if np.any(radius == 0.0):
            raise DomainError("homog_field_eval: x must be nonzero")
        omega = eval_kernel_angle(k, np.arctan2(x[..., 1], x[..., 0]))
    if not field.signed:
        omega = np.abs(omega)
    out = omega * radius ** (e.alpha - e.n)
    return float(out) if out.ndim == 0 else out


def homog_weak_norm_closed(k: SphereKernel, e: Exponents) -> float:
    """Exact weak L^(q,infty) norm of the limit field over R^n."""
    if k.dim != e.n:
        raise ParameterError("dim: kernel and exponents disagree")
    q = e.q
    return (sphere_norm(k, q) ** q / e.n) ** (1.0 / q)


def level_products(k: SphereKernel, e: Exponents, lambdas,
                   nodes: int = 4096) -> list:
    """lambda^q times the superlevel measure of the field, per level.

    The measure of {|field| > lambda} over R^n is computed by angular
    quadrature of the per-direction cutoff radius; the products should all
    match sphere_norm(k, q)^q / n.
    """
    if k.dim != e.n:
        raise ParameterError("dim: kernel and exponents disagree")
    q = e.q
    out = []
    if e.n == 1:
        absv = np.abs(k.coeffs)
        for lam in lambdas:
            if lam <= 0:
                raise ParameterError("lambda: levels must be positive")
            r_cut = (absv / lam) ** (1.0 / (e.n - e.alpha))
            out.append(lam ** q * float(np.sum(r_cut ** e.n)) / e.n)
        return out
    theta = (np.arange(nodes) + 0.5) * (2.0 * math.pi / nodes)
    absv = np.abs(eval_kernel_angle(k, theta))
    for lam in lambdas:
        if lam <= 0:
            raise ParameterError("lambda: levels must be positive")
        r_cut = (absv / lam) ** (1.0 / (e.n - e.alpha))
        measure = float(np.mean(r_cut ** e.n)) * 2.0 * math.pi / e.n
        out.append(lam ** q * measure)
    return out


def beta_t(e: Exponents, rho: float, t: float) -> float:
    """Rate coefficient rho^(n-a) * ((rho-t)^(a-n) - (rho+t)^(a-n)).

    Controls how far the radius bracket [|x|-t, |x|+t] can move the
    power-law weight; admissible only for 0 < t < rho/2.
    """
    if rho <= 0:
        raise ParameterError("rho: exclusion radius must be positive")
    if not 0 < t < rho / 2:
        raise ParameterError("t: scale must lie in (0, rho/2)")
    p = e.n - e.alpha
    return rho ** p * ((rho - t) ** (-p) - (rho + t) ** (-p))
