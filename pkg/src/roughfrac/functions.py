"""Compactly supported test profiles on R^n with exact L^1 bookkeeping.

Every profile is a finite mixture of shifted closed-form components
(ball indicator, cone bump, truncated Gaussian) with signed weights.
The L^1 norm is exact: closed form when the mixture is sign-coherent or
its supports are disjoint, high-accuracy quadrature otherwise.  The
rescaling f_t(x) = t^-n f(x/t) acts on the representation in closed
form and leaves the stored L^1 norm untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate

from .errors import ParameterError

SHAPES = ("indicator", "cone", "gauss")


@dataclass(frozen=True)
class Component:
    kind: str
    weight: float
    radius: float                 # support radius (Rcut for gauss)
    shift: tuple                  # length-n center
    sigma: float = 0.0            # gauss only

    def unit_l1(self, dim: int) -> float:
        """L^1 norm of the unshifted, unit-weight profile."""
        r = self.radius
        if self.kind == "indicator":
            return 2.0 * r if dim == 1 else math.pi * r * r
        if self.kind == "cone":
            return r if dim == 1 else math.pi * r * r / 3.0
        if self.kind == "gauss":
            s = self.sigma
            if dim == 1:
                return s * math.sqrt(2.0 * math.pi) * math.erf(r / (s * math.sqrt(2.0)))
            return 2.0 * math.pi * s * s * (1.0 - math.exp(-r * r / (2.0 * s * s)))
        raise ParameterError(f"unknown shape kind {self.kind}")


@dataclass(frozen=True)
class TestFunction:
    """A signed mixture of shifted profiles; immutable."""

    dim: int
    components: tuple
    support_radius: float
    l1: float
    take_abs: bool = False


def _profile_values(comp: Component, dist):
    r = comp.radius
    dist = np.asarray(dist, dtype=float)
    if comp.kind == "indicator":
        return (dist <= r).astype(float)
    if comp.kind == "cone":
        return np.maximum(0.0, 1.0 - dist / r)
    vals = np.exp(-dist * dist / (2.0 * comp.sigma ** 2))
    return np.where(dist <= r, vals, 0.0)


def eval_test_function(f: TestFunction, x):
    """Pointwise values; vectorized over trailing point axes."""
    x = np.asarray(x, dtype=float)
    if f.dim == 1:
        total = np.zeros(x.shape)
        for c in f.components:
            total += c.weight * _profile_values(c, np.abs(x - c.shift[0]))
    else:
        if x.shape[-1] != 2:
            raise ParameterError("eval_test_function: expected shape (..., 2)")
        total = np.zeros(x.shape[:-1])
        for c in f.components:
            d = x - np.asarray(c.shift)
            total += c.weight * _profile_values(c, np.hypot(d[..., 0], d[..., 1]))
    if f.take_abs:
        total = np.abs(total)
    return float(total) if total.ndim == 0 else total


def _supports_disjoint(components) -> bool:
    for i, a in enumerate(components):
        for b in components[i + 1:]:
            gap = math.dist(a.shift, b.shift)
            if gap < a.radius + b.radius:
                return False
    return True


def _breakpoints_1d(components):
    pts = set()
    for c in components:
        pts.update((c.shift[0] - c.radius, c.shift[0], c.shift[0] + c.radius))
    return sorted(pts)


def _exact_l1_piecewise_linear_1d(components) -> float:
    # indicator and cone mixtures are piecewise linear between breakpoints;
    # endpoint values are extrapolated from interior samples so that closed
    # indicator boundaries cannot misclassify a piece
    total = 0.0
    pts = _breakpoints_1d(components)
    probe = TestFunction(1, tuple(components), 0.0, 0.0)
    for lo, hi in zip(pts[:-1], pts[1:]):
        h = hi - lo
        if h <= 0:
            continue
        v1 = float(eval_test_function(probe, lo + h / 3.0))
        v2 = float(eval_test_function(probe, lo + 2.0 * h / 3.0))
        va, vb = 2.0 * v1 - v2, 2.0 * v2 - v1
        if va * vb >= 0.0:
            total += 0.5 * (abs(va) + abs(vb)) * h
        else:
            tau = h * va / (va - vb)
            total += 0.5 * (abs(va) * tau + abs(vb) * (h - tau))
    return total


def _numeric_l1(dim, components) -> float:
    probe = TestFunction(dim, tuple(components), 0.0, 0.0)
    if dim == 1:
        pts = _breakpoints_1d(components)
        val, _ = integrate.quad(
            lambda y: abs(eval_test_function(probe, y)),
            pts[0], pts[-1], points=pts, limit=200,
            epsabs=1e-12, epsrel=1e-12)
        return val
    return _polar_l1_2d(components)


_GL16 = np.polynomial.legendre.leggauss(16)


def _angular_splits(components):
    """Ray-tangency and circle-intersection angles, where the radial
    piece structure of the mixture changes."""
    splits = {0.0}
    two_pi = 2.0 * math.pi
    for c in components:
        rho = math.hypot(*c.shift)
        if rho > c.radius > 0:
            phi = math.atan2(c.shift[1], c.shift[0])
            half = math.asin(min(1.0, c.radius / rho))
            splits.update(((phi - half) % two_pi, (phi + half) % two_pi))
    for i, a in enumerate(components):
        for b in components[i + 1:]:
            d = math.dist(a.shift, b.shift)
            if d == 0 or d >= a.radius + b.radius or d <= abs(a.radius - b.radius):
                continue
            along = (d * d + a.radius ** 2 - b.radius ** 2) / (2.0 * d)
            h2 = a.radius ** 2 - along ** 2
            if h2 <= 0:
                continue
            h = math.sqrt(h2)
            ux = (b.shift[0] - a.shift[0]) / d
            uy = (b.shift[1] - a.shift[1]) / d
            px, py = a.shift[0] + along * ux, a.shift[1] + along * uy
            for sgn in (1.0, -1.0):
                splits.add(math.atan2(py + sgn * h * ux,
                                      px - sgn * h * uy) % two_pi)
    return sorted(splits)


def _ray_pieces(components, cos_t, sin_t, r_max):
    cuts = {0.0, r_max}
    for c in components:
        proj = c.shift[0] * cos_t + c.shift[1] * sin_t
        disc = proj * proj - (c.shift[0] ** 2 + c.shift[1] ** 2) + c.radius ** 2
        if disc > 0:
            root = math.sqrt(disc)
            for r in (proj - root, proj + root):
                if 0.0 < r < r_max:
                    cuts.add(r)
    return sorted(cuts)


def _polar_l1_2d(components) -> float:
    """Exact polar integration of |mixture| for overlapping signed mixtures.

    Indicator-only radial pieces integrate exactly; smooth profiles use
    Gauss panels split at the sign changes of the mixture along the ray.
    """
    probe = TestFunction(2, tuple(components), 0.0, 0.0)
    r_max = max(math.hypot(*c.shift) + c.radius for c in components)
    angles = _angular_splits(components)
    two_pi = 2.0 * math.pi
    bounds = angles + [angles[0] + two_pi]
    xi, wts = _GL16

    def radial_integral(theta):
        cos_t, sin_t = math.cos(theta), math.sin(theta)
        cuts = _ray_pieces(components, cos_t, sin_t, r_max)
        total = 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            if b - a < 1e-15:
                continue
            mid = 0.5 * (a + b)
            point = np.array([mid * cos_t, mid * sin_t])
            live_smooth = any(
                c.kind != "indicator" and math.dist(point, c.shift) < c.radius
                for c in components)
            if not live_smooth:
                w_here = float(eval_test_function(probe, point))
                total += abs(w_here) * 0.5 * (b * b - a * a)
                continue
            rr = np.linspace(a, b, 33)
            gg = eval_test_function(
                probe, np.stack([rr * cos_t, rr * sin_t], axis=-1))
            sub = [a]
            for i in range(32):
                if gg[i] * gg[i + 1] < 0:
                    lo_r, hi_r = rr[i], rr[i + 1]
                    for _ in range(60):
                        mid_r = 0.5 * (lo_r + hi_r)
                        gm = float(eval_test_function(
                            probe, np.array([mid_r * cos_t, mid_r * sin_t])))
                        if gm * gg[i] <= 0:
                            hi_r = mid_r
                        else:
                            lo_r = mid_r
                    sub.append(0.5 * (lo_r + hi_r))
            sub.append(b)
            for lo_r, hi_r in zip(sub[:-1], sub[1:]):
                nodes = 0.5 * (hi_r + lo_r) + 0.5 * (hi_r - lo_r) * xi
                vals = np.abs(eval_test_function(
                    probe, np.stack([nodes * cos_t, nodes * sin_t], axis=-1)))
                total += 0.5 * (hi_r - lo_r) * float(np.sum(wts * nodes * vals))
        return total

    total = 0.0
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if hi - lo < 1e-14:
            continue
        panels = max(4, int(math.ceil((hi - lo) / two_pi * 128)))
        edges = np.linspace(lo, hi, panels + 1)
        for pa, pb in zip(edges[:-1], edges[1:]):
            nodes = 0.5 * (pa + pb) + 0.5 * (pb - pa) * xi
            vals = [radial_integral(float(th)) for th in nodes]
            total += 0.5 * (pb - pa) * float(np.sum(wts * vals))
    return total


def make_test_function(dim: int, components) -> TestFunction:
    """Assemble a mixture, computing its support radius and exact L^1 norm."""
    if dim not in (1, 2):
        raise ParameterError("dim: must be 1 or 2")
    comps = []
    for c in components:
        if c.kind not in SHAPES:
            raise ParameterError(f"shape: unknown kind {c.kind}")
        if c.radius <= 0:
            raise ParameterError("radius: must be positive")
        if c.kind == "gauss" and c.sigma <= 0:
            raise ParameterError("sigma: must be positive")
        if len(c.shift) != dim:
            raise ParameterError("shift: dimension mismatch")
        comps.append(c)
    comps = tuple(comps)
    support = max((math.hypot(*c.shift) if dim == 2 else abs(c.shift[0])) + c.radius
                  for c in comps)
    weights = [c.weight for c in comps]
    if all(w >= 0 for w in weights) or all(w <= 0 for w in weights) \
            or _supports_disjoint(comps):
        l1 = sum(abs(c.weight) * c.unit_l1(dim) for c in comps)
    elif dim == 1 and all(c.kind != "gauss" for c in comps):
        l1 = _exact_l1_piecewise_linear_1d(comps)
    else:
        l1 = _numeric_l1(dim, comps)
    return TestFunction(dim, comps, support, l1)


def indicator(radius: float, dim: int = 1, shift=None, weight: float = 1.0) -> TestFunction:
    shift = tuple(shift) if shift is not None else (0.0,) * dim
    return make_test_function(dim, [Component("indicator", weight, radius, shift)])


def cone(radius: float, dim: int = 1, shift=None, weight: float = 1.0) -> TestFunction:
    shift = tuple(shift) if shift is not None else (0.0,) * dim
    return make_test_function(dim, [Component("cone", weight, radius, shift)])


def gauss(sigma: float, rcut: float, dim: int = 1, shift=None,
          weight: float = 1.0) -> TestFunction:
    shift = tuple(shift) if shift is not None else (0.0,) * dim
    return make_test_function(dim, [Component("gauss", weight, rcut, shift, sigma)])


def l1_norm(f: TestFunction) -> float:
    return f.l1


def rescale(f: TestFunction, t: float) -> TestFunction:
    """The mass-preserving rescaling f_t(x) = t^-n f(x/t)."""
    if t <= 0:
        raise ParameterError("t: scale must be positive")
    factor = t ** (-f.dim)
    comps = tuple(
        replace(c, weight=c.weight * factor, radius=c.radius * t,
                shift=tuple(s * t for s in c.shift), sigma=c.sigma * t)
        for c in f.components)
    return TestFunction(f.dim, comps, f.support_radius * t, f.l1, f.take_abs)


def scale(f: TestFunction, c: float) -> TestFunction:
    """Multiply the function by the scalar c."""
    comps = tuple(replace(comp, weight=comp.weight * c) for comp in f.components)
    return TestFunction(f.dim, comps, f.support_radius, f.l1 * abs(c), f.take_abs)


def absolute(f: TestFunction) -> TestFunction:
    """|f|, sharing the support geometry and (by definition) the L^1 norm."""
    return replace(f, take_abs=True)


def normalize(f: TestFunction) -> TestFunction:
    """Unit-mass profile supported in the unit ball: rescale by 1/R, divide by the mass."""
    if f.l1 == 0:
        raise ParameterError("l1: cannot normalize the zero function")
    return scale(rescale(f, 1.0 / f.support_radius), 1.0 / f.l1)


def first_moment(f: TestFunction):
    """The vector integral of x*f(x); components are radially symmetric."""
    out = np.zeros(f.dim)
    for c in f.components:
        out += c.weight * c.unit_l1(f.dim) * np.asarray(c.shift)
    return out


@dataclass(frozen=True)
class VectorTestFunction:
    """A finite family {f_j} measured through the pointwise l^r magnitude."""

    entries: tuple
    r: float

    def __post_init__(self):
        if not self.entries:
            raise ParameterError("entries: need at least one function")
        if not 1 < self.r < math.inf:
            raise ParameterError("r: exponent must lie in (1, inf)")
        dims = {f.dim for f in self.entries}
        if len(dims) != 1:
            raise ParameterError("entries: mixed dimensions")

    @property
    def dim(self) -> int:
        return self.entries[0].dim


# ----------------------------------------------------------------------------
# Grammar

def _parse_shift(text: str, dim: int):
    text = text.strip()
    if text.startswith("(") and text.endswith(")"):
        parts = [float(v) for v in text[1:-1].split(",")]
    else:
        parts = [float(text)]
    if len(parts) != dim:
        raise ParameterError(f"shift: expected {dim} coordinates in '{text}'")
    return tuple(parts)


def _parse_single(text: str, dim: int, weight: float, shift) -> Component:
    head, sep, rest = text.partition(":")
    if not sep:
        raise ParameterError(f"function: unrecognized spec '{text}'")
    if head == "indicator":
        return Component("indicator", weight, float(rest), shift)
    if head == "cone":
        return Component("cone", weight, float(rest), shift)
    if head == "gauss":
        sigma, rcut = (float(v) for v in rest.split(","))
        return Component("gauss", weight, rcut, shift, sigma)
    raise ParameterError(f"function: unrecognized shape '{head}'")


def parse_function(spec: str, dim: int) -> TestFunction:
    """Parse the profile grammar used by configs and the command line.

    Forms: ``indicator:<R>``, ``cone:<R>``, ``gauss:<sigma>,<Rcut>`` and
    ``mix:<w1>*<shape1>@<shift1>;...`` where a shift is a number (n=1) or
    ``(x,y)`` (n=2).
    """
    spec = spec.strip()
    zero = (0.0,) * dim
    try:
        if not spec.startswith("mix:"):
            return make_test_function(dim, [_parse_single(spec, dim, 1.0, zero)])
        comps = []
        for entry in spec[4:].split(";"):
            entry = entry.strip()
            w_text, sep, rest = entry.partition("*")
            if not sep:
                raise ParameterError(f"function: bad mixture entry '{entry}'")
            body, at, shift_text = rest.rpartition("@")
            if at:
                shift = _parse_shift(shift_text, dim)
            else:
                body, shift = rest, zero
            comps.append(_parse_single(body, dim, float(w_text), shift))
        return make_test_function(dim, comps)
    except ParameterError:
        raise
    except ValueError as exc:
        raise ParameterError(f"function: cannot parse '{spec}' ({exc})") from exc
