"""Green functions, harmonic measures and Jensen measure constructors for balls.

Only balls in d = 2, 3 get closed-form Green models (image charges); other
domains route through the grid machinery in `fields`.  Harmonic measures
are Poisson-kernel densities on the boundary sphere, and the Jensen
constructors certify their output against the standard subharmonic probe
family before returning it.
"""

from __future__ import annotations

import math

import numpy as np

from .fields import ScalarField
from .geometry import Ball
from .kernels import KernelConfig
from .measures import Atom, Measure, Mollifier, SphereUniform, convolve_balayage

__all__ = [
    "GreenModel",
    "green_ball",
    "mg_constant",
    "harmonic_measure",
    "jensen_measure_family",
]


class GreenModel(ScalarField):
    """Extended Green function of a ball with a designated pole, zero outside."""

    def __init__(self, domain: Ball, pole, cfg: KernelConfig):
        ScalarField.__init__(self, self._evaluate, domain=None, kind="analytic-form")
        # the Green domain; field evaluation itself is global (0 outside)
        self.domain = domain
        self.pole = np.asarray(pole, dtype=float)
        self.cfg = cfg

    def _evaluate(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        c, R, a = self.domain.center, self.domain.radius, self.pole
        d = self.cfg.d
        x = pts - c[None, :]
        b = a - c
        rho = np.linalg.norm(b)
        r_xa = np.linalg.norm(pts - a[None, :], axis=1)
        out = np.zeros(len(pts))
        inside = np.linalg.norm(x, axis=1) <= R
        with np.errstate(divide="ignore", invalid="ignore"):
            if d == 2:
                if rho == 0.0:
                    vals = np.log(R / r_xa)
                else:
                    image = c + (R ** 2 / rho ** 2) * b
                    r_im = np.linalg.norm(pts - image[None, :], axis=1)
                    vals = np.log((rho * r_im) / (R * r_xa))
            elif d == 3:
                if rho == 0.0:
                    vals = 1.0 / r_xa - 1.0 / R
                else:
                    image = c + (R ** 2 / rho ** 2) * b
                    r_im = np.linalg.norm(pts - image[None, :], axis=1)
                    vals = 1.0 / r_xa - (R / rho) / r_im
            else:
                raise NotImplementedError("Green models are built for d in {2, 3}")
        vals = np.where(r_xa == 0.0, math.inf, vals)
        out[inside] = vals[inside]
        return out

    def harmonic_off_pole_report(self, probes, tol: float = 1e-8):
        """Mean-value equality |g(x) - sphere mean| at probes away from the pole."""
        from .fields import sphere_average

        worst = 0.0
        for x, r in probes:
            worst = max(worst, abs(self(np.asarray(x)) - sphere_average(self, x, r)))
        return worst <= tol, worst

    def designate_core(self, S_o: Ball, n_boundary: int = 720) -> "GreenModel":
        """Attach a designated core S_o and its constant M_g to the model."""
        self.S_o = S_o
        self.M_g = mg_constant(self, S_o, n_boundary)
        return self


def green_ball(center, radius: float, pole, d: int) -> GreenModel:
    """Closed-form Green model for B(center, radius) with an interior pole."""
    ball = Ball(np.asarray(center, dtype=float), float(radius))
    pole = np.asarray(pole, dtype=float)
    if not ball.contains(pole):
        raise ValueError("pole must lie strictly inside the ball")
    if d not in (2, 3):
        raise NotImplementedError("Green models are built for d in {2, 3}")
    if pole.size != d:
        raise ValueError("pole dimension mismatch")
    return GreenModel(ball, pole, KernelConfig(d))


def mg_constant(green: GreenModel, S_o: Ball, n_boundary: int = 720) -> float:
    """Minimum of the Green function over the boundary of S_o (strictly positive)."""
    if not S_o.contains(green.pole):
        raise ValueError("the pole must lie in the interior of S_o")
    pts = S_o.boundary_points(n_boundary)
    if not np.all(green.domain.contains_array(pts)):
        raise ValueError("S_o must be compactly contained in the Green domain")
    m = float(np.min(green.evaluate_array(pts)))
    if m <= 0.0:
        raise ValueError(f"geometry violation: inf of g over the S_o boundary is {m}")
    return m


def harmonic_measure(green: GreenModel, x) -> Measure:
    """Harmonic measure of the ball at x: Poisson-kernel density on the sphere."""
    x = np.asarray(x, dtype=float)
    ball = green.domain
    if not ball.contains(x):
        raise ValueError("harmonic measure requires x inside the ball")
    d = green.cfg.d
    spec = {"kind": "poisson", "x": x.tolist(), "center": ball.center.tolist(),
            "radius": ball.radius}
    if np.allclose(x, ball.center):
        comp = SphereUniform(ball.center, ball.radius, 1.0)
    else:
        comp = SphereUniform(ball.center, ball.radius, 1.0,
                             density=_poisson_density(ball, x), density_spec=spec)
    return Measure(d, [comp])


def _poisson_density(ball: Ball, x: np.ndarray):
    d = x.size
    dist2 = float(np.sum((x - ball.center) ** 2))
    R = ball.radius

    def density(pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return R ** (d - 2) * (R ** 2 - dist2) / np.linalg.norm(pts - x[None, :], axis=1) ** d

    return density


def jensen_measure_family(D: Ball, x, kind: str, *, a: float = 0.0, b: float = 1.0,
                          r: float = 0.3, sub_balls: list | None = None,
                          certify: bool = True, seed: int = 0) -> Measure:
    """Construct a Jensen measure for x in D of the requested kind.

    kind 'mixture': a*delta_x + b*omega_D(x, .) with a+b = 1, a, b >= 0.
    kind 'mollified': the radial bump alpha_r (orthogonally invariant).
    kind 'sub-balls': sum of b_k * omega_{D_k}(x, .) over sub-balls of D.

    The output is certified against the standard subharmonic probe family
    (kernels centered on a ring outside D plus inside probes, and the
    constants +-1); a certification failure raises.
    """
    x = np.asarray(x, dtype=float)
    d = x.size
    if kind == "mixture":
        if a < 0 or b < 0 or abs(a + b - 1.0) > 1e-12:
            raise ValueError("mixture weights must satisfy a, b >= 0 and a + b = 1")
        parts = []
        if a > 0:
            parts.append(Atom(x, a))
        if b > 0:
            green = green_ball(D.center, D.radius, x, d)
            parts.extend(harmonic_measure(green, x).scaled(b).components)
        mu = Measure(d, parts)
    elif kind == "mollified":
        if not D.contains(x, margin=r):
            raise ValueError("mollifier ball must stay inside D")
        moll = Mollifier(r, d)
        delta = Measure(d, [Atom(x, 1.0)])
        mu = convolve_balayage(delta, moll, Ball(D.center, D.radius))
    elif kind == "sub-balls":
        if not sub_balls:
            raise ValueError("sub-balls kind needs a list of (Ball, weight)")
        total = sum(w for _, w in sub_balls)
        if abs(total - 1.0) > 1e-12 or any(w < 0 for _, w in sub_balls):
            raise ValueError("sub-ball weights must be positive and sum to 1")
        parts = []
        for ball, w in sub_balls:
            if not ball.contains(x):
                raise ValueError("every sub-ball must contain x")
            green = green_ball(ball.center, ball.radius, x, d)
            parts.extend(harmonic_measure(green, x).scaled(w).components)
        mu = Measure(d, parts)
    else:
        raise ValueError(f"unknown kind {kind!r}")

    if certify:
        from .balayage import check_linear, standard_jensen_family

        family = standard_jensen_family(D, x, seed=seed)
        verdict = check_linear(Measure(d, [Atom(x, 1.0)]), mu, family, seed=seed)
        if not verdict.passed:
            raise ValueError(f"Jensen certification failed: {verdict.witness} "
                             f"margin {verdict.worst_margin:.3g}")
    return mu
