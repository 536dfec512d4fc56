"""Finite compactly supported charges built from atoms, layers and grid densities.

A Measure is a finite list of components:

* ``Atom(point, weight)``
* ``SphereUniform(center, radius, total)`` -- uniform (or density-weighted)
  mass on a sphere
* ``BallUniform(center, radius, total)`` -- uniform mass on a solid ball
* ``GridDensity(grid, values)`` -- per-cell masses on a GridDomain

Integration is component-wise: atoms exactly, circle layers by periodic
trapezoid, d=3 plain sphere layers by seeded Monte-Carlo (2^16 samples),
density-weighted sphere layers by the product rule, ball layers by product
Gauss-Legendre, grid densities by midpoint.  Values are extended reals with
the 0*(+-inf)=0 convention; a -inf/+inf collision raises.

Measures are immutable after construction; integrate is pure, and the
Monte-Carlo streams are derived from (seed, component tag) so concurrent
calls are deterministic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import quadrature
from .geometry import Annulus, Ball, GridDomain
from .kernels import unit_ball_volume

__all__ = [
    "Atom",
    "SphereUniform",
    "BallUniform",
    "GridDensity",
    "Measure",
    "Mollifier",
    "integrate",
    "total_mass",
    "restrict",
    "jordan",
    "convolve_balayage",
]


class IndeterminateIntegral(ValueError):
    """Raised when positive and negative parts both diverge."""


@dataclass(frozen=True, eq=False)
class Atom:
    point: np.ndarray
    weight: float

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float))


@dataclass(frozen=True, eq=False)
class SphereUniform:
    """Mass `total` spread over the sphere |x - center| = radius.

    An optional density reweights the normalized surface measure; it is a
    vectorized callable on boundary points (used for Poisson kernels) and
    should average to 1 for `total` to be the actual mass.
    """

    center: np.ndarray
    radius: float
    total: float
    density: object = None
    density_spec: dict | None = None

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.radius <= 0:
            raise ValueError("sphere layer radius must be positive")


@dataclass(frozen=True, eq=False)
class BallUniform:
    center: np.ndarray
    radius: float
    total: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.radius <= 0:
            raise ValueError("ball layer radius must be positive")


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Per-cell masses on a grid; values[i] is the measure of cell i."""

    grid: GridDomain
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise ValueError("values shape must match the grid")
        vals = vals * self.grid.mask  # no mass outside the domain mask
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


Component = object  # Atom | SphereUniform | BallUniform | GridDensity


class Measure:
    """Finite signed Borel charge with compact support."""

    def __init__(self, dimension: int, components: list):
        self.dimension = int(dimension)
        self.components = tuple(components)
        for c in self.components:
            d = _component_dim(c)
            if d != self.dimension:
                raise ValueError(f"component dimension {d} != measure dimension {self.dimension}")

    def __add__(self, other: "Measure") -> "Measure":
        if other.dimension != self.dimension:
            raise ValueError("dimension mismatch")
        return Measure(self.dimension, list(self.components) + list(other.components))

    def scaled(self, a: float) -> "Measure":
        return Measure(self.dimension, [_scale_component(c, a) for c in self.components])

    def __rmul__(self, a: float) -> "Measure":
        return self.scaled(a)

    def __sub__(self, other: "Measure") -> "Measure":
        return self + other.scaled(-1.0)

    def support_points(self, coarse: int = 64) -> np.ndarray:
        """Representative support points (exact for atoms, sampled for layers)."""
        pts = []
        for c in self.components:
            if isinstance(c, Atom):
                pts.append(c.point[None, :])
            elif isinstance(c, SphereUniform):
                nodes, _ = quadrature.sphere_rule(self.dimension, coarse)
                pts.append(c.center[None, :] + c.radius * nodes)
            elif isinstance(c, BallUniform):
                nodes, _ = quadrature.ball_rule(self.dimension, 8, coarse)
                pts.append(c.center[None, :] + c.radius * nodes)
            elif isinstance(c, GridDensity):
                idx = np.argwhere(c.values != 0.0)
                if len(idx):
                    pts.append(c.grid.origin[None, :] + idx * c.grid.spacing)
        if not pts:
            return np.zeros((0, self.dimension))
        return np.vstack(pts)

    def support_radius(self, center=None) -> float:
        """Radius of a ball around `center` (default origin) containing the support."""
        center = np.zeros(self.dimension) if center is None else np.asarray(center, float)
        r = 0.0
        for c in self.components:
            if isinstance(c, Atom):
                r = max(r, float(np.linalg.norm(c.point - center)))
            elif isinstance(c, (SphereUniform, BallUniform)):
                r = max(r, float(np.linalg.norm(c.center - center)) + c.radius)
            elif isinstance(c, GridDensity):
                idx = np.argwhere(c.values != 0.0)
                if len(idx):
                    pts = c.grid.origin[None, :] + idx * c.grid.spacing
                    r = max(r, float(np.max(np.linalg.norm(pts - center, axis=1)))
                            + 0.5 * c.grid.spacing * math.sqrt(self.dimension))
        return r

    def atom_mass_at(self, points, tol: float = 1e-9) -> float:
        """Total atomic mass sitting on the given finite point set."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        mass = 0.0
        for c in self.components:
            if isinstance(c, Atom):
                if np.any(np.linalg.norm(pts - c.point[None, :], axis=1) <= tol):
                    mass += c.weight
        return mass

    def to_json(self) -> dict:
        return {"dimension": self.dimension,
                "components": [_component_to_json(c) for c in self.components]}

    @staticmethod
    def from_json(data: dict) -> "Measure":
        comps = [_component_from_json(c) for c in data["components"]]
        return Measure(int(data["dimension"]), comps)

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    def __repr__(self):
        kinds = ", ".join(type(c).__name__ for c in self.components)
        return f"Measure(d={self.dimension}, [{kinds}])"


def _component_dim(c) -> int:
    if isinstance(c, Atom):
        return c.point.size
    if isinstance(c, (SphereUniform, BallUniform)):
        return c.center.size
    if isinstance(c, GridDensity):
        return c.grid.dimension
    raise TypeError(f"unknown component {type(c).__name__}")


def _scale_component(c, a: float):
    if isinstance(c, Atom):
        return Atom(c.point, a * c.weight)
    if isinstance(c, SphereUniform):
        return SphereUniform(c.center, c.radius, a * c.total, c.density, c.density_spec)
    if isinstance(c, BallUniform):
        return BallUniform(c.center, c.radius, a * c.total)
    if isinstance(c, GridDensity):
        return GridDensity(c.grid, a * np.asarray(c.values))
    raise TypeError(type(c).__name__)


def _component_to_json(c) -> dict:
    if isinstance(c, Atom):
        return {"type": "atom", "point": c.point.tolist(), "weight": c.weight}
    if isinstance(c, SphereUniform):
        if c.density is not None and c.density_spec is None:
            raise ValueError("cannot serialize a sphere layer with an opaque density callable")
        return {"type": "sphere_uniform", "center": c.center.tolist(), "radius": c.radius,
                "total": c.total, "density_spec": c.density_spec}
    if isinstance(c, BallUniform):
        return {"type": "ball_uniform", "center": c.center.tolist(), "radius": c.radius,
                "total": c.total}
    if isinstance(c, GridDensity):
        return {"type": "grid_density", "grid": c.grid.to_json(),
                "values": np.asarray(c.values).ravel().tolist()}
    raise TypeError(type(c).__name__)


def _component_from_json(data: dict):
    t = data["type"]
    if t == "atom":
        return Atom(np.asarray(data["point"], float), float(data["weight"]))
    if t == "sphere_uniform":
        spec = data.get("density_spec")
        density = _density_from_spec(spec) if spec else None
        return SphereUniform(np.asarray(data["center"], float), float(data["radius"]),
                             float(data["total"]), density, spec)
    if t == "ball_uniform":
        return BallUniform(np.asarray(data["center"], float), float(data["radius"]),
                           float(data["total"]))
    if t == "grid_density":
        grid = GridDomain.from_json(data["grid"])
        vals = np.asarray(data["values"], float).reshape(grid.shape)
        return GridDensity(grid, vals)
    raise ValueError(f"unknown component type {t!r}")


def _density_from_spec(spec: dict):
    if spec["kind"] == "poisson":
        x = np.asarray(spec["x"], float)
        center = np.asarray(spec["center"], float)
        radius = float(spec["radius"])
        d = x.size

        def poisson(pts: np.ndarray) -> np.ndarray:
            pts = np.atleast_2d(pts)
            return (radius ** (d - 2) * (radius ** 2 - float(np.sum((x - center) ** 2)))
                    / np.linalg.norm(pts - x[None, :], axis=1) ** d)

        return poisson
    raise ValueError(f"unknown density spec {spec!r}")


# ---------------------------------------------------------------------------
# integration


def _eval_field(f, pts: np.ndarray) -> np.ndarray:
    """Evaluate a field-like object or plain callable on an (n, d) point stack."""
    ev = getattr(f, "evaluate_array", None)
    if ev is not None:
        return np.asarray(ev(pts), dtype=float)
    vals = f(pts)
    vals = np.asarray(vals, dtype=float)
    if vals.shape != (len(pts),):
        raise ValueError("field callable must map (n, d) points to (n,) values")
    return vals


class _ExtSum:
    """Extended-real accumulator with the 0*(+-inf) = 0 convention."""

    def __init__(self):
        self.finite = 0.0
        self.pos_inf = False
        self.neg_inf = False

    def add(self, x: float):
        if math.isnan(x):
            raise IndeterminateIntegral("indeterminate contribution (nan)")
        if x == math.inf:
            self.pos_inf = True
        elif x == -math.inf:
            self.neg_inf = True
        else:
            self.finite += x

    def add_weighted(self, weights: np.ndarray, values: np.ndarray):
        w = np.asarray(weights, float)
        v = np.asarray(values, float)
        live = w != 0.0  # zero-weight nodes never see the field value
        w, v = w[live], v[live]
        if np.any(np.isnan(v)):
            raise IndeterminateIntegral("field evaluated to nan on the support")
        inf_mask = np.isinf(v)
        if inf_mask.any():
            signs = np.sign(v[inf_mask]) * np.sign(w[inf_mask])
            if np.any(signs > 0):
                self.pos_inf = True
            if np.any(signs < 0):
                self.neg_inf = True
            w, v = w[~inf_mask], v[~inf_mask]
        self.finite += float(np.dot(w, v))

    def value(self) -> float:
        if self.pos_inf and self.neg_inf:
            raise IndeterminateIntegral("positive and negative parts both diverge")
        if self.pos_inf:
            return math.inf
        if self.neg_inf:
            return -math.inf
        return self.finite


def _layer_rule(c: SphereUniform, d: int, seed: int, tag: str):
    """Quadrature nodes/weights (mean-normalized) for a sphere layer."""
    if c.density is not None or d == 2:
        nodes, w = quadrature.sphere_rule(d)
    else:
        nodes = quadrature.sphere_mc_nodes(d, quadrature.SPHERE_MC_SAMPLES, seed, tag)
        w = np.full(len(nodes), 1.0 / len(nodes))
    pts = c.center[None, :] + c.radius * nodes
    if c.density is not None:
        w = w * _eval_field(c.density, pts)
    return pts, w


def integrate(mu: Measure, f, seed: int = 0) -> float:
    """Integral of a field against the charge, as an extended real.

    The field must be evaluable |mu|-a.e. on the support; -inf values are
    legal and propagate by the usual conventions.  `seed` feeds the d=3
    Monte-Carlo sphere streams only.
    """
    acc = _ExtSum()
    for i, c in enumerate(mu.components):
        if isinstance(c, Atom):
            if c.weight == 0.0:
                continue
            val = float(_eval_field(f, c.point[None, :])[0])
            if math.isinf(val):
                acc.add(math.copysign(math.inf, val * c.weight))
            else:
                acc.add(c.weight * val)
        elif isinstance(c, SphereUniform):
            pts, w = _layer_rule(c, mu.dimension, seed, f"sphere-mc-{i}")
            acc.add_weighted(c.total * w, _eval_field(f, pts))
        elif isinstance(c, BallUniform):
            nodes, w = quadrature.ball_rule(mu.dimension)
            pts = c.center[None, :] + c.radius * nodes
            acc.add_weighted(c.total * w, _eval_field(f, pts))
        elif isinstance(c, GridDensity):
            live = np.asarray(c.values) != 0.0
            if not live.any():
                continue
            pts = c.grid.origin[None, :] + np.argwhere(live) * c.grid.spacing
            acc.add_weighted(np.asarray(c.values)[live], _eval_field(f, pts))
        else:
            raise TypeError(type(c).__name__)
    return acc.value()


def total_mass(mu: Measure) -> float:
    """Sum of component masses (density-weighted layers by their quadrature)."""
    m = 0.0
    for c in mu.components:
        if isinstance(c, Atom):
            m += c.weight
        elif isinstance(c, SphereUniform):
            if c.density is None:
                m += c.total
            else:
                nodes, w = quadrature.sphere_rule(mu.dimension)
                pts = c.center[None, :] + c.radius * nodes
                m += c.total * float(np.dot(w, _eval_field(c.density, pts)))
        elif isinstance(c, BallUniform):
            m += c.total
        elif isinstance(c, GridDensity):
            m += float(np.sum(c.values))
    return m


# ---------------------------------------------------------------------------
# restriction / decomposition


def _concentric(c_center, S) -> bool:
    return bool(np.allclose(c_center, S.center, atol=1e-14))


def _layer_to_atoms(pts: np.ndarray, w: np.ndarray, total: float, keep: np.ndarray) -> list:
    return [Atom(p, total * wi) for p, wi, k in zip(pts, w, keep) if k and wi != 0.0]


def restrict(mu: Measure, S, complement: bool = False) -> Measure:
    """Restriction of the charge to S (or to its complement).

    Atoms and grid cells are kept or dropped by membership; ball layers are
    split analytically against concentric balls/annuli, other layer/domain
    pairs are clipped by their quadrature nodes (stratified node clouds).
    """
    out = []
    for i, c in enumerate(mu.components):
        if isinstance(c, Atom):
            inside = S.contains(c.point)
            if inside != complement:
                out.append(c)
        elif isinstance(c, BallUniform):
            out.extend(_restrict_ball(c, S, complement, mu.dimension))
        elif isinstance(c, SphereUniform):
            out.extend(_restrict_sphere(c, S, complement, mu.dimension))
        elif isinstance(c, GridDensity):
            keep = S.contains_array(c.grid.cell_centers())
            if complement:
                keep = ~keep
            vals = np.zeros(c.grid.shape)
            idx = np.argwhere(c.grid.mask)
            kept = idx[keep]
            vals[tuple(kept.T)] = np.asarray(c.values)[tuple(kept.T)]
            out.append(GridDensity(c.grid, vals))
    return Measure(mu.dimension, out)


def _restrict_ball(c: BallUniform, S, complement: bool, d: int) -> list:
    if isinstance(S, Ball) and _concentric(c.center, S):
        lo, hi = (S.radius, None) if complement else (None, S.radius)
        return _ball_shell(c, lo, hi, d)
    if isinstance(S, Annulus) and _concentric(c.center, S):
        if complement:
            inner = _ball_shell(c, None, S.r_in, d)
            outer = _ball_shell(c, S.r_out, None, d)
            return inner + outer
        return _ball_shell(c, S.r_in, S.r_out, d)
    nodes, w = quadrature.ball_rule(d, 32, 512)
    pts = c.center[None, :] + c.radius * nodes
    keep = S.contains_array(pts)
    if complement:
        keep = ~keep
    return _layer_to_atoms(pts, w, c.total, keep)


def _ball_shell(c: BallUniform, lo: float | None, hi: float | None, d: int) -> list:
    """Uniform-density slice {lo < |x-c| < hi} of a uniform ball, analytic."""
    density = c.total / (unit_ball_volume(d) * c.radius ** d)
    hi_r = c.radius if hi is None else min(hi, c.radius)
    lo_r = 0.0 if lo is None else min(lo, c.radius)
    if hi_r <= lo_r:
        return []
    parts = [BallUniform(c.center, hi_r, density * unit_ball_volume(d) * hi_r ** d)]
    if lo_r > 0.0:
        parts.append(BallUniform(c.center, lo_r, -density * unit_ball_volume(d) * lo_r ** d))
    return parts


def _restrict_sphere(c: SphereUniform, S, complement: bool, d: int) -> list:
    if isinstance(S, Ball) and _concentric(c.center, S):
        inside = c.radius < S.radius
        return [c] if inside != complement else []
    if isinstance(S, Annulus) and _concentric(c.center, S):
        inside = S.r_in < c.radius < S.r_out
        return [c] if inside != complement else []
    if c.density is not None or d == 2:
        nodes, w = quadrature.sphere_rule(d)
    else:
        nodes, w = quadrature.sphere_rule(d, 16384)
    pts = c.center[None, :] + c.radius * nodes
    if c.density is not None:
        w = w * _eval_field(c.density, pts)
    keep = S.contains_array(pts)
    if complement:
        keep = ~keep
    return _layer_to_atoms(pts, w, c.total, keep)


def jordan(mu: Measure) -> tuple:
    """Jordan decomposition (mu+, mu-) by the sign of weights/values."""
    pos, neg = [], []
    for c in mu.components:
        if isinstance(c, Atom):
            (pos if c.weight >= 0 else neg).append(Atom(c.point, abs(c.weight)))
        elif isinstance(c, SphereUniform):
            target = pos if c.total >= 0 else neg
            target.append(SphereUniform(c.center, c.radius, abs(c.total), c.density,
                                        c.density_spec))
        elif isinstance(c, BallUniform):
            (pos if c.total >= 0 else neg).append(BallUniform(c.center, c.radius, abs(c.total)))
        elif isinstance(c, GridDensity):
            vals = np.asarray(c.values)
            pos.append(GridDensity(c.grid, np.maximum(vals, 0.0)))
            neg.append(GridDensity(c.grid, np.maximum(-vals, 0.0)))
    return Measure(mu.dimension, pos), Measure(mu.dimension, neg)


# ---------------------------------------------------------------------------
# mollification / convolution-smoothing


@dataclass(frozen=True)
class Mollifier:
    """Radial probability bump (1 - |x/r|^2)^4 on B(0, r), normalized in closed form.

    C^3 at the rim; smooth enough for every test in this package (nothing
    differentiates it more than twice).
    """

    radius: float
    dimension: int = 2

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("mollifier radius must be positive")

    @property
    def normalizer(self) -> float:
        # int_{B_r} (1-|x/r|^2)^4 dx = 24 pi^(d/2) r^d / Gamma(d/2 + 5)
        d = self.dimension
        return math.gamma(d / 2.0 + 5.0) / (24.0 * math.pi ** (d / 2.0) * self.radius ** d)

    def density(self, pts: np.ndarray, center=None) -> np.ndarray:
        pts = np.atleast_2d(pts)
        c = np.zeros(self.dimension) if center is None else np.asarray(center, float)
        u2 = np.sum((pts - c[None, :]) ** 2, axis=1) / self.radius ** 2
        body = np.clip(1.0 - u2, 0.0, None) ** 4
        return self.normalizer * body

    def mass(self) -> float:
        """Mass under the module's ball quadrature (1 up to rule exactness)."""
        nodes, w = quadrature.ball_rule(self.dimension)
        vol = unit_ball_volume(self.dimension) * self.radius ** self.dimension
        vals = self.density(self.radius * nodes)
        return vol * float(np.dot(w, vals))


def _source_atoms(mu: Measure, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Flatten a measure to a weighted atom cloud for convolution purposes."""
    pts, wts = [], []
    for c in mu.components:
        if isinstance(c, Atom):
            pts.append(c.point[None, :])
            wts.append(np.array([c.weight]))
        elif isinstance(c, SphereUniform):
            nodes, w = quadrature.sphere_rule(d, 1024 if d == 2 else 1024)
            p = c.center[None, :] + c.radius * nodes
            if c.density is not None:
                w = w * _eval_field(c.density, p)
            pts.append(p)
            wts.append(c.total * w)
        elif isinstance(c, BallUniform):
            nodes, w = quadrature.ball_rule(d, 16, 128)
            pts.append(c.center[None, :] + c.radius * nodes)
            wts.append(c.total * w)
        elif isinstance(c, GridDensity):
            live = np.asarray(c.values) != 0.0
            pts.append(c.grid.origin[None, :] + np.argwhere(live) * c.grid.spacing)
            wts.append(np.asarray(c.values)[live])
    return np.vstack(pts), np.concatenate(wts)


def convolve_balayage(mu: Measure, smoother, O, cells_per_radius: int = 8) -> Measure:
    """Smooth a charge by a Jensen/Arens-Singer family or a single Mollifier.

    With a Mollifier the result is a GridDensity (each source unit of mass
    becomes a translated bump); with a point->Measure family the result is
    the pushed component list (atomic sources only).  The support condition
    requires each pushed measure to fit inside B(x, dist(supp mu, bd O)/2).
    """
    d = mu.dimension
    radius_budget = _support_margin(mu, O) / 2.0

    if isinstance(smoother, Mollifier):
        if smoother.radius >= radius_budget:
            raise ValueError(
                f"support condition violated: mollifier radius {smoother.radius} "
                f">= dist(supp, boundary)/2 = {radius_budget}")
        pts, wts = _source_atoms(mu, d)
        return Measure(d, [_bumps_on_grid(pts, wts, smoother, cells_per_radius)])

    # point -> Measure family; atomic sources only
    out = []
    for c in mu.components:
        if not isinstance(c, Atom):
            raise ValueError("measure-family smoothing is implemented for atomic charges")
        iota = smoother(c.point)
        if iota.support_radius(c.point) >= radius_budget:
            raise ValueError("support condition violated for the family measure at an atom")
        out.extend(iota.scaled(c.weight).components)
    return Measure(d, out)


def _support_margin(mu: Measure, O) -> float:
    pts = mu.support_points()
    if isinstance(O, Ball):
        return float(O.radius - np.max(np.linalg.norm(pts - O.center[None, :], axis=1)))
    if isinstance(O, Annulus):
        r = np.linalg.norm(pts - O.center[None, :], axis=1)
        return float(min(np.min(r) - O.r_in, O.r_out - np.max(r)))
    raise TypeError("support margin implemented for Ball/Annulus ambient sets")


def _bumps_on_grid(pts: np.ndarray, wts: np.ndarray, moll: Mollifier,
                   cells_per_radius: int) -> GridDensity:
    d = pts.shape[1]
    h = moll.radius / cells_per_radius
    lo = pts.min(axis=0) - moll.radius - h
    # align the lattice to the first source point; a lattice-symmetric bump
    # has vanishing discrete multipole moments (cleaner far field)
    lo = pts[0] - h * np.ceil((pts[0] - lo) / h)
    hi = pts.max(axis=0) + moll.radius + h
    shape = tuple(int(math.ceil((hi[k] - lo[k]) / h)) + 1 for k in range(d))
    grid = GridDomain(lo, h, np.ones(shape, dtype=bool))
    values = np.zeros(shape)

    gl_nodes, gl_w = quadrature.gauss_legendre_cell(d, 3)
    reach = cells_per_radius + 1
    for p, w in zip(pts, wts):
        if w == 0.0:
            continue
        base = np.rint((p - lo) / h).astype(int)
        slices, offsets = [], []
        for k in range(d):
            a = max(0, base[k] - reach)
            b = min(shape[k] - 1, base[k] + reach)
            slices.append(slice(a, b + 1))
            offsets.append(np.arange(a, b + 1))
        centers = np.stack(np.meshgrid(*offsets, indexing="ij"), axis=-1).reshape(-1, d) * h \
            + lo[None, :]
        # per-cell Gauss-Legendre mass of the translated bump, then exact rescale
        sample = centers[:, None, :] + h * gl_nodes[None, :, :]
        dens = moll.density(sample.reshape(-1, d), center=p).reshape(len(centers), -1)
        cell_mass = (dens @ gl_w) * h ** d
        s = cell_mass.sum()
        if s <= 0.0:
            raise ValueError("mollifier bump lost under the grid resolution")
        patch = (w / s) * cell_mass
        values[tuple(slices)] += patch.reshape([len(o) for o in offsets])
    return GridDensity(grid, values)
