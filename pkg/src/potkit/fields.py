"""Scalar fields: averages, subharmonicity probes, Riesz recovery and gluing.

Fields are immutable wrappers around vectorized evaluators mapping (n, d)
point stacks to (n,) extended-real values.  Probe checks and quadratures
are pure; the layer solver works on a private grid and hands back an
immutable field.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import quadrature
from .geometry import Annulus, Ball, GridDomain
from .kernels import riesz_normalizer, k_eval_array
from .measures import GridDensity, Measure

__all__ = [
    "ScalarField",
    "GridField",
    "GluingSpec",
    "GlueError",
    "DomainError",
    "sphere_average",
    "ball_average",
    "check_subharmonic",
    "riesz_measure",
    "glue_max",
    "glue_quantitative",
    "glue_with_green",
    "harmonize_layer",
    "fit_pole_coefficient",
    "random_probes",
]


class DomainError(ValueError):
    pass


class GlueError(ValueError):
    """Raised when a sampled boundary-compatibility inequality fails."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class ScalarField:
    """Evaluable extended-real function on a domain."""

    def __init__(self, evaluator, domain=None, kind: str = "analytic-form"):
        self._evaluator = evaluator
        self.domain = domain
        self.kind = kind

    def evaluate_array(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.asarray(self._evaluator(pts), dtype=float)

    def __call__(self, x) -> float:
        return float(self.evaluate_array(np.atleast_2d(np.asarray(x, dtype=float)))[0])

    @staticmethod
    def constant(c: float, domain=None) -> "ScalarField":
        return ScalarField(lambda pts: np.full(len(pts), float(c)), domain)

    @staticmethod
    def log_distance(p, coefficient: float = 1.0, domain=None) -> "ScalarField":
        """coefficient * ln|x - p| (subharmonic on R^2, harmonic off p)."""
        p = np.asarray(p, dtype=float)

        def _eval(pts):
            r = np.linalg.norm(pts - p[None, :], axis=1)
            with np.errstate(divide="ignore"):
                return coefficient * np.log(r)

        return ScalarField(_eval, domain)

    @staticmethod
    def kernel(d: int, y, sign: float = 1.0, domain=None) -> "ScalarField":
        """sign * K_{d-2}(x, y) as a field of x."""
        y = np.asarray(y, dtype=float)

        def _eval(pts):
            r = np.linalg.norm(pts - y[None, :], axis=1)
            out = np.full(len(pts), -math.inf if d >= 2 else 0.0)
            ok = r > 0
            out[ok] = k_eval_array(d - 2, r[ok])
            return sign * out

        return ScalarField(_eval, domain)

    def __add__(self, other) -> "ScalarField":
        other = as_field(other)
        return ScalarField(lambda pts: self.evaluate_array(pts) + other.evaluate_array(pts),
                           self.domain, self.kind)

    def __rmul__(self, a: float) -> "ScalarField":
        return ScalarField(lambda pts: a * self.evaluate_array(pts), self.domain, self.kind)

    def __sub__(self, other) -> "ScalarField":
        return self + (-1.0) * as_field(other)

    def maximum(self, other) -> "ScalarField":
        other = as_field(other)
        return ScalarField(lambda pts: np.maximum(self.evaluate_array(pts),
                                                  other.evaluate_array(pts)),
                           self.domain, self.kind)


def as_field(f) -> ScalarField:
    if isinstance(f, ScalarField):
        return f
    if isinstance(f, (int, float)):
        return ScalarField.constant(float(f))
    if callable(f):
        return ScalarField(f)
    raise TypeError(f"cannot interpret {type(f).__name__} as a field")


class GridField(ScalarField):
    """Field sampled at the cell centers of a GridDomain, interpolated linearly."""

    def __init__(self, grid: GridDomain, values: np.ndarray, domain=None):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            raise ValueError("values shape must match the grid")
        self.grid = grid
        self.values = values

        def _eval(pts):
            coords = (pts - grid.origin[None, :]).T / grid.spacing
            return ndimage.map_coordinates(values, coords, order=1, mode="nearest")

        super().__init__(_eval, domain if domain is not None else grid, kind="grid")

    def to_json(self) -> dict:
        return {"grid": self.grid.to_json(), "values": self.values.ravel().tolist()}

    @staticmethod
    def from_json(data: dict) -> "GridField":
        grid = GridDomain.from_json(data["grid"])
        vals = np.asarray(data["values"], float).reshape(grid.shape)
        return GridField(grid, vals)

    @staticmethod
    def sample(field: ScalarField, grid: GridDomain) -> "GridField":
        centers = grid.origin[None, :] + np.indices(grid.shape).reshape(grid.dimension, -1).T \
            * grid.spacing
        vals = field.evaluate_array(centers).reshape(grid.shape)
        return GridField(grid, vals)


# ---------------------------------------------------------------------------
# averages and probes


def _require_inside(domain, pts: np.ndarray, what: str):
    if domain is None:
        return
    if not np.all(domain.contains_array(pts)):
        raise DomainError(f"{what} leaves the field's domain")


def sphere_average(v: ScalarField, x, r: float, n: int | None = None) -> float:
    """Mean of v over the sphere of radius r about x."""
    x = np.asarray(x, dtype=float)
    nodes, w = quadrature.sphere_rule(x.size, n)
    pts = x[None, :] + r * nodes
    _require_inside(v.domain, pts, "probe sphere")
    vals = v.evaluate_array(pts)
    if np.any(np.isneginf(vals)):
        return -math.inf
    return float(np.dot(w, vals))


def ball_average(v: ScalarField, x, r: float, n_radial: int | None = None) -> float:
    """Mean of v over the solid ball of radius r about x."""
    x = np.asarray(x, dtype=float)
    nodes, w = quadrature.ball_rule(x.size, n_radial)
    pts = x[None, :] + r * nodes
    _require_inside(v.domain, pts, "probe ball")
    vals = v.evaluate_array(pts)
    if np.any(np.isneginf(vals)):
        return -math.inf
    return float(np.dot(w, vals))


@dataclass
class ProbeRow:
    x: np.ndarray
    r: float
    value: float
    average: float
    margin: float
    passed: bool


class SubharmonicReport:
    """Outcome of sub-mean-value probes; failures are carried, not raised."""

    def __init__(self, rows: list, tol: float):
        self.rows = rows
        self.tol = tol

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def violations(self) -> list:
        return [r for r in self.rows if not r.passed]

    def worst_margin(self) -> float:
        finite = [r.margin for r in self.rows if math.isfinite(r.margin)]
        return max(finite) if finite else -math.inf

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "r", "value", "average", "margin", "pass"])
            for row in self.rows:
                writer.writerow([" ".join(f"{c:.12g}" for c in row.x), row.r,
                                 row.value, row.average, row.margin, int(row.passed)])


def check_subharmonic(v: ScalarField, probes, tol: float = 1e-6,
                      n_nodes: int | None = None) -> SubharmonicReport:
    """Sub-mean-value test v(x) <= sphere mean + tol at each (point, radius) probe."""
    rows = []
    for x, r in probes:
        x = np.asarray(x, dtype=float)
        val = v(x)
        avg = sphere_average(v, x, r, n_nodes)
        margin = val - avg  # positive margin beyond tol = violation
        rows.append(ProbeRow(x, r, val, avg, margin, bool(margin <= tol)))
    return SubharmonicReport(rows, tol)


def random_probes(domain, n: int, seed: int, r_lo: float | None = None) -> list:
    """Seeded probe set: points in the domain, radii in [2h, dist(x, bd)/2]."""
    rng = quadrature.rng_for(seed, "probes")
    if isinstance(domain, Ball):
        lo = domain.center - domain.radius
        hi = domain.center + domain.radius
    elif isinstance(domain, Annulus):
        lo = domain.center - domain.r_out
        hi = domain.center + domain.r_out
    else:
        raise TypeError("random probes implemented for Ball/Annulus")
    probes = []
    floor = 1e-3 if r_lo is None else r_lo
    while len(probes) < n:
        x = lo + (hi - lo) * rng.random(domain.dimension)
        if not domain.contains(x):
            continue
        gap = _boundary_distance(domain, x)
        if gap / 2.0 <= floor:
            continue
        r = floor + (gap / 2.0 - floor) * rng.random()
        probes.append((x, float(r)))
    return probes


def _boundary_distance(domain, x) -> float:
    x = np.asarray(x, dtype=float)
    if isinstance(domain, Ball):
        return float(domain.radius - np.linalg.norm(x - domain.center))
    if isinstance(domain, Annulus):
        rho = float(np.linalg.norm(x - domain.center))
        return min(rho - domain.r_in, domain.r_out - rho)
    raise TypeError(type(domain).__name__)


# ---------------------------------------------------------------------------
# Riesz measure by discrete Laplacian


def riesz_measure(v, grid: GridDomain | None = None) -> Measure:
    """Recover c_d * (distributional Laplacian) as per-cell masses on a grid.

    Uses the 5-point (d=2) / 7-point (d=3) stencil on interior cells; the
    boundary ring is excluded.  Cells whose stencil touches a non-finite
    value are flagged on the result as ``singular_cells`` and excluded.
    """
    if grid is None:
        if not isinstance(v, GridField):
            raise ValueError("need a GridField or an explicit grid")
        grid, values = v.grid, v.values
    else:
        values = GridField.sample(v, grid).values
    d = grid.dimension
    h = grid.spacing
    finite = np.isfinite(values) & grid.mask

    interior = ndimage.binary_erosion(grid.mask, ndimage.generate_binary_structure(d, 1),
                                      border_value=0)
    lap = np.zeros(grid.shape)
    stencil_ok = interior.copy()
    neighbor_sum = np.zeros(grid.shape)
    for axis in range(d):
        for step in (-1, 1):
            shifted = np.roll(values, step, axis=axis)
            ok = np.roll(finite, step, axis=axis)
            neighbor_sum += np.where(ok, shifted, 0.0)
            stencil_ok &= ok
    stencil_ok &= finite
    lap[stencil_ok] = (neighbor_sum[stencil_ok] - 2 * d * values[stencil_ok]) / h ** 2

    singular = np.argwhere(interior & ~stencil_ok)
    masses = riesz_normalizer(d) * lap * h ** d
    masses[~stencil_ok] = 0.0
    mu = Measure(d, [GridDensity(grid, masses)])
    mu.singular_cells = [tuple(ix) for ix in singular]
    return mu


# ---------------------------------------------------------------------------
# gluing


@dataclass
class GluingSpec:
    """Data for the gluing constructions; `g` is only used by the quantitative form."""

    O: object
    O0: object
    v: ScalarField
    v0: ScalarField | None = None
    g: ScalarField | None = None
    m_v: float = 0.0
    M_v: float = 0.0
    m_g: float = 0.0
    M_g: float = 1.0


class _UnionDomain:
    def __init__(self, a, b):
        self.a, self.b = a, b
        self.dimension = a.dimension

    def contains(self, x, margin: float = 0.0) -> bool:
        return self.a.contains(x, margin) or self.b.contains(x, margin)

    def contains_array(self, pts, margin: float = 0.0) -> np.ndarray:
        return self.a.contains_array(pts, margin) | self.b.contains_array(pts, margin)


def _offset_directions(d: int) -> np.ndarray:
    if d == 2:
        return quadrature.circle_nodes(8)
    return quadrature.sphere_spiral_nodes(8)


def _approx_limsup(field: ScalarField, x: np.ndarray, inside, h: float):
    """Boundary limsup surrogate from inward offsets at distances {h, 2h}.

    Per admissible direction the two samples are linearly extrapolated to
    the boundary point (killing the O(h) drift of a raw max); the returned
    slack is the largest directional increment, a data-driven allowance for
    the surrogate's residual error.
    """
    dirs = _offset_directions(x.size)
    near = x[None, :] + h * dirs
    far = x[None, :] + 2 * h * dirs
    ok = inside.contains_array(near) & inside.contains_array(far)
    if not ok.any():
        keep = inside.contains_array(near)
        if not keep.any():
            return -math.inf, 0.0
        return float(np.max(field.evaluate_array(near[keep]))), 0.0
    f1 = field.evaluate_array(near[ok])
    f2 = field.evaluate_array(far[ok])
    est = float(np.max(2.0 * f1 - f2))
    slack = float(np.max(np.abs(f1 - f2)))
    return est, slack


class _Intersection:
    def __init__(self, a, b):
        self.a, self.b = a, b
        self.dimension = a.dimension

    def contains_array(self, pts, margin: float = 0.0):
        return self.a.contains_array(pts, margin) & self.b.contains_array(pts, margin)

    def contains(self, x, margin: float = 0.0):
        return self.a.contains(x, margin) and self.b.contains(x, margin)


def _boundary_in(region, other, n: int) -> np.ndarray:
    pts = region.boundary_points(n)
    keep = other.contains_array(pts)
    return pts[keep]


def glue_max(spec: GluingSpec, n_boundary: int = 256, tol: float = 1e-6,
             offset_scale: float = 1e-3) -> ScalarField:
    """Two-sided gluing: v0 on O0\\O, max{v0, v} on the overlap, v on O\\O0.

    The boundary-compatibility inequalities are verified on sampled boundary
    points with the inward-offset limsup surrogate; a violation rejects the
    spec with the offending point.
    """
    O, O0, v, v0 = spec.O, spec.O0, spec.v, spec.v0
    if v0 is None:
        raise ValueError("glue_max needs v0")
    overlap = _Intersection(O, O0)
    h = offset_scale * _diameter(O)

    for x in _boundary_in(O, O0, n_boundary):
        est, slack = _approx_limsup(v, x, overlap, h)
        if est > v0(x) + tol + 0.5 * slack:
            raise GlueError("boundary compatibility fails on the O side", witness=x)
    for x in _boundary_in(O0, O, n_boundary):
        est, slack = _approx_limsup(v0, x, overlap, h)
        if est > v(x) + tol + 0.5 * slack:
            raise GlueError("boundary compatibility fails on the O0 side", witness=x)

    def _eval(pts):
        in_O = O.contains_array(pts)
        in_O0 = O0.contains_array(pts)
        out = np.full(len(pts), np.nan)
        only0 = in_O0 & ~in_O
        if only0.any():
            out[only0] = v0.evaluate_array(pts[only0])
        both = in_O & in_O0
        if both.any():
            out[both] = np.maximum(v.evaluate_array(pts[both]), v0.evaluate_array(pts[both]))
        only = in_O & ~in_O0
        if only.any():
            out[only] = v.evaluate_array(pts[only])
        return out

    return ScalarField(_eval, _UnionDomain(O, O0))


def _diameter(domain) -> float:
    if isinstance(domain, Ball):
        return 2.0 * domain.radius
    if isinstance(domain, Annulus):
        return 2.0 * domain.r_out
    if isinstance(domain, GridDomain):
        return float(max(domain.shape) * domain.spacing)
    return 1.0


def glue_quantitative(spec: GluingSpec, n_boundary: int = 256, tol: float = 1e-6) -> ScalarField:
    """Quantitative gluing: builds v0 from g and the (m_v, M_v, m_g, M_g) bounds.

    v0 = (M_v^+ + m_v^-) / (M_g - m_g) * (2 g - M_g - m_g), then the
    two-sided gluing applies.
    """
    if spec.g is None:
        raise ValueError("glue_quantitative needs g")
    if not spec.M_g > spec.m_g:
        raise ValueError("degenerate spec: need m_g < M_g")
    if spec.m_v > spec.M_v:
        raise ValueError("need m_v <= M_v")
    O, O0, v, g = spec.O, spec.O0, spec.v, spec.g
    overlap = _Intersection(O, O0)
    h = 1e-3 * _diameter(O)

    # sampled Eq-style bound checks before construction
    for x in _boundary_in(O0, O, n_boundary):
        if v(x) < spec.m_v - tol:
            raise GlueError("v drops below m_v on O boundary-of-O0 samples", witness=x)
        est, slack = _approx_limsup(g, x, overlap, h)
        if est > spec.m_g + tol + 0.5 * slack:
            raise GlueError("g exceeds m_g on the inner interface", witness=x)
    for x in _boundary_in(O, O0, n_boundary):
        est, slack = _approx_limsup(v, x, overlap, h)
        if est > spec.M_v + tol + 0.5 * slack:
            raise GlueError("v exceeds M_v on the outer interface", witness=x)
        if g(x) < spec.M_g - tol:
            raise GlueError("g drops below M_g on the outer interface", witness=x)

    amp = max(spec.M_v, 0.0) + max(-spec.m_v, 0.0)
    coeff = amp / (spec.M_g - spec.m_g)
    shift = spec.M_g + spec.m_g
    v0 = ScalarField(lambda pts: coeff * (2.0 * g.evaluate_array(pts) - shift), O0)
    glued = glue_max(GluingSpec(O=O, O0=O0, v=v, v0=v0), n_boundary, tol)
    glued.v0 = v0
    return glued


def glue_with_green(v: ScalarField, green, S_o: Ball, S: Ball, m_v: float, M_v: float,
                    ambient=None, n_samples: int = 512, tol: float = 1e-6) -> ScalarField:
    """Green-function gluing: harmonic continuation into S_o with controlled growth.

    Builds v0 = A/M_g * (2 g_D - M_g) with A = M_v^+ + m_v^-, places it on
    S_o, takes max{v0, v} on S \\ S_o and keeps v outside S.  The returned
    field carries the constants as attributes (`amplitude`, `M_g`,
    `pole_coefficient` = 2 A / M_g).
    """
    from .green import GreenModel, mg_constant  # local import to avoid a cycle

    if not isinstance(green, GreenModel):
        raise TypeError("need a GreenModel")
    D = green.domain
    o = green.pole
    if not S_o.contains(o):
        raise GlueError("pole must lie in the interior of S_o", witness=o)
    for x in S_o.boundary_points(64):
        if not D.contains(x):
            raise GlueError("S_o is not compactly contained in D", witness=x)
    for x in D.boundary_points(64):
        if not S.closure_contains(x):
            raise GlueError("D is not contained in S", witness=x)

    # sampled bound verification on S \ S_o
    rng = quadrature.rng_for(0, "glue-green-samples")
    count = 0
    while count < n_samples:
        x = S.center + S.radius * (2.0 * rng.random(S.dimension) - 1.0)
        if not S.contains(x) or S_o.closure_contains(x):
            continue
        count += 1
        val = v(x)
        if val > M_v + tol or val < m_v - tol:
            raise GlueError("v violates its stated bounds on S \\ S_o", witness=x)

    M_g = mg_constant(green, S_o)
    amp = max(M_v, 0.0) + max(-m_v, 0.0)

    def v0_eval(pts):
        return (amp / M_g) * (2.0 * green.evaluate_array(pts) - M_g)

    v0 = ScalarField(v0_eval)

    def _eval(pts):
        pts = np.atleast_2d(pts)
        out = np.empty(len(pts))
        rho = np.linalg.norm(pts - S_o.center[None, :], axis=1)
        in_So = rho <= S_o.radius
        in_S = S.contains_array(pts) & ~in_So
        rest = ~(in_So | in_S)
        if in_So.any():
            out[in_So] = v0.evaluate_array(pts[in_So])
        if in_S.any():
            out[in_S] = np.maximum(v0.evaluate_array(pts[in_S]), v.evaluate_array(pts[in_S]))
        if rest.any():
            out[rest] = v.evaluate_array(pts[rest])
        return out

    glued = ScalarField(_eval, ambient)
    glued.amplitude = amp
    glued.M_g = M_g
    glued.pole_coefficient = 2.0 * amp / M_g
    glued.v0 = v0
    return glued


def fit_pole_coefficient(field, o, d: int, radii=None, directions: int = 8):
    """Least-squares limit of field(x)/(-K_{d-2}(x, o)) along x -> o.

    Fits field = a * (-k_{d-2}(t)) + b over a radius ladder (direction
    averaged) and returns (a, r_squared).  Replaces the limsup with a
    fitted limit; callers should require r_squared >= 0.999.
    """
    o = np.asarray(o, dtype=float)
    if radii is None:
        radii = np.array([1e-2, 3e-3, 1e-3, 3e-4])
    dirs = _offset_directions(d)[:directions]
    ev = field.evaluate_array if hasattr(field, "evaluate_array") else field
    ys = []
    for t in radii:
        pts = o[None, :] + t * dirs
        ys.append(float(np.mean(np.asarray(ev(pts), dtype=float))))
    ys = np.asarray(ys)
    if not np.all(np.isfinite(ys)):
        return math.nan, 0.0  # a sample hit a singularity: no reliable fit
    xs = -k_eval_array(d - 2, np.asarray(radii, dtype=float))
    A = np.column_stack([xs, np.ones_like(xs)])
    sol, *_ = np.linalg.lstsq(A, ys, rcond=None)
    fit = A @ sol
    ss_res = float(np.sum((ys - fit) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(sol[0]), r2


# ---------------------------------------------------------------------------
# layer harmonization (Perron-Wiener-Brelot surrogate)


class NumericError(RuntimeError):
    pass


def _neighbor_mean(values: np.ndarray, d: int) -> np.ndarray:
    total = np.zeros_like(values)
    for axis in range(d):
        total += np.roll(values, 1, axis=axis) + np.roll(values, -1, axis=axis)
    return total / (2 * d)


def harmonize_layer(v: ScalarField, layer: Annulus, cells: int = 128,
                    residual_target: float = 1e-10, max_sweeps: int = 1_000_000,
                    omega: float | None = None) -> ScalarField:
    """Replace v inside the layer by the harmonic function with boundary data v.

    Grid Dirichlet solve with red-black over-relaxed sweeps (omega=1 is
    plain Gauss-Seidel).  The result equals v off the layer and dominates
    it inside, up to discretization.
    """
    d = layer.dimension
    h = 2.0 * layer.r_out / cells
    lo = layer.center - layer.r_out - 2 * h
    n = int(math.ceil(2.0 * (layer.r_out + 2 * h) / h)) + 1
    grid = GridDomain(lo, h, np.ones((n,) * d, dtype=bool))
    centers = grid.origin[None, :] + np.indices(grid.shape).reshape(d, -1).T * h
    rho = np.linalg.norm(centers - layer.center[None, :], axis=1).reshape(grid.shape)
    inner = (rho > layer.r_in) & (rho < layer.r_out)

    values = v.evaluate_array(centers).reshape(grid.shape).astype(float)
    if not np.all(np.isfinite(values[~inner])):
        raise DomainError("boundary data for the layer solve must be finite")
    values[inner & ~np.isfinite(values)] = 0.0  # poles inside the layer get overwritten

    if omega is None:
        omega = 2.0 / (1.0 + math.sin(math.pi / n))
    parity = np.indices(grid.shape).sum(axis=0) % 2
    colors = [inner & (parity == 0), inner & (parity == 1)]
    scale = float(np.max(np.abs(values[~inner]))) + 1.0

    converged = False
    for sweep in range(max_sweeps):
        for color in colors:
            mean = _neighbor_mean(values, d)
            values[color] += omega * (mean[color] - values[color])
        if sweep % 16 == 15 or sweep == max_sweeps - 1:
            residual = float(np.max(np.abs(_neighbor_mean(values, d)[inner] - values[inner])))
            if residual <= residual_target * scale:
                converged = True
                break
    if not converged:
        raise NumericError(f"layer solve did not reach residual {residual_target} "
                           f"within {max_sweeps} sweeps")

    solution = GridField(grid, values)

    def _eval(pts):
        pts = np.atleast_2d(pts)
        inside = layer.contains_array(pts)
        out = np.empty(len(pts))
        if inside.any():
            out[inside] = solution.evaluate_array(pts[inside])
        if (~inside).any():
            out[~inside] = v.evaluate_array(pts[~inside])
        return out

    result = ScalarField(_eval, v.domain)
    result.solver_grid = solution
    result.layer = layer
    return result
