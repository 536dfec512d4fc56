"""Linear and affine balayage checks over finite families of test functions.

Finite families stand in for the uncountable classes, so every verdict is a
sampled verdict (a necessary-condition check) and is labeled as such in
reports.  Margins are integral differences; inequality comparisons use the
scale-free tolerance tol = tol_scale * (1 + |lhs| + |rhs|).

Divergence (an infinite affine constant) is probed through member "orbits":
ordered subfamilies of growing amplitude or depth whose margins must not
keep increasing without decay.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import quadrature
from .fields import ScalarField, sphere_average
from .geometry import Ball
from .kernels import KernelConfig
from .measures import (Atom, BallUniform, IndeterminateIntegral, Measure,
                       SphereUniform, integrate, restrict)

__all__ = [
    "TestFamily",
    "BalayageVerdict",
    "check_linear",
    "check_affine",
    "harmonic_kernel_family",
    "build_test_family",
    "standard_jensen_family",
    "lyons_example_pair",
]


@dataclass
class TestFamily:
    """Finite, enumerable family of test functions with its class parameters."""

    __test__ = False  # not a pytest class, despite the name

    tag: str
    members: list  # (name, ScalarField) pairs
    S_o: Ball | None = None
    r: float | None = None
    b_minus: float | None = None
    b_plus: float | None = None
    symmetric: bool = False  # H = -H: balayage margins become equalities
    orbits: dict = field(default_factory=dict)  # orbit name -> ordered member indices

    def names(self) -> list:
        return [name for name, _ in self.members]

    def max_closure(self, limit: int = 8) -> "TestFamily":
        """Family extended by pairwise maxima of its first `limit` members."""
        extra = []
        head = self.members[:limit]
        for i, (ni, fi) in enumerate(head):
            for nj, fj in head[i + 1:]:
                extra.append((f"max({ni},{nj})", fi.maximum(fj)))
        return TestFamily(self.tag + "+max", list(self.members) + extra, self.S_o, self.r,
                          self.b_minus, self.b_plus, self.symmetric, dict(self.orbits))

    def pointwise_sup(self, pts: np.ndarray) -> np.ndarray:
        vals = np.stack([f.evaluate_array(pts) for _, f in self.members])
        return np.max(vals, axis=0)


@dataclass
class MarginRow:
    name: str
    lhs: float
    rhs: float
    margin: float
    tol: float
    passed: bool


class BalayageVerdict:
    """Outcome of a sampled balayage check."""

    def __init__(self, relation: str, passed: bool, rows: list, witness: str | None,
                 constant: float | None = None, diverging_orbits: list | None = None,
                 indeterminate: list | None = None):
        self.relation = relation
        self.passed = passed
        self.rows = rows
        self.witness = witness
        self.constant = constant
        self.diverging_orbits = diverging_orbits or []
        self.indeterminate = indeterminate or []

    @property
    def worst_margin(self) -> float:
        margins = [r.margin for r in self.rows]
        return max(margins) if margins else -math.inf

    def to_json(self) -> dict:
        return {
            "relation": self.relation,
            "semantics": "sampled verdict",
            "pass": self.passed,
            "worst_margin": _json_float(self.worst_margin),
            "witness": self.witness,
            "C": None if self.constant is None else _json_float(self.constant),
            "diverging_orbits": self.diverging_orbits,
            "indeterminate": self.indeterminate,
            "margins": {r.name: _json_float(r.margin) for r in self.rows},
        }

    def margins_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["member", "lhs", "rhs", "margin", "tol", "pass"])
            for r in self.rows:
                writer.writerow([r.name, r.lhs, r.rhs, r.margin, r.tol, int(r.passed)])

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _json_float(x: float):
    if math.isnan(x):
        return "nan"
    if x == math.inf:
        return "inf"
    if x == -math.inf:
        return "-inf"
    return x


class FamilyError(ValueError):
    """A member could not be evaluated; carries the member id."""

    def __init__(self, member: str, cause: Exception):
        super().__init__(f"family member {member!r} failed: {cause}")
        self.member = member


def pair_tol(lhs: float, rhs: float, tol_scale: float = 1e-7) -> float:
    finite = [abs(v) for v in (lhs, rhs) if math.isfinite(v)]
    return tol_scale * (1.0 + sum(finite))


def _margin(lhs: float, rhs: float) -> float:
    if lhs == rhs and math.isinf(lhs):
        return 0.0  # -inf <= -inf holds in the extended order
    return lhs - rhs


def _evaluate_rows(theta: Measure, mu: Measure, family: TestFamily, tol_scale: float,
                   symmetric: bool, seed: int):
    rows, indeterminate = [], []
    for name, h in family.members:
        try:
            lhs = integrate(theta, h, seed=seed)
            rhs = integrate(mu, h, seed=seed)
        except IndeterminateIntegral:
            indeterminate.append(name)
            rows.append(MarginRow(name, math.nan, math.nan, math.nan, 0.0, False))
            continue
        except Exception as exc:
            raise FamilyError(name, exc)
        tol = pair_tol(lhs, rhs, tol_scale)
        m = _margin(lhs, rhs)
        ok = abs(m) <= tol if symmetric else m <= tol
        rows.append(MarginRow(name, lhs, rhs, m, tol, bool(ok)))
    return rows, indeterminate


def check_linear(theta: Measure, mu: Measure, family: TestFamily,
                 tol_scale: float = 1e-7, seed: int = 0) -> BalayageVerdict:
    """Sampled check of: integral of h against theta <= against mu, for every member.

    Symmetric families (H = -H) are held to equality within tolerance.
    """
    rows, indeterminate = _evaluate_rows(theta, mu, family, tol_scale, family.symmetric, seed)
    witness = None
    failed = [r for r in rows if not r.passed]
    if failed:
        # deterministic reduction: worst margin, lowest index wins ties
        witness = max(failed, key=lambda r: (0 if math.isnan(r.margin) else r.margin)).name
    return BalayageVerdict("linear", not failed and not indeterminate, rows, witness,
                           indeterminate=indeterminate)


def check_affine(theta: Measure, mu: Measure, family: TestFamily, S_o: Ball,
                 tol_scale: float = 1e-7, divergence_floor: float = 1e-6,
                 seed: int = 0) -> BalayageVerdict:
    """Affine balayage outside S_o: report C = max member margin of the restricted
    integrals and probe the family's orbits for divergence.

    Passes when every margin is finite (C exists for the sampled family) and
    no orbit shows non-decaying growth; the reported C is the empirical
    constant for this family only.
    """
    theta_out = restrict(theta, S_o, complement=True)
    mu_out = restrict(mu, S_o, complement=True)
    rows, indeterminate = _evaluate_rows(theta_out, mu_out, family, tol_scale, False, seed)
    finite_margins = [r.margin for r in rows if math.isfinite(r.margin)]
    constant = max(finite_margins) if finite_margins else math.nan
    has_infinite = any(r.margin == math.inf for r in rows)

    diverging = []
    for orbit_name, idxs in family.orbits.items():
        seq = [rows[i].margin for i in idxs]
        if _orbit_diverges(seq, divergence_floor):
            diverging.append(orbit_name)

    passed = not has_infinite and not indeterminate and not diverging
    witness = None
    if has_infinite:
        witness = next(r.name for r in rows if r.margin == math.inf)
    elif diverging:
        witness = diverging[0]
    elif rows:
        witness = max(rows, key=lambda r: (-math.inf if math.isnan(r.margin) else r.margin)).name
    return BalayageVerdict("affine", passed, rows, witness, constant=constant,
                           diverging_orbits=diverging, indeterminate=indeterminate)


def _orbit_diverges(margins: list, floor: float) -> bool:
    """Non-decaying increasing margins along an ordered orbit mean C = infinity."""
    if any(m == math.inf for m in margins):
        return True
    seq = [m for m in margins if math.isfinite(m)]
    if len(seq) < 3 or seq[-1] <= floor:
        return False
    inc = np.diff(seq)
    if not np.all(inc[-2:] > 0):
        return False
    last, peak = inc[-1], float(np.max(inc))
    return bool(last > 0.5 * peak and last > floor)


# ---------------------------------------------------------------------------
# family constructors


def harmonic_kernel_family(S, probe_points, d: int | None = None) -> TestFamily:
    """Paired +-kernels centered outside clos S; symmetric, so margins are equalities."""
    probe_points = np.atleast_2d(np.asarray(probe_points, dtype=float))
    d = probe_points.shape[1] if d is None else d
    members = []
    for j, y in enumerate(probe_points):
        if isinstance(S, Ball) and np.linalg.norm(y - S.center) <= S.radius:
            raise ValueError(f"probe point {y} lies in clos S")
        members.append((f"k+[{j}]", ScalarField.kernel(d, y, +1.0)))
        members.append((f"k-[{j}]", ScalarField.kernel(d, y, -1.0)))
    return TestFamily("harmonic-kernels", members, symmetric=True)


def standard_jensen_family(D: Ball, x, n_ring: int = 16, with_constants: bool = True,
                           seed: int = 0) -> TestFamily:
    """Subharmonic probe family certifying Jensen measures for x in D.

    Kernels centered on a ring outside D (harmonic near D), on an interior
    ring (genuinely subharmonic probes), plus the constants +-1 pinning the
    mass.
    """
    x = np.asarray(x, dtype=float)
    d = D.dimension
    members = []
    outer = Ball(D.center, 1.25 * D.radius).boundary_points(n_ring)
    rng = quadrature.rng_for(seed, "jensen-family-jitter")
    inner_radius = 0.55 * D.radius + 0.2 * D.radius * rng.random()
    inner = Ball(D.center, inner_radius).boundary_points(n_ring)
    for j, y in enumerate(outer):
        members.append((f"k-out[{j}]", ScalarField.kernel(d, y)))
    for j, y in enumerate(inner):
        members.append((f"k-in[{j}]", ScalarField.kernel(d, y)))
    if with_constants:
        members.append(("const+1", ScalarField.constant(1.0)))
        members.append(("const-1", ScalarField.constant(-1.0)))
    return TestFamily("subharmonic-kernels", members)


def _ridge_member(green_field, c: float, t: float) -> ScalarField:
    """t * max(g - c, 0): subharmonic off the pole, supported where g >= c."""

    def _eval(pts):
        return t * np.maximum(green_field.evaluate_array(pts) - c, 0.0)

    return ScalarField(_eval)


def build_test_family(tag: str, S_o: Ball, r: float, b_minus: float, b_plus: float,
                      D: Ball, count: int = 16, seed: int = 0,
                      validate: bool = True) -> TestFamily:
    """Generate a finite family from one of the test-function classes.

    Positive members are scaled truncated Green ridges t * max(g_D(., o) - c, 0)
    with o the center of S_o; classes with a lower bound b_minus also get
    sign-varying members built from Lyons-type potentials (a harmonic bump
    subtracted from a swept potential).  Every member is re-validated against
    the class constraints on sampled points before inclusion.
    """
    from .green import green_ball

    if not (0 < 3 * r < _dist_to_boundary(S_o, D)):
        raise ValueError("need 0 < 3r < dist(S_o, boundary of D)")
    if tag not in {"sbh00+", "sbh00", "sbh+0", "sbh+0o", "harmonic-kernels",
                   "harmonic-polynomials"}:
        raise ValueError(f"unknown class tag {tag!r}")
    if tag == "harmonic-kernels":
        ring = Ball(D.center, 1.5 * D.radius).boundary_points(count)
        return harmonic_kernel_family(D, ring, D.dimension)
    if tag == "harmonic-polynomials":
        return _harmonic_polynomial_family(D.dimension, count)
    if not (b_minus < 0 < b_plus):
        raise ValueError("need b_minus < 0 < b_plus")

    o = S_o.center
    green = green_ball(D.center, D.radius, o, D.dimension)
    g_sup_boundary = float(np.max(green.evaluate_array(S_o.boundary_points(256))))

    members = []
    deepening = []
    n_levels = max(4, count // 2)
    cs = g_sup_boundary * 2.0 ** (-np.arange(1, n_levels + 1))
    for j, c in enumerate(cs):
        t = b_plus / (g_sup_boundary - c)
        members.append((f"ridge[c={c:.4g}]", _ridge_member(green, float(c), float(t))))
        deepening.append(len(members) - 1)
    # half-amplitude copies for variety
    for j, c in enumerate(cs[: max(2, count - n_levels)]):
        t = 0.5 * b_plus / (g_sup_boundary - c)
        members.append((f"ridge-half[c={c:.4g}]", _ridge_member(green, float(c), float(t))))

    if tag in {"sbh00", "sbh+0", "sbh+0o"}:
        members.extend(_lyons_members(S_o, r, b_minus, b_plus, D, seed))

    family = TestFamily(tag, members, S_o=S_o, r=r, b_minus=b_minus, b_plus=b_plus,
                        orbits={"deepening": deepening})
    if validate:
        _validate_family(family, D, tag)
    return family


def _dist_to_boundary(S_o: Ball, D: Ball) -> float:
    return D.radius - (float(np.linalg.norm(S_o.center - D.center)) + S_o.radius)


def _harmonic_polynomial_family(d: int, count: int) -> TestFamily:
    members = []

    def add(name, fn):
        members.append((name + "+", ScalarField(fn)))
        members.append((name + "-", ScalarField(lambda pts, f=fn: -f(pts))))

    add("1", lambda pts: np.ones(len(pts)))
    for k in range(d):
        add(f"x{k}", lambda pts, k=k: pts[:, k])
    if d == 2:
        add("re z^2", lambda pts: pts[:, 0] ** 2 - pts[:, 1] ** 2)
        add("im z^2", lambda pts: 2.0 * pts[:, 0] * pts[:, 1])
        add("re z^3", lambda pts: pts[:, 0] ** 3 - 3 * pts[:, 0] * pts[:, 1] ** 2)
        add("im z^3", lambda pts: 3 * pts[:, 0] ** 2 * pts[:, 1] - pts[:, 1] ** 3)
    else:
        add("x0x1", lambda pts: pts[:, 0] * pts[:, 1])
        add("x0^2-x1^2", lambda pts: pts[:, 0] ** 2 - pts[:, 1] ** 2)
        add("x0^2-x2^2", lambda pts: pts[:, 0] ** 2 - pts[:, 2] ** 2)
    return TestFamily("harmonic-polynomials", members[: 2 * count] if count else members,
                      symmetric=True)


def _lyons_members(S_o: Ball, r: float, b_minus: float, b_plus: float, D: Ball,
                   seed: int, n_defects: int = 4) -> list:
    """Sign-varying members: potentials of a Lyons-type har-balayage defect pair.

    theta sits inside S_o (its potential is the subtracted harmonic bump on
    D \\ S_o); the sweep mass defect is carried by small spheres replacing
    punched balls of the base Lebesgue layer, producing finite negative
    wells while keeping exact compact support.
    """
    from .kernels import KernelConfig

    d = S_o.dimension
    o = S_o.center
    cfg = KernelConfig(d)
    rho_big = float(np.linalg.norm(S_o.center - D.center)) + S_o.radius + 3 * r \
        + 0.5 * (_dist_to_boundary(S_o, D) - 3 * r)
    rho_big = min(rho_big, 0.95 * D.radius)
    # defects hug the outer support sphere, where the swept background
    # vanishes quadratically; tiny replacement spheres dig genuine wells
    defect_r = 0.1 * rho_big
    ring_radius = rho_big - 1.5 * defect_r
    rng = quadrature.rng_for(seed, "lyons-defects")
    angles = 2.0 * math.pi * (np.arange(n_defects) + rng.random()) / n_defects
    if d == 2:
        centers = o[None, :] + ring_radius * np.column_stack([np.cos(angles), np.sin(angles)])
    else:
        nodes = quadrature.sphere_spiral_nodes(n_defects)
        centers = o[None, :] + ring_radius * nodes

    theta = Measure(d, [BallUniform(o, 0.5 * S_o.radius, 1.0)])
    base = [BallUniform(o, rho_big, 1.0)]
    for e in centers:
        m = 0.9 * (defect_r / rho_big) ** d  # stay under the base density
        base.append(BallUniform(e, defect_r, -m))
        base.append(SphereUniform(e, defect_r / 256.0, m))
    mu_e = Measure(d, base)
    from .potentials import Potential

    raw = Potential(mu_e - theta, cfg)

    # scale into the class box: <= b_plus on the S_o boundary, >= b_minus on the ring
    bnd = S_o.boundary_points(128)
    ring_pts = _ring_samples(S_o, 3 * r, 256, seed)
    vals_bnd = raw.evaluate_array(bnd)
    vals_ring = raw.evaluate_array(ring_pts)
    s_cap = math.inf
    top = float(np.max(vals_bnd))
    bottom = float(np.min(np.concatenate([vals_ring, vals_bnd])))
    if top > 0:
        s_cap = min(s_cap, b_plus / top)
    if bottom < 0:
        s_cap = min(s_cap, b_minus / bottom)  # both negative: positive ratio
    s = 1.0 if not math.isfinite(s_cap) else 0.9 * s_cap
    out = []
    for k, frac in enumerate((1.0, 0.5)):
        sk = s * frac
        member = ScalarField(lambda pts, sk=sk: sk * raw.evaluate_array(pts))
        member.defect_centers = centers  # the wells live here (sign variation)
        out.append((f"lyons[{k}]", member))
    return out


def _ring_samples(S_o: Ball, width: float, n: int, seed: int) -> np.ndarray:
    """Sample points of (S_o dilated by width) minus S_o."""
    rng = quadrature.rng_for(seed, "ring-samples")
    d = S_o.dimension
    pts = []
    while len(pts) < n:
        u = S_o.center + (S_o.radius + width) * (2.0 * rng.random(d) - 1.0)
        rho = float(np.linalg.norm(u - S_o.center))
        if S_o.radius < rho < S_o.radius + width:
            pts.append(u)
    return np.array(pts)


def _validate_family(family: TestFamily, D: Ball, tag: str, tol: float = 1e-7):
    """Sampled re-validation of the class constraints for every member."""
    S_o, r, b_minus, b_plus = family.S_o, family.r, family.b_minus, family.b_plus
    bnd = S_o.boundary_points(128)
    ring = _ring_samples(S_o, 3 * r, 128, seed=1)
    near_boundary = Ball(D.center, 0.995 * D.radius).boundary_points(64)
    for name, f in family.members:
        vb = f.evaluate_array(bnd)
        if np.max(vb) > b_plus + tol * (1 + abs(b_plus)):
            raise ValueError(f"member {name} exceeds b_plus on the S_o boundary")
        vr = f.evaluate_array(ring)
        if tag in {"sbh00", "sbh+0"}:
            if np.min(vr) < b_minus - tol * (1 + abs(b_minus)):
                raise ValueError(f"member {name} drops below b_minus on the 3r ring")
        elif tag == "sbh+0o":
            mid = _ring_samples(Ball(S_o.center, S_o.radius + r), r, 32, seed=2)
            for x in mid:
                if sphere_average(f, x, r, 512) < b_minus - tol * (1 + abs(b_minus)):
                    raise ValueError(f"member {name} sphere-average drops below b_minus")
        vnb = f.evaluate_array(near_boundary)
        if tag == "sbh00+" and np.max(np.abs(vnb)) > tol:
            raise ValueError(f"member {name} fails compact support near the D boundary")
        if tag in {"sbh00", "sbh+0", "sbh+0o"} and np.min(vnb) < -1e-5:
            raise ValueError(f"member {name} is negative near the D boundary")


def lyons_example_pair(r0: float = 0.35, r: float = 0.7, n_atoms: int = 5,
                       defect_radius: float = 0.15, seed: int = 0):
    """The punched-ball/atom pair: a har-balayage that charges a polar set.

    theta = normalized area on r0*B; mu_E = normalized area on r*B with small
    balls around ring points removed and their mass reinstated as atoms at
    the ring points.  Returns (theta, mu_E, atom_points).
    """
    if not 0 < r0 < r < 1:
        raise ValueError("need 0 < r0 < r < 1")
    d = 2
    theta = Measure(d, [BallUniform(np.zeros(d), r0, 1.0)])
    ring_radius = 0.5 * (r0 + r)
    gap = min(ring_radius - r0, r - ring_radius)
    rj = min(defect_radius, 0.8 * gap)
    rng = quadrature.rng_for(seed, "lyons-pair")
    angles = 2.0 * math.pi * (np.arange(n_atoms) + rng.random()) / n_atoms
    pts = ring_radius * np.column_stack([np.cos(angles), np.sin(angles)])
    comps = [BallUniform(np.zeros(d), r, 1.0)]
    for e in pts:
        m = (rj / r) ** d
        comps.append(BallUniform(e, rj, -m))
        comps.append(Atom(e, m))
    return theta, Measure(d, comps), pts
