"""One-variable holomorphic test functions, zero counting and growth criteria.

Holomorphic data lives on planar domains; zeros are counted with
multiplicity and compared against Riesz recoveries of ln|f| and against the
inequality suites that relate zero distributions to growth majorants.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import quadrature
from .balayage import TestFamily, _orbit_diverges, build_test_family, pair_tol
from .fields import ScalarField, riesz_measure
from .geometry import Annulus, Ball, GridDomain
from .measures import Atom, Measure, integrate, jordan, restrict, total_mass

__all__ = [
    "HoloFunction",
    "GrowthMajorant",
    "RegridRequest",
    "counting_measure",
    "poincare_lelong_check",
    "check_thm_hol",
    "check_criterium3_forward",
]


class RegridRequest(ValueError):
    """A zero sits too close to the sampling lattice; choose another grid."""


def _as_complex(pts: np.ndarray) -> np.ndarray:
    return pts[:, 0] + 1j * pts[:, 1]


class HoloFunction:
    """Holomorphic test function on a planar domain, with an explicit zero set.

    Variants: 'polynomial' (companion-matrix roots, derivative-test
    multiplicities), 'blaschke' (truncated product, zeros given), and
    'explicit' (indexed zeros plus an evaluable |f|).
    """

    def __init__(self, kind: str, domain: Ball, zeros: np.ndarray,
                 multiplicities: np.ndarray, abs_f, blaschke_sum: float | None = None):
        self.kind = kind
        self.domain = domain
        self.zeros = np.asarray(zeros, dtype=complex)
        self.multiplicities = np.asarray(multiplicities, dtype=int)
        self._abs_f = abs_f
        self.blaschke_sum = blaschke_sum

    # -- constructors ---------------------------------------------------

    @staticmethod
    def polynomial(coefficients, domain: Ball | None = None,
                   residual_tol: float = 1e-8, derivative_tol: float = 1e-9) -> "HoloFunction":
        """Polynomial from highest-order-first coefficients."""
        coeff = np.asarray(coefficients, dtype=complex)
        if domain is None:
            domain = Ball(np.zeros(2), 1.0)
        roots = np.roots(coeff)
        scale = float(np.max(np.abs(coeff))) + 1.0
        zeros, mults = _cluster_roots(coeff, roots, residual_tol, derivative_tol, scale)

        def abs_f(z: np.ndarray) -> np.ndarray:
            return np.abs(np.polyval(coeff, z))

        return HoloFunction("polynomial", domain, zeros, mults, abs_f)

    @staticmethod
    def blaschke(zeros, domain: Ball | None = None) -> "HoloFunction":
        """Truncated Blaschke product with the given zeros (listed with multiplicity)."""
        zeros = np.asarray(zeros, dtype=complex)
        if np.any(np.abs(zeros) >= 1.0):
            raise ValueError("Blaschke zeros must lie strictly inside the unit disk")
        if domain is None:
            domain = Ball(np.zeros(2), 1.0)
        uniq, mults = _dedupe(zeros)
        bsum = float(np.sum(1.0 - np.abs(zeros)))

        def abs_f(z: np.ndarray) -> np.ndarray:
            out = np.ones(len(z))
            for zk in zeros:
                num = np.abs(z - zk)
                den = np.abs(1.0 - np.conj(zk) * z)
                out *= np.where(den > 0, num / den, np.inf)
            return out

        return HoloFunction("blaschke", domain, uniq, mults, abs_f, blaschke_sum=bsum)

    @staticmethod
    def explicit(zeros, multiplicities, abs_f, domain: Ball) -> "HoloFunction":
        zeros = np.asarray(zeros, dtype=complex)
        return HoloFunction("explicit", domain, zeros,
                            np.asarray(multiplicities, dtype=int), abs_f)

    # -- evaluation -------------------------------------------------------

    def abs_at(self, z: np.ndarray) -> np.ndarray:
        return self._abs_f(np.asarray(z, dtype=complex))

    def log_abs_field(self) -> ScalarField:
        def _eval(pts):
            with np.errstate(divide="ignore"):
                return np.log(self.abs_at(_as_complex(np.atleast_2d(pts))))

        return ScalarField(_eval, domain=self.domain)

    def zero_points(self) -> np.ndarray:
        return np.column_stack([self.zeros.real, self.zeros.imag])

    def to_json(self) -> list:
        return [{"re": float(z.real), "im": float(z.imag), "multiplicity": int(m)}
                for z, m in zip(self.zeros, self.multiplicities)]

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def _dedupe(zeros: np.ndarray, tol: float = 1e-12):
    uniq, mults = [], []
    for z in zeros:
        for i, u in enumerate(uniq):
            if abs(z - u) <= tol:
                mults[i] += 1
                break
        else:
            uniq.append(z)
            mults.append(1)
    return np.asarray(uniq, dtype=complex), np.asarray(mults, dtype=int)


def _cluster_roots(coeff, roots, residual_tol, derivative_tol, scale):
    """Cluster companion-matrix roots and confirm multiplicities by derivatives."""
    degree = len(coeff) - 1
    used = np.zeros(len(roots), dtype=bool)
    zeros, mults = [], []
    for i, z in enumerate(roots):
        if used[i]:
            continue
        cluster = [i]
        used[i] = True
        for j in range(i + 1, len(roots)):
            if not used[j] and abs(roots[j] - z) < 1e-5:
                cluster.append(j)
                used[j] = True
        center = np.mean(roots[cluster])
        m = len(cluster)
        # polish on the (m-1)-st derivative, whose root is simple
        dm = np.polyder(coeff, m - 1) if m > 1 else coeff
        for _ in range(3):
            val = np.polyval(dm, center)
            der = np.polyval(np.polyder(dm), center)
            if der != 0:
                center = center - val / der
        if abs(np.polyval(coeff, center)) > residual_tol * scale:
            raise ValueError(f"root residual too large near {center}")
        # derivative test: |f^(k)| small below the multiplicity, sizable at it
        k = 0
        dk = np.asarray(coeff)
        while k < degree and abs(np.polyval(dk, center)) <= derivative_tol * scale:
            dk = np.polyder(dk)
            k += 1
        zeros.append(center)
        mults.append(max(k, 1))
    return np.asarray(zeros, dtype=complex), np.asarray(mults, dtype=int)


@dataclass
class GrowthMajorant:
    """Growth data M = M_plus - M_minus with its Riesz charge pieces."""

    M_plus: ScalarField
    M_minus: ScalarField | None = None
    mu_plus: Measure | None = None
    mu_minus: Measure | None = None
    dimension: int = 2

    def value(self, pts: np.ndarray) -> np.ndarray:
        out = self.M_plus.evaluate_array(pts)
        if self.M_minus is not None:
            out = out - self.M_minus.evaluate_array(pts)
        return out

    def charge(self) -> Measure:
        mu = self.mu_plus if self.mu_plus is not None else Measure(self.dimension, [])
        if self.mu_minus is not None:
            mu = mu - self.mu_minus
        return mu

    def minus_charge(self) -> Measure:
        return self.mu_minus if self.mu_minus is not None else Measure(self.dimension, [])

    @staticmethod
    def constant(c: float) -> "GrowthMajorant":
        return GrowthMajorant(ScalarField.constant(c))

    def check_dominates(self, f: HoloFunction, n_samples: int = 10_000,
                        tol: float = 1e-9, seed: int = 0):
        """Verify |f| <= exp(M) on samples; returns the witness on failure."""
        rng = quadrature.rng_for(seed, "majorant-samples")
        D = f.domain
        pts = []
        while len(pts) < n_samples:
            p = D.center + D.radius * (2.0 * rng.random((min(n_samples, 4096), 2)) - 1.0)
            keep = D.contains_array(p)
            pts.extend(p[keep])
        pts = np.array(pts[:n_samples])
        lhs = np.log(np.maximum(f.abs_at(_as_complex(pts)), 1e-300))
        rhs = self.value(pts)
        bad = lhs > rhs + tol
        if bad.any():
            return pts[np.argmax(lhs - rhs)]
        return None


# ---------------------------------------------------------------------------
# counting and Poincare-Lelong


def counting_measure(f: HoloFunction, S) -> Measure:
    """Atoms (zero, multiplicity) for the zeros of f inside S."""
    pts = f.zero_points()
    comps = [Atom(p, float(m)) for p, m in zip(pts, f.multiplicities) if S.contains(p)]
    return Measure(2, comps)


class PoincareLelongReport:
    def __init__(self, rows, total_recovered, passed):
        self.rows = rows  # (zero, multiplicity, window_mass, rel_error)
        self.total_recovered = total_recovered
        self.passed = passed

    def to_json(self):
        return {"pass": self.passed, "total_recovered": self.total_recovered,
                "rows": [{"re": z.real, "im": z.imag, "multiplicity": m,
                          "window_mass": w, "rel_error": e}
                         for z, m, w, e in self.rows]}


def poincare_lelong_check(f: HoloFunction, grid: GridDomain, window: int = 2,
                          rel_tol: float = 0.05) -> PoincareLelongReport:
    """Recover each zero's multiplicity from the grid Riesz measure of ln|f|.

    Window masses are summed over (2*window+1)^2 cells around each zero;
    zeros within h/4 of a cell center trigger a RegridRequest.
    """
    h = grid.spacing
    pts = f.zero_points()
    for p in pts:
        idx = grid.index_of(p)
        if idx is not None:
            center = grid.origin + np.asarray(idx) * h
            if float(np.linalg.norm(p - center)) < h / 4.0:
                raise RegridRequest(f"zero at {p} is within h/4 of a lattice point")
    mu = riesz_measure(f.log_abs_field(), grid)
    masses = np.asarray(mu.components[0].values)
    rows = []
    passed = True
    for p, m in zip(pts, f.multiplicities):
        idx = grid.index_of(p)
        if idx is None:
            continue
        sl = tuple(slice(max(0, i - window), i + window + 1) for i in idx)
        w = float(np.sum(masses[sl]))
        err = abs(w - m) / m
        rows.append((complex(p[0], p[1]), int(m), w, err))
        passed &= err <= rel_tol
    total = float(np.sum(masses))
    if len(pts) == 0:
        passed = abs(total) <= 1e-6
    return PoincareLelongReport(rows, total, bool(passed))


# ---------------------------------------------------------------------------
# growth criteria suites


class VariantResult:
    def __init__(self, name, constant, margins, diverging, passed):
        self.name = name
        self.constant = constant
        self.margins = margins  # (member name, lhs, rhs, margin)
        self.diverging = diverging
        self.passed = passed

    def to_json(self):
        return {"variant": self.name,
                "C": self.constant if math.isfinite(self.constant) else "inf",
                "diverging": self.diverging, "pass": self.passed,
                "margins": {n: m for n, _, _, m in self.margins}}


class ZeroSuiteReport:
    def __init__(self, results: dict, extras: dict | None = None):
        self.results = results
        self.extras = extras or {}

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def to_json(self):
        out = {k: v.to_json() for k, v in self.results.items()}
        out["pass"] = self.passed
        out.update(self.extras)
        return out

    def margins_csv(self, path):
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["variant", "member", "lhs", "rhs", "margin"])
            for vname, res in self.results.items():
                for n, lhs, rhs, m in res.margins:
                    writer.writerow([vname, n, lhs, rhs, m])


def _zero_sum(f_zeros, f_mults, v: ScalarField, S_o: Ball, subdivisor=None) -> float:
    """Sum of v at the zeros outside S_o, weighted by (sub-)multiplicities."""
    total = 0.0
    for p, m in zip(f_zeros, f_mults):
        if S_o.contains(p):
            continue
        w = m if subdivisor is None else subdivisor(p, m)
        if w == 0:
            continue
        total += w * float(v(np.asarray(p)))
    return total


def _variant(name: str, f: HoloFunction, majorant: GrowthMajorant, S_o: Ball, r: float,
             family: TestFamily, subdivisor=None, seed: int = 0,
             divergence_floor: float = 1e-6) -> VariantResult:
    """One inequality variant: zero sums against the majorant charge integrals."""
    zeros_pts = f.zero_points()
    mults = f.multiplicities
    mu_M = majorant.charge()
    mu_minus = majorant.minus_charge()
    enlarged = Ball(S_o.center, S_o.radius + 3.0 * r)
    margins, rows = [], []
    for mname, v in family.members:
        lhs = _zero_sum(zeros_pts, mults, v, S_o, subdivisor)
        if name == "ZI":
            rhs = integrate(restrict(mu_M, enlarged, complement=True), v, seed=seed)
            ring_minus = restrict(restrict(mu_minus, enlarged), S_o, complement=True)
            rhs += -integrate(ring_minus, v, seed=seed)
        else:
            rhs = integrate(restrict(mu_M, S_o, complement=True), v, seed=seed)
        m = lhs - rhs
        rows.append((mname, lhs, rhs, m))
        margins.append(m)
    finite = [m for m in margins if math.isfinite(m)]
    constant = max(finite) if finite else math.inf
    diverging = []
    for orbit_name, idxs in family.orbits.items():
        if _orbit_diverges([margins[i] for i in idxs], divergence_floor):
            diverging.append(orbit_name)
    passed = all(math.isfinite(m) for m in margins) and not diverging
    return VariantResult(name, constant, rows, diverging, passed)


def check_thm_hol(f: HoloFunction, majorant: GrowthMajorant, S_o: Ball, r: float,
                  b_minus: float, b_plus: float, family: TestFamily | None = None,
                  subdivisor=None, seed: int = 0) -> ZeroSuiteReport:
    """Run the three zero-distribution inequality variants against a majorant.

    [ZI] integrates the majorant charge off the 3r-enlarged core and charges
    the minus part on the intermediate ring; [ZII] uses the plain core
    complement; [ZIII] does the same for a positive family and an optional
    subdivisor.  Reports the empirical constants and divergence flags, plus
    the internal implication bound C_II <= C_I + max(b_plus, -b_minus) *
    |mu_M|(ring).
    """
    witness = majorant.check_dominates(f, seed=seed)
    if witness is not None:
        raise ValueError(f"majorant violated at {witness}")
    D = f.domain
    results = {}
    fam_ring = family or build_test_family("sbh+0o", S_o, r, b_minus, b_plus, D, seed=seed)
    results["ZI"] = _variant("ZI", f, majorant, S_o, r, fam_ring, None, seed)
    fam_plain = family or build_test_family("sbh+0", S_o, r, b_minus, b_plus, D, seed=seed)
    results["ZII"] = _variant("ZII", f, majorant, S_o, r, fam_plain, None, seed)
    fam_pos = family or build_test_family("sbh00+", S_o, r, b_minus, b_plus, D, seed=seed)
    results["ZIII"] = _variant("ZIII", f, majorant, S_o, r, fam_pos, subdivisor, seed)

    ring = Annulus(S_o.center, S_o.radius, S_o.radius + 3.0 * r)
    mu_plus_ring, mu_minus_ring = jordan(restrict(majorant.charge(), ring))
    ring_variation = total_mass(mu_plus_ring) + total_mass(mu_minus_ring)
    c1, c2 = results["ZI"].constant, results["ZII"].constant
    bound = c1 + max(b_plus, -b_minus) * ring_variation
    implication_ok = (not math.isfinite(c1)) or c2 <= bound + pair_tol(c2, bound, 1e-6)
    extras = {"implication_ZI_to_ZII": {"C1": c1, "C2": c2, "bound": bound,
                                        "ok": bool(implication_ok)},
              "blaschke_sum": f.blaschke_sum}
    return ZeroSuiteReport(results, extras)


def check_criterium3_forward(Z: HoloFunction, f: HoloFunction | None,
                             majorant: GrowthMajorant, S_o: Ball, r: float,
                             b_minus: float, b_plus: float,
                             seed: int = 0) -> ZeroSuiteReport:
    """Forward stages of the unit-disk zero-set criterium.

    Given a zero set Z realized by f with |f| <= exp M, the [z2]/[z3]/[z4]
    sampled inequality suites must all pass; their per-stage constants and
    divergence flags are reported.  (The nonconstructive converse is not
    synthesized.)
    """
    carrier = f if f is not None else Z
    witness = majorant.check_dominates(carrier, seed=seed)
    if witness is not None:
        raise ValueError(f"majorant violated at {witness}")
    D = Z.domain
    results = {}
    fam2 = build_test_family("sbh+0o", S_o, r, b_minus, b_plus, D, seed=seed)
    results["z2"] = _variant("ZI", Z, majorant, S_o, r, fam2, None, seed)
    results["z2"].name = "z2"
    fam3 = build_test_family("sbh+0", S_o, r, b_minus, b_plus, D, seed=seed)
    results["z3"] = _variant("ZII", Z, majorant, S_o, r, fam3, None, seed)
    results["z3"].name = "z3"
    fam4 = build_test_family("sbh00", S_o, r, b_minus, b_plus, D, seed=seed)
    results["z4"] = _variant("ZII", Z, majorant, S_o, r, fam4, None, seed)
    results["z4"].name = "z4"
    return ZeroSuiteReport(results, {"blaschke_sum": Z.blaschke_sum})
