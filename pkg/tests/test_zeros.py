import json
import math

import numpy as np
import pytest

from potkit.geometry import Ball, GridDomain, point
from potkit.measures import total_mass
from potkit.zeros import (GrowthMajorant, HoloFunction, RegridRequest,
                          check_criterium3_forward, check_thm_hol, counting_measure,
                          poincare_lelong_check)

DISK = Ball(point(0, 0), 1.0)


def test_polynomial_zeros_and_counting():
    f = HoloFunction.polynomial([1, 0, -0.25])
    assert sorted(z.real for z in f.zeros) == [-0.5, 0.5]
    assert list(f.multiplicities) == [1, 1]
    cm = counting_measure(f, DISK)
    assert total_mass(cm) == 2.0


def test_polynomial_double_zero():
    f = HoloFunction.polynomial([1, -0.6, 0.09])  # (z - 0.3)^2
    assert len(f.zeros) == 1
    assert f.zeros[0] == pytest.approx(0.3, abs=1e-9)
    assert f.multiplicities[0] == 2


def test_nonvanishing_function():
    f = HoloFunction.polynomial([1.0])
    assert len(f.zeros) == 0
    assert total_mass(counting_measure(f, DISK)) == 0.0


def test_counting_measure_respects_region():
    f = HoloFunction.polynomial([1, 0, -4.0])  # zeros at +-2
    assert total_mass(counting_measure(f, DISK)) == 0.0
    assert total_mass(counting_measure(f, Ball(point(0, 0), 3.0))) == 2.0


def test_blaschke_product_bounded():
    zs = [1 - 2.0 ** (-k) for k in range(1, 11)]
    f = HoloFunction.blaschke(zs)
    assert f.blaschke_sum == pytest.approx(sum(1 - z for z in zs))
    rng = np.random.default_rng(0)
    pts = rng.uniform(-0.7, 0.7, size=(200, 2))
    z = pts[:, 0] + 1j * pts[:, 1]
    assert np.all(f.abs_at(z) <= 1.0 + 1e-12)
    with pytest.raises(ValueError):
        HoloFunction.blaschke([1.0])


def _grid(h=0.01, half=0.80):
    n = int(round(2 * half / h)) + 1
    return GridDomain(point(-half - 0.003, -half - 0.003), h, np.ones((n, n), bool))


def test_poincare_lelong_single_and_double():
    f = HoloFunction.polynomial([1, -(0.5 - 0.25j)])  # zero at 0.5 - 0.25i, off lattice
    rep = poincare_lelong_check(f, _grid())
    assert rep.passed
    (z, m, w, err) = rep.rows[0]
    assert m == 1 and err <= 0.05

    f2 = HoloFunction.polynomial([1, -0.6, 0.09])
    rep2 = poincare_lelong_check(f2, _grid())
    assert rep2.passed and rep2.rows[0][1] == 2


def test_poincare_lelong_nonvanishing():
    rep = poincare_lelong_check(HoloFunction.polynomial([1.0]), _grid(h=0.02))
    assert rep.passed and abs(rep.total_recovered) <= 1e-6


def test_poincare_lelong_refinement_halves_error():
    # fixed physical window (a cell-count window is self-similar and flat in h);
    # the error at least halves per refinement, with 20 percent slack --
    # observed rate is in fact close to quartering
    f = HoloFunction.polynomial([1, -(0.31 + 0.172j)])
    errs = []
    for h in (0.02, 0.01):
        w = max(1, int(round(0.05 / h)))
        rep = poincare_lelong_check(f, _grid(h=h), window=w, rel_tol=1.0)
        errs.append(rep.rows[0][3])
    assert errs[1] <= 0.5 * errs[0] * 1.2


def test_poincare_lelong_regrid_request():
    n = 81
    grid = GridDomain(point(-0.8, -0.8), 0.02, np.ones((n, n), bool))
    f = HoloFunction.polynomial([1, -(0.2 + 0.2j)])  # exactly on a lattice point
    with pytest.raises(RegridRequest):
        poincare_lelong_check(f, grid)


def _setup_poly():
    f = HoloFunction.polynomial([1, 0, -0.25])
    M = GrowthMajorant.constant(math.log(5.0 / 4.0))
    return f, M, Ball(point(0, 0), 0.05), 0.03


def test_check_thm_hol_polynomial():
    f, M, S_o, r = _setup_poly()
    rep = check_thm_hol(f, M, S_o, r, -1.0, 1.0)
    assert rep.passed
    assert rep.results["ZIII"].constant <= 2.0 + 1e-9
    impl = rep.extras["implication_ZI_to_ZII"]
    assert impl["ok"]
    data = rep.to_json()
    assert data["pass"] is True


def test_check_thm_hol_majorant_violation():
    f, _, S_o, r = _setup_poly()
    too_small = GrowthMajorant.constant(-1.0)
    with pytest.raises(ValueError):
        check_thm_hol(f, too_small, S_o, r, -1.0, 1.0)


def test_check_thm_hol_nonzero_majorant_charge():
    # M = ln(5/4) + 0.4 |z|^2 with split plus/minus parts exercises the ring
    # integrals and the implication bound with a nonzero |mu_M|(ring)
    from potkit.fields import ScalarField
    from potkit.measures import BallUniform, Measure

    f = HoloFunction.polynomial([1, 0, -0.25])
    c = math.log(5.0 / 4.0)
    M_plus = ScalarField(lambda p: c + 0.5 * np.sum(p ** 2, axis=1))
    M_minus = ScalarField(lambda p: 0.1 * np.sum(p ** 2, axis=1))
    area = lambda a: (2.0 / math.pi) * math.pi * a ** 2  # riesz mass of |x|^2 on a disk
    mu_plus = Measure(2, [BallUniform(point(0, 0), 1.3, 0.5 * area(1.3))])
    mu_minus = Measure(2, [BallUniform(point(0, 0), 1.3, 0.1 * area(1.3))])
    maj = GrowthMajorant(M_plus, M_minus, mu_plus, mu_minus)
    rep = check_thm_hol(f, maj, Ball(point(0, 0), 0.05), 0.03, -1.0, 1.0)
    assert rep.passed
    impl = rep.extras["implication_ZI_to_ZII"]
    assert impl["ok"] and impl["bound"] > impl["C1"]  # the ring term is active


def test_check_thm_hol_subdivisor_monotone():
    f, M, S_o, r = _setup_poly()
    full = check_thm_hol(f, M, S_o, r, -1.0, 1.0)
    half = check_thm_hol(f, M, S_o, r, -1.0, 1.0,
                         subdivisor=lambda p, m: m if p[0] > 0 else 0)
    assert half.results["ZIII"].constant <= full.results["ZIII"].constant + 1e-12


def test_blaschke_direct_sum_oracle():
    zs = [1 - 2.0 ** (-k) for k in range(1, 11)]
    oracle = sum(math.log(1.0 / z) for z in zs)
    assert oracle == pytest.approx(1.2414, abs=5e-4)
    f = HoloFunction.blaschke(zs)
    rep = check_thm_hol(f, GrowthMajorant.constant(0.0), Ball(point(0, 0), 0.05),
                        0.03, -1.0, 3.5)
    assert rep.passed
    # every finite constant stays near/below the direct-summation envelope
    # (members are capped by b_plus-scaled ridges)
    for res in rep.results.values():
        assert res.constant <= 3.5 / math.log(20) * oracle * 1.5 + 1e-9


def test_criterium_forward_stages():
    f, M, S_o, r = _setup_poly()
    rep = check_criterium3_forward(f, f, M, S_o, r, -1.0, 1.0)
    assert rep.passed
    assert set(rep.results) == {"z2", "z3", "z4"}

    zs = [1 - 2.0 ** (-k) for k in range(1, 11)]
    fb = HoloFunction.blaschke(zs)
    repb = check_criterium3_forward(fb, fb, GrowthMajorant.constant(0.0), S_o, r, -1.0, 3.5)
    assert repb.passed


def test_adversarial_divergence_flagged():
    zs = [1 - 1.0 / k for k in range(2, 201)]
    f = HoloFunction.blaschke(zs)
    assert f.blaschke_sum > 4.0  # divergent-regime truncation
    rep = check_thm_hol(f, GrowthMajorant.constant(0.0), Ball(point(0, 0), 0.05),
                        0.03, -1.0, 3.5)
    assert not rep.passed
    assert any(res.diverging for res in rep.results.values())


def test_zero_set_serialization():
    f = HoloFunction.polynomial([1, -0.6, 0.09])
    data = json.loads(f.dumps())
    assert data == [{"re": pytest.approx(0.3, abs=1e-9), "im": pytest.approx(0.0, abs=1e-9),
                     "multiplicity": 2}]


def test_suite_margins_csv(tmp_path):
    f, M, S_o, r = _setup_poly()
    rep = check_thm_hol(f, M, S_o, r, -1.0, 1.0)
    path = tmp_path / "zero_margins.csv"
    rep.margins_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "variant,member,lhs,rhs,margin"
    assert len(lines) > 3


def test_check_thm_hol_with_explicit_family():
    from potkit.balayage import build_test_family

    f, M, S_o, r = _setup_poly()
    fam = build_test_family("sbh00+", S_o, r, -1.0, 1.0, f.domain, count=6)
    rep = check_thm_hol(f, M, S_o, r, -1.0, 1.0, family=fam)
    assert rep.passed
    # all three variants ran over the same supplied members
    sizes = {len(res.margins) for res in rep.results.values()}
    assert sizes == {len(fam.members)}


def test_explicit_zero_set_variant():
    zs = np.array([0.4 + 0.1j, -0.3 + 0.2j])
    mults = [1, 2]

    def abs_f(z):
        return np.abs(z - zs[0]) * np.abs(z - zs[1]) ** 2

    f = HoloFunction.explicit(zs, mults, abs_f, Ball(point(0, 0), 1.0))
    assert total_mass(counting_measure(f, Ball(point(0, 0), 1.0))) == 3.0
    rep = poincare_lelong_check(f, _grid(h=0.01))
    assert rep.passed
    by_mult = {int(m): w for _, m, w, _ in rep.rows}
    assert by_mult[1] == pytest.approx(1.0, rel=0.05)
    assert by_mult[2] == pytest.approx(2.0, rel=0.05)
