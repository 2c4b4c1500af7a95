"""Tests for k-contact and k-symplectic structures, Reeb fields and symplectisation."""

import pytest
from sympy import Rational

from components.exterior_calculus import KVectorField, VectorField, parse_vform
from components.structures import (
    KContact,
    KSymplectic,
    canonical_kcontact,
    canonical_ksymplectic,
    flat_eta,
    flat_omega,
    kernel_at,
    orthogonal_deta,
    reeb_at,
    solve_reeb,
    symplectize,
    top_form,
    verify_kcontact,
    verify_ksymplectic,
)
from components.subspaces import Subspace
from components.symbolic_core import Chart, Point
from utils.errors import DegreeError

SEED = 20240611

NONEXAMPLE = Chart("nonexample", ("x1", "x2", "x3", "x4"))
WAVE = Chart("wave", ("u", "pt", "px", "st", "sx"))


def _wave() -> KContact:
    return KContact(parse_vform(["d(st) - pt*d(u)", "d(sx) - px*d(u)"], WAVE))


def test_canonical_kcontact_passes_all_conditions():
    kc = canonical_kcontact(2, 2)
    assert kc.chart.coords == ("q1", "q2", "p1_1", "p1_2", "p2_1", "p2_2", "z1", "z2")
    report = verify_kcontact(kc, kc.sample(20, SEED), SEED)
    assert report.verdict == "pass"
    assert report.samples == 20
    assert all(p.ranks["ker d eta"] == 2 for p in report.points)
    assert report.symbolic["polarization 0 in ker eta"]


def test_canonical_reeb_fields_are_action_directions():
    kc = canonical_kcontact(2, 2)
    reeb = solve_reeb(kc, seed=SEED)
    assert reeb.method == "symbolic"
    assert reeb.verified
    assert reeb.brackets_vanish
    assert [R.as_strings() for R in reeb.fields] == [{"z1": "1"}, {"z2": "1"}]


def test_reeb_fields_of_wave_form():
    reeb = solve_reeb(_wave(), seed=SEED)
    assert [R.as_strings() for R in reeb.fields] == [{"st": "1"}, {"sx": "1"}]
    point = Point(WAVE, {"u": 1, "pt": 2, "px": 3, "st": 4, "sx": 5})
    assert reeb_at(_wave(), point) == [[0, 0, 0, 1, 0], [0, 0, 0, 0, 1]]


def test_nonexample_fails_on_rank_of_ker_d_eta():
    kc = KContact(parse_vform(["d(x1) + x3*d(x4)", "d(x2) + x2*d(x1)"], NONEXAMPLE))
    report = verify_kcontact(kc, kc.sample(5, SEED), SEED)
    assert report.verdict == "fail"
    assert "rank ker dη = 0 ≠ 2" in report.witness
    assert report.witness.startswith("sample 0")


def test_symplectisation_of_nonexample_is_nondegenerate():
    kc = KContact(parse_vform(["d(x1) + x3*d(x4)", "d(x2) + x2*d(x1)"], NONEXAMPLE))
    ks = symplectize(kc)
    assert ks.chart.coords == ("s", "x1", "x2", "x3", "x4")
    assert ks.chart.name == "Rxnonexample"
    report = verify_ksymplectic(ks, ks.sample(10, SEED), SEED)
    assert report.verdict == "pass"
    assert report.symbolic == {"d omega = 0": True, "d Theta = omega": True}
    assert all(p.point["s"] != "0" for p in report.points)


def test_symplectize_avoids_coordinate_clash():
    chart = Chart("clash", ("s", "z"))
    kc = KContact(parse_vform(["d(z) - s*d(s)"], chart))
    ks = symplectize(kc)
    assert ks.scale_coordinate == "s_"
    assert ks.chart.coords[0] == "s_"


def test_symplectisation_lifts_reeb_and_euler_fields():
    ks = symplectize(_wave())
    assert ks.base is not None
    assert [R.as_strings() for R in ks.lifted_reeb] == [{"st": "1"}, {"sx": "1"}]
    assert ks.euler.as_strings() == {"s": "s"}
    assert ks.projection.target == WAVE


def test_canonical_ksymplectic_conventions():
    dtheta = canonical_ksymplectic(1, 2, "dtheta")
    darboux = canonical_ksymplectic(1, 2, "darboux")
    assert dtheta.chart.coords == ("q1", "p1_1", "p1_2")
    assert dtheta.omega[0].coefficient((0, 1)) == -1
    assert darboux.omega[0].coefficient((0, 1)) == 1
    for ks in (dtheta, darboux):
        assert verify_ksymplectic(ks, ks.sample(10, SEED), SEED).verdict == "pass"


def test_degenerate_two_form_reports_kernel_vector():
    chart = Chart("r3", ("x", "y", "z"))
    ks = KSymplectic(parse_vform(["d(x)^d(y)"], chart))
    report = verify_ksymplectic(ks, ks.sample(3, SEED), SEED)
    assert report.verdict == "fail"
    assert "d/dz" in report.witness


def test_structures_check_form_degree():
    with pytest.raises(DegreeError):
        KContact(parse_vform(["d(u)^d(pt)"], WAVE))
    with pytest.raises(DegreeError):
        KSymplectic(parse_vform(["d(u)"], WAVE))


def test_kernel_and_orthogonal_complement_at_a_point():
    kc = _wave()
    point = Point(WAVE, {"u": 0, "pt": Rational(1, 2), "px": 2, "st": 0, "sx": 0})
    ker_eta = kernel_at(kc.eta, point)
    ker_deta = kernel_at(kc.d_eta, point)
    assert ker_eta.rank == 3
    assert ker_deta.rank == 2
    assert ker_eta.intersect(ker_deta).rank == 0
    full = Subspace.full(WAVE.dim)
    assert orthogonal_deta(kc, full, point) == ker_deta


def test_flat_maps():
    kc = _wave()
    X = KVectorField((VectorField.coordinate(WAVE, "pt"), VectorField.coordinate(WAVE, "st")))
    one_form, scalar = flat_eta(kc, X)
    assert one_form.to_text() == "(-1)*d(u)"
    assert scalar == 0
    ks = canonical_ksymplectic(1, 2, "darboux")
    Y = KVectorField((VectorField.coordinate(ks.chart, "q1"), VectorField.zero(ks.chart)))
    assert flat_omega(ks, Y).to_text() == "d(p1_1)"


def test_top_form_is_a_volume_form_for_contact_charts():
    kc = canonical_kcontact(2, 1)
    volume = top_form(kc)
    assert volume.degree == kc.chart.dim
    assert not volume.is_zero
