import math

import numpy as np
import pytest
import sympy as sp

from spin7_instantons import closed_forms as cf
from spin7_instantons.algebra import structure_constants
from spin7_instantons.dirac import (DiracBlock, block_spectrum, build_clifford, casimir_square_check,
                                    cluster, critical_rates, dirac_block, eigen_lower_bound,
                                    eigen_lower_bound_exact, enumerate_candidates,
                                    normalize_twist, sp1_adjoint, spinor_target,
                                    twisted_spinor_target)
from spin7_instantons.errors import EmptyBlockError, SpectralError
from spin7_instantons.reptheory import IrrepLabelG, casimir_g

SCAN_AT_4 = [(0, 0, 0), (0, 0, 1), (0, 0, 2), (0, 0, 3), (0, 1, 0), (0, 1, 1), (0, 1, 2),
             (0, 2, 0), (0, 2, 1), (0, 3, 0), (1, 0, 0), (1, 0, 1), (1, 0, 2), (1, 1, 0),
             (1, 1, 1), (2, 0, 0)]


def test_clifford_relations():
    cl = build_clifford()
    I = np.eye(8)
    for a, ga in enumerate(cl.gammas):
        assert np.allclose(ga @ ga, -I)
        for gb in cl.gammas[a + 1:]:
            assert np.allclose(ga @ gb + gb @ ga, 0)
    assert cl.anticommutation_defect() == 0


def test_phi_action_spectrum():
    phi = build_clifford().phi_action
    w = np.linalg.eigvalsh(phi)
    assert cluster(w) == [(pytest.approx(-1.0), 7), (pytest.approx(7.0), 1)]
    assert abs(np.trace(phi)) < 1e-12


@pytest.mark.parametrize("target", [spinor_target, twisted_spinor_target])
def test_spinor_targets_are_representations(target):
    f = structure_constants()
    M = target().matrices
    for i in range(6):
        for j in range(6):
            lhs = M[i] @ M[j] - M[j] @ M[i]
            rhs = sum(float(f.f(C, 8 + i, 8 + j)) * M[C - 8] for C in range(8, 14))
            assert np.abs(lhs - rhs).max() < 1e-12


def test_phi_is_isotropy_invariant():
    phi = build_clifford().phi_action
    for m in spinor_target().matrices:
        assert np.abs(m @ phi - phi @ m).max() < 1e-12


def test_sp1_adjoint_brackets():
    ad = sp1_adjoint()
    # ad T_a with T_a = -i sigma_a satisfies [ad T_1, ad T_2] = 2 ad T_3
    assert np.allclose(ad[0] @ ad[1] - ad[1] @ ad[0], 2 * ad[2])


@pytest.mark.parametrize("tag,canon", [("adjoint", "twisted"), ("none", "untwisted"),
                                       ("twisted", "twisted")])
def test_normalize_twist(tag, canon):
    assert normalize_twist(tag) == canon


def test_normalize_twist_unknown():
    with pytest.raises(ValueError):
        normalize_twist("spin")


T0_CASES = [(tw, lab) for tw in ("untwisted", "twisted") for lab in sorted(cf.spectrum_table(tw))]


@pytest.mark.parametrize("twist,label", T0_CASES)
def test_t0_spectrum(twist, label):
    expected = sorted(cf.evaluate(e) for e in cf.spectrum_table(twist)[label])
    got = block_spectrum(dirac_block(label, twist), 0.0)
    assert np.abs(np.array(expected) - got).max() < 1e-9


SQUARE_CASES = [(tw, lab) for tw in ("untwisted", "twisted") for lab in sorted(cf.square_table(tw))]


@pytest.mark.parametrize("twist,label", SQUARE_CASES)
def test_square_at_one_third(twist, label):
    block = dirac_block(label, twist)
    assert block.square_target() == pytest.approx(cf.evaluate(cf.square_table(twist)[label][0]))
    assert casimir_square_check(block) < 1e-8


def test_untwisted_020_eigenvalues_are_simple():
    values = block_spectrum(dirac_block((0, 2, 0), "untwisted"), 0.0)
    assert [m for _, m in cluster(values)] == [1, 1]


def test_trivial_block_matrices():
    tw = dirac_block((0, 0, 0), "twisted")
    assert tw.dim == 1 and block_spectrum(tw, 0.0) == pytest.approx([0.5])
    assert block_spectrum(dirac_block((0, 0, 0), "none"), 0.0) == pytest.approx([-3.5])


def test_block_affine_in_t():
    b = dirac_block((1, 0, 0), "twisted")
    assert np.allclose(b.matrix(0.7), 0.3 * b.matrix(0.0) + 0.7 * b.matrix(1.0))


@pytest.mark.parametrize("label", [(0, 1, 0), (0, 0, 1), (1, 0, 1)])
def test_empty_blocks(label):
    with pytest.raises(EmptyBlockError):
        dirac_block(label, "twisted")


def test_non_hermitian_block_rejected():
    M = np.array([[0.0, 1.0], [0.0, 0.0]])
    fake = DiracBlock(IrrepLabelG(0, 0, 0), "twisted", M, np.zeros((2, 2)), np.eye(2), ())
    with pytest.raises(SpectralError):
        block_spectrum(fake, 1.0)


def test_square_check_raises():
    block = dirac_block((0, 1, 1), "twisted")
    fake = DiracBlock(block.label, "untwisted", block.canonical, block.phi, block.gram, block.basis)
    with pytest.raises(SpectralError):
        casimir_square_check(fake)


@pytest.mark.parametrize("label,exact", [
    ((1, 0, 0), sp.Rational(11, 6)),
    ((0, 0, 0), sp.Rational(-5, 6)),
    ((2, 0, 0), sp.sqrt(201) / 3 - sp.Rational(7, 6)),
])
def test_eigen_lower_bound(label, exact):
    assert sp.simplify(eigen_lower_bound_exact(label) - exact) == 0
    assert eigen_lower_bound(label) == pytest.approx(float(exact))


@pytest.mark.parametrize("label", sorted(cf.spectrum_table("twisted")))
def test_lower_bound_holds(label):
    bound = eigen_lower_bound(label)
    values = block_spectrum(dirac_block(label, "twisted"), 0.0)
    if bound > 0:
        assert np.abs(values).min() >= bound - 1e-12


def test_candidates_at_four():
    assert enumerate_candidates(4) == [IrrepLabelG(*x) for x in SCAN_AT_4]


def test_candidates_threshold_zero():
    assert IrrepLabelG(0, 0, 0) in enumerate_candidates(0)
    assert all(eigen_lower_bound(x) <= 0 for x in enumerate_candidates(0))


def test_candidates_at_five_halves_subset_of_listed():
    scan = set(enumerate_candidates(2.5))
    listed = {IrrepLabelG(*x) for x in cf.LISTED_CANDIDATES}
    assert scan <= listed
    assert listed - scan == {IrrepLabelG(1, 0, 1)}
    assert eigen_lower_bound((1, 0, 1)) == pytest.approx(math.sqrt(14) - 7 / 6)


def test_candidates_are_exhaustive():
    # every label in a generous box above the threshold really has L > threshold
    scan = set(enumerate_candidates(3.0))
    for a in range(4):
        for b in range(4):
            for c in range(5):
                lab = IrrepLabelG(a, b, c)
                assert (lab in scan) == (eigen_lower_bound(lab) <= 3.0)


def test_critical_rates_open_interval_empty():
    assert critical_rates((-2.0, 0.0)) == []
    assert critical_rates((0.0, 0.5)) == []


def test_critical_rate_at_minus_two():
    rates = critical_rates((-2.5, 0.0))
    assert len(rates) == 1
    cr = rates[0]
    assert cr.rate == pytest.approx(-2.0) and cr.eigenvalue == pytest.approx(0.5)
    assert cr.dimension == 1


def test_critical_rates_closed_boundary():
    assert [c.rate for c in critical_rates((-2.0, 0.0), closed=True)] == [pytest.approx(-2.0)]


def test_critical_rates_bad_interval():
    with pytest.raises(ValueError):
        critical_rates((0.0, -1.0))


def test_cluster():
    assert cluster([1.0, 1.0 + 1e-9, 2.0]) == [(pytest.approx(1.0), 2), (2.0, 1)]


def test_square_target_matches_casimir():
    b = dirac_block((0, 0, 2), "twisted")
    assert b.square_target() == pytest.approx(-float(casimir_g((0, 0, 2))) + 1 / 9)
