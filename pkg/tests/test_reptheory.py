from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from spin7_instantons.dirac import spinor_target, twisted_spinor_target
from spin7_instantons.errors import CarrierError, HomDimensionError
from spin7_instantons.reptheory import (HRep, IrrepLabelG, IrrepLabelH, branch_to_H, build_carrier,
                                        casimir_g, casimir_h, decompose_h,
                                        delta_tensor_decomposition, hom_block, isotropy_on_m,
                                        weyl_dim_sp2)

H = IrrepLabelH


@pytest.mark.parametrize("label,value", [
    ((0, 0, 0), Fraction(0)),
    ((0, 0, 2), Fraction(-40, 3)),
    ((1, 0, 0), Fraction(-80, 9)),
    ((0, 1, 1), Fraction(-95, 9)),
])
def test_casimir_g(label, value):
    assert casimir_g(label) == value


@pytest.mark.parametrize("label,value", [((0, 0), 0), ((0, 2), Fraction(-16, 3)),
                                         ((1, 1), Fraction(-16, 3))])
def test_casimir_h(label, value):
    assert casimir_h(label) == value


@pytest.mark.parametrize("a,b,dim", [(0, 0, 1), (0, 1, 4), (1, 0, 5), (0, 2, 10), (1, 1, 16),
                                     (2, 0, 14), (0, 3, 20)])
def test_weyl_dimension(a, b, dim):
    assert weyl_dim_sp2(a, b) == dim


def test_label_parse():
    assert IrrepLabelG.parse("0,1,1") == (0, 1, 1)
    assert IrrepLabelG.parse("(1, 0, 2)").dim == 15
    with pytest.raises(ValueError):
        IrrepLabelG.parse("1,2")


@pytest.mark.parametrize("label", [(0, 2, 0), (0, 1, 1), (1, 0, 1), (2, 0, 0)])
def test_carrier_dimension_and_casimir(label):
    r = build_carrier(label)
    assert r.dim == IrrepLabelG(*label).dim
    C = r.casimir()
    assert np.abs(C - float(casimir_g(label)) * np.eye(r.dim)).max() < 1e-9


def test_carrier_is_memoised():
    assert build_carrier((0, 1, 0)) is build_carrier((0, 1, 0))


def test_carrier_bracket_i4_i5():
    r = build_carrier((0, 1, 0))
    lhs = r[4] @ r[5] - r[5] @ r[4]
    rhs = 0.4 * r[1] - 2 * r[8] + 1.2 * r[11]
    assert np.abs(lhs - rhs).max() < 1e-12


def test_negative_label_rejected():
    with pytest.raises(CarrierError):
        build_carrier((-1, 0, 0))


BRANCHING = {
    (0, 0, 0): {H(0, 0): 1},
    (0, 1, 0): {H(0, 1): 1, H(1, 0): 1},
    (1, 0, 0): {H(0, 0): 1, H(1, 1): 1},
    (0, 0, 1): {H(0, 1): 1},
    (0, 1, 1): {H(0, 0): 1, H(1, 1): 1, H(0, 2): 1},
    (0, 2, 0): {H(0, 2): 1, H(1, 1): 1, H(2, 0): 1},
    (1, 0, 1): {H(0, 1): 1, H(1, 0): 1, H(1, 2): 1},
    (0, 0, 2): {H(0, 2): 1},
    (1, 1, 0): {H(0, 1): 1, H(1, 0): 1, H(1, 2): 1, H(2, 1): 1},
    (2, 0, 0): {H(0, 0): 1, H(1, 1): 1, H(2, 2): 1},
}


@pytest.mark.parametrize("label", sorted(BRANCHING))
def test_branching(label):
    got = branch_to_H(label)
    assert got == Counter(BRANCHING[label])
    assert sum(h.dim * m for h, m in got.items()) == IrrepLabelG(*label).dim


def test_m_branching():
    assert decompose_h(isotropy_on_m()) == Counter({H(1, 1): 1, H(0, 2): 1})


def test_spinor_branching():
    assert decompose_h(spinor_target()) == Counter({H(0, 0): 1, H(0, 2): 1, H(1, 1): 1})


def test_delta_tensor_decomposition():
    d = delta_tensor_decomposition()
    assert d == Counter({H(0, 2): 2, H(1, 1): 1, H(1, 3): 1, H(0, 0): 1, H(0, 4): 1})
    assert sum(h.dim * m for h, m in d.items()) == 24
    assert d[H(1, 0)] == 0


BLOCK_DIMS = {  # label: (untwisted, twisted)
    (0, 0, 0): (1, 1), (0, 1, 0): (0, 0), (1, 0, 0): (2, 2), (0, 0, 1): (0, 0),
    (0, 1, 1): (3, 4), (0, 2, 0): (2, 3), (1, 0, 1): (0, 0), (0, 0, 2): (1, 2),
}


@pytest.mark.parametrize("label", sorted(BLOCK_DIMS))
def test_hom_block_dimensions(label):
    untw, tw = BLOCK_DIMS[label]
    hb_u = hom_block(label, spinor_target())
    hb_t = hom_block(label, twisted_spinor_target())
    assert (hb_u.dim, hb_t.dim) == (untw, tw)
    assert hb_t.schur_count == tw
    if tw:
        assert hb_t.equivariance_defect(twisted_spinor_target()) < 1e-10


def test_hom_block_dimension_mismatch():
    # an over-aggressive rank cutoff discards genuine constraints
    with pytest.raises(HomDimensionError):
        hom_block((0, 1, 1), twisted_spinor_target(), rcond=0.99)


def test_decompose_h_rejects_non_representation():
    rng = np.random.default_rng(0)
    mats = tuple(rng.standard_normal((3, 3)) for _ in range(6))
    with pytest.raises(CarrierError):
        decompose_h(HRep(mats, "noise"))
