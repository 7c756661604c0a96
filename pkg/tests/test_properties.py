"""Quantified structural checks; runnable on their own with ``pytest tests/test_properties.py``."""
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spin7_instantons.algebra import DIM_G, bracket, coords, from_coords, killing_form
from spin7_instantons.dirac import build_clifford, spinor_target, twisted_spinor_target
from spin7_instantons.geometry import Form, ce_differential, wedge
from spin7_instantons.index import CohomClass
from spin7_instantons.reptheory import (build_carrier, casimir_g, hom_block, verify_carrier)
from spin7_instantons.dirac import enumerate_candidates

ALL_LABELS = enumerate_candidates(4)

small = st.integers(min_value=-3, max_value=3)
coord_vectors = st.lists(small, min_size=DIM_G, max_size=DIM_G).map(lambda v: from_coords(v))
PROPS = settings(max_examples=40, deadline=None)


@PROPS
@given(coord_vectors, coord_vectors)
def test_bracket_antisymmetry(x, y):
    assert coords(bracket(x, y)) == tuple(-c for c in coords(bracket(y, x)))


@PROPS
@given(coord_vectors, coord_vectors, coord_vectors)
def test_jacobi(x, y, z):
    total = (bracket(x, bracket(y, z)) + bracket(y, bracket(z, x)) + bracket(z, bracket(x, y)))
    assert total.is_zero()


@PROPS
@given(coord_vectors, coord_vectors, coord_vectors)
def test_killing_invariance(x, y, z):
    assert killing_form(bracket(x, y), z) == -killing_form(y, bracket(x, z))


@PROPS
@given(st.lists(st.floats(-5, 5), min_size=7, max_size=7))
def test_clifford_anticommutation(v):
    g = sum(c * m for c, m in zip(v, build_clifford().gammas))
    assert np.allclose(g @ g, -np.dot(v, v) * np.eye(8), atol=1e-10)


@pytest.mark.parametrize("label", ALL_LABELS, ids=str)
@pytest.mark.parametrize("target", [spinor_target, twisted_spinor_target], ids=["plain", "twisted"])
def test_schur_dimension(label, target):
    # hom_block raises HomDimensionError on disagreement
    hb = hom_block(label, target())
    assert hb.dim == hb.schur_count


@pytest.mark.parametrize("label", ALL_LABELS, ids=str)
def test_casimir_scalar_carriers(label):
    r = build_carrier(label)
    verify_carrier(r)
    assert np.abs(r.casimir() - float(casimir_g(label)) * np.eye(r.dim)).max() < 1e-9


one_forms = st.lists(st.tuples(st.integers(1, DIM_G), small), min_size=1, max_size=5)
two_forms = st.lists(st.tuples(st.integers(1, DIM_G), st.integers(1, DIM_G), small), min_size=1, max_size=5)


def _build(terms):
    out = None
    for *idx, c in terms:
        f = Form.basis(*idx, coeff=Fraction(c))
        out = f if out is None else out + f
    return out


@PROPS
@given(one_forms)
def test_d_squared_one_forms(terms):
    assert ce_differential(ce_differential(_build(terms))).is_zero()


@PROPS
@given(two_forms)
def test_d_squared_two_forms(terms):
    assert ce_differential(ce_differential(_build(terms))).is_zero()


@PROPS
@given(one_forms, one_forms)
def test_leibniz(a, b):
    x, y = _build(a), _build(b)
    lhs = ce_differential(wedge(x, y))
    rhs = wedge(ce_differential(x), y) - wedge(x, ce_differential(y))
    assert lhs == rhs


classes = st.builds(lambda s, n1, n2, m1, m2: CohomClass(s, (n1, n2), (m1, m2)),
                    small, small, small, small, small)


@PROPS
@given(classes, classes, classes)
def test_cohomology_ring_axioms(x, y, z):
    assert x * y == y * x
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert (x + y).integrate() == x.integrate() + y.integrate()
