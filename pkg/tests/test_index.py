import math
from fractions import Fraction

import numpy as np
import pytest

from spin7_instantons.errors import CriticalRateError
from spin7_instantons.index import (ZERO_CLASS, CohomClass, MetricFamilyPoint, chern_sym2,
                                    fiber_block, fiber_operator, fiber_operator_spectrum,
                                    flat_endpoint_labels, flat_endpoint_spectrum, hp2_pontryagin,
                                    index_at_minus_5_2, index_integrand, index_pipeline,
                                    limiting_bundle_classes, ricci_family, scalar_curvature,
                                    scalar_family, scalar_family_positivity, single_hp2_index,
                                    spectral_flow_connection, trivial_block_fiber_eigenvalue,
                                    trivial_isotypic_line, virtual_dimension)
from spin7_instantons.reptheory import IrrepLabelG

F = Fraction


@pytest.fixture(scope="module")
def flow_result():
    return spectral_flow_connection()


@pytest.fixture(scope="module")
def pipeline(flow_result):
    return index_pipeline(connection_flow=flow_result.total)


def test_fiber_operator_shape_and_symmetry():
    Fo = fiber_operator()
    assert Fo.shape == (24, 24)
    assert np.abs(Fo - Fo.conj().T).max() < 1e-14
    assert abs(np.trace(Fo)) < 1e-12


def test_table1():
    spec = fiber_operator_spectrum(tol=1e-9)
    assert [(round(v), m) for v, m in spec] == [(-4, 4), (-2, 8), (2, 8), (4, 4)]
    assert all(abs(v - round(v)) < 1e-9 for v, _ in spec)
    assert sum(m for _, m in spec) == 24


def test_trivial_line():
    v = trivial_isotypic_line()
    assert np.linalg.norm(v) == pytest.approx(1.0)
    assert trivial_block_fiber_eigenvalue() == pytest.approx(-4.0, abs=1e-12)


def test_trivial_block_path(flow_result):
    b = flow_result.block((0, 0, 0))
    assert b.paths[0, 0] == pytest.approx(4.5)
    assert b.paths[-1, 0] == pytest.approx(0.5)
    assert np.allclose(b.paths[:, 0], 0.5 - (4 / 3) * b.s)
    assert b.crossings == 0


def test_connection_flow_total(flow_result):
    assert flow_result.total == 0
    assert all(b.crossings == 0 for b in flow_result.blocks)
    assert all(b.min_abs > 1e-6 for b in flow_result.blocks)


def test_flow_scans_only_nonempty_candidates(flow_result):
    labels = {b.label for b in flow_result.blocks}
    assert IrrepLabelG(0, 1, 0) not in labels
    assert labels <= set(flow_result.candidates)


def test_step_bound(flow_result):
    for b in flow_result.blocks:
        ds = b.s[1] - b.s[0]
        assert b.max_step <= (4 / 3) * ds + 1e-12


def test_fiber_block_hermitian():
    Fb = fiber_block((0, 1, 1))
    assert np.abs(Fb - Fb.conj().T).max() < 1e-12


@pytest.mark.parametrize("label,expected", [
    ((0, 0, 0), [(0, 0, 2)]),
    ((0, 1, 1), [(0, 1, 1), (0, 1, 3)]),
    ((1, 0, 2), [(1, 0, 0), (1, 0, 2), (1, 0, 4)]),
])
def test_flat_endpoint_labels(label, expected):
    assert flat_endpoint_labels(label) == [IrrepLabelG(*x) for x in expected]


def test_flat_endpoint_reproduces_untwisted(flow_result):
    for b in flow_result.blocks:
        assert np.abs(np.sort(b.paths[0]) - flat_endpoint_spectrum(b.label)).max() < 1e-9


@pytest.mark.parametrize("a2,b2,c2,expected", [
    (F(1), F(1), F(1), (6, 6, 6)),
])
def test_ricci_round(a2, b2, c2, expected):
    assert ricci_family(MetricFamilyPoint(a2, b2, c2)) == expected


@pytest.mark.parametrize("a2,value", [(F(1), F(42)), (F(1, 5), F(378, 5))])
def test_scalar_curvature_exact(a2, value):
    p = MetricFamilyPoint(a2, a2, F(1))
    assert scalar_curvature(p) == value
    assert scalar_family(a2) == value


def test_metric_family_validation():
    with pytest.raises(ValueError):
        MetricFamilyPoint(0, 1, 1)
    p = MetricFamilyPoint.from_scales(2.0, 1.0, 3.0)
    assert (p.a, p.b, p.c) == pytest.approx((2.0, 1.0, 3.0))


def test_scalar_family_positivity():
    pos = scalar_family_positivity()
    assert pos.positive and pos.metric_flow == 0
    assert pos.minimum == pytest.approx(42.0)
    assert pos.argmin_a == pytest.approx(1.0)
    assert pos.round_value == 42 and pos.squashed_value == F(378, 5)


def test_cohomology_ring():
    a1, a2 = CohomClass.degree4(1), CohomClass.degree4(0, 1)
    assert (a1 * a2).integrate() == 0
    assert (a1 * a1).integrate() == 1 and (a2 * a2).integrate() == 1
    x = CohomClass.degree4(3, -2)
    assert (x * x).integrate() == 13
    assert (CohomClass(scalar=2) * x).n == (6, -4)
    assert (x - x) == ZERO_CLASS


def test_chern_sym2():
    c1, c2 = chern_sym2(ZERO_CLASS, CohomClass.degree4(-1))
    assert c1 == ZERO_CLASS and c2.n == (-4, 0)
    assert limiting_bundle_classes() == (-4, 0)


def test_hp2_trivial_index():
    assert single_hp2_index() == 0
    p1, p2 = CohomClass.degree4(2), CohomClass.degree8(7)
    assert (p1 * p1 * 7 - p2 * 4).integrate() == 0


def test_integrand_all_zero():
    assert index_integrand(ZERO_CLASS, ZERO_CLASS, ZERO_CLASS, ZERO_CLASS, 3) == 0


@pytest.mark.parametrize("n1,n2", [(-4, 0), (0, 0), (1, 2), (-3, 5)])
def test_limiting_formula(n1, n2):
    p1g = CohomClass.degree4(n1, n2)
    p1M = CohomClass.degree4(4, 4)
    got = index_integrand(p1g, ZERO_CLASS, p1M, ZERO_CLASS, 3) - index_integrand(
        ZERO_CLASS, ZERO_CLASS, p1M, ZERO_CLASS, 3)
    assert got == F(1, 12) * ((2 * n1 - n1 * n1) + (2 * n2 - n2 * n2))


def test_pipeline_default(pipeline):
    assert pipeline.all_hold
    assert pipeline.family == 0 and pipeline.limiting == -2
    assert index_at_minus_5_2("family", pipeline=pipeline) == 0
    assert index_at_minus_5_2("limiting", pipeline=pipeline) == -2


def test_pipeline_milnor_convention(flow_result):
    pipe = index_pipeline("2a", connection_flow=flow_result.total)
    assert pipe.limiting == F(-5, 3)
    assert pipe.limiting.denominator != 1


def test_pipeline_records_failed_identity():
    pipe = index_pipeline(connection_flow=1, metric_flow=0)
    assert not pipe.all_hold


def test_p1_convention_validation():
    assert hp2_pontryagin("4a") == (4, 28)
    with pytest.raises(ValueError):
        hp2_pontryagin("3a")
    with pytest.raises(ValueError):
        index_at_minus_5_2("other", pipeline=index_pipeline(connection_flow=0))


@pytest.mark.parametrize("nu", [-1.9, -1.5, -1.0, -0.5, -0.1])
def test_virtual_dimensions(nu, pipeline):
    assert virtual_dimension("family", nu, pipeline=pipeline) == 1
    assert virtual_dimension("limiting", nu, pipeline=pipeline) == -1


def test_virtual_dimension_below_crossing(pipeline):
    assert virtual_dimension("family", -2.25, pipeline=pipeline) == 0
    assert virtual_dimension("limiting", -2.25, pipeline=pipeline) == -2


def test_virtual_dimension_at_critical_rate(pipeline):
    with pytest.raises(CriticalRateError):
        virtual_dimension("family", -2.0, pipeline=pipeline)
