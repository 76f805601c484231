import numpy as np
import pytest

from qgt.errors import ParameterError
from qgt.graph import sample_regular
from qgt.instance import DefectVector, sample_defects, syndrome

GAMMA = 100 / 2**16


def test_extreme_prevalences():
    x = sample_defects(50, 0.0, 1)
    assert x.k == 0 and not x.bits.any()
    x = sample_defects(50, 1.0, 1)
    assert x.k == 50


def test_defect_count_moments():
    n = 10**6
    sd = np.sqrt(n * GAMMA * (1 - GAMMA))
    ks = [sample_defects(n, GAMMA, s).k for s in range(20)]
    assert all(abs(k - n * GAMMA) < 4 * sd for k in ks)
    assert abs(np.mean(ks) - n * GAMMA) < 3 * sd / np.sqrt(len(ks))


def test_fixed_k_mode():
    x = sample_defects(1000, 0.0123, 3, fixed_k=True)
    assert x.k == 12


def test_defect_vector_validation():
    assert DefectVector([0, 1, 1]).k == 2
    with pytest.raises(ParameterError):
        DefectVector([0, 2])
    with pytest.raises(ParameterError):
        sample_defects(10, 1.5, 0)


def test_eq2_syndromes(eq2_graph):
    assert syndrome(eq2_graph, [1, 0, 0, 0, 0, 0]).counts.tolist() == [1, 0, 1]
    assert syndrome(eq2_graph, [0] * 6).counts.tolist() == [0, 0, 0]
    assert syndrome(eq2_graph, [1] * 6).counts.tolist() == [4, 4, 4]
    with pytest.raises(ParameterError):
        syndrome(eq2_graph, [1, 0])


def test_syndrome_conservation_and_bounds():
    g = sample_regular(1200, 3, 60, 4)
    x = sample_defects(g.n_vns, 0.05, 9)
    s = syndrome(g, x).counts
    assert s.sum() == 3 * x.k
    assert (s >= 0).all() and (s <= g.cn_degrees()).all()
    assert np.array_equal(s, g.to_matrix().astype(int) @ x.bits)


def test_residual_syndrome_consistency():
    # subtracting resolved defectives leaves the syndrome of the unresolved part
    g = sample_regular(600, 3, 30, 2)
    x = sample_defects(g.n_vns, 0.1, 3).bits
    resolved = np.random.default_rng(0).random(g.n_vns) < 0.4
    full = syndrome(g, x).counts
    part = syndrome(g, x * resolved).counts
    assert np.array_equal(full - part, syndrome(g, x * ~resolved).counts)
