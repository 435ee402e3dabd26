import numpy as np
import pytest

from qpv.channels import compose, depolarizing
from qpv.errors import DimensionError, QPVError
from qpv.measurement import (MeasurementModel, ProjectiveTarget, damped_model, flip_model,
                             instrument_branches, measurement_fidelity, model_from_json,
                             plan_measurement_samples, round_pass_probabilities,
                             target_from_json, verify_measurement)
from qpv.pmpv import convert, postselected_failure_probability
from qpv.strategies import diagonal_filter_protocol


def test_fidelity_examples():
    comp = ProjectiveTarget.computational(2)
    perfect = MeasurementModel((np.diag([1, 0]), np.diag([0, 1])))
    assert measurement_fidelity(perfect, comp) == 1
    assert measurement_fidelity(flip_model(0.05), comp) == pytest.approx(0.95, abs=1e-12)
    blind = MeasurementModel(tuple(np.eye(3) / 3 for _ in range(3)))
    assert measurement_fidelity(blind, ProjectiveTarget.computational(3)) == pytest.approx(1 / 3)


def test_damped_model_is_exact():
    for d, eps in ((2, 0.1), (4, 0.03)):
        target = ProjectiveTarget.computational(d)
        q = round_pass_probabilities(damped_model(target, eps), target)
        assert np.max(np.abs(q - (1 - eps))) <= 1e-12


def test_damped_model_in_rotated_basis():
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    target = ProjectiveTarget((h[:, 0], h[:, 1]))
    q = round_pass_probabilities(damped_model(target, 0.2), target)
    assert np.allclose(q, 0.8, atol=1e-12)


def test_fidelity_is_affine():
    comp = ProjectiveTarget.computational(2)
    a, b = flip_model(0.1), flip_model(0.4)
    mix = MeasurementModel(tuple(0.3 * x.data + 0.7 * y.data
                                 for x, y in zip(a.effects, b.effects)))
    expected = 0.3 * measurement_fidelity(a, comp) + 0.7 * measurement_fidelity(b, comp)
    assert measurement_fidelity(mix, comp) == pytest.approx(expected, abs=1e-12)


def test_verify_measurement_runs():
    comp = ProjectiveTarget.computational(2)
    perfect = MeasurementModel((np.diag([1, 0]), np.diag([0, 1])))
    assert verify_measurement(perfect, comp, 1000, 1).passes == 1000
    r = verify_measurement(flip_model(0.05), comp, 100_000, 2)
    assert abs(r.empirical_pass_rate - 0.95) <= 4 * np.sqrt(0.95 * 0.05 / 100_000)
    again = verify_measurement(flip_model(0.05), comp, 100_000, 2)
    assert again.to_json() == r.to_json()


def test_plan_measurement_samples():
    assert plan_measurement_samples(0.01, 0.01) == 459
    assert plan_measurement_samples(0.05, 0.001) == 135
    assert plan_measurement_samples(1 - 1e-12, 0.5) == 1


def test_validation():
    with pytest.raises(QPVError):
        MeasurementModel((np.diag([1, 0]), np.diag([0, 0.5])))
    with pytest.raises(QPVError):
        ProjectiveTarget((np.array([1, 0]), np.array([1, 1])))
    with pytest.raises(DimensionError):
        measurement_fidelity(flip_model(0.1), ProjectiveTarget.computational(3))


def test_instrument_branch_through_postselection():
    m = flip_model(0.2)
    branch = instrument_branches(m)[0]
    assert np.allclose(branch.ops[0] @ branch.ops[0], m.effects[0].data)
    s = diagonal_filter_protocol([np.sqrt(0.8), np.sqrt(0.2)])
    x = convert(s)
    assert postselected_failure_probability(x, branch) == pytest.approx(1, abs=1e-10)
    noisy = compose(depolarizing(2, 0.3), branch)
    assert postselected_failure_probability(x, noisy) < 1


def test_json_parsing():
    m = model_from_json({"effects": [[[1, 0], [0, 0]], [[0, 0], [0, 1]]]})
    assert measurement_fidelity(m, target_from_json("computational", 2)) == 1
    with pytest.raises(QPVError, match="effects"):
        model_from_json({})
    with pytest.raises(QPVError):
        target_from_json("bell", 2)
