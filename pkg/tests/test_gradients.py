"""Analytic vs finite-difference gradients for every layer kind."""

import pytest

from gradcheck import LAYER_KINDS, check_softmax_jacobian, run_layer_kind_check


@pytest.mark.parametrize("kind", LAYER_KINDS)
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_layer_kind_gradients(kind, seed):
    assert run_layer_kind_check(kind, seed)


@pytest.mark.parametrize("seed", [0, 7, 13])
def test_softmax_jacobian(seed):
    assert check_softmax_jacobian(seed)
