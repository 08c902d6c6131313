import numpy as np
import pytest

from broadlearn import kernels
from broadlearn.kernels import _fallback

try:
    from broadlearn.kernels import _core
except ImportError:
    _core = None


def sigmoid(t):
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


REFERENCE = {
    "linear": lambda t: t,
    "tanh": np.tanh,
    "sigmoid": sigmoid,
    "relu": lambda t: np.maximum(t, 0.0),
    "swish": lambda t: t * sigmoid(t),
}


@pytest.mark.parametrize("act", sorted(kernels.ACT_CODES))
def test_bias_act_matches_reference(act):
    g = np.random.default_rng(0)
    p = g.uniform(-4, 4, (30, 7))
    bias = g.uniform(-1, 1, 7)
    scale = 0.8
    expect = REFERENCE[act](scale * (p + bias))
    out = kernels.bias_act(p.copy(), bias, scale, act)
    assert np.abs(out - expect).max() <= 1e-14


def test_bias_act_is_in_place():
    p = np.zeros((2, 3))
    out = kernels.bias_act(p, np.ones(3), 1.0, "linear")
    assert out is p
    assert np.all(p == 1.0)


@pytest.mark.parametrize("impl", [m for m in (_fallback, _core) if m is not None])
@pytest.mark.parametrize("act", ["sigmoid", "swish"])
def test_extreme_arguments_stable(impl, act):
    # exp must never see a large positive argument (underflow to 0 is fine)
    p = np.array([[-1000.0, 1000.0, 0.0]])
    with np.errstate(over="raise", invalid="raise"):
        impl.bias_act(p, np.zeros(3), 1.0, kernels.ACT_CODES[act])
    assert np.isfinite(p).all()
    if act == "sigmoid":
        assert p[0, 0] == 0.0 and p[0, 1] == 1.0 and p[0, 2] == 0.5
    else:
        assert p[0, 0] == 0.0 and p[0, 1] == 1000.0 and p[0, 2] == 0.0


def test_bn_rbf_matches_closed_form():
    g = np.random.default_rng(1)
    p = g.uniform(-3, 3, (20, 5))
    bias = g.uniform(-1, 1, 5)
    mean = g.uniform(-1, 1, 5)
    var = g.uniform(0.5, 2.0, 5)
    eps = 1e-5
    t = (p + bias - mean) / np.sqrt(var + eps)
    expect = np.exp(-0.5 * t * t) / np.sqrt(2 * np.pi)
    out = kernels.bn_rbf(p.copy(), bias, mean, var, eps, "gaussian")
    assert np.abs(out - expect).max() <= 1e-14
    expect_l = np.exp(-np.abs(t)) / np.sqrt(2 * np.pi)
    out_l = kernels.bn_rbf(p.copy(), bias, mean, var, eps, "laplace")
    assert np.abs(out_l - expect_l).max() <= 1e-14


@pytest.mark.skipif(_core is None, reason="compiled kernels not built")
class TestBackendParity:
    def test_bias_act_parity(self):
        g = np.random.default_rng(2)
        for act, code in kernels.ACT_CODES.items():
            p1 = g.uniform(-6, 6, (50, 9))
            p2 = p1.copy()
            bias = g.uniform(-1, 1, 9)
            _core.bias_act(p1, bias, 0.8, code)
            _fallback.bias_act(p2, bias, 0.8, code)
            assert np.allclose(p1, p2, rtol=1e-13, atol=1e-300), act

    def test_bn_rbf_parity(self):
        g = np.random.default_rng(3)
        for kind in (0, 1):
            p1 = g.uniform(-6, 6, (50, 9))
            p2 = p1.copy()
            bias = g.uniform(-1, 1, 9)
            mean = g.uniform(-1, 1, 9)
            var = g.uniform(0.1, 3.0, 9)
            _core.bn_rbf(p1, bias, mean, var, 1e-5, kind)
            _fallback.bn_rbf(p2, bias, mean, var, 1e-5, kind)
            assert np.allclose(p1, p2, rtol=1e-13, atol=1e-300)


def test_backend_reports_name():
    assert kernels.backend() in ("mixed", "numpy")


def test_unknown_codes_rejected():
    with pytest.raises(KeyError):
        kernels.bias_act(np.zeros((1, 1)), np.zeros(1), 1.0, "softmax")
    with pytest.raises(ValueError):
        _fallback.bias_act(np.zeros((1, 1)), np.zeros(1), 1.0, 9)
    with pytest.raises(ValueError):
        _fallback.bn_rbf(np.zeros((1, 1)), np.zeros(1), np.zeros(1), np.ones(1), 1e-5, 9)
