import numpy as np
import pytest

from threadsum import han
from threadsum import ndgrad as nd


@pytest.fixture
def tiny_cfg():
    return han.HanConfig(embed_dim=8, word_hidden=4, sent_hidden=3, init_scale=0.5, epochs=0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def check_param_grads(params, build_loss, floor=1e-6, h=1e-5):
    """Worst per-parameter relative error between tape gradients and central differences."""
    params = list(params)
    for p in params:
        p.zero_grad()
    with nd.Tape() as tape:
        value = build_loss()
    nd.backward(tape, value)
    worst = {}
    for p in params:
        def f(x, p=p):
            old = p.value.data.copy()
            p.value.data[...] = x
            try:
                return build_loss().item()
            finally:
                p.value.data[...] = old

        numeric = nd.finite_diff_grad(f, p.value.data.copy(), h)
        worst[p.name] = nd.max_relative_error(p.grad, numeric, floor)
    return worst
