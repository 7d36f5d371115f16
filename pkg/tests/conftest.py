import os

import hypothesis
import numpy as np
import pytest


hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def finite_difference(f, params, h=1e-6):
    """Central differences of scalar f() w.r.t. every entry of every array in ``params``."""
    out = {}
    for k, arr in params.items():
        g = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            old = arr[i]
            arr[i] = old + h
            fp = f()
            arr[i] = old - h
            fm = f()
            arr[i] = old
            g[i] = (fp - fm) / (2 * h)
        out[k] = g
    return out


def assert_grads_close(grads, fd, rtol=1e-4, floor=1e-6):
    for k in fd:
        err = np.abs(grads[k] - fd[k])
        tol = rtol * np.maximum(np.abs(fd[k]), floor)
        assert np.all(err <= tol), f"{k}: max err {err.max():.3e}"
