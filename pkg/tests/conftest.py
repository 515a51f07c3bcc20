import numpy as np
import pytest

from drivecast.learn import Dataset, fit_cart
from drivecast.synth import SynthConfig, synth_trace


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger jit compilation once so timed tests measure the algorithms."""
    rng = np.random.default_rng(0)
    X = rng.normal(size=(50, 3))
    X[:, 2] = rng.integers(0, 4, size=50)
    data = Dataset(X=X, y=rng.normal(size=50),
                   feature_names=("a", "b", "c"), categorical=(2,))
    fit_cart(data).predict(X)


@pytest.fixture(scope="session")
def small_trace():
    """600 s, 3 operators, dense transmissions; labels are exact (no noise)."""
    cfg = SynthConfig(duration=600.0, cadence=5.0, noise_sd=0.0, seed=11)
    return synth_trace(cfg)
