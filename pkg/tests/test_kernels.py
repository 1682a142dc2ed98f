import os
import subprocess
import sys

import numpy as np
import pytest

from randur import kernels
from randur.lrt import run_batch_trajectories
from randur.model import DurationPmf, ModelParams


def test_default_backend_is_known():
    assert kernels.DEFAULT_BACKEND in kernels.BACKENDS


@pytest.mark.skipif("compiled" not in kernels.BACKENDS, reason="extension not built")
@pytest.mark.parametrize("delta", [1, 2, 3, 8])
@pytest.mark.parametrize("mode", ["model", "paper"])
def test_backends_agree(delta, mode):
    rng = np.random.default_rng(delta)
    p = ModelParams(delta, DurationPmf(rng.dirichlet(np.ones(delta))),
                    DurationPmf(rng.dirichlet(np.ones(delta))), 0.3, 1.1, 0.9)
    x = rng.normal(size=(50, 300)) + 0.4
    a = run_batch_trajectories(p, x, mode, backend="compiled")
    b = run_batch_trajectories(p, x, mode, backend="python")
    np.testing.assert_allclose(a, b, atol=1e-10, rtol=0)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.lrt_batch(np.zeros((1, 2)), 0, 1, 1, [1.0], [1.0], [1.0], [1.0], backend="gpu")


def test_env_forces_fallback():
    code = "import randur.kernels as k; print(k.DEFAULT_BACKEND)"
    env = dict(os.environ, RANDUR_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
