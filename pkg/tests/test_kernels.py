import numpy as np
import pytest

from eventstep import kernels, lts
from eventstep.kernels import _fallback

from conftest import make_world

pytestmark = pytest.mark.skipif(
    kernels.BACKEND != "c",
    reason="compiled core not built; backend parity needs both")


def _random_states(rng, law, n):
    if law == kernels.LAW_BURGERS:
        return rng.uniform(-2.0, 2.0, size=(n, 1))
    out = np.empty((n, 2))
    out[:, 0] = rng.uniform(0.05, 2.0, size=n)
    out[:, 1] = rng.uniform(-1.0, 1.0, size=n)
    return out


@pytest.mark.parametrize("law,flux", [
    (kernels.LAW_BURGERS, kernels.FLUX_LLF),
    (kernels.LAW_BURGERS, kernels.FLUX_GODUNOV),
    (kernels.LAW_SWE, kernels.FLUX_LLF),
])
def test_interior_fluxes_bitwise_parity(law, flux):
    rng = np.random.default_rng(41)
    for _ in range(50):
        states = _random_states(rng, law, rng.integers(2, 40))
        from eventstep.kernels import _core
        a = _core.interior_fluxes(law, flux, states)
        b = _fallback.interior_fluxes(law, flux, states)
        assert np.array_equal(a, b)


@pytest.mark.parametrize("law,flux", [
    (kernels.LAW_BURGERS, kernels.FLUX_LLF),
    (kernels.LAW_BURGERS, kernels.FLUX_GODUNOV),
    (kernels.LAW_SWE, kernels.FLUX_LLF),
])
def test_internal_k_bitwise_parity(law, flux):
    rng = np.random.default_rng(43)
    for _ in range(50):
        n = int(rng.integers(2, 40))
        states = _random_states(rng, law, n)
        dx = rng.uniform(0.01, 1.0, size=n)
        from eventstep.kernels import _core
        a = _core.internal_k_max(law, flux, states, dx)
        b = _fallback.internal_k_max(law, flux, states, dx)
        assert a == b


def test_backend_switch_roundtrip():
    assert kernels.set_backend("py") == "py"
    try:
        world = make_world(ics="shock", n=16, n_sbmsh=2, t_end_s=0.1)
        trace_py = lts.run_sequential(world).signatures()
    finally:
        assert kernels.set_backend("auto") == "c"
    world = make_world(ics="shock", n=16, n_sbmsh=2, t_end_s=0.1)
    trace_c = lts.run_sequential(world).signatures()
    assert trace_py == trace_c


def test_explicit_c_request_when_available():
    assert kernels.set_backend("c") == "c"
    kernels.set_backend("auto")
