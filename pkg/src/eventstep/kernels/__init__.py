"""Hot-loop kernels with a compiled core and a pure-numpy fallback.

The two backends are kept expression-identical so traces are bit-for-bit
reproducible regardless of which one is active.  Selection happens at import:
the compiled core is used when present unless EVENTSTEP_KERNEL=py forces the
fallback (EVENTSTEP_KERNEL=c fails loudly if the extension is missing).
"""

from __future__ import annotations

import os

from . import _fallback

LAW_BURGERS = 0
LAW_SWE = 1
FLUX_LLF = 0
FLUX_GODUNOV = 1

_LAW_IDS = {"burgers": LAW_BURGERS, "swe": LAW_SWE}
_FLUX_IDS = {"llf": FLUX_LLF, "godunov": FLUX_GODUNOV}


def law_id(name: str) -> int:
    return _LAW_IDS[name]


def flux_id(name: str) -> int:
    return _FLUX_IDS[name]


def _load_backend(name: str):
    if name == "py":
        return _fallback, "py"
    try:
        from . import _core  # type: ignore[attr-defined]

        return _core, "c"
    except ImportError:
        if name == "c":
            raise ImportError(
                "EVENTSTEP_KERNEL=c requested but the compiled core is not built; "
                "run `pip install -e .` or `python setup.py build_ext --inplace`"
            ) from None
        return _fallback, "py"


_backend, BACKEND = _load_backend(os.environ.get("EVENTSTEP_KERNEL", "auto"))


def set_backend(name: str) -> str:
    """Swap the active backend ('py', 'c' or 'auto'); returns the one chosen."""
    global _backend, BACKEND
    _backend, BACKEND = _load_backend(name)
    return BACKEND


def interior_fluxes(law: int, flux: int, states):
    """Numerical flux at each interior face of a cell block: (m-1, v)."""
    return _backend.interior_fluxes(law, flux, states)


def internal_k_max(law: int, flux: int, states, dx) -> float:
    """Largest CFL coefficient bound over the block's interior cells.

    Zero when the block has no interior cell (m < 3).
    """
    return _backend.internal_k_max(law, flux, states, dx)
