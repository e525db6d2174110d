"""Kernel selection: the compiled extension when built, pure Python otherwise.

Both kernels implement the same algorithms over the same splitmix64 draws,
so they return bit-identical results; the extension is just fast. Force a
choice with backend="native"/"python" on the public entry points, or read
``backend_name()`` to see what import-time probing picked.
"""

from __future__ import annotations

from . import _pyref

try:
    from . import _native

    HAVE_NATIVE = True
except ImportError:  # extension not built: fall back to pure Python
    _native = None
    HAVE_NATIVE = False


def backend_name() -> str:
    return "native" if HAVE_NATIVE else "python"


def _pick(backend: str | None):
    if backend in (None, "auto"):
        return _native if HAVE_NATIVE else _pyref
    if backend == "native":
        if not HAVE_NATIVE:
            raise RuntimeError("native backend requested but the extension is not built")
        return _native
    if backend == "python":
        return _pyref
    raise ValueError(f"unknown backend {backend!r} (use 'native', 'python', or None)")


def run_stream_trials(config, spec, trials: int, base_seed: int, backend: str | None = None):
    """Monte-Carlo stream-search costs as an int64 array, one per trial."""
    mod = _pick(backend)
    bits = spec.bits if spec.kind == "fixed" else None
    return mod.run_stream_trials(
        config.kind, config.rounds, spec.kind, spec.n, bits, trials, base_seed
    )


def run_broadcast(params: dict, backend: str | None = None) -> dict:
    """Full grid-broadcast simulation; ``params`` is the numeric engine spec."""
    mod = _pick(backend)
    return mod.run_broadcast(params)
