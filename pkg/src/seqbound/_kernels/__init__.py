"""Hot-loop kernels with a compiled fast path and a numpy fallback.

The compiled extension (_fast, built from _fast.pyx) is optional; when it
is missing the pure-numpy implementation in _ref takes over with identical
semantics. `BACKEND` records which one is active so runs can report it.
"""

try:
    from ._fast import instance_chain_stats

    BACKEND = "compiled"
except ImportError:
    from ._ref import instance_chain_stats

    BACKEND = "python"

__all__ = ["instance_chain_stats", "BACKEND"]
