"""Statevector simulator for quasiperiodically and periodically driven spin chains.

Modules: ``core`` (gate kernels), ``drives`` (FSPT/EDSPT circuits),
``noise``, ``observables`` (autocorrelators), ``flux_echo``, ``magnus``
(letter algebra of the recursive expansion), ``heating``, ``compilation``
and ``cli``.
"""

__version__ = "0.1.0"
