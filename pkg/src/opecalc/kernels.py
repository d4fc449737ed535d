"""Select the polynomial kernel implementation at import time.

Prefers the compiled extension, falls back to the pure-Python module with
identical semantics.  KERNEL_BACKEND records which one is live so tests and
benchmarks can report it.
"""

try:
    from . import _polykernels as _impl

    KERNEL_BACKEND = "compiled"
except ImportError:
    from . import _polykernels_py as _impl

    KERNEL_BACKEND = "python"

pstrip = _impl.pstrip
pconst = _impl.pconst
padd = _impl.padd
pneg = _impl.pneg
psub = _impl.psub
pmul = _impl.pmul
pscale = _impl.pscale
pdivmod = _impl.pdivmod
pgcd = _impl.pgcd
pmonic = _impl.pmonic
peval = _impl.peval
ppow = _impl.ppow
