"""Backend selection for the coset-search kernel.

The compiled extension ``_coset`` is preferred; the numpy implementation in
``_coset_py`` is used when the extension is missing or when the environment
variable ``SUBSPACECOMP_PURE_PYTHON`` is set to a non-empty value.
"""

from __future__ import annotations

import os

from . import _coset_py

try:
    from . import _coset as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _coset_py.coset_search}
if _compiled is not None:
    BACKENDS["cython"] = _compiled.coset_search

if os.environ.get("SUBSPACECOMP_PURE_PYTHON") or _compiled is None:
    BACKEND = "python"
else:
    BACKEND = "cython"

coset_search = BACKENDS[BACKEND]


def get_coset_search(name: str | None = None):
    """Return the kernel for ``name`` (``"cython"`` or ``"python"``), default the active one."""
    if name is None:
        return coset_search
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
