"""Dense Matrix Market I/O on top of :mod:`scipy.io`.

Both the coordinate and array layouts are read, real or complex; matrices
are always returned dense and complex.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse

from ..bspace import as_matrix
from ..errors import ParseError

__all__ = ["read_matrix", "write_matrix"]


def read_matrix(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise ParseError(f"matrix file not found: {path}")
    try:
        m = scipy.io.mmread(str(path))
    except (ValueError, OSError, IndexError) as exc:
        raise ParseError(f"cannot parse Matrix Market file {path}: {exc}") from None
    if scipy.sparse.issparse(m):
        m = m.toarray()
    return as_matrix(m, path.name)


def write_matrix(path, a, comment: str = "", layout: str = "coordinate") -> Path:
    """Write ``a`` as real when its imaginary part vanishes, complex otherwise."""
    a = np.asarray(a)
    if np.iscomplexobj(a) and not np.any(a.imag):
        a = a.real
    if layout == "coordinate":
        a = scipy.sparse.coo_matrix(a)
    elif layout != "array":
        raise ValueError(f"unknown layout {layout!r}")
    path = Path(path)
    scipy.io.mmwrite(str(path), a, comment=comment, precision=17)
    # scipy appends .mtx when the name lacks it
    return path if path.suffix == ".mtx" else path.with_name(path.name + ".mtx")
