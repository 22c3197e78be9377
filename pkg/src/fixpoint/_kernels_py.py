"""Pure-Python/numpy versions of the hot loops.

Signatures and results match the compiled ``_kernels`` module exactly; this
module is used whenever the extension is not built or when
``FIXPOINT_PURE_PYTHON`` is set.
"""

import numpy as np


def affine_iterate(A, b, X, n):
    """Apply ``x -> A x + b`` `n` times to every row of `X`."""
    At = np.ascontiguousarray(np.asarray(A, dtype=float).T)
    b = np.asarray(b, dtype=float)
    out = np.array(X, dtype=float, ndmin=2)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n):
            out = out @ At + b
    return out


def pair_norms(X, I, J):
    """Euclidean distances between rows ``X[I[k]]`` and ``X[J[k]]``."""
    X = np.asarray(X, dtype=float)
    diff = X[np.asarray(I, dtype=np.intp)] - X[np.asarray(J, dtype=np.intp)]
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def ratio_max(num, den, guard):
    """Max of ``num/den`` over entries with ``den >= guard``.

    Returns ``(max, argmax, skipped)``; ties go to the lowest index and
    ``argmax`` is -1 when every entry was skipped.
    """
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    ok = den >= guard
    skipped = int(np.count_nonzero(~ok))
    if not ok.any():
        return 0.0, -1, skipped
    ratio = np.full(num.shape, -np.inf)
    ratio[ok] = num[ok] / den[ok]
    k = int(np.argmax(ratio))
    return float(ratio[k]), k, skipped


def linear_envelope(a1, alpha, b):
    """Iterate ``a[k+1] = (1 + alpha[k]) * a[k] + b[k]`` from ``a[0] = a1``."""
    alpha = np.asarray(alpha, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.empty(alpha.size + 1)
    a = float(a1)
    out[0] = a
    for k in range(alpha.size):
        a = (1.0 + alpha[k]) * a + b[k]
        out[k + 1] = a
    return out
