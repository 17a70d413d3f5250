"""Pure numpy/scipy implementations of the per-step hot kernels.

These are the reference semantics; the Cython module _core implements the
same contracts with fused loops.  All functions are deterministic for
identical inputs (scipy CSR products use fixed traversal order).
"""

from __future__ import annotations

import numpy as np
from scipy.sparse import csr_matrix


def gaussian_kernel(args: np.ndarray, eps: float, out: np.ndarray) -> None:
    """out[i] = exp(-args[i]^2 / (2 eps^2)) / (eps sqrt(2 pi))."""
    np.multiply(args, 1.0 / eps, out=out)
    np.square(out, out=out)
    np.multiply(out, -0.5, out=out)
    np.exp(out, out=out)
    np.multiply(out, 1.0 / (eps * np.sqrt(2.0 * np.pi)), out=out)


def _as_csr(indptr, indices, data, n_cols):
    n_rows = len(indptr) - 1
    return csr_matrix((data, indices, indptr), shape=(n_rows, n_cols), copy=False)


def diffusion_fields(
    indptr, indices, data, c1, c2, c3, xx, xy, xz, yy, yz, zz, n_p,
    out11, out12, out22,
) -> None:
    """Accumulate the three independent entries of the per-cell diffusion
    tensor from bundle coefficients.

    Rows index (radial slab, momentum cell) pairs, columns index bundles;
    c1/c2/c3 are the bundle coefficient vectors for the three quadratic
    monomials in (kappa, omega); xx..zz are momentum-cell factor tables of
    length n_p.
    """
    w = _as_csr(indptr, indices, data, len(c1))
    s1 = (w @ c1).reshape(-1, n_p)
    s2 = (w @ c2).reshape(-1, n_p)
    s3 = (w @ c3).reshape(-1, n_p)
    o11 = out11.reshape(-1, n_p)
    o12 = out12.reshape(-1, n_p)
    o22 = out22.reshape(-1, n_p)
    o11[:] = xx[None, :] * s1
    o12[:] = xy[None, :] * s2 - xz[None, :] * s1
    o22[:] = yy[None, :] * s3 - 2.0 * (yz[None, :] * s2) + zz[None, :] * s1


def bundle_rates(indptr, indices, data, f1, f2, f3, out1, out2, out3) -> None:
    """Transpose contraction: per-bundle sums of row fields f1/f2/f3."""
    n_cols = len(out1)
    w = _as_csr(indptr, indices, data, n_cols)
    out1[:] = w.T @ f1
    out2[:] = w.T @ f2
    out3[:] = w.T @ f3
