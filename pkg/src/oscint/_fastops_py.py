"""NumPy fallback for the compiled inner loops.

Semantics mirror ``_fastops`` exactly (same node layout, same zero-extended
multilinear interpolation, same summation order over source nodes), so the
two backends agree to floating-point roundoff.
"""

from __future__ import annotations

import numpy as np

__all__ = ["convolve_direct", "shifted_l1_diff"]


def _strides(shape):
    s = np.ones(len(shape), dtype=np.int64)
    for i in range(len(shape) - 2, -1, -1):
        s[i] = s[i + 1] * shape[i + 1]
    return s


def _interp_many(flat, shape, strides, u):
    """Multilinear interpolation at fractional indices u (m, n), zero outside."""
    n = u.shape[1]
    base = np.floor(u).astype(np.int64)
    frac = u - base
    acc = np.zeros(u.shape[0], dtype=np.complex128)
    for corner in range(1 << n):
        idx = base.copy()
        w = np.ones(u.shape[0])
        for i in range(n):
            if corner >> i & 1:
                idx[:, i] += 1
                w = w * frac[:, i]
            else:
                w = w * (1.0 - frac[:, i])
        valid = np.all((idx >= 0) & (idx < shape), axis=1)
        lin = (np.clip(idx, 0, shape - 1) * strides).sum(axis=1)
        acc = acc + np.where(valid, w, 0.0) * flat[lin]
    return acc


def _node_coords(ext, h):
    axes = [h * (np.arange(2 * e + 1) - e) for e in ext]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def convolve_direct(f, f_ext, kern, k_ext, h, structure, out):
    """out[x] = sum_y f[y] * kern(inverse(y) * x) * h**n over the f grid."""
    n = len(f_ext)
    f_ext = np.asarray(f_ext, dtype=np.int64)
    k_ext = np.asarray(k_ext, dtype=np.int64)
    kshape = 2 * k_ext + 1
    kstrides = _strides(kshape)
    coords = _node_coords(f_ext, h)
    hn = float(h) ** n
    eye = np.eye(n)
    nz = np.flatnonzero(f)
    for yflat in nz:
        y = coords[yflat]
        bmat = np.einsum("ijk,i->kj", structure, y)
        amat = eye - 0.5 * bmat
        z = coords @ amat.T - y
        u = z / h + k_ext
        vals = _interp_many(kern, kshape, kstrides, u)
        out += f[yflat] * vals * hn
    return None


def shifted_l1_diff(kern, k_ext, h, structure, y, mask):
    """sum over masked nodes x of |kern(inverse(y) * x) - kern(x)|."""
    n = len(k_ext)
    k_ext = np.asarray(k_ext, dtype=np.int64)
    kshape = 2 * k_ext + 1
    kstrides = _strides(kshape)
    coords = _node_coords(k_ext, h)
    sel = np.flatnonzero(mask)
    y = np.asarray(y, dtype=float)
    bmat = np.einsum("ijk,i->kj", structure, y)
    amat = np.eye(n) - 0.5 * bmat
    z = coords[sel] @ amat.T - y
    u = z / h + k_ext
    vals = _interp_many(kern, kshape, kstrides, u)
    return float(np.sum(np.abs(vals - kern[sel])))
