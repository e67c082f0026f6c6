# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops over centred anisotropic lattices.

Both entry points share the same conventions as the NumPy fallback in
``_fastops_py``: values are flat C-ordered complex arrays over a grid
whose axis ``i`` holds ``2*ext[i] + 1`` nodes at coordinates
``h * (index - ext[i])``, and off-lattice kernel values are multilinear
interpolations with zero extension.  The group product is the step-two
law ``inverse(y) * x = (x - y) - bracket(y, x) / 2``.
"""

from libc.math cimport floor

DEF MAXDIM = 8


cdef inline double complex _interp(const double complex* vals,
                                   const Py_ssize_t* shape,
                                   const Py_ssize_t* strides,
                                   int n,
                                   const double* u) noexcept nogil:
    """Multilinear interpolation at fractional index u, zero outside."""
    cdef Py_ssize_t base[MAXDIM]
    cdef double frac[MAXDIM]
    cdef double fi, w
    cdef Py_ssize_t off, idx
    cdef int i, corner
    cdef bint skip
    cdef double complex acc = 0
    for i in range(n):
        fi = floor(u[i])
        base[i] = <Py_ssize_t> fi
        frac[i] = u[i] - fi
    for corner in range(1 << n):
        w = 1.0
        off = 0
        skip = 0
        for i in range(n):
            if corner & (1 << i):
                idx = base[i] + 1
                w *= frac[i]
            else:
                idx = base[i]
                w *= 1.0 - frac[i]
            if idx < 0 or idx >= shape[i]:
                skip = 1
                break
            off += idx * strides[i]
        if not skip:
            acc = acc + w * vals[off]
    return acc


def convolve_direct(const double complex[::1] f not None,
                    const long[::1] f_ext not None,
                    const double complex[::1] kern not None,
                    const long[::1] k_ext not None,
                    double h,
                    const double[:, :, ::1] structure not None,
                    double complex[::1] out not None):
    """out[x] = sum_y f[y] * kern(inverse(y) * x) * h**n over the f grid."""
    cdef int n = f_ext.shape[0]
    cdef Py_ssize_t fshape[MAXDIM]
    cdef Py_ssize_t fstride[MAXDIM]
    cdef Py_ssize_t kshape[MAXDIM]
    cdef Py_ssize_t kstride[MAXDIM]
    cdef double xmax[MAXDIM]
    cdef Py_ssize_t nf = 1, nk = 1
    cdef int i, j, k
    for i in range(n):
        fshape[i] = 2 * f_ext[i] + 1
        kshape[i] = 2 * k_ext[i] + 1
        nf *= fshape[i]
        nk *= kshape[i]
        xmax[i] = h * f_ext[i]
    fstride[n - 1] = 1
    kstride[n - 1] = 1
    for i in range(n - 2, -1, -1):
        fstride[i] = fstride[i + 1] * fshape[i + 1]
        kstride[i] = kstride[i + 1] * kshape[i + 1]

    cdef double hn = 1.0
    for i in range(n):
        hn *= h

    cdef Py_ssize_t yflat, xflat, nwin
    cdef Py_ssize_t yidx[MAXDIM]
    cdef Py_ssize_t xidx[MAXDIM]
    cdef Py_ssize_t wlo[MAXDIM]
    cdef Py_ssize_t whi[MAXDIM]
    cdef double ycoord[MAXDIM]
    cdef double xcoord[MAXDIM]
    cdef double zmat[MAXDIM][MAXDIM]
    cdef double u[MAXDIM]
    cdef double by, slack, zk, lo, hi
    cdef double complex fy, val
    cdef Py_ssize_t rem, off

    with nogil:
        for yflat in range(nf):
            fy = f[yflat]
            if fy == 0:
                continue
            rem = yflat
            for i in range(n - 1, -1, -1):
                yidx[i] = rem % fshape[i]
                rem //= fshape[i]
                ycoord[i] = h * (yidx[i] - f_ext[i])
            # z = inverse(y) * x = A x - y with A = I - B/2,
            # B[k, j] = sum_i structure[i, j, k] * y_i.
            for k in range(n):
                for j in range(n):
                    by = 0.0
                    for i in range(n):
                        by += structure[i, j, k] * ycoord[i]
                    zmat[k][j] = (1.0 if k == j else 0.0) - 0.5 * by
            # Conservative per-axis window: nodes x that can land inside
            # the kernel hull |z_k| <= (k_ext_k + 1) h.  Diagonal entries
            # of B vanish by the grading, so x_k is isolated exactly.
            nwin = 1
            for k in range(n):
                lo = -(k_ext[k] + 1) * h + ycoord[k]
                hi = (k_ext[k] + 1) * h + ycoord[k]
                for j in range(n):
                    if j != k:
                        slack = (zmat[k][j] if zmat[k][j] > 0 else -zmat[k][j])
                        lo -= slack * xmax[j]
                        hi += slack * xmax[j]
                wlo[k] = <Py_ssize_t> floor(lo / h) + f_ext[k]
                whi[k] = <Py_ssize_t> floor(hi / h) + f_ext[k] + 1
                if wlo[k] < 0:
                    wlo[k] = 0
                if whi[k] > fshape[k] - 1:
                    whi[k] = fshape[k] - 1
                if whi[k] < wlo[k]:
                    nwin = 0
                    break
                xidx[k] = wlo[k]
                xcoord[k] = h * (wlo[k] - f_ext[k])
                nwin *= whi[k] - wlo[k] + 1
            if nwin == 0:
                continue
            for xflat in range(nwin):
                for k in range(n):
                    zk = -ycoord[k]
                    for j in range(n):
                        zk += zmat[k][j] * xcoord[j]
                    u[k] = zk / h + k_ext[k]
                val = _interp(&kern[0], kshape, kstride, n, u)
                if val != 0:
                    off = 0
                    for i in range(n):
                        off += xidx[i] * fstride[i]
                    out[off] = out[off] + fy * val * hn
                # odometer over the window
                for i in range(n - 1, -1, -1):
                    xidx[i] += 1
                    if xidx[i] <= whi[i]:
                        xcoord[i] = h * (xidx[i] - f_ext[i])
                        break
                    xidx[i] = wlo[i]
                    xcoord[i] = h * (wlo[i] - f_ext[i])
    return None


def shifted_l1_diff(const double complex[::1] kern not None,
                    const long[::1] k_ext not None,
                    double h,
                    const double[:, :, ::1] structure not None,
                    const double[::1] y not None,
                    const unsigned char[::1] mask not None):
    """sum over masked nodes x of |kern(inverse(y) * x) - kern(x)|.

    The caller multiplies by the volume element.
    """
    cdef int n = k_ext.shape[0]
    cdef Py_ssize_t kshape[MAXDIM]
    cdef Py_ssize_t kstride[MAXDIM]
    cdef Py_ssize_t nk = 1
    cdef int i, j, k
    for i in range(n):
        kshape[i] = 2 * k_ext[i] + 1
        nk *= kshape[i]
    kstride[n - 1] = 1
    for i in range(n - 2, -1, -1):
        kstride[i] = kstride[i + 1] * kshape[i + 1]

    cdef double zmat[MAXDIM][MAXDIM]
    cdef double u[MAXDIM]
    cdef double by, zk
    cdef Py_ssize_t xflat
    cdef Py_ssize_t xidx[MAXDIM]
    cdef double xcoord[MAXDIM]
    cdef double complex diff
    cdef double total = 0.0

    for k in range(n):
        for j in range(n):
            by = 0.0
            for i in range(n):
                by += structure[i, j, k] * y[i]
            zmat[k][j] = (1.0 if k == j else 0.0) - 0.5 * by

    with nogil:
        for i in range(n):
            xidx[i] = 0
            xcoord[i] = -h * k_ext[i]
        for xflat in range(nk):
            if mask[xflat]:
                for k in range(n):
                    zk = -y[k]
                    for j in range(n):
                        zk += zmat[k][j] * xcoord[j]
                    u[k] = zk / h + k_ext[k]
                diff = _interp(&kern[0], kshape, kstride, n, u) - kern[xflat]
                total += abs(diff)
            for i in range(n - 1, -1, -1):
                xidx[i] += 1
                if xidx[i] < kshape[i]:
                    xcoord[i] = h * (xidx[i] - k_ext[i])
                    break
                xidx[i] = 0
                xcoord[i] = -h * k_ext[i]
    return total
