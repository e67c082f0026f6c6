"""Functional calculus for the canonical positive operator of a group.

Two concrete routes share one interface:

* weight-one abelian grids use the Fourier symbol ``4 pi^2 |xi|^2`` of
  the (positive) Laplacian, so powers are exact multiplier operators;
* the Heisenberg grid discretises the horizontal fields ``X = d/dx_1 -
  (x_2/2) d/dx_3`` and ``Y = d/dx_2 + (x_1/2) d/dx_3`` by centred
  differences with zero extension and forms the positive sub-Laplacian
  ``X'X + Y'Y``; fractional powers then go through a dense
  eigendecomposition, which is cached per grid and capped in size.

Both operators are homogeneous of degree two under the group dilations,
and :func:`dilation_identity_check` measures how well the discretisation
inherits that identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _fourier
from ._fastops_py import _interp_many, _strides
from .errors import GridCoverageError
from .groups import heisenberg_group
from .lattice import Grid, delta

__all__ = [
    "SpectralCalculus",
    "DEFAULT_EIGH_CAP",
    "dilated_samples",
    "DilationIdentityReport",
    "dilation_identity_check",
    "MonotonicityReport",
    "spectral_monotonicity_check",
]

# Largest node count for which the difference route will assemble and
# eigendecompose a dense operator (17 nodes per axis on a 3-d grid).
DEFAULT_EIGH_CAP = 17 ** 3

_EIGH_CACHE = {}


def _axis_diff(nd, axis, h):
    """Centred difference along ``axis`` with zero extension."""
    out = np.zeros_like(nd)
    mid = [slice(None)] * nd.ndim
    up = [slice(None)] * nd.ndim
    down = [slice(None)] * nd.ndim
    mid[axis] = slice(1, -1)
    up[axis] = slice(2, None)
    down[axis] = slice(None, -2)
    out[tuple(mid)] = (nd[tuple(up)] - nd[tuple(down)]) / (2.0 * h)
    first = [slice(None)] * nd.ndim
    last = [slice(None)] * nd.ndim
    first[axis] = 0
    last[axis] = -1
    edge_in = [slice(None)] * nd.ndim
    edge_in[axis] = 1
    out[tuple(first)] = nd[tuple(edge_in)] / (2.0 * h)
    edge_in[axis] = -2
    out[tuple(last)] = -nd[tuple(edge_in)] / (2.0 * h)
    return out


class SpectralCalculus:
    """Positive second-order operator of a grid plus its power calculus."""

    nu = 2  # homogeneous degree under the group dilations

    def __init__(self, grid, eigh_cap=DEFAULT_EIGH_CAP):
        group = grid.group
        if group.is_abelian and all(w == 1 for w in group.weights):
            self.route = "symbol"
            mesh = _fourier.frequency_mesh(grid)
            self._symbol = (2.0 * np.pi) ** 2 * np.sum(mesh ** 2, axis=-1)
        elif group == heisenberg_group():
            self.route = "difference"
            self._coords = grid.node_coords()
        else:
            raise ValueError(
                "spectral calculus covers weight-one abelian grids and the "
                "canonical Heisenberg grid only"
            )
        self.grid = grid
        self.eigh_cap = int(eigh_cap)

    # -- the operator itself ------------------------------------------------

    def _horizontal(self, nd, transpose):
        """Apply X or X' (``transpose``) and likewise Y; returns (Xf, Yf)."""
        h = self.grid.spacing
        x1 = self._coords[:, 0].reshape(self.grid.shape)
        x2 = self._coords[:, 1].reshape(self.grid.shape)
        if not transpose:
            xf = _axis_diff(nd, 0, h) - 0.5 * x2 * _axis_diff(nd, 2, h)
            yf = _axis_diff(nd, 1, h) + 0.5 * x1 * _axis_diff(nd, 2, h)
        else:
            xf = -_axis_diff(nd, 0, h) + 0.5 * _axis_diff(x2 * nd, 2, h)
            yf = -_axis_diff(nd, 1, h) - 0.5 * _axis_diff(x1 * nd, 2, h)
        return xf, yf

    def apply(self, f):
        """The operator itself: multiplier action or ``X'X f + Y'Y f``."""
        self._check(f)
        if self.route == "symbol":
            vhat = _fourier.forward(self.grid, f.values)
            return f.with_values(
                _fourier.inverse(self.grid, self._symbol * vhat))
        nd = f.values_nd
        xf, yf = self._horizontal(nd, transpose=False)
        xtxf, _ = self._horizontal(xf, transpose=True)
        _, ytyf = self._horizontal(yf, transpose=True)
        return f.with_values((xtxf + ytyf).ravel())

    # -- fractional powers of (I + operator) --------------------------------

    def _dense_matrix(self):
        from scipy import sparse

        grid = self.grid
        h = grid.spacing
        n = grid.size
        shape = grid.shape
        eye = [sparse.identity(s, format="csr") for s in shape]

        def d_axis(axis):
            s = shape[axis]
            d = sparse.diags([np.full(s - 1, -1.0 / (2 * h)),
                              np.full(s - 1, 1.0 / (2 * h))],
                             offsets=[-1, 1], format="csr")
            mats = [eye[i] if i != axis else d for i in range(3)]
            return sparse.kron(sparse.kron(mats[0], mats[1]), mats[2],
                               format="csr")

        d1, d2, d3 = d_axis(0), d_axis(1), d_axis(2)
        m1 = sparse.diags(self._coords[:, 0])
        m2 = sparse.diags(self._coords[:, 1])
        x = d1 - 0.5 * m2 @ d3
        y = d2 + 0.5 * m1 @ d3
        a = (x.T @ x + y.T @ y).toarray()
        return (a + a.T) / 2.0

    def eigensystem(self):
        """Eigenvalues and eigenvectors of the dense difference operator."""
        if self.route != "difference":
            raise ValueError("eigensystem is only formed on the difference "
                             "route; the symbol route is already diagonal")
        if self.grid.size > self.eigh_cap:
            raise ValueError(
                f"grid has {self.grid.size} nodes, above the dense "
                f"eigendecomposition cap {self.eigh_cap}; use a coarser grid"
            )
        key = self.grid
        if key not in _EIGH_CACHE:
            w, v = np.linalg.eigh(self._dense_matrix())
            # clip the tiny negative fuzz of a PSD assembly
            _EIGH_CACHE[key] = (np.maximum(w, 0.0), v)
        return _EIGH_CACHE[key]

    def apply_power(self, power, f):
        """``(I + operator) ** power`` applied to ``f``."""
        self._check(f)
        power = float(power)
        if self.route == "symbol":
            vhat = _fourier.forward(self.grid, f.values)
            mult = (1.0 + self._symbol) ** power
            return f.with_values(_fourier.inverse(self.grid, mult * vhat))
        w, v = self.eigensystem()
        coef = v.T @ f.values
        return f.with_values(v @ ((1.0 + w) ** power * coef))

    def bessel_kernel(self, power):
        """``(I + operator) ** power`` applied to the lattice delta."""
        return self.apply_power(power, delta(self.grid))

    def _check(self, f):
        if f.grid != self.grid:
            raise ValueError("function lives on a different grid")


def dilated_samples(f, r):
    """Samples of ``x -> f(dilate(r, x))`` on the grid of ``f``.

    Uses multilinear interpolation with zero extension, so the result is
    only faithful when the support of ``f`` fits inside the grid hull
    shrunk by ``max(r, 1/r)`` per weight: above one the evaluation
    points leave the sampled hull, below one the stretched support must
    still fit; :class:`GridCoverageError` otherwise.
    """
    r = float(r)
    if r <= 0.0:
        raise ValueError(f"dilation ratio must be positive, got {r}")
    grid = f.grid
    weights = np.array(grid.group.weights, dtype=float)
    pts = grid.node_coords() * r ** weights
    hull = grid.hull_halfwidths()
    supported = np.abs(f.values) > 0
    if supported.any():
        supp_max = np.max(np.abs(grid.node_coords()[supported]), axis=0)
        if np.any(supp_max * max(r, 1.0 / r) ** weights
                  > hull + grid.spacing / 2):
            raise GridCoverageError(
                "support escapes the hull under this dilation; enlarge the "
                "grid or tighten the support"
            )
    u = pts / grid.spacing + np.array(grid.extents)
    nd = f.values_nd
    vals = _interp_many(nd.ravel(), np.array(grid.shape, dtype=np.int64),
                        _strides(grid.shape), u)
    return f.with_values(vals)


@dataclass(frozen=True)
class DilationIdentityReport:
    ratio: float
    rel_error: float
    window: float
    nodes_compared: int


def dilation_identity_check(calc, kappa, r, window=None, floor=1e-8):
    """Defect of the calculus dilation identity on a symbol-route grid.

    The identity reads ``kappa(r**nu A) delta (x) = r**(-Q) [kappa(A)
    delta](dilate(1/r, x))``.  The left side is computed on the grid of
    ``calc``; the right side on the common refinement (same hull,
    spacing divided by ``r``), where the dilated nodes sit exactly.
    Both kernels wrap around the hull, so the comparison is restricted
    to a centred window (default: forty percent of the hull) where the
    wrap is negligible against the kernel itself, and to nodes where
    the right side exceeds ``floor`` in modulus.  ``r`` must be a
    positive integer so the two node sets nest; ``r = 1`` compares a
    grid with itself and reports zero.
    """
    if calc.route != "symbol":
        raise ValueError("the dilation identity check runs on the symbol "
                         "route; the difference route has no nested grid")
    r = int(r)
    if r < 1:
        raise ValueError(f"dilation ratio must be a positive integer, got {r}")
    grid = calc.grid
    hull = float(np.min(grid.hull_halfwidths()))
    if window is None:
        window = 0.4 * hull
    window = float(window)
    if window > hull:
        raise GridCoverageError(
            f"comparison window {window} exceeds the grid hull {hull}"
        )
    group = grid.group
    q = group.homogeneous_dim
    fine = Grid(group, grid.spacing / r,
                tuple(e * r for e in grid.extents))
    fine_calc = SpectralCalculus(fine)
    lhs = _fourier.inverse(grid, kappa(float(r) ** calc.nu * calc._symbol))
    rhs_all = _fourier.inverse(fine, kappa(fine_calc._symbol))
    # same index offsets from the centre land on the dilated nodes
    sl = tuple(slice(fe - e, fe + e + 1)
               for fe, e in zip(fine.extents, grid.extents))
    rhs = float(r) ** (-q) * rhs_all.reshape(fine.shape)[sl].ravel()
    inside = grid.quasi_norms() <= window
    live = inside & (np.abs(rhs) > floor)
    if not live.any():
        raise ValueError("no nodes survive the window and floor")
    rel = np.abs(lhs[live] - rhs[live]) / np.abs(rhs[live])
    return DilationIdentityReport(ratio=float(r), rel_error=float(rel.max()),
                                  window=window,
                                  nodes_compared=int(live.sum()))


@dataclass(frozen=True)
class MonotonicityReport:
    shifted_norm: float
    homogeneous_norm: float
    excluded_fraction: float

    @property
    def slack(self):
        return self.homogeneous_norm - self.shifted_norm


def spectral_monotonicity_check(calc, a, b, f, eps_tol=None):
    """Compare ``(a + A)**(-b) f`` with ``A**(-b) f`` in L2.

    Since ``a > 0`` shifts every mode up, the shifted norm can never
    exceed the homogeneous one.  Near-kernel modes (below ``eps_tol``,
    default ``1e-8`` times the largest mode) are excluded from both
    sides, else the homogeneous power is meaningless; a function with
    no weight outside the excluded space is rejected.
    """
    a = float(a)
    b = float(b)
    if a <= 0 or b <= 0:
        raise ValueError("both the shift and the power must be positive")
    calc._check(f)
    if calc.route == "symbol":
        modes = calc._symbol.ravel()
        coef = _fourier.forward(calc.grid, f.values).ravel()
    else:
        w, v = calc.eigensystem()
        modes = w
        coef = v.T @ f.values
    if eps_tol is None:
        eps_tol = 1e-8 * float(modes.max())
    live = modes >= eps_tol
    weight = np.linalg.norm(coef[live])
    if not weight > 0:
        raise ValueError("function lies entirely in the excluded eigenspace")
    shifted = np.linalg.norm((a + modes[live]) ** (-b) * coef[live])
    homog = np.linalg.norm(modes[live] ** (-b) * coef[live])
    # Parseval brings both back to node units with one common factor
    unit = (calc.grid.volume_element if calc.route == "difference"
            else 1.0 / calc.grid.total_measure) ** 0.5
    frac = 1.0 - float(weight / max(np.linalg.norm(coef), 1e-300))
    return MonotonicityReport(shifted_norm=float(shifted) * unit,
                              homogeneous_norm=float(homog) * unit,
                              excluded_fraction=frac)
