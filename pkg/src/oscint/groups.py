"""Graded nilpotent groups of step at most two, in exponential coordinates.

A group here is R^n equipped with

* integer dilation weights ``w = (w_1, ..., w_n)`` defining the anisotropic
  dilations ``dilate(r, x)_i = r**w_i * x_i``,
* structure constants ``c[i, j, k]`` of a step-two bracket, giving the
  Baker-Campbell-Hausdorff product ``x * y = x + y + bracket(x, y) / 2``.

In these coordinates the inverse is ``-x``, Lebesgue measure is the
bi-invariant Haar measure, and the homogeneous dimension is ``sum(w)``.
Points are plain float arrays of shape ``(..., n)``; all operations are
vectorised over leading axes.

The quasi-norm used throughout is the max-type gauge
``|x| = max_i |x_i|**(1/w_i)``.  It is exactly homogeneous and symmetric,
but satisfies the triangle inequality only up to a constant, which
:meth:`HomogeneousGroup.quasi_triangle_constant` estimates by Monte-Carlo
maximisation of ``|x*y| / (|x| + |y|)``.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatchError

__all__ = [
    "HomogeneousGroup",
    "abelian_group",
    "heisenberg_group",
    "group_from_name",
    "group_from_dict",
]


class HomogeneousGroup:
    """A graded group of step <= 2 on R^n.

    Parameters
    ----------
    weights : sequence of int
        Positive dilation weights, one per coordinate.
    structure : array_like or None
        Structure constants ``c[i, j, k]`` with
        ``bracket(x, y)_k = sum_ij c[i, j, k] x_i y_j``.  ``None`` means
        abelian.  Constants must be antisymmetric in ``(i, j)``, graded
        (``c[i, j, k] == 0`` unless ``w_i + w_j == w_k``), and every
        bracket target must be central; this makes the product exactly
        associative in floating point up to roundoff.
    name : str, optional
        Display name.
    """

    def __init__(self, weights, structure=None, name=None):
        weights = tuple(int(w) for w in weights)
        if not weights or any(w < 1 for w in weights):
            raise ValueError(f"weights must be positive integers, got {weights}")
        n = len(weights)
        if structure is None:
            c = np.zeros((n, n, n))
        else:
            c = np.asarray(structure, dtype=float)
            if c.shape != (n, n, n):
                raise ValueError(
                    f"structure constants must have shape {(n, n, n)}, got {c.shape}"
                )
        self._validate_structure(c, weights)
        self.weights = weights
        self.dim = n
        self.structure = c
        self.structure.setflags(write=False)
        self.name = name or f"group(dim={n}, weights={weights})"
        self.homogeneous_dim = int(sum(weights))
        self._qtri_cache: dict[tuple[int, int], float] = {}

    @staticmethod
    def _validate_structure(c, weights):
        if np.max(np.abs(c + np.transpose(c, (1, 0, 2)))) > 0:
            raise ValueError("structure constants must be antisymmetric in (i, j)")
        n = len(weights)
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    if c[i, j, k] != 0 and weights[i] + weights[j] != weights[k]:
                        raise ValueError(
                            "structure constants must be graded: "
                            f"c[{i},{j},{k}] != 0 but w[{i}]+w[{j}] != w[{k}]"
                        )
        # Step two: bracket targets must not feed back into the bracket.
        targets = np.flatnonzero(np.abs(c).sum(axis=(0, 1)))
        for k in targets:
            if np.abs(c[k, :, :]).sum() or np.abs(c[:, k, :]).sum():
                raise ValueError(
                    f"coordinate {k} is a bracket target but not central; "
                    "only step-two groups are supported"
                )

    @property
    def is_abelian(self):
        return not np.any(self.structure)

    # -- elementary operations -------------------------------------------

    def _check_point(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            raise DimensionMismatchError(
                f"point has trailing dimension {x.shape[-1:]}, expected {(self.dim,)}"
            )
        return x

    def bracket(self, x, y):
        """Lie bracket in coordinates, ``[x, y]_k = sum c[i,j,k] x_i y_j``."""
        x = self._check_point(x)
        y = self._check_point(y)
        return np.einsum("ijk,...i,...j->...k", self.structure, x, y)

    def product(self, x, y):
        """Group product ``x * y = x + y + [x, y]/2``."""
        x = self._check_point(x)
        y = self._check_point(y)
        return x + y + 0.5 * self.bracket(x, y)

    def inverse(self, x):
        """Group inverse; ``-x`` in exponential coordinates."""
        return -self._check_point(x)

    def dilate(self, r, x):
        """Anisotropic dilation ``x_i -> r**w_i x_i``, ``r > 0``."""
        if not np.all(np.asarray(r) > 0):
            raise ValueError(f"dilation factor must be positive, got {r}")
        x = self._check_point(x)
        return x * np.power(float(r), np.array(self.weights, dtype=float))

    def quasi_norm(self, x):
        """Max-type homogeneous gauge ``max_i |x_i|**(1/w_i)``."""
        x = self._check_point(x)
        inv_w = 1.0 / np.array(self.weights, dtype=float)
        return np.max(np.abs(x) ** inv_w, axis=-1)

    # -- measured constants ----------------------------------------------

    def quasi_triangle_constant(self, samples=200_000, seed=0):
        """Monte-Carlo estimate of ``sup |x*y| / (|x| + |y|)``.

        Draws pairs from a scale-diverse distribution (normal coordinates
        times a random power of ten per point, the ratio being invariant
        under simultaneous dilations but not separate ones) and returns
        the largest observed ratio.  Results are cached per
        ``(samples, seed)``.
        """
        key = (int(samples), int(seed))
        if key not in self._qtri_cache:
            rng = np.random.Generator(np.random.Philox(key=seed))
            best = 1.0
            remaining = int(samples)
            while remaining > 0:
                m = min(remaining, 250_000)
                x = rng.standard_normal((m, self.dim))
                y = rng.standard_normal((m, self.dim))
                sx = 10.0 ** rng.uniform(-1.0, 1.0, size=(m, 1))
                sy = 10.0 ** rng.uniform(-1.0, 1.0, size=(m, 1))
                x *= sx
                y *= sy
                num = self.quasi_norm(self.product(x, y))
                den = self.quasi_norm(x) + self.quasi_norm(y)
                best = max(best, float(np.max(num / den)))
                remaining -= m
            self._qtri_cache[key] = best
        return self._qtri_cache[key]

    # -- identity and comparison -----------------------------------------

    @property
    def identity(self):
        return np.zeros(self.dim)

    def __eq__(self, other):
        return (
            isinstance(other, HomogeneousGroup)
            and self.weights == other.weights
            and np.array_equal(self.structure, other.structure)
        )

    def __hash__(self):
        return hash((self.weights, self.structure.tobytes()))

    def __repr__(self):
        return f"HomogeneousGroup({self.name})"


def abelian_group(dim, weights=None):
    """R^n with commutative addition; default weights are all one."""
    if weights is None:
        weights = (1,) * int(dim)
    g = HomogeneousGroup(weights, None, name=f"abelian:{dim}")
    if g.dim != int(dim):
        raise ValueError(f"weights length {g.dim} does not match dim {dim}")
    return g


def heisenberg_group():
    """First Heisenberg group: coordinates (x, y, t), weights (1, 1, 2).

    Product ``(x1,y1,t1)*(x2,y2,t2) =
    (x1+x2, y1+y2, t1+t2 + (x1*y2 - y1*x2)/2)``.
    """
    c = np.zeros((3, 3, 3))
    c[0, 1, 2] = 1.0
    c[1, 0, 2] = -1.0
    return HomogeneousGroup((1, 1, 2), c, name="heisenberg:1")


def group_from_name(name):
    """Resolve a built-in group name: ``abelian:<n>`` or ``heisenberg:1``."""
    name = name.strip()
    if name.startswith("abelian:"):
        return abelian_group(int(name.split(":", 1)[1]))
    if name == "heisenberg:1":
        return heisenberg_group()
    raise ValueError(
        f"unknown group name {name!r}; expected 'abelian:<n>' or 'heisenberg:1'"
    )


def group_from_dict(spec):
    """Build a group from a plain mapping.

    Keys: ``dim`` (int), ``weights`` (list of int), and optionally
    ``structure_constants`` as either a dense ``dim**3`` nested list or a
    sparse list of ``[i, j, k, value]`` rows (antisymmetric counterparts
    must be listed explicitly).
    """
    dim = int(spec["dim"])
    weights = spec.get("weights") or (1,) * dim
    if len(weights) != dim:
        raise ValueError(f"weights length {len(weights)} does not match dim {dim}")
    raw = spec.get("structure_constants")
    if raw is None:
        structure = None
    else:
        arr = np.asarray(raw, dtype=float)
        if arr.ndim == 2 and arr.shape[1] == 4:
            structure = np.zeros((dim, dim, dim))
            for i, j, k, v in arr:
                structure[int(i), int(j), int(k)] = v
        elif arr.shape == (dim, dim, dim):
            structure = arr
        else:
            raise ValueError(
                "structure_constants must be a dense dim^3 array or rows of "
                f"[i, j, k, value]; got shape {arr.shape}"
            )
    return HomogeneousGroup(weights, structure, name=spec.get("name"))
