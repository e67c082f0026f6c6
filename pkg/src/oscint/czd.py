"""Stopping-time decomposition over nested anisotropic cells.

Cells are index boxes on the grid: the root is the whole lattice and a
cell splits into ``2**w_i`` near-equal slabs along axis ``i``, so cell
sides shrink like ``2**(-k * w_i)`` with depth ``k`` and every cell is
comparable to a quasi-ball.  Descending from a root whose average of
``|f|`` lies below the level, the decomposition selects the maximal
cells whose average exceeds the level; each selected box contributes a
mean-free piece ``(f - mean) 1_box`` supported inside its circumscribed
quasi-ball, and the good part keeps ``f`` off the selected boxes and the
box mean on them.

Everything downstream consumes measured quantities: realized constants
for the classical properties (:func:`verify_properties`), node measures
of the balls and of their enlargements (:func:`enlarged_union`), and the
overlap count of the enlarged balls.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateLevelError, NumericalCheckError
from .lattice import SampledFunction, ball_mask, lp_norm

__all__ = [
    "Piece",
    "CZDecomposition",
    "cz_decompose",
    "CZReport",
    "verify_properties",
    "enlarged_union",
    "doubling_ratio",
]

# Open-ball slack so every box node sits strictly inside its ball.
_RADIUS_SLACK = 1.0 + 1e-9


@dataclass(frozen=True)
class Piece:
    """One selected cell: index box, removed mean, circumscribed ball."""

    index: int
    lo: tuple[int, ...]
    hi: tuple[int, ...]
    mean: complex
    center: np.ndarray = field(repr=False)
    radius: float
    node_count: int

    @property
    def diameter(self):
        return 2.0 * self.radius

    @property
    def box_slices(self):
        return tuple(slice(a, b) for a, b in zip(self.lo, self.hi))


class CZDecomposition:
    """Result of :func:`cz_decompose`; pieces are materialised lazily."""

    def __init__(self, source, alpha, gamma, good_values, pieces):
        self.source = source
        self.grid = source.grid
        self.alpha = float(alpha)
        self.gamma = float(gamma)
        self.level = self.alpha * self.gamma
        self.good = SampledFunction(source.grid, good_values)
        self.pieces = pieces
        self._ball_masks = {}

    def piece_values(self, j):
        """Full-grid values of piece ``j`` (mean-free, box-supported)."""
        p = self.pieces[j]
        out = np.zeros(self.grid.size, dtype=np.complex128)
        nd = out.reshape(self.grid.shape)
        nd[p.box_slices] = self.source.values_nd[p.box_slices] - p.mean
        return out

    def piece_function(self, j):
        return SampledFunction(self.grid, self.piece_values(j))

    def bad_part(self):
        """Sum of all pieces as one sampled function."""
        out = np.zeros(self.grid.size, dtype=np.complex128)
        nd = out.reshape(self.grid.shape)
        src = self.source.values_nd
        for p in self.pieces:
            nd[p.box_slices] += src[p.box_slices] - p.mean
        return SampledFunction(self.grid, out)

    def ball_node_mask(self, j, factor=1.0):
        """Node mask of ``j``-th ball, optionally enlarged; cached."""
        key = (j, float(factor))
        if key not in self._ball_masks:
            p = self.pieces[j]
            self._ball_masks[key] = ball_mask(self.grid, p.center,
                                              factor * p.radius)
        return self._ball_masks[key]

    def ball_measure(self, j, factor=1.0):
        return float(np.count_nonzero(self.ball_node_mask(j, factor))
                     * self.grid.volume_element)

    def overlap_count(self, factor=2.0):
        """Largest number of enlarged balls covering one node (0 if no pieces)."""
        if not self.pieces:
            return 0
        counts = np.zeros(self.grid.size, dtype=np.int64)
        for j in range(len(self.pieces)):
            counts += self.ball_node_mask(j, factor)
        return int(counts.max())

    def total_box_measure(self):
        h_n = self.grid.volume_element
        return float(sum(p.node_count for p in self.pieces) * h_n)

    def total_ball_measure(self):
        return float(sum(self.ball_measure(j) for j in range(len(self.pieces))))

    def summary(self, report=None):
        """JSON-ready dict: level, pieces (center, radius, piece L1), constants."""
        h_n = self.grid.volume_element
        per_ball = []
        for j, p in enumerate(self.pieces):
            l1 = float(np.sum(np.abs(self.piece_values(j))) * h_n)
            per_ball.append({"center": [float(c) for c in p.center],
                             "radius": p.radius, "piece_l1": l1})
        out = {"alpha": self.alpha, "gamma": self.gamma, "level": self.level,
               "n_pieces": len(self.pieces), "balls": per_ball}
        if report is not None:
            out["constants"] = list(report.constants())
            out["overlap"] = report.overlap
        return out


def _integral_image(nd):
    s = nd
    for ax in range(nd.ndim):
        s = np.cumsum(s, axis=ax)
    padded = np.zeros(tuple(d + 1 for d in nd.shape))
    padded[tuple(slice(1, None) for _ in nd.shape)] = s
    return padded


def _box_sum(padded, lo, hi):
    n = len(lo)
    total = 0.0
    for corner in range(1 << n):
        idx = tuple(hi[i] if corner >> i & 1 else lo[i] for i in range(n))
        sign = (-1) ** (n - bin(corner).count("1"))
        total += sign * padded[idx]
    return total


def _split_axis(lo, hi, parts):
    """Near-equal contiguous split of ``range(lo, hi)`` into ``parts``."""
    edges = np.linspace(lo, hi, parts + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _circumscribed_ball(grid, lo, hi):
    """Center and radius of the smallest centred quasi-ball holding the box.

    Every coordinate of ``inverse(c) * x`` is affine in ``x``, so the
    quasi-norm over the box peaks at a corner node.  The radius is
    floored at the node half-cell so one-node boxes still own an open
    ball of positive node measure.
    """
    h = grid.spacing
    ext = np.array(grid.extents)
    center = h * ((np.array(lo) + np.array(hi) - 1) / 2.0 - ext)
    corners = []
    n = len(lo)
    for corner in range(1 << n):
        idx = [hi[i] - 1 if corner >> i & 1 else lo[i] for i in range(n)]
        corners.append(h * (np.array(idx) - ext))
    corners = np.array(corners, dtype=float)
    g = grid.group
    dist = g.quasi_norm(g.product(g.inverse(center), corners))
    halfcell = max((h / 2.0) ** (1.0 / w) for w in g.weights)
    return center, float(max(np.max(dist), halfcell) * _RADIUS_SLACK)


def cz_decompose(f, alpha, gamma=1.0):
    """Decompose ``f`` at stopping level ``alpha * gamma``.

    Raises :class:`DegenerateLevelError` (carrying the smallest workable
    level) when the root average of ``|f|`` already exceeds the level.
    """
    alpha = float(alpha)
    gamma = float(gamma)
    level = alpha * gamma
    if not level > 0:
        raise ValueError(f"level must be positive, got {level}")
    grid = f.grid
    absnd = np.abs(f.values_nd)
    padded = _integral_image(absnd)
    n = grid.group.dim
    root_lo = (0,) * n
    root_hi = grid.shape
    root_avg = _box_sum(padded, root_lo, root_hi) / grid.size
    if root_avg > level:
        raise DegenerateLevelError(
            f"level {level} lies below the root-cell average {root_avg}; "
            "the decomposition degenerates",
            threshold=root_avg,
        )
    selected = []
    stack = [(root_lo, root_hi)]
    while stack:
        lo, hi = stack.pop()
        lengths = [b - a for a, b in zip(lo, hi)]
        if all(s == 1 for s in lengths):
            continue
        children = [[(a, b)] for a, b in zip(lo, hi)]
        for i in range(n):
            children[i] = _split_axis(lo[i], hi[i], 2 ** grid.group.weights[i])
        # lexicographic order, deterministic
        def expand(axis, cur_lo, cur_hi):
            if axis == n:
                clo, chi = tuple(cur_lo), tuple(cur_hi)
                count = int(np.prod([b - a for a, b in zip(clo, chi)]))
                s = _box_sum(padded, clo, chi)
                if s / count > level:
                    selected.append((clo, chi))
                elif s > level and count > 1:
                    # a descendant's average is at most the box sum, so
                    # subtrees with sum <= level can never select
                    stack.append((clo, chi))
                return
            for a, b in children[axis]:
                expand(axis + 1, cur_lo + [a], cur_hi + [b])

        expand(0, [], [])
    selected.sort()
    pieces = []
    src = f.values_nd
    good = f.values.copy().reshape(grid.shape)
    for idx, (lo, hi) in enumerate(selected):
        sl = tuple(slice(a, b) for a, b in zip(lo, hi))
        count = int(np.prod([b - a for a, b in zip(lo, hi)]))
        mean = complex(np.sum(src[sl]) / count)
        center, radius = _circumscribed_ball(grid, lo, hi)
        pieces.append(Piece(index=idx, lo=lo, hi=hi, mean=mean,
                            center=center, radius=radius, node_count=count))
        good[sl] = mean
    return CZDecomposition(f, alpha, gamma, good.ravel(), pieces)


@dataclass(frozen=True)
class CZReport:
    """Realized constants of the decomposition's classical properties.

    ``sup_good_ratio``     (1) sup |g| / level
    ``max_piece_integral`` (2) max_j |integrate(b_j)|
    ``piece_l1_ratio``     (3) max_j ||b_j||_1 / (level * |I_j|)
    ``ball_measure_ratio`` (4) level * sum_j |I_j| / ||f||_1
    ``triangle_ratio``     (5) ||sum_j b_j||_1 / sum_j ||b_j||_1
    ``overlap``            (6) M0, max enlarged balls covering one node
    """

    sup_good_ratio: float
    max_piece_integral: float
    piece_l1_ratio: float
    ball_measure_ratio: float
    triangle_ratio: float
    overlap: int
    n_pieces: int

    def constants(self):
        """The six constants in property order."""
        return (self.sup_good_ratio, self.max_piece_integral,
                self.piece_l1_ratio, self.ball_measure_ratio,
                self.triangle_ratio, float(self.overlap))


def verify_properties(d, f=None, reconstruction_tol=1e-12):
    """Measure the classical properties; raise on broken exact identities.

    Exact identities are the reconstruction ``good + sum_j piece_j == f``
    and the mean-zero property of every piece; both must hold to
    ``reconstruction_tol`` relative to the data's scale, else
    :class:`NumericalCheckError`.  Support containment of each piece in
    its ball is asserted outright.  Passing ``f`` asserts the
    decomposition really came from it.
    """
    if f is not None:
        if f.grid != d.grid or not np.array_equal(f.values, d.source.values):
            raise ValueError("decomposition was not produced from this "
                             "function")
    f = d.source
    grid = d.grid
    scale = lp_norm(f, np.inf)
    bad = d.bad_part()
    recon = d.good.values + bad.values
    resid = float(np.max(np.abs(recon - f.values), initial=0.0))
    if resid > reconstruction_tol * max(scale, 1e-300):
        raise NumericalCheckError(
            f"reconstruction residual {resid} exceeds "
            f"{reconstruction_tol} * {scale}"
        )
    f_l1 = lp_norm(f, 1)
    cancel_abs = 0.0
    cancel_rel = 0.0
    piece_ratio = 0.0
    total_ball = 0.0
    bad_l1_sum = 0.0
    for j, p in enumerate(d.pieces):
        vals = d.piece_values(j)
        mask = d.ball_node_mask(j)
        if np.any(np.abs(vals[~mask]) > 0):
            raise NumericalCheckError(
                f"piece {j} has support outside its ball"
            )
        l1 = float(np.sum(np.abs(vals)) * grid.volume_element)
        tot = abs(complex(np.sum(vals) * grid.volume_element))
        cancel_abs = max(cancel_abs, tot)
        cancel_rel = max(cancel_rel, tot / max(l1, 1e-300))
        measure = d.ball_measure(j)
        piece_ratio = max(piece_ratio, l1 / (d.level * measure))
        total_ball += measure
        bad_l1_sum += l1
    if d.pieces and cancel_rel > reconstruction_tol:
        raise NumericalCheckError(
            f"piece cancellation residual {cancel_rel} exceeds "
            f"{reconstruction_tol}"
        )
    return CZReport(
        sup_good_ratio=lp_norm(d.good, np.inf) / d.level,
        max_piece_integral=cancel_abs,
        piece_l1_ratio=piece_ratio,
        ball_measure_ratio=d.level * total_ball / max(f_l1, 1e-300),
        triangle_ratio=lp_norm(bad, 1) / max(bad_l1_sum, 1e-300),
        overlap=d.overlap_count(),
        n_pieces=len(d.pieces),
    )


def enlarged_union(d, factor=2.0):
    """Union mask of the ``factor``-enlarged balls, its measure, ratios.

    Returns ``(mask, measure, per_piece_ratios)`` where ratios are the
    node-measure quotients ``|factor * ball| / |ball|``; near the grid
    boundary an enlarged ball is clipped, which lowers its ratio.
    """
    mask = np.zeros(d.grid.size, dtype=bool)
    ratios = []
    for j in range(len(d.pieces)):
        big = d.ball_node_mask(j, factor)
        mask |= big
        small = max(np.count_nonzero(d.ball_node_mask(j)), 1)
        ratios.append(np.count_nonzero(big) / small)
    measure = float(np.count_nonzero(mask) * d.grid.volume_element)
    return mask, measure, ratios


def doubling_ratio(grid, center, radius, factor=2.0):
    """Node-measure ratio between a quasi-ball and its enlargement."""
    small = np.count_nonzero(ball_mask(grid, center, radius))
    big = np.count_nonzero(ball_mask(grid, center, factor * radius))
    if small == 0:
        raise ValueError("ball contains no nodes; refine the grid")
    return big / small
