"""Discrete Fourier transforms aligned with centred lattices.

Conventions: ``forward`` approximates ``F[f](xi) = integral f(x)
exp(-2 pi i <x, xi>) dx`` by the rectangle rule, with the frequency
lattice ``numpy.fft.fftfreq(N_i, d=h)`` per axis; ``inverse`` is its
exact discrete inverse.  Only meaningful on abelian grids.
"""

from __future__ import annotations

import numpy as np

__all__ = ["axis_frequencies", "frequency_mesh", "forward", "inverse"]


def axis_frequencies(grid):
    """Per-axis frequency lattices (cycles per unit length)."""
    return [np.fft.fftfreq(s, d=grid.spacing) for s in grid.shape]


def frequency_mesh(grid):
    """Frequency coordinates of every DFT bin, shape ``grid.shape + (n,)``."""
    mesh = np.meshgrid(*axis_frequencies(grid), indexing="ij")
    return np.stack(mesh, axis=-1)


def forward(grid, values):
    """Continuum-normalised DFT of flat node values; returns an nd array."""
    nd = np.asarray(values).reshape(grid.shape)
    return np.fft.fftn(np.fft.ifftshift(nd)) * grid.volume_element


def inverse(grid, vhat):
    """Inverse of :func:`forward`; returns flat node values."""
    nd = np.fft.fftshift(np.fft.ifftn(vhat)) / grid.volume_element
    return nd.ravel()
