"""Power calculus: two-path agreement, group identities, dilation law."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oscint.errors import GridCoverageError
from oscint.groups import abelian_group, heisenberg_group
from oscint.lattice import (Grid, SampledFunction, delta, integrate, lp_norm,
                            sample)
from oscint.spectral import (SpectralCalculus, dilated_samples,
                             dilation_identity_check,
                             spectral_monotonicity_check)

_LINE = Grid(abelian_group(1), 1.0 / 32, (128,))
_HEIS = Grid(heisenberg_group(), 0.5, (4, 4, 8))


def _bump(grid, width):
    def shape(x):
        q = grid.group.quasi_norm(x) / width
        return np.where(q < 1.0, (1.0 - q ** 2) ** 2, 0.0)

    return sample(grid, shape)


def _noise(grid, seed):
    rng = np.random.Generator(np.random.Philox(int(seed)))
    return SampledFunction(grid, rng.standard_normal(grid.size))


@pytest.fixture(scope="module")
def calc_line():
    return SpectralCalculus(_LINE)


@pytest.fixture(scope="module")
def calc_heis():
    return SpectralCalculus(_HEIS)


def test_first_power_matches_direct_stencil(calc_heis):
    # apply_power goes through the dense eigensystem, apply through the
    # compiled-free difference stencil; they must agree to roundoff
    f = _noise(_HEIS, 7)
    via_eigh = calc_heis.apply_power(1.0, f)
    direct = f.values + calc_heis.apply(f).values
    scale = np.max(np.abs(direct))
    assert np.max(np.abs(via_eigh.values - direct)) <= 1e-10 * scale


def test_first_power_matches_multiplier(calc_line):
    f = _noise(_LINE, 8)
    via_power = calc_line.apply_power(1.0, f)
    direct = f.values + calc_line.apply(f).values
    scale = np.max(np.abs(direct))
    assert np.max(np.abs(via_power.values - direct)) <= 1e-10 * scale


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 31 - 1), s=st.floats(0.05, 1.5))
def test_power_inverse_and_composition(seed, s):
    for calc, grid in ((SpectralCalculus(_LINE), _LINE),
                       (SpectralCalculus(_HEIS), _HEIS)):
        f = _noise(grid, seed)
        scale = np.max(np.abs(f.values))
        back = calc.apply_power(-s, calc.apply_power(s, f))
        assert np.max(np.abs(back.values - f.values)) <= 1e-8 * scale
        two_step = calc.apply_power(s / 2, calc.apply_power(s / 2, f))
        one_step = calc.apply_power(s, f)
        assert (np.max(np.abs(two_step.values - one_step.values))
                <= 1e-8 * np.max(np.abs(one_step.values)))


def test_zero_power_is_identity(calc_line, calc_heis):
    for calc, grid in ((calc_line, _LINE), (calc_heis, _HEIS)):
        f = _noise(grid, 13)
        out = calc.apply_power(0.0, f)
        assert np.max(np.abs(out.values - f.values)) <= 1e-12


@pytest.mark.parametrize("s", [0.25, 0.5, 1.0])
def test_negative_powers_contract_l2(calc_line, calc_heis, s):
    for calc, grid in ((calc_line, _LINE), (calc_heis, _HEIS)):
        f = _noise(grid, 29)
        out = calc.apply_power(-s, f)
        assert lp_norm(out, 2) <= lp_norm(f, 2) * (1.0 + 1e-12)


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_bessel_kernel_positive_and_normalized(calc_line, s):
    k = calc_line.bessel_kernel(-s)
    assert np.max(np.abs(k.values.imag)) <= 1e-12 * np.max(np.abs(k.values))
    re = k.values.real
    assert re.min() >= -1e-8 * re.max()
    assert integrate(k).real == pytest.approx(1.0, abs=1e-6)


def test_vanishing_power_recovers_delta(calc_line):
    k = calc_line.bessel_kernel(-1e-6)
    diff = k.values - delta(_LINE).values
    assert float(np.sum(np.abs(diff)) * _LINE.volume_element) <= 1e-3


def test_dilated_samples_exact_on_node_hits():
    for grid, width in ((_LINE, 2.0), (Grid(heisenberg_group(), 0.25,
                                            (8, 8, 16)), 0.8)):
        f = _bump(grid, width)
        out = dilated_samples(f, 2.0)
        # integer ratios on integer weights land exactly on nodes
        scaled = grid.node_coords() * 2.0 ** np.array(grid.group.weights,
                                                      dtype=float)
        idx = np.round(scaled / grid.spacing).astype(int) + grid.extents
        inside = np.all((idx >= 0) & (idx < np.array(grid.shape)), axis=1)
        want = np.zeros(grid.size, dtype=np.complex128)
        want[inside] = f.values_nd[tuple(idx[inside].T)]
        assert np.max(np.abs(out.values - want)) <= 1e-12


def test_dilated_samples_interpolates_smooth_data():
    grid = Grid(abelian_group(1), 1.0 / 64, (256,))

    def shape(x):
        u = x[:, 0] / 2.0
        return np.where(np.abs(u) < 1.0, (1.0 - u ** 2) ** 4, 0.0)

    f = sample(grid, shape)
    out = dilated_samples(f, 0.5)
    want = sample(grid, lambda x: shape(0.5 * x))
    # multilinear interpolation is second order in the spacing
    assert np.max(np.abs(out.values - want.values)) <= 5e-4


def test_dilated_samples_rejects_escape_and_bad_ratio():
    f = _bump(_LINE, 3.5)  # hull is 4, doubling escapes
    with pytest.raises(GridCoverageError, match="hull"):
        dilated_samples(f, 2.0)
    with pytest.raises(GridCoverageError, match="hull"):
        dilated_samples(f, 0.25)  # shrinking evaluates outside too
    with pytest.raises(ValueError, match="positive"):
        dilated_samples(f, 0.0)


def test_dilation_identity_trivial_ratio(calc_line):
    rep = dilation_identity_check(calc_line, lambda t: (1.0 + t) ** -0.5, 1)
    assert rep.ratio == 1.0
    assert rep.rel_error == 0.0


def test_dilation_identity_small_defect():
    grid = Grid(abelian_group(1), 1.0 / 32, (512,))
    calc = SpectralCalculus(grid)
    rep = dilation_identity_check(calc, lambda t: (1.0 + t) ** -0.5, 2)
    assert rep.nodes_compared > 100
    assert 0.0 < rep.rel_error <= 1e-2


def test_dilation_identity_guards(calc_line, calc_heis):
    kappa = lambda t: (1.0 + t) ** -0.5
    with pytest.raises(ValueError, match="symbol"):
        dilation_identity_check(calc_heis, kappa, 2)
    with pytest.raises(ValueError, match="positive integer"):
        dilation_identity_check(calc_line, kappa, 0)
    with pytest.raises(GridCoverageError, match="hull"):
        dilation_identity_check(calc_line, kappa, 2, window=100.0)


def test_monotonicity_shift_never_gains(calc_line, calc_heis):
    for calc, grid in ((calc_line, _LINE), (calc_heis, _HEIS)):
        f = _noise(grid, 31)
        rep = spectral_monotonicity_check(calc, 1.0, 0.5, f)
        assert rep.slack >= 0.0
        assert 0.0 <= rep.excluded_fraction < 1.0


def test_monotonicity_guards(calc_line):
    f = _noise(_LINE, 5)
    with pytest.raises(ValueError, match="positive"):
        spectral_monotonicity_check(calc_line, 0.0, 0.5, f)
    # an eps_tol above every mode excludes the whole spectrum
    with pytest.raises(ValueError, match="excluded eigenspace"):
        spectral_monotonicity_check(calc_line, 1.0, 0.5, f, eps_tol=1e300)


def test_route_selection_and_caps():
    assert SpectralCalculus(_LINE).route == "symbol"
    assert SpectralCalculus(_HEIS).route == "difference"
    mixed = abelian_group(2, weights=(1, 2))
    with pytest.raises(ValueError, match="weight-one"):
        SpectralCalculus(Grid(mixed, 0.5, (4, 4)))
    tight = SpectralCalculus(_HEIS, eigh_cap=10)
    with pytest.raises(ValueError, match="cap"):
        tight.eigensystem()
    with pytest.raises(ValueError, match="diagonal"):
        SpectralCalculus(_LINE).eigensystem()
    with pytest.raises(ValueError, match="different grid"):
        SpectralCalculus(_LINE).apply(_noise(_HEIS, 2))
