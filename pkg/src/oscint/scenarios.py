"""Scenario registry for the experiment harness.

Each scenario is a declared parameter schema plus a runner that turns a
resolved parameter dict and a seed into tables, metrics, and pass/fail
checks.  Check names point at the module invariant being instantiated
(``czd.piece_cancellation``, ``kernels.fourier_decay_exponent``, ...),
so a summary line is traceable back to the code that defines it.

All pseudo-randomness in a run descends from one counter-based
generator built by :func:`make_rng`; a scenario's tables are a pure
function of its resolved parameters and seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .czd import cz_decompose, verify_properties
from .errors import ConfigError
from .groups import abelian_group, group_from_name, heisenberg_group
from .kernels import (OscillatingKernel, fourier_decay_fit,
                      gradient_route_bound, hormander_seminorm,
                      sample_spatial)
from .lattice import Grid, SampledFunction, convolve, lp_norm
from .runio import ParamSpec
from .spectral import SpectralCalculus, dilation_identity_check
from .weak11 import (build_mollifiers, operator_l2_proxy, smooth_bad_part,
                     split_F, split_bounds, weak11_certify)

__all__ = [
    "Check",
    "Table",
    "ScenarioResult",
    "make_rng",
    "compact_grid",
    "noise_field",
    "node_spike",
    "midpoint_centers",
    "spike_train",
    "oscillating_h1_kernel",
    "scenario_names",
    "scenario_schema",
    "run_scenario",
]


def make_rng(seed):
    """The run's single counter-based generator; every draw descends from it."""
    return np.random.Generator(np.random.Philox(int(seed)))


# -- shared constructions -----------------------------------------------------


def compact_grid(group, spacing, radius):
    """Smallest grid containing the closed quasi-ball of this radius.

    Sampling a compactly supported kernel on its own small grid keeps
    direct convolution costs proportional to the support, with output
    identical to a full-hull sample.
    """
    w = np.array(group.weights, dtype=float)
    ext = np.ceil(float(radius) ** w / float(spacing)).astype(int)
    return Grid(group, spacing, tuple(int(max(1, e)) for e in ext))


def noise_field(grid, rng):
    """Rough corpus member: independent half-normal node values."""
    return SampledFunction(grid, np.abs(rng.normal(size=grid.size)))


def node_spike(grid, rng, window=0.5):
    """Unit point mass at a random node of the central window.

    The node is the nearest lattice point to a uniform draw from the
    box ``|x_i| <= window * hull_i``; the single value is scaled so the
    discrete L1 mass is exactly one.
    """
    hull = grid.hull_halfwidths()
    idx = []
    for i, e in enumerate(grid.extents):
        c = rng.uniform(-window * hull[i], window * hull[i])
        idx.append(int(round(c / grid.spacing)) + e)
    values = np.zeros(grid.size)
    values[np.ravel_multi_index(tuple(idx), grid.shape)] = \
        1.0 / grid.volume_element
    return SampledFunction(grid, values)


def midpoint_centers(rng, halfwidths, count, cell):
    """Random midpoints ``(k + 1/2) * cell`` inside a centred box.

    Midpoints of a fixed mesh stay away from every dyadic box corner at
    scales coarser than the mesh, so spike corpora do not straddle
    stopping-time cell boundaries by accident.
    """
    halfwidths = np.atleast_1d(np.asarray(halfwidths, dtype=float))
    kmax = np.maximum(np.floor(halfwidths / cell).astype(int) - 1, 1)
    cols = [rng.integers(-k, k, size=int(count)) for k in kmax]
    return (np.stack(cols, axis=-1) + 0.5) * float(cell)


def spike_train(grid, centers, sigma):
    """Sum of equal Gaussian spikes at the given continuum centers.

    The same ``(centers, sigma)`` sampled on a refined grid gives the
    refinement of the same continuum function, which is what drift
    studies need.
    """
    coords = grid.node_coords()
    total = np.zeros(grid.size)
    for c in np.atleast_2d(centers):
        d2 = np.sum((coords - c) ** 2, axis=-1)
        total += np.exp(-d2 / (2.0 * float(sigma) ** 2))
    return SampledFunction(grid, total)


def oscillating_h1_kernel(spacing, radius=1.5, freq=4.0):
    """Smooth compactly supported oscillating kernel on a compact H1 grid.

    ``cos(freq * |x|**2) (1 - (|x|/radius)**2)**4`` inside the open
    quasi-ball; bounded, so its convolution operator is trivially
    strong-type, and oscillating enough to make level sets interesting.
    """
    grid = compact_grid(heisenberg_group(), spacing, radius)
    q = grid.quasi_norms()
    vals = np.zeros(grid.size)
    inside = q < radius
    vals[inside] = (np.cos(freq * q[inside] ** 2)
                    * (1.0 - (q[inside] / radius) ** 2) ** 4)
    return SampledFunction(grid, vals)


# -- result containers ---------------------------------------------------------


@dataclass(frozen=True)
class Check:
    """One pass/fail line of a summary; ``invariant`` names the module rule."""

    invariant: str
    passed: bool
    value: float
    gate: str


@dataclass(frozen=True)
class Table:
    header: tuple
    rows: tuple


@dataclass(frozen=True)
class ScenarioResult:
    name: str
    seed: int
    params: dict
    tables: dict     # file stem -> Table
    metrics: dict
    checks: tuple

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def summary(self):
        return {
            "scenario": self.name,
            "seed": self.seed,
            "params": dict(self.params),
            "passed": self.passed,
            "checks": [vars(c) for c in self.checks],
            "metrics": self.metrics,
        }


def _grid(group, spacing, extents):
    extents = tuple(int(e) for e in extents)
    if len(extents) == 1 and group.dim > 1:
        extents = extents * group.dim
    if len(extents) != group.dim:
        raise ConfigError(
            f"extents {extents} do not match the group dimension {group.dim}"
        )
    if any(e < 1 for e in extents):
        raise ConfigError(f"extents must be positive, got {extents}")
    if spacing <= 0:
        raise ConfigError(f"spacing must be positive, got {spacing}")
    return Grid(group, float(spacing), extents)


def _spread(values):
    lo = min(values)
    hi = max(values)
    return hi / lo if lo > 0 else float("inf")


def _loglog_slope(x, y):
    pairs = [(a, b) for a, b in zip(x, y) if a > 0 and b > 0]
    if len(pairs) < 2:
        return float("nan")
    lx = np.log([p[0] for p in pairs])
    ly = np.log([p[1] for p in pairs])
    return float(np.polyfit(lx, ly, 1)[0])


# -- scenario runners ----------------------------------------------------------


def _run_cz_verify(params, seed):
    rng = make_rng(seed)
    group = group_from_name(params["group"])
    grid = _grid(group, params["spacing"], params["extents"])
    rows = []
    reports = []
    for i in range(int(params["functions"])):
        f = noise_field(grid, rng)
        level = params["level_mult"] * float(np.mean(np.abs(f.values)))
        d = cz_decompose(f, level)
        rep = verify_properties(d, f)
        reports.append(rep)
        rows.append((i, rep.n_pieces) + tuple(float(c) for c in rep.constants()))
    header = ("function", "n_pieces", "sup_good_ratio", "max_piece_integral",
              "piece_l1_ratio", "ball_measure_ratio", "triangle_ratio",
              "overlap")
    with_pieces = [r for r in reports if r.n_pieces > 0]
    gate = float(params["spread_gate"])
    tol = float(params["cancel_tol"])
    checks = [
        Check("czd.piece_cancellation",
              max(r.max_piece_integral for r in reports) <= tol,
              max(r.max_piece_integral for r in reports),
              f"max_j |integral(piece_j)| <= {tol:g}"),
        Check("czd.triangle_ratio",
              max(r.triangle_ratio for r in reports) <= 1.0 + tol,
              max(r.triangle_ratio for r in reports),
              f"||sum pieces||_1 / sum ||piece||_1 <= 1 + {tol:g}"),
        Check("czd.overlap_finite",
              all(np.isfinite(r.overlap) for r in reports),
              max(r.overlap for r in reports),
              "enlarged-ball overlap finite"),
    ]
    metrics = {"czd.n_pieces": {"mean": float(np.mean([r.n_pieces
                                                       for r in reports]))},
               "czd.overlap": {"max": max(r.overlap for r in reports)}}
    for label, pick in (("sup_good_ratio", lambda r: r.sup_good_ratio),
                        ("piece_l1_ratio", lambda r: r.piece_l1_ratio),
                        ("ball_measure_ratio", lambda r: r.ball_measure_ratio)):
        vals = [pick(r) for r in with_pieces]
        spread = _spread(vals) if vals else float("nan")
        checks.append(Check(f"czd.{label}_spread",
                            bool(vals) and spread <= gate, spread,
                            f"max/min across inputs <= {gate:g}"))
        metrics[f"czd.{label}"] = {"max": max(vals) if vals else None,
                                   "min": min(vals) if vals else None,
                                   "spread": spread}
    tables = {"constants": Table(header, tuple(rows))}
    return tables, metrics, checks


def _run_dilation_identity(params, seed):
    group = abelian_group(1)
    ratio = int(params["ratio"])
    kappa_power = float(params["kappa_power"])
    kappa = lambda t: (1.0 + t) ** kappa_power
    defects = []
    rows = []
    for lvl in range(int(params["levels"])):
        grid = _grid(group, params["spacing"] / 2 ** lvl,
                     tuple(e * 2 ** lvl for e in params["extents"]))
        calc = SpectralCalculus(grid)
        rep = dilation_identity_check(calc, kappa, ratio,
                                      window=params["window"],
                                      floor=params["floor"])
        defects.append(rep.rel_error)
        rows.append((grid.spacing, rep.rel_error, rep.nodes_compared,
                     rep.window))
    rates = [defects[i] / defects[i + 1] if defects[i + 1] > 0 else float("nan")
             for i in range(len(defects) - 1)]
    exact = all(d == 0.0 for d in defects)
    checks = [
        Check("spectral.dilation_identity_error",
              max(defects) <= params["max_rel_error"], max(defects),
              f"max relative error <= {params['max_rel_error']:g}"),
    ]
    if len(defects) >= 2:
        rate_ok = exact or all(params["rate_lo"] <= r <= params["rate_hi"]
                               for r in rates)
        checks.append(Check(
            "spectral.dilation_identity_rate", rate_ok,
            min(rates) if rates and not exact else float("nan"),
            f"halving rates in [{params['rate_lo']:g}, {params['rate_hi']:g}]"
            + (" (exact; vacuous)" if exact else ""),
        ))
    tables = {"defects": Table(("spacing", "rel_error", "nodes_compared",
                                "window"), tuple(rows))}
    metrics = {"spectral.dilation_defect": {"max": max(defects),
                                            "per_level": defects},
               "spectral.halving_rate": {"values": rates}}
    return tables, metrics, checks


def _sampled_kernel(params, grid=None):
    kern = OscillatingKernel(int(params["dim"]), params["phase_power"],
                             params["decay_order"],
                             amplitude=params["amplitude"],
                             phase_scale=params["phase_scale"])
    if grid is None:
        grid = _grid(abelian_group(kern.dim), params["spacing"],
                     params["extents"])
    return kern, sample_spatial(grid, kern,
                                support_diam=params["support_diam"],
                                mask_radius=params["mask_radius"])


def _run_kernel_decay(params, seed):
    kern, kf = _sampled_kernel(params)
    fit = fourier_decay_fit(kf, band=(params["band_lo"], params["band_hi"]),
                            n_bins=int(params["n_bins"]))
    expected = -kern.dim * kern.decay_order / 2.0
    tol = float(params["exponent_tol"])
    rows = tuple(zip(fit.bin_centers, fit.bin_means))
    checks = [Check("kernels.fourier_decay_exponent",
                    abs(fit.exponent - expected) <= tol, fit.exponent,
                    f"|exponent - ({expected:g})| <= {tol:g}")]
    metrics = {"kernels.fourier_decay": {
        "exponent": fit.exponent,
        "expected": expected,
        "amplitude": fit.amplitude,
        "residual_rms": fit.residual_rms,
    }}
    tables = {"fourier_bins": Table(("bin_center", "bin_mean"), rows)}
    return tables, metrics, checks


def _run_seminorm_table(params, seed):
    kern, kf = _sampled_kernel(params)
    radii = tuple(2.0 ** -k for k in range(1, int(params["radii_count"]) + 1))
    route = params["route"]
    thetas = tuple(sorted(set(params["thetas"])))
    rows = []
    estimates = {}
    for theta in thetas:
        if route == "gradient":
            est = gradient_route_bound(kf, theta=theta, radii=radii)
        else:
            est = hormander_seminorm(
                kf, theta=theta, radii=radii,
                samples_per_radius=int(params["samples_per_radius"]),
                seed=seed)
        estimates[theta] = est
        rows.extend((route, theta, r, v)
                    for r, v in zip(est.radii, est.per_radius))
    metrics = {}
    checks = []
    for theta, est in estimates.items():
        slope = _loglog_slope(est.radii, est.per_radius)
        metrics[f"kernels.seminorm@theta={theta:g}"] = {
            "value": est.value,
            "max_over_min": _spread([v for v in est.per_radius if v > 0]
                                    or [float("nan")]),
            "slope": slope,
        }
    flat_theta = thetas[-1]
    if flat_theta > 0:
        spread = metrics[f"kernels.seminorm@theta={flat_theta:g}"]["max_over_min"]
        checks.append(Check(
            "kernels.seminorm_flatness", spread <= params["flat_spread"],
            spread,
            f"theta={flat_theta:g} per-radius max/min <= "
            f"{params['flat_spread']:g}"))
    growth_theta = thetas[0]
    if route == "gradient" and growth_theta < flat_theta:
        slope = metrics[f"kernels.seminorm@theta={growth_theta:g}"]["slope"]
        target = kern.spatial_phase_power
        tol = float(params["growth_tol"])
        checks.append(Check(
            "kernels.seminorm_growth_exponent",
            abs(slope - target) <= tol, slope,
            f"theta={growth_theta:g} slope within {tol:g} of {target:g}"))
    tables = {"seminorm": Table(("route", "theta", "radius", "value"),
                                tuple(rows))}
    return tables, metrics, checks


def _split_constants_once(grid, f, mult, params):
    alpha = mult * lp_norm(f, 1) / grid.total_measure
    d = cz_decompose(f, alpha, params["gamma"])
    family = build_mollifiers(d, params["theta"], max_diam=params["max_diam"])
    btilde, per_piece = smooth_bad_part(d, family)
    split = split_F(d, family, SpectralCalculus(grid), btilde=btilde,
                    per_piece=per_piece)
    bounds = split_bounds(split, d)
    return len(d.pieces), bounds.c_f2, bounds.a_prime


def _run_split_constants(params, seed):
    rng = make_rng(seed)
    group = abelian_group(1)
    grid = _grid(group, params["spacing"], params["extents"])
    grids = [grid]
    if int(params["refine"]):
        grids.append(Grid(group, grid.spacing / 2,
                          tuple(2 * e for e in grid.extents)))
    mults = tuple(params["alpha_mults"])
    corpus = [midpoint_centers(rng, 0.5 * grid.hull_halfwidths(),
                               int(params["spikes"]), params["spike_cell"])
              for _ in range(int(params["corpus"]))]
    rows = []
    values = {}  # (grid index, mult) -> list over corpus of (c_f2, a_prime)
    for gi, g in enumerate(grids):
        for ci, centers in enumerate(corpus):
            f = spike_train(g, centers, params["spike_sigma"])
            for mult in mults:
                n_pieces, c_f2, a_prime = _split_constants_once(
                    g, f, mult, params)
                rows.append((ci, mult, g.spacing, n_pieces, c_f2, a_prime))
                values.setdefault((gi, mult), []).append((c_f2, a_prime))
    checks = []
    metrics = {}
    gate = float(params["spread_gate"])
    for label, col in (("c_f2", 0), ("a_prime", 1)):
        node = {}
        for mult in mults:
            base = [v[col] for v in values[(0, mult)]]
            spread = _spread(base)
            node[f"mean@alpha{mult:g}"] = float(np.mean(base))
            node[f"spread@alpha{mult:g}"] = spread
            checks.append(Check(
                f"weak11.split_{label}_spread", spread <= gate, spread,
                f"max/min across corpus at alpha mult {mult:g} <= {gate:g}"))
            if len(grids) > 1:
                refined = [v[col] for v in values[(1, mult)]]
                drift = abs(np.mean(refined) - np.mean(base)) / np.mean(base)
                node[f"drift@alpha{mult:g}"] = float(drift)
                checks.append(Check(
                    f"weak11.split_{label}_refinement_drift",
                    drift <= params["drift_gate"], float(drift),
                    f"|mean(h/2) - mean(h)| / mean(h) <= "
                    f"{params['drift_gate']:g}"))
        if len(mults) >= 2:
            ratios = [b[col] / a[col] for a, b in
                      zip(values[(0, mults[0])], values[(0, mults[1])])]
            node["alpha_ratio_min"] = float(min(ratios))
            node["alpha_ratio_max"] = float(max(ratios))
            lo, hi = params["alpha_ratio_lo"], params["alpha_ratio_hi"]
            checks.append(Check(
                f"weak11.split_{label}_alpha_scaling",
                lo <= min(ratios) and max(ratios) <= hi,
                float(max(ratios)),
                f"per-corpus ratio under alpha {mults[0]:g}->{mults[1]:g} "
                f"in [{lo:g}, {hi:g}]"))
        metrics[f"weak11.{label}"] = node
    tables = {"constants": Table(
        ("function", "alpha_mult", "spacing", "n_pieces", "c_f2", "a_prime"),
        tuple(rows))}
    return tables, metrics, checks


def _certify_corpus(grid, kernel, corpus, params, calc, l2_proxy):
    rows_r, rows_l = [], []
    reports = []
    for i, (kind, f) in enumerate(corpus):
        tf = convolve(f, kernel)
        f_l1 = lp_norm(f, 1)
        base = f_l1 / grid.total_measure
        alphas = [base * 2.0 ** k
                  for k in range(int(params["alpha_lo"]),
                                 int(params["alpha_hi"]) + 1)]
        report = weak11_certify(f, kernel, params["theta"], calc=calc,
                                gamma=params["gamma"], alphas=alphas,
                                max_diam=params["max_diam"],
                                l2_proxy=l2_proxy)
        reports.append((kind, report))
        rows_r.append((i, kind, f_l1, lp_norm(tf, 1) / f_l1,
                       report.sup_direct_ratio, report.weak_quasinorm_ratio))
        for row in report.rows:
            rows_l.append((i, kind, row.alpha, row.status, row.direct_ratio,
                           row.n_pieces, row.proof_ratio, row.c_f2,
                           row.a_prime))
    return reports, rows_r, rows_l


def _weak11_summary(reports, rows_r, rows_l, l2_value, spread_gate):
    sups = [rep.sup_direct_ratio for _, rep in reports]
    spread = _spread(sups)
    status_counts = {}
    for row in rows_l:
        status_counts[row[3]] = status_counts.get(row[3], 0) + 1
    by_kind = {}
    for (kind, _), row in zip(reports, rows_r):
        by_kind.setdefault(kind, []).append(row[3])  # l1_l1_ratio column
    metrics = {
        "weak11.sup_direct_ratio": {"max": max(sups), "min": min(sups),
                                    "spread": spread},
        "weak11.l1_l1_ratio": {f"{kind}_mean": float(np.mean(v))
                               for kind, v in sorted(by_kind.items())},
        "weak11.level_status": status_counts,
        "weak11.l2_proxy": l2_value,
    }
    checks = [Check("weak11.direct_ratio_spread", spread <= spread_gate,
                    spread,
                    f"max/min of sup-alpha ratios across corpus <= "
                    f"{spread_gate:g}")]
    tables = {
        "ratios": Table(("function", "kind", "f_l1", "l1_l1_ratio",
                         "sup_direct_ratio", "weak_quasinorm_ratio"),
                        tuple(rows_r)),
        "levels": Table(("function", "kind", "alpha", "status",
                         "direct_ratio", "n_pieces", "proof_ratio", "c_f2",
                         "a_prime"), tuple(rows_l)),
    }
    return tables, metrics, checks


def _run_weak11_euclidean(params, seed):
    rng = make_rng(seed)
    grid = _grid(abelian_group(1), params["spacing"], params["extents"])
    kern = OscillatingKernel(1, params["phase_power"], params["decay_order"],
                             amplitude=params["amplitude"],
                             phase_scale=params["phase_scale"])
    kgrid = compact_grid(grid.group, grid.spacing,
                         0.5 * params["support_diam"])
    kernel = sample_spatial(kgrid, kern, support_diam=params["support_diam"],
                            mask_radius=params["mask_radius"])
    if params["max_diam"] is None:
        params = dict(params, max_diam=params["support_diam"])
    corpus = ([("spike", node_spike(grid, rng))
               for _ in range(int(params["spike_functions"]))]
              + [("noise", noise_field(grid, rng))
                 for _ in range(int(params["noise_functions"]))])
    calc = SpectralCalculus(grid) if params["proof"] else None
    l2 = operator_l2_proxy(kernel, grid=grid)
    reports, rows_r, rows_l = _certify_corpus(grid, kernel, corpus, params,
                                              calc, l2)
    return _weak11_summary(reports, rows_r, rows_l, l2,
                           params["ratio_spread"])


def _run_weak11_heisenberg(params, seed):
    rng = make_rng(seed)
    grid = _grid(heisenberg_group(), params["spacing"], params["extents"])
    kernel = oscillating_h1_kernel(grid.spacing,
                                   radius=params["kernel_radius"],
                                   freq=params["kernel_freq"])
    if params["max_diam"] is None:
        params = dict(params, max_diam=2.0 * params["kernel_radius"])
    corpus = ([("spike", node_spike(grid, rng))
               for _ in range(int(params["spike_functions"]))]
              + [("noise", noise_field(grid, rng))
                 for _ in range(int(params["noise_functions"]))])
    calc = SpectralCalculus(grid) if params["proof"] else None
    if params["l2_proxy"]:
        l2 = operator_l2_proxy(kernel, iterations=int(params["l2_iters"]),
                               seed=seed, grid=grid)
    else:
        l2 = float("nan")
    reports, rows_r, rows_l = _certify_corpus(grid, kernel, corpus, params,
                                              calc, l2)
    return _weak11_summary(reports, rows_r, rows_l, l2,
                           params["ratio_spread"])


# -- registry -------------------------------------------------------------------


_KERNEL_PARAMS = {
    "dim": ParamSpec("int", 1, "ambient dimension"),
    "phase_power": ParamSpec("float", 0.5, "frequency phase exponent in (0,1)"),
    "decay_order": ParamSpec("float", 0.5, "multiplier decay order"),
    "amplitude": ParamSpec("float", 1.0, "spatial amplitude constant"),
    "phase_scale": ParamSpec("float", 2.0, "spatial phase constant"),
    "support_diam": ParamSpec("float", 8.0, "truncation diameter"),
}


@dataclass(frozen=True)
class _Scenario:
    schema: dict
    runner: callable
    help: str


SCENARIOS = {
    "cz-verify": _Scenario(
        schema={
            "group": ParamSpec("choice", "abelian:1", "group name",
                               ("abelian:1", "abelian:2", "heisenberg:1")),
            "spacing": ParamSpec("float", 1.0 / 512, "lattice spacing"),
            "extents": ParamSpec("ints", (512,),
                                 "per-axis extents (scalar replicates)"),
            "functions": ParamSpec("int", 10, "corpus size"),
            "level_mult": ParamSpec("float", 1.5,
                                    "stopping level as a multiple of mean |f|"),
            "cancel_tol": ParamSpec("float", 1e-12, "exact-identity tolerance"),
            "spread_gate": ParamSpec("float", 3.0,
                                     "max/min gate on scale-free constants"),
        },
        runner=_run_cz_verify,
        help="stopping-time decomposition properties on a noise corpus",
    ),
    "dilation-identity": _Scenario(
        schema={
            "spacing": ParamSpec("float", 1.0 / 64, "coarsest lattice spacing"),
            "extents": ParamSpec("ints", (2048,), "coarsest per-axis extents"),
            "ratio": ParamSpec("int", 2, "integer dilation ratio"),
            "levels": ParamSpec("int", 3, "number of halvings measured"),
            "kappa_power": ParamSpec("float", -0.5,
                                     "spectral function (1+t)**power"),
            "window": ParamSpec("float_or_auto", None,
                                "comparison window radius (auto: 0.4 hull)"),
            "floor": ParamSpec("float", 1e-8, "modulus floor for comparison"),
            "max_rel_error": ParamSpec("float", 1e-3, "defect gate"),
            "rate_lo": ParamSpec("float", 3.0, "halving-rate lower gate"),
            "rate_hi": ParamSpec("float", 5.0, "halving-rate upper gate"),
        },
        runner=_run_dilation_identity,
        help="rescaling identity of the spectral calculus under halving",
    ),
    "kernel-decay": _Scenario(
        schema={
            **_KERNEL_PARAMS,
            "mask_radius": ParamSpec("float_or_auto", None,
                                     "core mask (auto: resolution radius)"),
            "spacing": ParamSpec("float", 1.0 / 1024, "lattice spacing"),
            "extents": ParamSpec("ints", (5120,), "per-axis extents"),
            "band_lo": ParamSpec("float", 4.0, "fit band lower edge"),
            "band_hi": ParamSpec("float", 64.0, "fit band upper edge"),
            "n_bins": ParamSpec("int", 24, "geometric bins across the band"),
            "exponent_tol": ParamSpec("float", 0.2, "fit tolerance"),
        },
        runner=_run_kernel_decay,
        help="Fourier modulus decay fit of the truncated oscillating kernel",
    ),
    "seminorm-table": _Scenario(
        schema={
            **_KERNEL_PARAMS,
            "mask_radius": ParamSpec("float_or_auto", 0.0,
                                     "core mask (0: identity node only)"),
            "spacing": ParamSpec("float", 1.0 / 16384, "lattice spacing"),
            "extents": ParamSpec("ints", (81920,), "per-axis extents"),
            "thetas": ParamSpec("floats", (0.0, 0.5),
                                "collar exponents; smallest gets the growth "
                                "gate, largest the flatness gate"),
            "route": ParamSpec("choice", "gradient",
                               "estimator: first-order bound or sampled "
                               "difference integral",
                               ("gradient", "difference")),
            "radii_count": ParamSpec("int", 8, "radii 2**-1 .. 2**-count"),
            "samples_per_radius": ParamSpec("int", 64,
                                            "difference-route samples"),
            "flat_spread": ParamSpec("float", 5.0, "flatness gate"),
            "growth_tol": ParamSpec("float", 0.15, "growth-exponent tolerance"),
        },
        runner=_run_seminorm_table,
        help="smoothness seminorm versus ball radius for a theta pair",
    ),
    "split-constants": _Scenario(
        schema={
            "spacing": ParamSpec("float", 1.0 / 512, "lattice spacing"),
            "extents": ParamSpec("ints", (32768,), "per-axis extents"),
            "theta": ParamSpec("float", 0.5, "smoothing exponent"),
            "gamma": ParamSpec("float", 1.0, "level scale"),
            "corpus": ParamSpec("int", 3, "number of spike corpora"),
            "spikes": ParamSpec("int", 40, "spikes per corpus"),
            "spike_cell": ParamSpec("float", 1.0 / 32, "midpoint mesh cell"),
            "spike_sigma": ParamSpec("float", 1.0 / 256, "spike width"),
            "alpha_mults": ParamSpec("floats", (4.0, 8.0),
                                     "levels as multiples of mean |f|"),
            "max_diam": ParamSpec("float", 4.0, "piece diameter cutoff"),
            "refine": ParamSpec("int", 0, "1: re-run at h/2 and report drift"),
            "spread_gate": ParamSpec("float", 3.0, "corpus spread gate"),
            "alpha_ratio_lo": ParamSpec("float", 0.5, "alpha-doubling gate"),
            "alpha_ratio_hi": ParamSpec("float", 2.0, "alpha-doubling gate"),
            "drift_gate": ParamSpec("float", 0.5, "refinement drift gate"),
        },
        runner=_run_split_constants,
        help="realized constants of the smoothed-split L2 bounds",
    ),
    "weak11-euclidean": _Scenario(
        schema={
            **{k: v for k, v in _KERNEL_PARAMS.items() if k != "dim"},
            "phase_scale": ParamSpec("float", 1.0, "spatial phase constant"),
            "support_diam": ParamSpec("float", 4.0, "truncation diameter"),
            "mask_radius": ParamSpec("float_or_auto", None,
                                     "core mask (auto: resolution radius)"),
            "spacing": ParamSpec("float", 1.0 / 256, "lattice spacing"),
            "extents": ParamSpec("ints", (2048,), "per-axis extents"),
            "theta": ParamSpec("float", 0.5, "smoothing exponent"),
            "gamma": ParamSpec("float", 1.0, "level scale"),
            "spike_functions": ParamSpec("int", 2, "point-mass corpus size"),
            "noise_functions": ParamSpec("int", 2, "noise corpus size"),
            "proof": ParamSpec("bool", False,
                               "run the full proof chain per level"),
            "max_diam": ParamSpec("float_or_auto", None,
                                  "piece cutoff (auto: support_diam)"),
            "alpha_lo": ParamSpec("int", -6, "smallest level exponent"),
            "alpha_hi": ParamSpec("int", 6, "largest level exponent"),
            "ratio_spread": ParamSpec("float", 10.0, "corpus spread gate"),
        },
        runner=_run_weak11_euclidean,
        help="endpoint certification for the oscillating kernel on the line",
    ),
    "weak11-heisenberg": _Scenario(
        schema={
            "spacing": ParamSpec("float", 0.5, "lattice spacing"),
            "extents": ParamSpec("ints", (8, 8, 8), "per-axis extents"),
            "kernel_radius": ParamSpec("float", 1.5, "kernel support radius"),
            "kernel_freq": ParamSpec("float", 4.0, "kernel oscillation rate"),
            "theta": ParamSpec("float", 0.5, "smoothing exponent"),
            "gamma": ParamSpec("float", 1.0, "level scale"),
            "spike_functions": ParamSpec("int", 2, "point-mass corpus size"),
            "noise_functions": ParamSpec("int", 2, "noise corpus size"),
            "proof": ParamSpec("bool", False,
                               "run the full proof chain per level"),
            "max_diam": ParamSpec("float_or_auto", None,
                                  "piece cutoff (auto: kernel diameter)"),
            "alpha_lo": ParamSpec("int", -6, "smallest level exponent"),
            "alpha_hi": ParamSpec("int", 6, "largest level exponent"),
            "l2_proxy": ParamSpec("bool", False,
                                  "estimate the operator L2 norm (power "
                                  "iteration; slow)"),
            "l2_iters": ParamSpec("int", 12, "power-iteration steps"),
            "ratio_spread": ParamSpec("float", 10.0, "corpus spread gate"),
        },
        runner=_run_weak11_heisenberg,
        help="endpoint certification for a smooth kernel on the Heisenberg "
             "lattice",
    ),
}


def scenario_names():
    return sorted(SCENARIOS)


def scenario_schema(name):
    if name not in SCENARIOS:
        raise ConfigError(
            f"unknown scenario {name!r}; known: {', '.join(scenario_names())}"
        )
    return SCENARIOS[name].schema


def run_scenario(name, params=None, seed=0):
    """Dispatch a scenario on resolved parameters; fill schema defaults.

    ``params`` holds typed values (the CLI resolves raw config strings
    first); unknown keys raise :class:`ConfigError`.
    """
    schema = scenario_schema(name)
    resolved = {k: spec.default for k, spec in schema.items()}
    for key, value in (params or {}).items():
        if key not in schema:
            raise ConfigError(
                f"unknown parameter {key!r} for scenario {name!r}; known: "
                f"{', '.join(sorted(schema))}"
            )
        resolved[key] = value
    tables, metrics, checks = SCENARIOS[name].runner(resolved, int(seed))
    return ScenarioResult(name=name, seed=int(seed), params=resolved,
                          tables=tables, metrics=metrics,
                          checks=tuple(checks))
