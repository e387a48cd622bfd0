"""Families of attached discs: evaluation ranks, hypersurface detection,
Levi scans and one-sided filling experiments.

The evaluation map sends a disc of the family to its value at a fixed
boundary point zeta0 != 1. Degenerate rank of its Jacobian across the family
signals a complex hypersurface inside E; a full rank together with a
transverse disc signals one-sided filling. These experiments are the
executable form of the dichotomy the package is built to probe.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .bishop import (
    BishopDisc,
    DiscParameters,
    SolverOptions,
    solve_bishop,
    solve_linearized,
    transversality,
)
from .discfun import BoundaryFunction
from .errors import InconclusiveRankError, NonConvergenceError
from .geometry import complex_to_real, holomorphic_tangent_basis, levi_form_direct

__all__ = [
    "FamilyChart",
    "FamilyReport",
    "LeviScanReport",
    "FillOptions",
    "FillReport",
    "evaluation_jacobian",
    "detect_complex_hypersurface",
    "DetectReport",
    "levi_vanishing_scan",
    "fill_one_sided",
    "dichotomy_outcome",
    "trig_basis",
]

RANK_THRESHOLD = 1e-6  # relative singular value cut for rank verdicts


def trig_basis(grid, ncomp, degree):
    """Trigonometric directions vanishing at 1: cos k - 1 and sin k per
    component, k = 1..degree. Returns a list of BoundaryFunction."""
    basis = []
    for comp in range(ncomp):
        for k in range(1, degree + 1):
            for fn in (
                lambda th, k=k: np.cos(k * th) - 1.0,
                lambda th, k=k: np.sin(k * th),
            ):
                data = np.zeros((ncomp, grid.N))
                data[comp] = fn(grid.theta)
                basis.append(BoundaryFunction(grid, data))
    return basis


@dataclass(frozen=True)
class FamilyChart:
    """Finite-dimensional chart of the disc family at an attachment point."""

    base_params: DiscParameters
    degree: int = 2
    zeta0: complex = -1.0 + 0.0j
    basis: tuple = ()

    def with_basis(self, structure, hypersurface):
        if self.basis:
            return self
        grid = self.base_params.options.grid()
        ncomp = structure.n - hypersurface.d
        return replace(self, basis=tuple(trig_basis(grid, ncomp, self.degree)))

    def gram_condition(self):
        k = len(self.basis)
        gram = np.zeros((k, k))
        for i in range(k):
            for j in range(k):
                gram[i, j] = np.mean(
                    np.sum(self.basis[i].samples.real * self.basis[j].samples.real, axis=0)
                )
        return float(np.linalg.cond(gram))


@dataclass
class FamilyReport:
    singular_values: np.ndarray
    rank: int
    threshold: float
    zeta0: complex
    jacobian: np.ndarray
    gram_condition: float
    rank_doubled: Optional[int] = None
    target: str = "value"
    coverage: Optional[dict] = None

    @property
    def stable(self):
        return self.rank_doubled is None or self.rank_doubled == self.rank


def _rank_of(singular_values, threshold=RANK_THRESHOLD):
    sv = np.asarray(singular_values)
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv > threshold * sv[0]))


def _chart_columns(structure, hypersurface, base, chart, method, fd_delta):
    """Variations of the base disc at all boundary nodes, per basis element.

    Returns (K, n, N) complex boundary variations.
    """
    cols = []
    if method == "linearized":
        for direction in chart.basis:
            lin = solve_linearized(base, structure, hypersurface, direction)
            cols.append(lin.disc.values[:, 0, :])
    elif method == "fd":
        params = base.params
        eps = params.amplitude
        tight = replace(params.options, tol=1e-12)
        base_fd = solve_bishop(
            structure, hypersurface, replace(params, options=tight)
        )
        for direction in chart.basis:
            bumped = BoundaryFunction(
                params.boundary_data.grid,
                params.boundary_data.samples.real
                + (fd_delta / eps) * direction.samples.real,
            )
            pert = solve_bishop(
                structure,
                hypersurface,
                replace(params, boundary_data=bumped, options=tight),
            )
            cols.append(
                (pert.disc.values[:, 0, :] - base_fd.disc.values[:, 0, :]) / fd_delta
            )
    else:
        raise ValueError(f"unknown jacobian method {method!r}")
    return np.stack(cols)


def _eval_at_zeta0(boundary_cols, grid, zeta0):
    theta0 = float(np.angle(zeta0))
    phase = np.exp(1j * grid.modes * theta0)
    coeffs = np.fft.fft(boundary_cols, axis=-1) / grid.N
    return coeffs @ phase  # (K, n)


def evaluation_jacobian(structure, hypersurface, chart, method="linearized",
                        target="value", fd_delta=1e-6, check_stability=True,
                        base_disc=None) -> FamilyReport:
    """Jacobian of the evaluation map of the disc family at chart.zeta0.

    Columns are variations of the disc value (or of its radial derivative at
    zeta = 1 for target='derivative'); rows are intrinsic E-chart coordinates
    at the evaluation point (ambient coordinates for the derivative target).
    """
    chart = chart.with_basis(structure, hypersurface)
    base = base_disc or solve_bishop(structure, hypersurface, chart.base_params)
    grid = base.grid

    def jac_for(basis_chart):
        cols_b = _chart_columns(
            structure, hypersurface, base, basis_chart, method, fd_delta
        )
        if target == "value":
            vals = _eval_at_zeta0(cols_b, grid, basis_chart.zeta0)
            q0 = base.at(np.array([basis_chart.zeta0]))[:, 0]
            frame = holomorphic_tangent_basis(
                hypersurface, q0, structure,
                membership_tol=max(1e-8, 10 * base.residual_bc),
            )
            rows = frame.real_tangent_basis
            return np.stack([rows @ complex_to_real(v) for v in vals], axis=1)
        if target == "derivative":
            cols = []
            for direction in basis_chart.basis:
                lin = solve_linearized(base, structure, hypersurface, direction)
                dz = (
                    lin.disc.d().values[:, 0, 0]
                    + lin.disc.d_bar().values[:, 0, 0]
                )
                cols.append(complex_to_real(dz))
            return np.stack(cols, axis=1)
        raise ValueError(f"unknown target {target!r}")

    jac = jac_for(chart)
    sv = np.linalg.svd(jac, compute_uv=False)
    rank = _rank_of(sv)
    rank_doubled = None
    if check_stability:
        doubled = replace(chart, degree=2 * chart.degree, basis=())
        doubled = doubled.with_basis(structure, hypersurface)
        sv2 = np.linalg.svd(jac_for(doubled), compute_uv=False)
        rank_doubled = _rank_of(sv2)
    return FamilyReport(
        singular_values=sv,
        rank=rank,
        threshold=RANK_THRESHOLD,
        zeta0=chart.zeta0,
        jacobian=jac,
        gram_condition=chart.gram_condition(),
        rank_doubled=rank_doubled,
        target=target,
    )


@dataclass
class DetectReport:
    verdict: str  # "hypersurface" | "none"
    ranks: list
    witnesses: np.ndarray  # (P, n) complex points on E
    j_invariance_defect: float
    tangency_defect: float
    max_abs_rho: float


def detect_complex_hypersurface(structure, hypersurface, chart, n_base=3,
                                n_zeta0=8, seed=0) -> DetectReport:
    """Scan evaluation ranks over base discs and boundary points.

    Rank <= 2n - 2 everywhere, with variations tangent to E and a J-invariant
    variation span, is reported as a complex hypersurface through the witness
    cloud. A full rank anywhere yields verdict "none". Raises
    InconclusiveRankError when singular values cluster at the threshold.
    """
    chart = chart.with_basis(structure, hypersurface)
    grid = chart.base_params.options.grid()
    n, d = structure.n, hypersurface.d
    zeta0s = np.exp(2j * np.pi * (np.arange(1, n_zeta0 + 1)) / (n_zeta0 + 1))

    base_list = [chart.base_params]
    rng = np.random.default_rng(seed)
    ncomp = n - d
    for _ in range(n_base - 1):
        coef = rng.standard_normal((ncomp, 2 * chart.degree))
        basis = trig_basis(grid, ncomp, chart.degree)
        data = sum(
            c * b.samples.real
            for c, b in zip(coef.reshape(-1), basis)
        )
        norm = max(np.max(np.abs(data)), 1e-12)
        base_list.append(
            replace(chart.base_params,
                    boundary_data=BoundaryFunction(grid, data / norm))
        )

    ranks, witnesses = [], []
    defect_j, defect_t, max_rho = 0.0, 0.0, 0.0
    full_rank_seen = False
    for params in base_list:
        base = solve_bishop(structure, hypersurface, params)
        cols_b = _chart_columns(structure, hypersurface, base, chart,
                                "linearized", 0.0)
        for z0 in zeta0s:
            vals = _eval_at_zeta0(cols_b, grid, z0)  # (K, n)
            q0 = base.at(np.array([z0]))[:, 0]
            frame = holomorphic_tangent_basis(
                hypersurface, q0, structure,
                membership_tol=max(1e-8, 10 * base.residual_bc),
            )
            jac = np.stack(
                [frame.real_tangent_basis @ complex_to_real(v) for v in vals],
                axis=1,
            )
            sv = np.linalg.svd(jac, compute_uv=False)
            rank = _rank_of(sv)
            rel = sv / sv[0]
            if np.any((rel > 0.1 * RANK_THRESHOLD) & (rel < 10 * RANK_THRESHOLD)):
                raise InconclusiveRankError(
                    f"singular values cluster at the threshold near zeta0={z0:.3f}"
                )
            ranks.append({"zeta0": complex(z0), "rank": rank,
                          "singular_values": sv.tolist()})
            if rank >= 2 * n - d:
                full_rank_seen = True
                continue
            witnesses.append(q0)
            max_rho = max(max_rho, float(np.max(np.abs(hypersurface.rho(q0)))))
            # span of variations and its J-invariance at the witness
            span_real = np.stack([complex_to_real(v) for v in vals])
            basis_u = np.linalg.svd(span_real.T)[0][:, :rank]
            grads = hypersurface.gradient_real(q0)
            gnorm = np.linalg.norm(grads)
            defect_t = max(
                defect_t,
                float(np.max(np.abs(span_real @ grads.T)))
                / max(np.max(np.abs(span_real)), 1e-12) / gnorm,
            )
            jq = structure.j_at(q0)
            jspan = jq @ basis_u
            resid = jspan - basis_u @ (basis_u.T @ jspan)
            defect_j = max(defect_j, float(np.linalg.norm(resid, 2)))

    verdict = "none" if full_rank_seen else "hypersurface"
    return DetectReport(
        verdict=verdict,
        ranks=ranks,
        witnesses=np.array(witnesses) if witnesses else np.zeros((0, n), complex),
        j_invariance_defect=defect_j,
        tangency_defect=defect_t,
        max_abs_rho=max_rho,
    )


@dataclass
class LeviScanReport:
    max_abs: float
    min_value: float
    max_value: float
    values: np.ndarray  # (n_points, n - d)
    thetas: np.ndarray

    def __float__(self):
        return self.max_abs


def levi_vanishing_scan(disc: BishopDisc, hypersurface, structure,
                        n_points=64) -> LeviScanReport:
    """Levi form of rho along the disc boundary on holomorphic-tangent frames.

    Returns the scan values per boundary sample and frame direction; max_abs
    is the headline number (zero for a Levi-flat structure/hypersurface pair).
    """
    grid = disc.grid
    stride = max(1, grid.N // n_points)
    idx = np.arange(0, grid.N, stride)
    boundary = disc.boundary_values()
    tol = max(1e-8, 10 * disc.residual_bc)
    n, d = structure.n, hypersurface.d
    field_ = hypersurface.component_field(0)
    values = np.zeros((len(idx), n - d))
    for row, j in enumerate(idx):
        q = boundary[:, j]
        frame = holomorphic_tangent_basis(
            hypersurface, q, structure, membership_tol=tol
        )
        for col, v in enumerate(frame.holo_basis):
            values[row, col] = levi_form_direct(field_, q, v, structure)
    return LeviScanReport(
        max_abs=float(np.max(np.abs(values))),
        min_value=float(np.min(values)),
        max_value=float(np.max(values)),
        values=values,
        thetas=grid.theta[idx],
    )


@dataclass(frozen=True)
class FillOptions:
    delta: float = 0.05
    h: float = 0.01
    n_directions: int = 48
    amplitudes: tuple = (0.01, 0.02, 0.04, 0.07, 0.1, 0.14, 0.2)
    basis_degree: int = 2
    n_offsets: int = 0
    seed: int = 0
    max_solves: int = 10000
    transversality_tol: float = 1e-6
    solver: SolverOptions = field(default_factory=SolverOptions)


@dataclass
class FillReport:
    transverse_found: bool
    max_transversality: float
    side_sign: int
    side_label: str
    coverage_fraction: float
    opposite_fraction: float
    n_points: int
    n_solves: int
    n_failures: int
    delta: float
    h: float
    on_surface_max: float  # max |rho| over collected points when not transverse
    points: np.ndarray = field(default=None, repr=False)


def _direction_data(grid, ncomp, degree, seed, index):
    rng = np.random.default_rng((seed, index))
    basis = trig_basis(grid, ncomp, degree)
    coef = rng.standard_normal(len(basis))
    data = sum(c * b.samples.real for c, b in zip(coef, basis))
    du = np.fft.ifft(np.fft.fft(data, axis=-1) * (1j * grid.modes), axis=-1)
    scale = max(np.max(np.abs(data)), np.max(np.abs(du)))
    return data / scale


def fill_one_sided(structure, hypersurface, p, options: FillOptions,
                   side_labels=None) -> FillReport:
    """Sweep attached discs and measure one-sided coverage near p.

    Collects interior disc samples within ``delta`` of p. If no swept disc is
    transverse (all below ``transversality_tol``), reports that together with
    the largest |rho| over the collected cloud. Otherwise reports the side of
    E the cloud lies on and the covered fraction of a delta/2 ball on that
    side at resolution h (a target counts as covered when a strictly
    off-E collected point lies within h).
    """
    grid = options.solver.grid()
    n, d = structure.n, hypersurface.d
    p = np.asarray(p, dtype=complex)
    points, rhos = [], []
    max_trans = 0.0
    n_solves = 0
    n_failures = 0
    budget = min(options.max_solves,
                 options.n_directions * len(options.amplitudes))
    for idx in range(options.n_directions):
        data = _direction_data(grid, n - d, options.basis_degree,
                               options.seed, idx)
        u = BoundaryFunction(grid, data)
        for eps in options.amplitudes:
            if n_solves >= budget:
                break
            params = DiscParameters(
                attachment=p, boundary_data=u, amplitude=eps,
                options=options.solver,
            )
            n_solves += 1
            try:
                disc = solve_bishop(structure, hypersurface, params)
            except NonConvergenceError:
                n_failures += 1
                continue
            max_trans = max(max_trans, abs(transversality(disc, hypersurface)))
            interior = disc.interior_values().reshape(n, -1).T  # (P, n)
            dist = np.linalg.norm(complex_to_real(interior - p), axis=1)
            keep = dist <= options.delta
            if np.any(keep):
                kept = interior[keep]
                points.append(kept)
                rhos.append(hypersurface.rho(kept)[:, 0])

    cloud = np.concatenate(points) if points else np.zeros((0, n), complex)
    rho_all = np.concatenate(rhos) if rhos else np.zeros(0)
    transverse_found = max_trans > options.transversality_tol

    labels = dict(side_labels or {})
    labels.setdefault(-1, "rho<0")
    labels.setdefault(1, "rho>0")

    if not transverse_found:
        return FillReport(
            transverse_found=False,
            max_transversality=max_trans,
            side_sign=0,
            side_label="on-surface",
            coverage_fraction=0.0,
            opposite_fraction=0.0,
            n_points=len(cloud),
            n_solves=n_solves,
            n_failures=n_failures,
            delta=options.delta,
            h=options.h,
            on_surface_max=float(np.max(np.abs(rho_all))) if len(rho_all) else 0.0,
            points=cloud,
        )

    off = np.abs(rho_all) > 1e-9
    side = -1 if np.sum(rho_all[off] < 0) >= np.sum(rho_all[off] > 0) else 1
    coverage, opposite, n_targets = _coverage(
        cloud, rho_all, hypersurface, p, side, options
    )
    return FillReport(
        transverse_found=True,
        max_transversality=max_trans,
        side_sign=side,
        side_label=labels[side],
        coverage_fraction=coverage,
        opposite_fraction=opposite,
        n_points=len(cloud),
        n_solves=n_solves,
        n_failures=n_failures,
        delta=options.delta,
        h=options.h,
        on_surface_max=float(np.max(np.abs(rho_all))) if len(rho_all) else 0.0,
        points=cloud,
    )


def _coverage(cloud, rho_all, hypersurface, p, side, options):
    """h-net hit rate over a delta/2 ball on each side of E."""
    n = cloud.shape[1] if len(cloud) else len(p)
    dim = 2 * n
    spacing = options.h / 2 if dim <= 4 else options.h
    half = options.delta / 2
    axes = [np.arange(-half, half + spacing / 2, spacing)] * dim
    mesh = np.meshgrid(*axes, indexing="ij")
    offsets = np.stack([m.reshape(-1) for m in mesh], axis=1)
    offsets = offsets[np.linalg.norm(offsets, axis=1) <= half]
    targets = offsets + complex_to_real(p)
    targets_c = targets[:, :n] + 1j * targets[:, n:]
    rho_t = hypersurface.rho(targets_c)[:, 0]

    fractions = {}
    for sgn in (side, -side):
        sel_t = rho_t * sgn > 0
        n_targets = int(np.sum(sel_t))
        if n_targets == 0:
            fractions[sgn] = 0.0
            continue
        sel_c = rho_all * sgn > 1e-9
        if not np.any(sel_c):
            fractions[sgn] = 0.0
            continue
        tree = cKDTree(complex_to_real(cloud[sel_c]))
        dist, _ = tree.query(targets[sel_t], k=1)
        fractions[sgn] = float(np.mean(dist <= options.h))
    return fractions[side], fractions[-side], len(targets)


def dichotomy_outcome(fill: FillReport, detect: DetectReport,
                      levi: LeviScanReport, levi_tol=1e-8) -> str:
    """Single dichotomy verdict with precedence transverse > hypersurface >
    levi vanishing; 'inconclusive' when none of the three certificates holds."""
    if fill.transverse_found:
        return "transverse"
    if detect.verdict == "hypersurface":
        return "hypersurface"
    if levi.max_abs <= levi_tol:
        return "levi_flat_fill"
    return "inconclusive"
