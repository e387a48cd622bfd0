"""Nonlinear and linearized Bishop boundary value solves.

A disc attached to E at p solves dbar z = A(z) conj(d z) with rho(z) = 0 on
the boundary circle and z(1) = p. The scheme is the classical one: an outer
fixed point z <- h + T(A(z) conj(d z)) where T is the Cauchy-Green transform
and the holomorphic part h solves the boundary system by Newton iteration on
boundary samples. Work happens in an adapted complex frame at p in which the
tangential components are pinned to the Schwarz extension 2 K_1(eps u) of the
prescribed real data and the normal components are slaved to rho = 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .discfun import BoundaryFunction, DiscFunction
from .errors import (
    DegenerateBoundaryJacobianError,
    NonConvergenceError,
    PreconditionError,
)
from .geometry import (
    HypersurfaceSpec,
    StructureSpec,
    a_from_j,
    complex_to_real,
    holomorphic_tangent_basis,
    j_standard,
    real_to_complex,
)
from .grids import DiscGrid
from .operators import cauchy_green_T

__all__ = [
    "SolverOptions",
    "DiscParameters",
    "BishopDisc",
    "LinearizedDisc",
    "solve_bishop",
    "solve_linearized",
    "transversality",
]

SMALLNESS_BOUND = 0.2  # eps * C^1 norm of the boundary data must stay below


@dataclass(frozen=True)
class SolverOptions:
    n_angular: int = 256
    n_radial: int = 64
    tol: Optional[float] = None  # default 1e-9 integrable, 1e-7 otherwise
    max_outer: int = 200
    newton_max_iter: int = 40
    damping: float = 0.5
    continuation: bool = True

    def grid(self):
        return DiscGrid.get(self.n_angular, self.n_radial)

    def effective_tol(self, structure):
        if self.tol is not None:
            return self.tol
        return 1e-9 if structure.is_integrable else 1e-7


@dataclass(frozen=True)
class DiscParameters:
    """Attachment point, tangential boundary data and amplitude."""

    attachment: np.ndarray
    boundary_data: BoundaryFunction
    amplitude: float = 0.1
    options: SolverOptions = field(default_factory=SolverOptions)

    @staticmethod
    def from_callable(attachment, fn, amplitude=0.1, options=None):
        options = options or SolverOptions()
        grid = options.grid()
        u = BoundaryFunction.from_callable(grid, fn)
        return DiscParameters(
            attachment=np.asarray(attachment, dtype=complex),
            boundary_data=u,
            amplitude=amplitude,
            options=options,
        )

    def validate(self):
        u = self.boundary_data
        if not u.is_real:
            raise PreconditionError("boundary data must be real valued")
        if np.max(np.abs(u.value_at_one())) > 1e-12:
            raise PreconditionError("boundary data must vanish at zeta = 1")
        if self.amplitude <= 0:
            raise PreconditionError("amplitude must be positive")
        # C^1 size taken as max(sup |u|, sup |u'|); the canonical data
        # cos(theta) - 1 at amplitude 0.1 sits exactly on the bound.
        du = u.coeffs * (1j * u.grid.modes)
        c1 = max(
            float(np.max(np.abs(u.samples))),
            float(np.max(np.abs(u.grid.boundary_values(du)))),
        )
        if self.amplitude * c1 > SMALLNESS_BOUND + 1e-12:
            raise PreconditionError(
                f"amplitude * C1 size = {self.amplitude * c1:.3g} "
                f"exceeds the smallness bound {SMALLNESS_BOUND}"
            )
        if u.grid is not self.options.grid():
            raise PreconditionError("boundary data grid does not match options")


def _apply_real_linear(mat, z):
    """Apply a real 2n x 2n matrix to complex points of shape (..., n)."""
    return real_to_complex(complex_to_real(z) @ mat.T)


class _AdaptedProblem:
    """Problem data in attachment-adapted coordinates.

    Optionally conjugates everything by a real-linear frame change making
    J(p) standard (needed when A(p) != 0), then fixes a complex frame
    V = [tangential | normal] with rho_z(p) V = [0 | Id]. The disc variable
    is xi with z = back(p_t + V xi).
    """

    def __init__(self, structure, hypersurface, p, grid):
        self.grid = grid
        n, d = structure.n, hypersurface.d
        self.n, self.d = n, d
        p = np.asarray(p, dtype=complex)
        a_p = structure.a_at(p)
        if np.max(np.abs(a_p)) > 1e-12:
            jq = structure.j_at(p)
            s = 0.5 * (np.eye(2 * n) - jq @ j_standard(n))
            g = np.linalg.inv(s)
            self._g, self._s = g, s
            base_struct, base_hyp = structure, hypersurface

            def a_t(z):
                x = complex_to_real(z) @ s.T
                jv = base_struct.j_at(real_to_complex(x))
                return a_from_j(np.einsum("ab,...bc,cd->...ad", g, jv, s))

            def rho_t(z):
                return base_hyp.rho(_apply_real_linear(s, z))

            def rho_z_t(z):
                gr = base_hyp.gradient_real(_apply_real_linear(s, z)) @ s
                return 0.5 * (gr[..., :n] - 1j * gr[..., n:])

            self.structure = StructureSpec(n=n, a=a_t)
            self.hypersurface = HypersurfaceSpec(
                n=n, d=d, rho=rho_t, rho_z=rho_z_t,
                p=_apply_real_linear(g, p),
            )
        else:
            self._g = self._s = None
            self.structure = structure
            self.hypersurface = hypersurface
        self.p = np.asarray(self.hypersurface.p, dtype=complex)

        frame = holomorphic_tangent_basis(
            self.hypersurface, self.p, self.structure, membership_tol=1e-7
        )
        rz = self.hypersurface.rho_z(self.p)
        normal = np.linalg.pinv(rz)  # columns w_j with rho_z w_j = e_j
        self.tangent_frame = frame
        self.V = np.concatenate([frame.holo_basis.T, normal], axis=1)
        self.Vinv = np.linalg.inv(self.V)
        v_norm = np.linalg.norm(self.V, 2)
        s_norm = np.linalg.norm(self._s, 2) if self._s is not None else 1.0
        self.scale = v_norm * s_norm

    def xi_points(self, pts):
        """xi-coordinate points (..., n) in frame-normalized coordinates."""
        return self.p + pts @ self.V.T

    def xi_to_z_values(self, xi_values):
        """xi values (n, ...) to original-coordinate values (n, ...)."""
        zt = self.p[(slice(None),) + (None,) * (xi_values.ndim - 1)] + np.einsum(
            "ab,b...->a...", self.V, xi_values
        )
        return self.push_values(zt, translate=False)

    def push_values(self, values, translate=False):
        """Undo the real-linear normalization on values shaped (n, ...)."""
        del translate
        if self._s is None:
            return values
        flat = np.moveaxis(values, 0, -1)
        return np.moveaxis(_apply_real_linear(self._s, flat), -1, 0)

    def a_xi_at(self, points):
        """Structure matrix in xi coordinates at points of shape (..., n)."""
        a = self.structure.a_at(points)
        return np.einsum("ab,...bc,cd->...ad", self.Vinv, a, np.conj(self.V))


def _hol_values(grid, ch):
    return grid.coeffs_to_values(grid.hol_profiles(ch))


def _hol_d_values(grid, ch):
    """Exact d/dzeta of the holomorphic extension with coefficients ch."""
    prof = np.zeros(ch.shape[:-1] + (grid.M, grid.N), dtype=complex)
    half = grid.N // 2
    ks = np.arange(1, half)
    prof[..., :, ks - 1] = ch[..., None, ks] * ks * grid.r[:, None] ** (ks - 1)
    return grid.coeffs_to_values(prof)


class _BoundaryNewton:
    """Solves rho(xi_b) = 0 for the normal holomorphic data at fixed w."""

    def __init__(self, problem, grid, options):
        self.problem = problem
        self.grid = grid
        self.options = options
        self.m2 = grid.two_k1_matrix
        self.lu = None
        self.gq = None

    def tangential(self, data, w_tb):
        """Pinned tangential boundary samples: Re part ``data``, zero at 1."""
        g = data - w_tb.real
        g0 = g[:, 0:1]
        hb = np.einsum("jl,cl->cj", self.m2, g - g0) + g0
        return hb - 1j * w_tb[:, 0:1].imag

    def _rho_at(self, xi_b):
        zt = self.problem.xi_points(np.moveaxis(xi_b, 0, -1))
        return self.problem.hypersurface.rho(zt), zt

    def _jacobian(self, zt):
        n, d = self.problem.n, self.problem.d
        grid = self.grid
        rz = self.problem.hypersurface.rho_z(zt)  # (N, d, n)
        gq = rz @ self.problem.V[:, n - d:]  # (N, d, d), normal block
        sv_min = np.min(np.abs(np.linalg.svd(gq, compute_uv=False)))
        if sv_min < 1e-8:
            raise DegenerateBoundaryJacobianError(
                "rho_z loses rank along the boundary iterate"
            )
        mre, mim = self.m2.real, self.m2.imag
        jac = 2.0 * (
            np.einsum("jkm,jl->kjml", gq.real, mre)
            - np.einsum("jkm,jl->kjml", gq.imag, mim)
        )
        jac = jac.reshape(d * grid.N, d * grid.N)
        for k in range(d):
            row = k * grid.N
            jac[row, :] = 0.0
            jac[row, row] = 1.0
        self.gq = gq
        return jac

    def _factor(self, zt):
        try:
            self.lu = scipy.linalg.lu_factor(self._jacobian(zt))
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise DegenerateBoundaryJacobianError(str(exc)) from exc

    def solve(self, data, w_b, a_init, finalize=False):
        """Newton for the real normal data a; returns (hol coeffs, a, resid)."""
        problem, grid = self.problem, self.grid
        n, d = problem.n, problem.d
        w_tb, w_nb = w_b[: n - d], w_b[n - d:]
        xit_b = self.tangential(data, w_tb) + w_tb
        a = a_init.copy()

        def assemble(avec):
            h_nb = np.einsum("jl,cl->cj", self.m2, avec) - w_nb[:, 0:1]
            return np.concatenate([xit_b, h_nb + w_nb], axis=0)

        def residual(avec):
            xi_b = assemble(avec)
            rho, zt = self._rho_at(xi_b)
            f = np.moveaxis(rho, -1, 0).copy()  # (d, N)
            f[:, 0] = avec[:, 0]
            return f, zt

        f, zt = residual(a)
        fnorm = float(np.max(np.abs(f)))
        converged = fnorm < 1e-13
        for it in range(self.options.newton_max_iter):
            if converged:
                break
            refreshed = False
            if self.lu is None or (it > 0 and it % 8 == 0):
                self._factor(zt)
                refreshed = True
            step = scipy.linalg.lu_solve(self.lu, f.reshape(-1)).reshape(d, grid.N)
            scale = 1.0
            for _ in range(6):
                f_new, zt_new = residual(a - scale * step)
                if float(np.max(np.abs(f_new))) <= fnorm or scale < 0.05:
                    break
                scale *= self.options.damping
            a = a - scale * step
            f, zt = f_new, zt_new
            new_norm = float(np.max(np.abs(f)))
            if new_norm > fnorm and not refreshed:
                self.lu = None  # stale factorization, rebuild next pass
            fnorm = new_norm
            converged = fnorm < 1e-13
        if not converged:
            raise NonConvergenceError(
                "boundary Newton did not converge",
                iterations=self.options.newton_max_iter,
                residuals={"bc": fnorm},
            )
        if finalize or self.lu is None:
            self._factor(zt)  # linearized solves need the converged jacobian
        xi_b = assemble(a)
        ch = grid.boundary_coeffs(xi_b - w_b)
        ch[:, grid.N // 2:] = 0.0  # representation is exactly holomorphic
        return ch, a, fnorm


@dataclass
class BishopDisc:
    """Converged solution of the Bishop boundary value problem."""

    disc: DiscFunction
    structure: StructureSpec
    hypersurface: HypersurfaceSpec
    params: DiscParameters
    residual_pde: float
    residual_bc: float
    residual_pin: float
    iterations: int
    _state: dict = field(default_factory=dict, repr=False)

    @property
    def grid(self):
        return self.disc.grid

    def at(self, zeta):
        return self.disc.at(zeta)

    def value_at_minus_one(self):
        return self.disc.values[:, 0, self.grid.N // 2]

    def boundary_values(self):
        return self.disc.values[:, 0, :]

    def interior_values(self):
        """Grid samples strictly inside the disc, shape (n, M-1, N)."""
        return self.disc.values[:, 1:, :]


@dataclass
class LinearizedDisc:
    """Solution of the linearized problem at a converged disc."""

    disc: DiscFunction
    residual_pde: float
    residual_bc: float
    iterations: int

    def at(self, zeta):
        return self.disc.at(zeta)

    def value_at_minus_one(self):
        return self.disc.values[:, 0, self.disc.grid.N // 2]


def _rhs_values(problem, xi_vals, dxi_vals):
    pts = np.moveaxis(xi_vals, 0, -1)
    a_xi = problem.a_xi_at(pts)
    if np.max(np.abs(a_xi)) >= 1.0:
        raise NonConvergenceError(
            "structure matrix reached norm >= 1 along the iterate"
        )
    return np.einsum("mnab,bmn->amn", a_xi, np.conj(dxi_vals))


def _solve_fixed_eps(problem, params, eps, grid, options, tol, w_init, a_init):
    n, d = problem.n, problem.d
    data = eps * params.boundary_data.samples.real
    newton = _BoundaryNewton(problem, grid, options)
    w = w_init if w_init is not None else DiscFunction.zero(grid, ncomp=n)
    a = a_init if a_init is not None else np.zeros((d, grid.N))
    target = max(tol / problem.scale * 0.05, 5e-15)

    if problem.structure.is_integrable:
        ch, a, _ = newton.solve(data, w.values[:, 0, :], a, finalize=True)
        return ch, w, a, newton, 1

    delta_prev, contraction = None, None
    iterations = 0
    for it in range(options.max_outer):
        iterations = it + 1
        ch, a, _ = newton.solve(data, w.values[:, 0, :], a)
        xi_vals = _hol_values(grid, ch) + w.values
        dxi_vals = _hol_d_values(grid, ch) + w.d().values
        w_new = cauchy_green_T(
            DiscFunction.from_values(grid, _rhs_values(problem, xi_vals, dxi_vals))
        )
        delta = float(np.max(np.abs(w_new.values - w.values)))
        if delta_prev is not None and delta_prev > 0:
            contraction = delta / delta_prev
        delta_prev = delta
        w = w_new
        if delta < target:
            break
    else:
        raise NonConvergenceError(
            "outer fixed point did not converge "
            "(amplitude or structure norm too large)",
            iterations=iterations,
            residuals={"delta": delta_prev},
            contraction=contraction,
        )
    ch, a, _ = newton.solve(data, w.values[:, 0, :], a, finalize=True)
    return ch, w, a, newton, iterations


def _assemble_result(problem, structure, hypersurface, params, ch, w, newton,
                     iterations, grid):
    xi_vals = _hol_values(grid, ch) + w.values
    z_vals = problem.xi_to_z_values(xi_vals)
    zdisc = DiscFunction.from_values(grid, z_vals)

    # The holomorphic part is dbar-closed by construction, so dbar xi is
    # dbar w; the reported pde residual is an upper bound in the original
    # coordinates through the frame norms.
    if problem.structure.is_integrable:
        resid_pde = float(np.max(np.abs(w.d_bar().values))) * problem.scale
    else:
        dxi_vals = _hol_d_values(grid, ch) + w.d().values
        rhs = _rhs_values(problem, xi_vals, dxi_vals)
        resid_pde = float(np.max(np.abs(w.d_bar().values - rhs))) * problem.scale

    resid_bc = float(
        np.max(np.abs(hypersurface.rho(np.moveaxis(z_vals[:, 0, :], 0, -1))))
    )
    resid_pin = float(np.max(np.abs(z_vals[:, 0, 0] - params.attachment)))
    return BishopDisc(
        disc=zdisc,
        structure=structure,
        hypersurface=hypersurface,
        params=params,
        residual_pde=resid_pde,
        residual_bc=resid_bc,
        residual_pin=resid_pin,
        iterations=iterations,
        _state={"problem": problem, "ch": ch, "w": w, "newton": newton,
                "grid": grid},
    )


def solve_bishop(structure, hypersurface, params) -> BishopDisc:
    """Solve the Bishop boundary value problem.

    Returns a BishopDisc whose three residuals are at or below the working
    tolerance. Raises NonConvergenceError when the fixed point stalls (with
    a contraction estimate) and DegenerateBoundaryJacobianError when the
    boundary linearization loses rank.
    """
    params.validate()
    options = params.options
    grid = options.grid()
    tol = options.effective_tol(structure)
    problem = _AdaptedProblem(structure, hypersurface, params.attachment, grid)

    eps = params.amplitude
    try:
        ch, w, a, newton, iterations = _solve_fixed_eps(
            problem, params, eps, grid, options, tol, None, None
        )
    except NonConvergenceError:
        if not options.continuation or structure.is_integrable:
            raise
        # amplitude continuation with warm starts
        w_init, a_init, iterations = None, None, 0
        for step_eps in (eps / 4, eps / 2, eps):
            ch, w, a, newton, its = _solve_fixed_eps(
                problem, params, step_eps, grid, options, tol, w_init, a_init
            )
            w_init, a_init = w, a
            iterations += its

    result = _assemble_result(
        problem, structure, hypersurface, params, ch, w, newton, iterations, grid
    )
    worst = max(result.residual_pde, result.residual_bc, result.residual_pin)
    if worst > tol:
        raise NonConvergenceError(
            f"residuals {worst:.3g} above tolerance {tol:.3g}",
            iterations=iterations,
            residuals={
                "pde": result.residual_pde,
                "bc": result.residual_bc,
                "pin": result.residual_pin,
            },
        )
    return result


def solve_linearized(disc: BishopDisc, structure, hypersurface,
                     direction: BoundaryFunction) -> LinearizedDisc:
    """Infinitesimal variation of a converged disc along boundary data.

    The direction enters exactly as the data does in solve_bishop: the
    tangential components of the variation have boundary real part equal to
    ``direction`` in the adapted frame, the normal components solve the
    linearized boundary condition, and the variation vanishes at zeta = 1.
    """
    if not direction.is_real:
        raise PreconditionError("direction must be real boundary data")
    if np.max(np.abs(direction.value_at_one())) > 1e-12:
        raise PreconditionError("direction must vanish at zeta = 1")
    state = disc._state
    problem, grid, newton = state["problem"], state["grid"], state["newton"]
    options = disc.params.options
    tol = options.effective_tol(structure)
    n, d = problem.n, problem.d

    ch, w = state["ch"], state["w"]
    xi_vals = _hol_values(grid, ch) + w.values
    dxi_vals = _hol_d_values(grid, ch) + w.d().values
    pts = np.moveaxis(xi_vals, 0, -1)
    zt_pts = problem.xi_points(pts)
    a_xi = problem.a_xi_at(pts)
    az = problem.structure.a_z_at(zt_pts)
    azb = problem.structure.a_zbar_at(zt_pts)
    gq_full = newton.gq_full if hasattr(newton, "gq_full") else None
    if gq_full is None:
        zb = problem.xi_points(np.moveaxis(xi_vals[:, 0, :], 0, -1))
        gq_full = problem.hypersurface.rho_z(zb) @ problem.V
        newton.gq_full = gq_full
    m2 = grid.two_k1_matrix
    udot = direction.samples.real

    def boundary_step(wdot_b):
        wd_t, wd_n = wdot_b[: n - d], wdot_b[n - d:]
        hd_t = newton.tangential(udot, wd_t)
        fixed = np.concatenate([hd_t + wd_t, wd_n - wd_n[:, 0:1]], axis=0)
        rhs = -2.0 * np.real(np.einsum("jkm,mj->kj", gq_full, fixed))
        rhs[:, 0] = 0.0  # pins adot(1) = 0
        adot = scipy.linalg.lu_solve(newton.lu, rhs.reshape(-1)).reshape(d, grid.N)
        hd_n = np.einsum("jl,cl->cj", m2, adot) - wd_n[:, 0:1]
        chd = grid.boundary_coeffs(np.concatenate([hd_t, hd_n], axis=0))
        chd[:, grid.N // 2:] = 0.0
        return chd

    def linear_rhs(chd, wdot):
        xid_vals = _hol_values(grid, chd) + wdot.values
        dxid_vals = _hol_d_values(grid, chd) + wdot.d().values
        zdot_t = np.einsum("ab,bmn->amn", problem.V, xid_vals)
        adot_mat = np.einsum("mnabl,lmn->mnab", az, zdot_t) + np.einsum(
            "mnabl,lmn->mnab", azb, np.conj(zdot_t)
        )
        adot_xi = np.einsum(
            "ab,mnbc,cd->mnad", problem.Vinv, adot_mat, np.conj(problem.V)
        )
        return (
            np.einsum("mnab,bmn->amn", adot_xi, np.conj(dxi_vals))
            + np.einsum("mnab,bmn->amn", a_xi, np.conj(dxid_vals)),
            xid_vals,
        )

    wdot = DiscFunction.zero(grid, ncomp=n)
    chd = boundary_step(wdot.values[:, 0, :])
    target = max(tol / problem.scale * 0.05, 5e-15)
    iterations = 1
    if not problem.structure.is_integrable:
        for it in range(options.max_outer):
            iterations = it + 1
            rhs, _ = linear_rhs(chd, wdot)
            wdot_new = cauchy_green_T(DiscFunction.from_values(grid, rhs))
            delta = float(np.max(np.abs(wdot_new.values - wdot.values)))
            wdot = wdot_new
            chd = boundary_step(wdot.values[:, 0, :])
            if delta < target:
                break
        else:
            raise NonConvergenceError(
                "linearized fixed point did not converge", iterations=iterations
            )

    if problem.structure.is_integrable:
        xid_vals = _hol_values(grid, chd) + wdot.values
        resid_pde = float(np.max(np.abs(wdot.d_bar().values))) * problem.scale
    else:
        rhs, xid_vals = linear_rhs(chd, wdot)
        resid_pde = float(
            np.max(np.abs(wdot.d_bar().values - rhs))
        ) * problem.scale
    bc = 2.0 * np.real(np.einsum("jkm,mj->kj", gq_full, xid_vals[:, 0, :]))
    resid_bc = float(np.max(np.abs(bc)))

    zdot_vals = problem.push_values(
        np.einsum("ab,bmn->amn", problem.V, xid_vals)
    )
    return LinearizedDisc(
        disc=DiscFunction.from_values(grid, zdot_vals),
        residual_pde=resid_pde,
        residual_bc=resid_bc,
        iterations=iterations,
    )


def transversality(disc: BishopDisc, hypersurface) -> float:
    """Derivative of rho along the disc at the attachment point.

    Returns d rho(p) applied to the inward radial derivative of the disc at
    zeta = 1, so the sign matches the side of E into which the disc departs
    (negative means the nearby disc points have rho < 0). Zero when the disc
    is tangent to E at p.
    """
    dz = disc.disc.d().values[:, 0, 0] + disc.disc.d_bar().values[:, 0, 0]
    v = complex_to_real(-dz)
    grads = hypersurface.gradient_real(disc.params.attachment)
    out = grads @ v
    return float(out[0]) if hypersurface.d == 1 else out
