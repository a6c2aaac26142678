"""Cavity route to the Gram spectrum: fixed point, inversion, and graphs.

On the infinite biregular tree the resolvent of the bipartite adjacency
matrix closes on two scalars.  Written directly in the Gram spectral
variable z, the cavity variances solve

    delta(z)       = 1 / (z - gamma / (1 - alpha * delta(z)))
    delta_tilde(z) = 1 / (z - beta  / (1 - alpha * delta(z)))

with alpha = (d-1)/d and gamma = (beta d - 1)/d.  ``delta_tilde`` is the
Cauchy transform of the limiting law of A A^T / d, so the density follows
from the boundary values:  rho(lam) = -Im delta_tilde(lam + i eps) / pi.
For Im z > 0 the physical branch has nonpositive imaginary parts.

The same message-passing runs on a sampled finite matrix: each directed
edge of the bipartite graph carries a message updated from the incoming
messages at its tail, excluding the reverse edge.  Messages depend only on
squared entries, so both entry modes produce identical variances.  The node
variances estimate the diagonal of the adjacency resolvent; their mean
estimates the adjacency Cauchy transform, which maps to the Gram transform
through :func:`gram_density_from_adjacency_transform`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectra import DensityParams
from .ensembles import SparseSignatureMatrix

__all__ = [
    "CavityState",
    "GraphCavityMessages",
    "CavityError",
    "solve_fixed_point",
    "stieltjes_inversion",
    "cavity_on_graph",
    "gram_density_from_adjacency_transform",
    "graph_route_density",
]

DEFAULT_DAMPING = 0.5
DEFAULT_EPSILON = 1e-6
_IM_SLACK = 1e-12


class CavityError(RuntimeError):
    """Raised on non-convergence or a physical-branch violation."""


@dataclass(frozen=True)
class CavityState:
    """Converged cavity pair at one spectral point.

    ``residual`` is the larger fixed-point equation residual;
    ``used_fallback`` marks roots obtained from the closed-form quadratic
    rather than damped iteration.
    """

    z: complex
    delta: complex
    delta_tilde: complex
    iterations: int
    residual: float
    used_fallback: bool


def _delta_tilde(z: np.ndarray, delta: np.ndarray, p: DensityParams) -> np.ndarray:
    return 1.0 / (z - p.beta / (1.0 - p.alpha * delta))


def _iterate(z: np.ndarray, p: DensityParams, tol: float, damping: float,
             max_iter: int, init: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Damped fixed-point iteration, vectorized over z.

    Returns (delta, residual, iterations); points that stall keep their last
    iterate and a residual above tol.
    """
    delta = init.astype(complex).copy()
    residual = np.full(z.shape, np.inf)
    iters = np.zeros(z.shape, dtype=np.int64)
    active = np.ones(z.shape, dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        za, da = z[active], delta[active]
        prop = 1.0 / (za - p.gamma / (1.0 - p.alpha * da))
        new = (1.0 - damping) * da + damping * prop
        res = np.abs(new - da)
        delta[active] = new
        residual[active] = res
        iters[active] += 1
        still = res >= tol
        idx = np.flatnonzero(active)
        active[idx[~still]] = False
    return delta, residual, iters


def _quadratic_roots(z: np.ndarray, p: DensityParams) -> tuple[np.ndarray, np.ndarray]:
    # the fixed point solves  alpha z delta^2 - (z - gamma + alpha) delta + 1 = 0
    a = p.alpha * z
    b = -(z - p.gamma + p.alpha)
    disc = np.sqrt(b * b - 4.0 * a)
    return (-b + disc) / (2.0 * a), (-b - disc) / (2.0 * a)


def _physical_root(z: np.ndarray, p: DensityParams) -> np.ndarray:
    """Closed-form root with Im <= 0; ties resolved toward the bounded branch."""
    r1, r2 = _quadratic_roots(z, p)
    ok1 = r1.imag <= _IM_SLACK
    ok2 = r2.imag <= _IM_SLACK
    pick = np.where(ok1, r1, r2)
    both = ok1 & ok2
    pick = np.where(both & (np.abs(r2) < np.abs(r1)), r2, pick)
    pick = np.where(ok1 | ok2, pick, np.nan + 1j * np.nan)
    return pick


def solve_fixed_point(z: complex, p: DensityParams,
                      tol: float = 1e-12,
                      damping: float = DEFAULT_DAMPING,
                      max_iter: int = 100_000,
                      init: complex = 0.0) -> CavityState:
    """Solve the scalar cavity equations at one point with Im z > 0.

    Damped iteration (the physical relaxation) runs first; if it stalls
    before ``max_iter`` updates reach ``tol``, the equivalent quadratic is
    solved in closed form and the root with nonpositive imaginary part is
    selected, which guarantees termination.  A converged root with positive
    imaginary part raises :class:`CavityError`.
    """
    z = complex(z)
    if not z.imag > 0.0:
        raise ValueError(f"need Im z > 0, got z = {z}")
    za = np.array([z])
    delta, residual, iters = _iterate(za, p, tol, damping, max_iter,
                                      np.array([complex(init)]))
    used_fallback = False
    if residual[0] >= tol:
        delta = _physical_root(za, p)
        used_fallback = True
        if np.isnan(delta[0]):
            raise CavityError(f"no physical root at z = {z}")
        fp = 1.0 / (za - p.gamma / (1.0 - p.alpha * delta))
        residual = np.abs(fp - delta)
    if delta[0].imag > _IM_SLACK:
        raise CavityError(f"branch violation at z = {z}: Im delta = {delta[0].imag}")
    dt = _delta_tilde(za, delta, p)[0]
    if dt.imag > _IM_SLACK:
        raise CavityError(f"branch violation at z = {z}: Im delta_tilde = {dt.imag}")
    return CavityState(z=z, delta=complex(delta[0]), delta_tilde=complex(dt),
                       iterations=int(iters[0]), residual=float(residual[0]),
                       used_fallback=used_fallback)


def stieltjes_inversion(lambda_grid: np.ndarray, p: DensityParams,
                        epsilon: float = DEFAULT_EPSILON,
                        tol: float = 1e-12,
                        damping: float = DEFAULT_DAMPING,
                        max_iter: int = 100_000) -> np.ndarray:
    """Boundary-value density on a real grid: -Im delta_tilde(lam + i eps) / pi.

    ``epsilon`` must lie in (0, 1e-3] and the grid inside the padded support
    ``[lambda_minus - 1, lambda_plus + 1]``.  Points where no physical root
    exists are returned as NaN rather than failing the batch.
    """
    if not 0.0 < epsilon <= 1e-3:
        raise ValueError(f"epsilon must be in (0, 1e-3], got {epsilon}")
    grid = np.atleast_1d(np.asarray(lambda_grid, dtype=np.float64))
    lo, hi = p.lambda_minus - 1.0, p.lambda_plus + 1.0
    if grid.min() < lo or grid.max() > hi:
        raise ValueError(f"grid must stay inside [{lo}, {hi}]")
    z = grid + 1j * epsilon
    delta, residual, _ = _iterate(z, p, tol, damping, max_iter,
                                  np.zeros(z.shape, complex))
    stalled = residual >= tol
    if stalled.any():
        delta[stalled] = _physical_root(z[stalled], p)
    bad = np.isnan(delta) | (delta.imag > _IM_SLACK)
    dt = _delta_tilde(z, delta, p)
    bad |= dt.imag > _IM_SLACK
    dens = -dt.imag / np.pi
    dens[bad] = np.nan
    return dens


# ======================================================================
# Message passing on a sampled graph
# ======================================================================

@dataclass
class GraphCavityMessages:
    """Converged directed-edge messages and node variances on one graph.

    Nodes 0..N-1 are resources, N..N+K-1 are users.  ``messages[e]`` is the
    variance passed along directed edge ``src[e] -> dst[e]``; there are
    exactly two directed edges per nonzero of A.  ``mean_variance`` is the
    plug-in estimate of the adjacency Cauchy transform at ``z``.
    """

    z: complex
    src: np.ndarray
    dst: np.ndarray
    messages: np.ndarray
    node_variances: np.ndarray
    sweeps: int
    max_change: float

    @property
    def mean_variance(self) -> complex:
        return complex(self.node_variances.mean())


def cavity_on_graph(matrix: SparseSignatureMatrix, z: complex,
                    tol: float = 1e-8,
                    damping: float = DEFAULT_DAMPING,
                    max_sweeps: int = 10_000) -> GraphCavityMessages:
    """Run damped synchronous message passing on the bipartite graph of A.

    Updates use squared entry values, which are 1 in both entry modes, so
    only the support of A matters.  Raises :class:`CavityError` when the
    largest per-sweep message change stays above ``tol`` after
    ``max_sweeps`` sweeps.
    """
    z = complex(z)
    if not z.imag > 0.0:
        raise ValueError(f"need Im z > 0, got z = {z}")
    n, k = matrix.spec.n_resources, matrix.spec.n_users
    n_nodes = n + k
    n_edges = matrix.nnz
    src = np.concatenate([matrix.rows, matrix.cols + n])
    dst = np.concatenate([matrix.cols + n, matrix.rows])
    rev = np.concatenate([np.arange(n_edges, 2 * n_edges), np.arange(n_edges)])

    msg = np.full(2 * n_edges, 1.0 / z, dtype=complex)
    change = np.inf
    for sweep in range(1, max_sweeps + 1):
        incoming = (np.bincount(dst, weights=msg.real, minlength=n_nodes)
                    + 1j * np.bincount(dst, weights=msg.imag, minlength=n_nodes))
        prop = 1.0 / (z - (incoming[src] - msg[rev]))
        new = (1.0 - damping) * msg + damping * prop
        change = float(np.max(np.abs(new - msg)))
        msg = new
        if change < tol:
            break
    else:
        raise CavityError(
            f"messages did not converge at z = {z}: change {change} after {max_sweeps} sweeps")
    incoming = (np.bincount(dst, weights=msg.real, minlength=n_nodes)
                + 1j * np.bincount(dst, weights=msg.imag, minlength=n_nodes))
    variances = 1.0 / (z - incoming)
    return GraphCavityMessages(z=z, src=src, dst=dst, messages=msg,
                               node_variances=variances, sweeps=sweep,
                               max_change=change)


def gram_density_from_adjacency_transform(g_adj: complex, z: complex,
                                          p: DensityParams) -> complex:
    """Map the adjacency Cauchy transform to the Gram transform.

    Let G_adj be the Cauchy transform of the (N+K)-node bipartite adjacency
    law at ``z``.  Squaring maps it to the law of the squared adjacency,
    ``G_sq(z^2) = G_adj(z) / z``, whose spectrum holds each Gram eigenvalue
    (times d) twice plus K - N zeros.  Removing the zero atom, reweighting
    to N dimensions and rescaling by d gives the Gram transform at
    ``w = z^2 / d``:

        G(w) = (1 + beta)/2 * d * G_adj(z) / z - (beta - 1) * d / (2 z^2)

    The large-w expansion is 1/w + beta/w^2, the unit mass and trace of the
    Gram law.  At beta = 1 the zero-atom correction vanishes.  ``z = 0``
    (the pole of the correction) is rejected.
    """
    z = complex(z)
    if z == 0.0:
        raise ValueError("z = 0 is the pole of the zero-atom correction")
    beta, d = p.beta, p.d
    return (1.0 + beta) / 2.0 * d * g_adj / z - (beta - 1.0) * d / (2.0 * z * z)


def graph_route_density(matrix: SparseSignatureMatrix,
                        lambda_grid: np.ndarray,
                        epsilon: float = 5e-3,
                        tol: float = 1e-8,
                        max_sweeps: int = 10_000) -> np.ndarray:
    """Gram density estimate from message passing on one sampled matrix.

    Each Gram point ``lam`` maps to the adjacency point
    ``z = sqrt(d (lam + i eps))`` on the principal branch, so the transform
    lands exactly at ``w = lam + i eps``.  The default ``epsilon`` trades
    the Lorentzian smoothing bias against finite-size roughness.
    """
    p = DensityParams.from_ensemble(matrix.spec)
    grid = np.atleast_1d(np.asarray(lambda_grid, dtype=np.float64))
    out = np.empty(grid.shape)
    for i, lam in enumerate(grid):
        z = complex(np.sqrt(complex(p.d * lam, p.d * epsilon)))
        if z.imag < 0.0:
            z = -z
        run = cavity_on_graph(matrix, z, tol=tol, max_sweeps=max_sweeps)
        g = gram_density_from_adjacency_transform(run.mean_variance, z, p)
        out[i] = -g.imag / np.pi
    return out
