"""Filtering model, its differential operators, and Galerkin matrices.

The model is the pair of diffusions

    dX = b(X) dt + sigma(X) dW + rho(X) dV,
    dY = h(X) dt + dV,

whose unnormalized conditional density solves a stochastic parabolic
equation driven by Y.  Projecting that equation on the span of the first
K Hermite functions gives the matrix system

    dp = A p dt + sum_l B_l p dY_l,

with A[i, j] = (e_j, L e_i)_0 and B_l[i, j] = (e_j, M_l e_i)_0, where

    L g = (1/2) sum_ij (sigma sigma^T + rho rho^T)_ij d2g/dx_i dx_j
          + sum_i b_i dg/dx_i,
    M_l g = h_l g + sum_i rho_il dg/dx_i.

Assembly applies L and M_l to the basis functions (whose derivatives
follow exact ladder identities) and integrates against the quadrature
rule, so user coefficients are only ever evaluated, never differentiated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hermite import QuadratureGrid, SpatialBasis, basis_tables, squeeze_points


@dataclass(frozen=True)
class FilterModel:
    """Coefficient fields of the signal/observation pair.

    d, d1, r: state, signal-noise and observation dimensions.
    b, sigma, rho, h, p0: callables evaluated on batches of points
    ((npts,) for d == 1, (npts, d) otherwise), or plain constants where a
    field does not depend on x.  Expected result shapes per point:
    b -> (d,), sigma -> (d, d1), rho -> (d, r), h -> (r,), p0 -> scalar.
    Scalar returns are fine whenever the target shape has one entry.
    """

    d: int
    d1: int
    r: int
    b: object
    sigma: object
    rho: object
    h: object
    p0: object

    def drift_at(self, nodes: np.ndarray) -> np.ndarray:
        return _eval_field(self.b, nodes, self.d, (self.d,), "b")

    def sigma_at(self, nodes: np.ndarray) -> np.ndarray:
        return _eval_field(self.sigma, nodes, self.d, (self.d, self.d1), "sigma")

    def rho_at(self, nodes: np.ndarray) -> np.ndarray:
        return _eval_field(self.rho, nodes, self.d, (self.d, self.r), "rho")

    def h_at(self, nodes: np.ndarray) -> np.ndarray:
        return _eval_field(self.h, nodes, self.d, (self.r,), "h")

    def p0_at(self, nodes: np.ndarray) -> np.ndarray:
        return _eval_field(self.p0, nodes, self.d, (), "p0")

    def diffusion_matrix_at(self, nodes: np.ndarray) -> np.ndarray:
        """a = sigma sigma^T + rho rho^T, shape (npts, d, d)."""
        s = self.sigma_at(nodes)
        r = self.rho_at(nodes)
        return np.einsum("pij,pkj->pik", s, s) + np.einsum("pij,pkj->pik", r, r)


def _eval_field(field, nodes, d, suffix, name):
    nodes = np.atleast_2d(np.asarray(nodes, dtype=float))
    npts = nodes.shape[0]
    v = field(squeeze_points(nodes, d)) if callable(field) else field
    arr = np.asarray(v, dtype=float)
    target = (npts,) + suffix
    if arr.shape != target:
        if arr.ndim == 0 or arr.shape == suffix:
            arr = np.broadcast_to(arr, target)
        elif arr.shape == (npts,) and int(np.prod(suffix, dtype=int)) == 1:
            arr = arr.reshape(target)
        else:
            raise ValueError(
                f"field '{name}' returned shape {arr.shape}, cannot coerce to {target}"
            )
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"field '{name}' is not finite on the requested points")
    return np.asarray(arr, dtype=float)


def validate_model(model: FilterModel, grid: QuadratureGrid) -> None:
    """Check the model invariants on a quadrature grid.

    All fields must be finite there, p0 must be nonnegative, and its
    quadrature mass must be within 1e-3 of one.
    """
    model.drift_at(grid.nodes)
    model.diffusion_matrix_at(grid.nodes)
    model.h_at(grid.nodes)
    p = model.p0_at(grid.nodes)
    if np.any(p < -1e-12):
        raise ValueError("p0 is negative on the quadrature grid")
    mass = float(np.sum(grid.weights * p))
    if abs(mass - 1.0) > 1e-3:
        raise ValueError(f"p0 quadrature mass {mass:.6f} is not within 1e-3 of 1")


def apply_generator(model: FilterModel, g, x, *, grad, hess) -> float:
    """Generator L applied to g at the point x.

    grad and hess are callables returning the analytic first and second
    derivatives of g at a point ((d,) and (d, d)).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    pt = x.reshape(1, -1)
    a = model.diffusion_matrix_at(pt)[0]
    b = model.drift_at(pt)[0]
    gr = np.broadcast_to(np.asarray(grad(x if model.d > 1 else x[0]), dtype=float), (model.d,))
    he = np.broadcast_to(np.asarray(hess(x if model.d > 1 else x[0]), dtype=float), (model.d, model.d))
    out = 0.5 * float(np.sum(a * he)) + float(b @ gr)
    if not np.isfinite(out):
        raise ValueError("generator value is not finite")
    return out


def apply_M(model: FilterModel, l: int, g, x, *, grad) -> float:
    """Observation operator M_l g = h_l g + sum_i rho_il dg/dx_i at x.

    The channel l is 1-based, matching the multi-index convention.
    """
    if not 1 <= l <= model.r:
        raise ValueError(f"channel {l} out of range 1..{model.r}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    pt = x.reshape(1, -1)
    hv = model.h_at(pt)[0, l - 1]
    rho = model.rho_at(pt)[0, :, l - 1]
    xarg = x if model.d > 1 else x[0]
    gval = float(np.asarray(g(xarg), dtype=float))
    gr = np.broadcast_to(np.asarray(grad(xarg), dtype=float), (model.d,))
    out = hv * gval + float(rho @ gr)
    if not np.isfinite(out):
        raise ValueError("observation-operator value is not finite")
    return out


@dataclass(frozen=True)
class GalerkinSystem:
    """Projected evolution matrices; independent of any time step."""

    K: int
    r: int
    A: np.ndarray          # (K, K)
    B: np.ndarray          # (r, K, K)
    basis: SpatialBasis


def assemble(model: FilterModel, basis: SpatialBasis, grid: QuadratureGrid) -> GalerkinSystem:
    """Galerkin matrices by quadrature of (e_j, L e_i) and (e_j, M_l e_i).

    The adjoint identity moves the operators onto the basis functions, so
    derivatives hit only Hermite functions (exact ladder formulas) and the
    quadrature burden falls on the smooth model coefficients.
    """
    validate_model(model, grid)
    V, G, S = basis_tables(basis, grid.nodes, derivatives=2)
    a = model.diffusion_matrix_at(grid.nodes)      # (npts, d, d)
    b = model.drift_at(grid.nodes)                 # (npts, d)
    hv = model.h_at(grid.nodes)                    # (npts, r)
    rho = model.rho_at(grid.nodes)                 # (npts, d, r)
    w = grid.weights

    LE = 0.5 * np.einsum("pij,kijp->kp", a, S) + np.einsum("pi,kip->kp", b, G)
    A = np.einsum("kp,p,jp->kj", LE, w, V)
    B = np.empty((model.r, basis.K, basis.K))
    for l in range(model.r):
        ME = hv[:, l] * V + np.einsum("pi,kip->kp", rho[:, :, l], G)
        B[l] = np.einsum("kp,p,jp->kj", ME, w, V)
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
        raise ValueError("assembled matrices contain non-finite entries")
    return GalerkinSystem(K=basis.K, r=model.r, A=A, B=B, basis=basis)


def dissipativity_gap(system: GalerkinSystem) -> float:
    """Largest eigenvalue of A + A^T + sum_l B_l^T B_l.

    This is the growth-rate constant of the projected system: the mean
    square of a solution obeys d E|p|^2 / dt <= gap * E|p|^2.
    """
    S = system.A + system.A.T
    for l in range(system.r):
        S = S + system.B[l].T @ system.B[l]
    return float(np.linalg.eigvalsh(0.5 * (S + S.T))[-1])


def integrate_galerkin_sde(system, y_path, delta, p_init, report_stride=1):
    """Euler-Maruyama on the projected system driven by a sampled path.

    y_path: (nsteps+1, r) values of the driving path at uniform spacing
    delta (a (nsteps+1,) vector is fine when r == 1).  Returns the state
    at every report_stride-th grid time, initial state included, as an
    array of shape (nreports + 1, K).  Raises on the first non-finite
    state, naming the step.
    """
    y = np.asarray(y_path, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y.shape[1] != system.r:
        raise ValueError(f"path has {y.shape[1]} channels, system has {system.r}")
    nsteps = y.shape[0] - 1
    if nsteps % report_stride:
        raise ValueError("report_stride must divide the number of steps")
    dY = np.diff(y, axis=0)
    p = np.array(p_init, dtype=float).copy()
    out = [p.copy()]
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(nsteps):
            incr = delta * (system.A @ p)
            for l in range(system.r):
                incr += dY[j, l] * (system.B[l] @ p)
            p = p + incr
            if not np.all(np.isfinite(p)):
                raise FloatingPointError(f"state blew up at step {j + 1} of {nsteps}")
            if (j + 1) % report_stride == 0:
                out.append(p.copy())
    return np.array(out)


def save_system(path, system: GalerkinSystem) -> None:
    """Write the projected matrices as text: header then row-major entries.

    The header carries d, K, r and the basis metadata; A and each noise
    matrix follow as K lines of 17-significant-digit decimals, so the file
    round-trips bit-exactly through load_system.
    """
    b = system.basis
    gam = " ".join(",".join(str(g) for g in tup) for tup in b.gammas)
    lam = " ".join(f"{v:.17g}" for v in b.lambdas)
    with open(path, "w", newline="\n") as fh:
        fh.write("version=1\n")
        fh.write(f"d={b.d}\nK={system.K}\nr={system.r}\n")
        fh.write(f"basis_gammas={gam}\nbasis_lambdas={lam}\n")
        for mat in (system.A, *system.B):
            for row in mat:
                fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def load_system(path) -> GalerkinSystem:
    from .hermite import SpatialBasis

    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    header = dict(ln.split("=", 1) for ln in lines[:6])
    if header.get("version") != "1":
        raise ValueError(f"unsupported system file version {header.get('version')!r}")
    d, K, r = int(header["d"]), int(header["K"]), int(header["r"])
    gammas = tuple(tuple(int(p) for p in tok.split(",")) for tok in header["basis_gammas"].split())
    lambdas = np.array([float(t) for t in header["basis_lambdas"].split()])
    basis = SpatialBasis(d=d, K=K, gammas=gammas, lambdas=lambdas)
    body = lines[6:]
    mats = []
    for block in range(1 + r):
        rows = body[block * K:(block + 1) * K]
        mats.append(np.array([[float(t) for t in row.split()] for row in rows]))
    return GalerkinSystem(K=K, r=r, A=mats[0], B=np.array(mats[1:]), basis=basis)


def integrate_galerkin_sde_paths(system, y_paths, delta, p_init):
    """Batched Euler-Maruyama; returns only the final states.

    y_paths: (npaths, nsteps+1, r).  p_init: (K,) shared or (npaths, K).
    Finiteness is checked once at the end (use the single-path variant to
    locate a blow-up step).
    """
    ys = np.asarray(y_paths, dtype=float)
    if ys.ndim == 2:
        ys = ys[:, :, None]
    npaths, _, r = ys.shape
    if r != system.r:
        raise ValueError(f"paths have {r} channels, system has {system.r}")
    dY = np.diff(ys, axis=1)                      # (npaths, nsteps, r)
    p_init = np.asarray(p_init, dtype=float)
    if p_init.ndim == 1:
        P = np.repeat(p_init[:, None], npaths, axis=1)
    else:
        P = p_init.T.copy()
    nsteps = dY.shape[1]
    for j in range(nsteps):
        incr = delta * (system.A @ P)
        for l in range(system.r):
            incr += (system.B[l] @ P) * dY[:, j, l]
        P = P + incr
    if not np.all(np.isfinite(P)):
        raise FloatingPointError(f"a path blew up within {nsteps} steps")
    return P.T
