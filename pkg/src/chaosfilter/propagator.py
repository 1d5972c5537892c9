"""Offline propagator tables for the chaos recursion.

For each multi-index alpha in the truncated set, the deterministic
coefficient flow phi_alpha solves the triangular linear system

    d phi_alpha / ds = A phi_alpha
                       + sum_{k,l} alpha_k^l m_k(s) B_l phi_{alpha(k,l)},
    phi_alpha(0) = zeta if alpha is empty else 0,

where alpha(k,l) lowers entry (k, l) and m_k is the cosine basis of
L2([0, Delta]).  The table stores phi_alpha(Delta; .) as a K x K matrix
per index (columns are the images of the standard unit vectors); the
online step then needs only dense matrix accumulation.

Because each right-hand side reads only indices one layer down, a single
classical 4th-order pass over the stacked system integrates every layer
consistently; the dependency structure is exposed for inspection through
coupling_groups.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .galerkin import GalerkinSystem
from .hermite import SpatialBasis
from .multiindex import MultiIndex, empty_index, enumerate_truncated, factorial, from_line, lower, to_line


@dataclass(frozen=True)
class TemporalBasis:
    """Cosine basis of L2([0, delta]).

    m_1 = 1/sqrt(delta); m_k(s) = sqrt(2/delta) cos(pi (k-1) s / delta)
    for k > 1.  Modes are 1-based to match multi-index slots.
    """

    delta: float
    n: int

    def __post_init__(self):
        if self.delta <= 0 or self.n < 1:
            raise ValueError(f"need delta > 0 and n >= 1, got {self.delta}, {self.n}")

    def eval(self, k: int, s):
        if not 1 <= k <= self.n:
            raise ValueError(f"mode {k} out of range 1..{self.n}")
        s = np.asarray(s, dtype=float)
        if k == 1:
            out = np.full_like(s, 1.0 / math.sqrt(self.delta))
        else:
            out = math.sqrt(2.0 / self.delta) * np.cos(np.pi * (k - 1) * s / self.delta)
        return out if out.ndim else float(out)


def cosine_basis(delta: float, n: int) -> TemporalBasis:
    return TemporalBasis(delta=delta, n=n)


def default_substeps(n: int) -> int:
    # The fastest cosine oscillates ~n/2 times per window; 16 points per
    # oscillation keeps the 4th-order one-step error far below truncation.
    return max(64, 16 * n)


def coupling_groups(indices):
    """Lowering structure of an index list, grouped by slot (k, l).

    Returns {(k, l): (coeffs, dst, src)} with integer positions into the
    list: d phi[dst] picks up coeff * m_k(s) * B_l phi[src].  Every source
    sits exactly one layer below its destination.
    """
    pos = {idx: i for i, idx in enumerate(indices)}
    groups: dict[tuple[int, int], list] = {}
    for i, alpha in enumerate(indices):
        for (k, l), c in alpha.entries:
            low = lower(alpha, k, l)
            if low not in pos:
                raise ValueError(f"index list is not closed under lowering at {alpha}")
            groups.setdefault((k, l), []).append((float(c), i, pos[low]))
    out = {}
    for kl, items in groups.items():
        co, dst, src = zip(*items)
        out[kl] = (np.array(co), np.array(dst, dtype=int), np.array(src, dtype=int))
    return out


def _integrate_stacked(system: GalerkinSystem, tbasis: TemporalBasis, indices, S0, substeps):
    groups = coupling_groups(indices)
    A, B = system.A, system.B

    def rhs(s, S):
        out = np.matmul(A, S)
        for (k, l), (co, dst, src) in groups.items():
            mk = tbasis.eval(k, s)
            out[dst] += (co * mk)[:, None, None] * np.matmul(B[l - 1], S[src])
        return out

    h = tbasis.delta / substeps
    S = S0.astype(float).copy()
    for step in range(substeps):
        s = step * h
        k1 = rhs(s, S)
        k2 = rhs(s + 0.5 * h, S + 0.5 * h * k1)
        k3 = rhs(s + 0.5 * h, S + 0.5 * h * k2)
        k4 = rhs(s + h, S + h * k3)
        S = S + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(S)):
            raise FloatingPointError(f"coefficient flow lost finiteness at substep {step + 1}")
    return S


def _closure(alpha: MultiIndex):
    seen = {alpha}
    stack = [alpha]
    while stack:
        cur = stack.pop()
        for (k, l), _ in cur.entries:
            low = lower(cur, k, l)
            if low not in seen:
                seen.add(low)
                stack.append(low)
    root = empty_index(alpha.r)
    seen.add(root)
    return sorted(seen, key=lambda a: (a.length, a.entries))


def solve_phi(system: GalerkinSystem, tbasis: TemporalBasis, alpha: MultiIndex, zeta,
              substeps: int | None = None) -> np.ndarray:
    """phi_alpha(delta; zeta) by one 4th-order pass over the lowering closure."""
    if substeps is None:
        substeps = default_substeps(tbasis.n)
    if alpha.order > tbasis.n:
        raise ValueError(f"alpha uses mode {alpha.order} beyond the basis ({tbasis.n})")
    indices = _closure(alpha)
    zeta = np.asarray(zeta, dtype=float)
    S0 = np.zeros((len(indices), system.K, 1))
    S0[indices.index(empty_index(alpha.r)), :, 0] = zeta
    S = _integrate_stacked(system, tbasis, indices, S0, substeps)
    return S[indices.index(alpha), :, 0].copy()


@dataclass(frozen=True)
class PropagatorTable:
    """Per-index flow matrices over the truncated chaos set.

    matrices[a][:, k] is phi_alpha(delta; u^k) for the a-th index in the
    canonical enumeration and the k-th standard unit vector.
    """

    K: int
    r: int
    delta: float
    N: int
    n: int
    substeps: int
    basis: SpatialBasis
    indices: tuple[MultiIndex, ...]
    matrices: np.ndarray    # (n_indices, K, K)

    def matrix_for(self, alpha: MultiIndex) -> np.ndarray:
        return self.matrices[self.indices.index(alpha)]


def precompute_table(system: GalerkinSystem, tbasis: TemporalBasis, N: int, n: int,
                     substeps: int | None = None) -> PropagatorTable:
    """Solve the coefficient flows for every index with |alpha| <= N, d(alpha) <= n.

    All K columns of every index evolve in the same stacked pass, so the
    cost is one 4th-order integration of n_indices K x K matrices.
    """
    if n > tbasis.n:
        raise ValueError(f"truncation n={n} exceeds the temporal basis ({tbasis.n})")
    if substeps is None:
        substeps = default_substeps(n)
    indices = enumerate_truncated(N, n, system.r)
    S0 = np.zeros((len(indices), system.K, system.K))
    S0[0] = np.eye(system.K)     # canonical order starts with the empty index
    S = _integrate_stacked(system, tbasis, indices, S0, substeps)
    return PropagatorTable(K=system.K, r=system.r, delta=tbasis.delta, N=N, n=n,
                           substeps=substeps, basis=system.basis,
                           indices=tuple(indices), matrices=S)


def closed_form_order1(system: GalerkinSystem, tbasis: TemporalBasis, alpha: MultiIndex,
                       zeta, panels: int = 64, points: int = 5) -> np.ndarray:
    """Independent oracle for a length-one index.

    For alpha with single unit entry (k0, l0) the flow has the closed form
    integral of exp(A (delta - s)) B_{l0} exp(A s) zeta m_{k0}(s), which is
    evaluated here with a composite Gauss-Legendre rule and the
    scaling-and-squaring matrix exponential.
    """
    if alpha.length != 1:
        raise ValueError("closed form is implemented for |alpha| = 1 only")
    (k0, l0), _ = alpha.entries[0]
    zeta = np.asarray(zeta, dtype=float)
    gl_x, gl_w = np.polynomial.legendre.leggauss(points)
    out = np.zeros(system.K)
    width = tbasis.delta / panels
    Bz = system.B[l0 - 1]
    for p in range(panels):
        a = p * width
        s_nodes = a + 0.5 * width * (gl_x + 1.0)
        w_nodes = 0.5 * width * gl_w
        for s, w in zip(s_nodes, w_nodes):
            v = expm(system.A * s) @ zeta
            v = expm(system.A * (tbasis.delta - s)) @ (Bz @ v)
            out += w * tbasis.eval(k0, s) * v
    return out


def parseval_mass(table: PropagatorTable, zeta):
    """Truncated chaos mass sum |phi_alpha(delta; zeta)|^2 / alpha!.

    Returns (total, by_layer) with per-|alpha| subtotals.  For a Brownian
    driving path this approximates the second moment of the projected
    solution from below, layer by layer.
    """
    zeta = np.asarray(zeta, dtype=float)
    vectors = table.matrices @ zeta
    by_layer: dict[int, float] = {}
    for alpha, v in zip(table.indices, vectors):
        m = float(v @ v) / factorial(alpha)
        by_layer[alpha.length] = by_layer.get(alpha.length, 0.0) + m
    return sum(by_layer.values()), by_layer


def brownian_second_moment(system: GalerkinSystem, delta: float, zeta,
                           substeps: int = 256) -> float:
    """Exact E|U(delta)|^2 for Brownian driving, via the moment flow.

    The outer-product moment M = E[U U^T] obeys the deterministic system
    M' = A M + M A^T + sum_l B_l M B_l^T; this integrates it with a
    classical 4th-order scheme and returns the trace.  Serves as an
    independent check on both the Monte Carlo and the chaos mass.
    """
    zeta = np.asarray(zeta, dtype=float)
    M = np.outer(zeta, zeta)

    def rhs(M):
        out = system.A @ M + M @ system.A.T
        for l in range(system.r):
            out += system.B[l] @ M @ system.B[l].T
        return out

    h = delta / substeps
    for _ in range(substeps):
        k1 = rhs(M)
        k2 = rhs(M + 0.5 * h * k1)
        k3 = rhs(M + 0.5 * h * k2)
        k4 = rhs(M + h * k3)
        M = M + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return float(np.trace(M))


# ---------------------------------------------------------------------------
# error budgets


@dataclass(frozen=True)
class ErrorBudget:
    """Inputs for the truncation bounds; the constants are caller-supplied.

    The theory leaves C, c_nu_T, c_nu_T_w and C_f existential, so budgets
    are diagnostics: they report how the displayed bounds scale with the
    discretization knobs, never assertions about a specific model.
    eps_B vanishes whenever the noise matrices commute (always for r = 1).
    """

    delta: float
    N: int
    n: int
    K: int = 1
    r: int = 1
    d: int = 1
    nu: int = 2
    w: float = 0.0
    C_rho: float = 0.0
    C: float = 1.0
    c_nu_T: float = 1.0
    c_nu_T_w: float = 1.0
    C_f: float | None = None
    T: float = 1.0
    eps_B: float = 0.0
    EU0_sq: float = 1.0

    def __post_init__(self):
        for name in ("delta", "n", "K", "r", "d", "C_rho", "C", "c_nu_T", "c_nu_T_w",
                     "T", "eps_B", "EU0_sq", "w"):
            if getattr(self, name) < 0:
                raise ValueError(f"budget field {name} must be nonnegative")
        if self.N < 0:
            raise ValueError("budget field N must be nonnegative")


def chaos_error_bound(budget: ErrorBudget):
    """One-window truncation bound, split into its two terms.

    Returns (N_term, n_term, total):
    exp(C delta) * [(C delta)^(N+1) / (N+1)!  +  (delta^2 / n)(eps_B + C delta)]
    scaled by E|U_0|^2.
    """
    cd = budget.C * budget.delta
    grow = math.exp(cd) * budget.EU0_sq
    n_term = grow * (budget.delta ** 2 / budget.n) * (budget.eps_B + cd)
    N_term = grow * cd ** (budget.N + 1) / math.factorial(budget.N + 1)
    return N_term, n_term, N_term + n_term


@dataclass(frozen=True)
class FilterBound:
    galerkin_term: float
    n_term: float
    N_term: float
    total: float
    functional_galerkin_term: float | None = None
    functional_n_term: float | None = None
    functional_N_term: float | None = None
    functional_total: float | None = None


def filter_error_bound(budget: ErrorBudget) -> FilterBound:
    """Multi-step density and functional bounds, term by term.

    Density terms require nu > d + 1; the functional terms additionally
    need nu > d + 1 + w and a finite C_f.  kappa = K^(1/d) and
    C_kappa = 1 + C_rho * kappa carry all the K-dependence of the chaos
    part; the Galerkin term decays as K^(-2(nu-d-1)/d).
    """
    if budget.nu <= budget.d + 1:
        raise ValueError(f"density bound needs nu > d + 1, got nu={budget.nu}, d={budget.d}")
    kappa = budget.K ** (1.0 / budget.d)
    c_kappa = 1.0 + budget.C_rho * kappa
    grow = math.exp(budget.C * c_kappa * budget.T)
    gal = budget.c_nu_T / budget.K ** (2.0 * (budget.nu - budget.d - 1) / budget.d)
    n_term = (budget.C * (c_kappa * budget.delta
                          + (kappa ** 2 + budget.C_rho * kappa ** 3) * budget.delta ** 2)
              / budget.n) * grow
    N_term = ((budget.C * c_kappa) ** (budget.N + 1) * budget.delta ** budget.N
              / math.factorial(budget.N + 1)) * grow
    out = dict(galerkin_term=gal, n_term=n_term, N_term=N_term, total=gal + n_term + N_term)
    if budget.C_f is not None:
        if budget.nu <= budget.d + 1 + budget.w:
            raise ValueError("functional bound needs nu > d + 1 + w")
        gal_f = (budget.c_nu_T_w * budget.C_f
                 / budget.K ** (2.0 * (budget.nu - budget.w - budget.d - 1) / budget.d))
        out.update(functional_galerkin_term=gal_f,
                   functional_n_term=budget.C_f * n_term,
                   functional_N_term=budget.C_f * N_term,
                   functional_total=gal_f + budget.C_f * (n_term + N_term))
    return FilterBound(**out)


# ---------------------------------------------------------------------------
# table files


def _header_lines(table: PropagatorTable, fmt: str):
    b = table.basis
    gam = " ".join(",".join(str(g) for g in tup) for tup in b.gammas)
    lam = " ".join(f"{v:.17g}" for v in b.lambdas)
    return [
        "version=1",
        f"format={fmt}",
        f"K={table.K}",
        f"r={table.r}",
        f"delta={table.delta:.17g}",
        f"N={table.N}",
        f"n={table.n}",
        f"substeps={table.substeps}",
        f"basis_d={b.d}",
        f"basis_gammas={gam}",
        f"basis_lambdas={lam}",
        f"indices={len(table.indices)}",
    ]


def save_table(path, table: PropagatorTable, binary: bool = False) -> None:
    """Write a table file; text uses 17 significant digits, binary raw LE floats."""
    fmt = "binary" if binary else "text"
    header = "\n".join(_header_lines(table, fmt)) + "\n"
    mats = np.ascontiguousarray(table.matrices, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        for alpha, mat in zip(table.indices, mats):
            fh.write((to_line(alpha) + "\n").encode("ascii"))
            if binary:
                fh.write(mat.tobytes(order="C"))
            else:
                for row in mat:
                    fh.write((" ".join(f"{v:.17g}" for v in row) + "\n").encode("ascii"))


def _read_line(buf: bytes, cursor: int):
    end = buf.index(b"\n", cursor)
    return buf[cursor:end].decode("ascii"), end + 1


def load_table(path) -> PropagatorTable:
    with open(path, "rb") as fh:
        buf = fh.read()
    cursor = 0
    header = {}
    for _ in range(12):
        line, cursor = _read_line(buf, cursor)
        key, _, val = line.partition("=")
        header[key] = val
    if header.get("version") != "1":
        raise ValueError(f"unsupported table version {header.get('version')!r}")
    fmt = header["format"]
    K, r = int(header["K"]), int(header["r"])
    d = int(header["basis_d"])
    gammas = tuple(tuple(int(p) for p in tok.split(",")) for tok in header["basis_gammas"].split())
    lambdas = np.array([float(t) for t in header["basis_lambdas"].split()])
    basis = SpatialBasis(d=d, K=K, gammas=gammas, lambdas=lambdas)
    count = int(header["indices"])
    indices = []
    mats = np.empty((count, K, K))
    for a in range(count):
        line, cursor = _read_line(buf, cursor)
        indices.append(from_line(line, r))
        if fmt == "binary":
            raw = buf[cursor:cursor + K * K * 8]
            mats[a] = np.frombuffer(raw, dtype="<f8").reshape(K, K)
            cursor += K * K * 8
        else:
            for i in range(K):
                line, cursor = _read_line(buf, cursor)
                mats[a, i] = [float(t) for t in line.split()]
    return PropagatorTable(K=K, r=r, delta=float(header["delta"]), N=int(header["N"]),
                           n=int(header["n"]), substeps=int(header["substeps"]),
                           basis=basis, indices=tuple(indices), matrices=mats)
