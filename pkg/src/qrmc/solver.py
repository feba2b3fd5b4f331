"""ADMM solver for robust quaternion matrix completion.

Minimizes the MCP rank surrogate of the low-rank part plus a weighted
entrywise Lp penalty of the sparse part on the observed set, under
L + S = X, by alternating Lp shrinkage (S), MCP singular-value
thresholding (L) and a multiplier step with geometrically growing penalty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .qmat import (
    NumericalError,
    QMatrix,
    elementwise_sign_abs,
    inner_product,
    norm,
    numerical_rank,
    qsvd,
)
from .prox import McpParams, qgst_moduli, svt_mcp

__all__ = [
    "ObservationMask",
    "SolverConfig",
    "SolverState",
    "KktResiduals",
    "RecoveryReport",
    "default_lambda",
    "update_S",
    "update_L",
    "update_multiplier_and_mu",
    "converged",
    "nrqmc_solve",
    "kkt_residuals",
    "residuals_to_csv",
]


class ObservationMask:
    """Boolean membership matrix for the observed index set."""

    __slots__ = ("mask",)

    def __init__(self, mask):
        m = np.array(mask, dtype=bool)
        if m.ndim != 2:
            raise ValueError("mask must be a 2-D boolean array")
        m.setflags(write=False)
        self.mask = m

    @classmethod
    def full(cls, n1: int, n2: int) -> "ObservationMask":
        return cls(np.ones((n1, n2), dtype=bool))

    @classmethod
    def empty(cls, n1: int, n2: int) -> "ObservationMask":
        return cls(np.zeros((n1, n2), dtype=bool))

    @classmethod
    def from_indices(cls, n1: int, n2: int, rows, cols) -> "ObservationMask":
        rows = np.asarray(rows, dtype=int)
        cols = np.asarray(cols, dtype=int)
        if np.any(rows < 0) or np.any(rows >= n1) or np.any(cols < 0) or np.any(cols >= n2):
            raise ValueError("mask indices out of bounds")
        m = np.zeros((n1, n2), dtype=bool)
        m[rows, cols] = True
        return cls(m)

    @property
    def shape(self) -> tuple[int, int]:
        return self.mask.shape

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    @property
    def sampling_ratio(self) -> float:
        return self.count / self.mask.size

    def complement(self) -> "ObservationMask":
        return ObservationMask(~self.mask)

    def __repr__(self) -> str:
        return f"ObservationMask(shape={self.shape}, observed={self.count})"


@dataclass(frozen=True)
class SolverConfig:
    """Tunables of the ADMM loop.

    lam = None selects the sampling-ratio rule 1/sqrt(SR * max(n1, n2)).
    tol_mode "relative" scales tol by max(1, ||X||_F); "absolute" applies
    tol as written.
    """

    lam: float | None = None
    p: float = 0.3
    mcp: McpParams = field(default_factory=McpParams)
    mu0: float = 1e-4
    mu_growth: float = 1.2
    mu_max: float = 1e8
    tol: float = 1e-4
    max_iters: int = 500
    tol_mode: str = "relative"
    gst_iters: int = 3

    def __post_init__(self):
        if self.lam is not None and self.lam <= 0.0:
            raise ValueError("lam must be positive")
        if not (0.0 < self.p <= 1.0):
            raise ValueError("p must lie in (0, 1]")
        if self.mu0 <= 0.0 or self.mu0 >= self.mu_max:
            raise ValueError("mu0 must satisfy 0 < mu0 < mu_max")
        if self.mu_growth <= 1.0:
            raise ValueError("mu_growth must exceed 1")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.tol_mode not in ("absolute", "relative"):
            raise ValueError("tol_mode must be 'absolute' or 'relative'")
        if self.gst_iters < 1:
            raise ValueError("gst_iters must be at least 1")


@dataclass(frozen=True)
class SolverState:
    """One ADMM iterate: low-rank L, sparse S, multiplier M, penalty mu."""

    L: QMatrix
    S: QMatrix
    M: QMatrix
    mu: float
    k: int = 0


@dataclass(frozen=True)
class KktResiduals:
    r_grad: float
    r_sparse: float
    r_comp: float
    r_feas: float


@dataclass(frozen=True)
class RecoveryReport:
    """Solve outcome: iterates, convergence flag, residual history, diagnostics."""

    L: QMatrix
    S: QMatrix
    iterations: int
    converged: bool
    residual_history: list[tuple[float, float, float]]
    mu_history: list[float]
    kkt: KktResiduals


def default_lambda(mask: ObservationMask) -> float:
    """Balance weight 1/sqrt(SR * max(n1, n2)); 1.0 for an empty mask."""
    sr = mask.sampling_ratio
    if sr == 0.0:
        return 1.0
    return 1.0 / math.sqrt(sr * max(mask.shape))


def _resolve_lambda(config: SolverConfig, mask: ObservationMask) -> float:
    return config.lam if config.lam is not None else default_lambda(mask)


def update_S(X: QMatrix, state: SolverState, mask: ObservationMask,
             config: SolverConfig) -> QMatrix:
    """Sparse step: Lp shrinkage of Z = X - L - M/mu on the observed set,
    pass-through of Z elsewhere."""
    Z = X - state.L - state.M / state.mu
    sign, mods = elementwise_sign_abs(Z)
    nu = _resolve_lambda(config, mask) / state.mu
    shrunk = qgst_moduli(mods, nu, config.p, config.gst_iters)
    return sign * np.where(mask.mask, shrunk, mods)


def update_L(X: QMatrix, S_next: QMatrix, state: SolverState,
             config: SolverConfig) -> QMatrix:
    """Low-rank step: MCP singular-value thresholding of X - S - M/mu."""
    Y = X - S_next - state.M / state.mu
    return svt_mcp(Y, 1.0 / state.mu, config.mcp)


def update_multiplier_and_mu(X: QMatrix, L_next: QMatrix, S_next: QMatrix,
                             state: SolverState, config: SolverConfig) -> SolverState:
    """Multiplier ascent on the feasibility gap and capped penalty growth."""
    M_next = state.M + (L_next + S_next - X) * state.mu
    mu_next = min(config.mu_growth * state.mu, config.mu_max)
    return SolverState(L=L_next, S=S_next, M=M_next, mu=mu_next, k=state.k + 1)


def _residual_triple(prev: SolverState, nxt: SolverState,
                     X: QMatrix) -> tuple[float, float, float]:
    return (norm(nxt.L - prev.L, "fro"),
            norm(nxt.S - prev.S, "fro"),
            norm(nxt.L + nxt.S - X, "fro"))


def _threshold(X: QMatrix, config: SolverConfig) -> float:
    if config.tol_mode == "absolute":
        return config.tol
    return config.tol * max(1.0, norm(X, "fro"))


def converged(prev: SolverState, nxt: SolverState, X: QMatrix,
              config: SolverConfig) -> bool:
    """max(||dL||, ||dS||, ||L + S - X||) against the (possibly scaled) tol."""
    return max(_residual_triple(prev, nxt, X)) <= _threshold(X, config)


def nrqmc_solve(X: QMatrix, mask: ObservationMask,
                config: SolverConfig | None = None) -> RecoveryReport:
    """Run the ADMM loop from the zero initialization.

    Unobserved entries of X are ignored (zeroed internally).  The reported
    S is restricted to the observed set; the internal pass-through values
    on the complement are absorbed into the feasibility bookkeeping only.
    Deterministic given inputs and config.
    """
    config = config or SolverConfig()
    if mask.shape != X.shape:
        raise ValueError(f"mask shape {mask.shape} does not match data {X.shape}")
    for plane in X.components:
        if not np.all(np.isfinite(plane)):
            raise ValueError("input contains non-finite values")

    Xo = X * mask.mask
    n1, n2 = X.shape
    state = SolverState(L=QMatrix.zeros(n1, n2), S=QMatrix.zeros(n1, n2),
                        M=QMatrix.zeros(n1, n2), mu=config.mu0)
    thr = _threshold(Xo, config)

    history: list[tuple[float, float, float]] = []
    mu_history: list[float] = []
    done = False
    for _ in range(config.max_iters):
        S_next = update_S(Xo, state, mask, config)
        try:
            L_next = update_L(Xo, S_next, state, config)
        except NumericalError as exc:
            raise NumericalError(f"iteration {state.k}: {exc}") from exc
        mu_history.append(state.mu)
        nxt = update_multiplier_and_mu(Xo, L_next, S_next, state, config)
        triple = _residual_triple(state, nxt, Xo)
        history.append(triple)
        state = nxt
        if max(triple) <= thr:
            done = True
            break

    kkt = kkt_residuals(Xo, state.L, state.S, state.M, mask, config)
    return RecoveryReport(L=state.L, S=state.S * mask.mask,
                          iterations=len(history), converged=done,
                          residual_history=history, mu_history=mu_history,
                          kkt=kkt)


def kkt_residuals(X: QMatrix, L: QMatrix, S: QMatrix, M: QMatrix,
                  mask: ObservationMask, config: SolverConfig) -> KktResiduals:
    """First-order stationarity residuals of the model at (L, S, M).

    r_grad is ||grad ||L||_MCP + M||_F minimized over the SVD non-uniqueness
    of the gradient at repeated/zero singular values: in a singular basis of
    L the range block must match -diag(phi'(sigma)), the cross blocks must
    vanish, and each null direction contributes its best alignment
    (c - sigma_j of the null block of M).  r_sparse tests the Lp
    stationarity identity <P(S), P(M)> = -lam*p*sum |s|^p on the observed
    set, r_comp the multiplier on the complement, r_feas the constraint gap.
    """
    lam = _resolve_lambda(config, mask)
    c, eta = config.mcp.c, config.mcp.eta

    factors = qsvd(L)
    sig = factors.sigma
    r = numerical_rank(sig, 1e-12) if sig.size and sig[0] > 0 else 0
    G = factors.U.H @ M @ factors.V
    d = np.where(sig[:r] <= c * eta, c - sig[:r] / eta, 0.0)

    total = 0.0
    gw, gx, gy, gz = G.components
    if r > 0:
        block = np.stack([gw[:r, :r], gx[:r, :r], gy[:r, :r], gz[:r, :r]])
        block[0][np.diag_indices(r)] += d
        total += float(np.sum(block**2))
        for plane in (gw, gx, gy, gz):
            total += float(np.sum(plane[:r, r:]**2) + np.sum(plane[r:, :r]**2))
    if r < min(L.shape):
        B = QMatrix(gw[r:, r:], gx[r:, r:], gy[r:, r:], gz[r:, r:])
        total += float(np.sum((c - qsvd(B).sigma)**2))
    r_grad = math.sqrt(total)

    mods = S.abs_entries()[mask.mask]
    s_inner = (float(np.sum(S.w[mask.mask] * M.w[mask.mask]))
               + float(np.sum(S.x[mask.mask] * M.x[mask.mask]))
               + float(np.sum(S.y[mask.mask] * M.y[mask.mask]))
               + float(np.sum(S.z[mask.mask] * M.z[mask.mask])))
    r_sparse = abs(s_inner + lam * config.p * float(np.sum(mods**config.p)))

    comp = ~mask.mask
    r_comp = math.sqrt(float(sum(np.sum(plane[comp]**2) for plane in M.components)))
    r_feas = norm(L + S - X, "fro")
    return KktResiduals(r_grad=r_grad, r_sparse=r_sparse,
                        r_comp=r_comp, r_feas=r_feas)


def residuals_to_csv(report: RecoveryReport) -> str:
    """Residual history as CSV text: iter, dL, dS, feas, mu."""
    lines = ["iter,dL,dS,feas,mu"]
    for it, ((dl, ds, feas), mu) in enumerate(
            zip(report.residual_history, report.mu_history), start=1):
        lines.append(f"{it},{dl:.17g},{ds:.17g},{feas:.17g},{mu:.17g}")
    return "\n".join(lines) + "\n"
