"""Thresholding operators: MCP penalty, MCP singular-value shrinkage, Lp shrinkage.

The MCP (minimax concave penalty) acts on singular values as a nonconvex
rank surrogate; the generalized soft-thresholding operator solves the
quaternion Lp shrinkage problem min 0.5*|x - y|^2 + nu*|x|^p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qmat import QMatrix, Quaternion, qsvd

__all__ = [
    "McpParams",
    "GstParams",
    "mcp_phi",
    "prox_mcp",
    "mcp_norm",
    "mcp_gradient",
    "svt_mcp",
    "qgst_threshold",
    "qgst",
    "qgst_moduli",
]


@dataclass(frozen=True)
class McpParams:
    """MCP parameters: slope c and concavity span eta (quadratic on [0, c*eta])."""

    c: float = 0.9
    eta: float = 13.0

    def __post_init__(self):
        if self.c <= 0.0 or self.eta <= 0.0:
            raise ValueError("MCP parameters c and eta must be positive")


@dataclass(frozen=True)
class GstParams:
    """Lp shrinkage parameters: weight nu, exponent p, fixed-point step count."""

    nu: float
    p: float = 0.3
    inner_iters: int = 3

    def __post_init__(self):
        if self.nu < 0.0:
            raise ValueError("nu must be nonnegative")
        if not (0.0 < self.p <= 1.0):
            raise ValueError("p must lie in (0, 1]")
        if self.inner_iters < 1:
            raise ValueError("inner_iters must be at least 1")


# ---------------------------------------------------------------------------
# MCP penalty
# ---------------------------------------------------------------------------


def mcp_phi(x, params: McpParams):
    """MCP penalty value: c*x - x^2/(2*eta) on [0, c*eta], then flat c^2*eta/2."""
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr < 0.0):
        raise ValueError("mcp_phi is defined for nonnegative arguments")
    c, eta = params.c, params.eta
    out = np.where(arr <= c * eta, c * arr - arr**2 / (2.0 * eta), c * c * eta / 2.0)
    return float(out) if np.isscalar(x) else out


def _mcp_objective(t, y, mu, params: McpParams):
    return mu * mcp_phi(np.abs(t), params) + 0.5 * (t - y) ** 2


def prox_mcp(y, mu: float, params: McpParams):
    """Minimizer of mu*Phi(|t|) + 0.5*(t - y)^2, elementwise over y.

    For mu < eta this is the three-branch closed form (zero below c*mu,
    rescaled shrinkage up to c*eta, identity beyond).  For mu >= eta the
    objective is concave between the kinks, so the minimum is attained on
    the candidate set {0, sign(y)*c*eta, y}; ties resolve toward 0.
    """
    if mu <= 0.0:
        raise ValueError("mu must be positive")
    c, eta = params.c, params.eta
    arr = np.asarray(y, dtype=np.float64)
    ay = np.abs(arr)
    if mu < eta:
        shrunk = np.sign(arr) * (ay - c * mu) / (1.0 - mu / eta)
        out = np.where(ay <= c * mu, 0.0, np.where(ay <= c * eta, shrunk, arr))
    else:
        cands = np.stack([np.zeros_like(arr), np.sign(arr) * c * eta, arr])
        objs = _mcp_objective(cands, arr, mu, params)
        out = np.take_along_axis(cands, np.argmin(objs, axis=0)[None], axis=0)[0]
    return float(out) if np.isscalar(y) else out


def mcp_norm(X: QMatrix, c: float, eta: float) -> float:
    """Nonconvex rank surrogate: sum of MCP values of the singular values."""
    params = McpParams(c=c, eta=eta)
    return float(np.sum(mcp_phi(qsvd(X).sigma, params)))


def mcp_gradient(L: QMatrix, params: McpParams) -> QMatrix:
    """Gradient of the MCP rank surrogate: U diag(c - sigma/eta, clipped) V*.

    The derivative is c - sigma/eta on [0, c*eta] and zero beyond, so the
    Frobenius norm is bounded by sqrt(min(n1, n2)) * c.  At repeated or zero
    singular values the direction depends on the (non-unique) SVD basis.
    """
    factors = qsvd(L)
    d = np.where(factors.sigma <= params.c * params.eta,
                 params.c - factors.sigma / params.eta, 0.0)
    return factors.with_sigma(d)


def svt_mcp(Y: QMatrix, weight: float, params: McpParams) -> QMatrix:
    """Singular-value thresholding for the MCP penalty: prox applied per sigma."""
    if weight <= 0.0:
        raise ValueError("weight must be positive")
    factors = qsvd(Y)
    return factors.with_sigma(prox_mcp(factors.sigma, weight, params))


# ---------------------------------------------------------------------------
# quaternion generalized soft-thresholding
# ---------------------------------------------------------------------------


def qgst_threshold(nu: float, p: float) -> float:
    """Thresholding value for Lp shrinkage; tends to nu as p -> 1."""
    if not (0.0 < p < 1.0):
        raise ValueError("p must lie in (0, 1) for the threshold formula")
    if nu == 0.0:
        return 0.0
    base = (2.0 * nu * (1.0 - p)) ** (1.0 / (2.0 - p))
    return base + nu * p * (2.0 * nu * (1.0 - p)) ** ((p - 1.0) / (2.0 - p))


def qgst_moduli(mods: np.ndarray, nu: float, p: float, iters: int = 3) -> np.ndarray:
    """Shrunk moduli of the Lp proximal map, vectorized over an array of |y|.

    p = 1 is plain soft thresholding.  For p < 1, moduli at or below the
    threshold map to zero; the rest follow `iters` fixed-point steps of
    t <- |y| - nu*p*t^(p-1) started at t = |y| (monotone from above, clamped
    away from zero for safety).
    """
    mods = np.asarray(mods, dtype=np.float64)
    if p == 1.0:
        return np.maximum(mods - nu, 0.0)
    tau = qgst_threshold(nu, p)
    keep = mods > tau
    out = np.zeros_like(mods)
    if np.any(keep):
        y = mods[keep]
        t = y.copy()
        for _ in range(iters):
            t = np.maximum(y - nu * p * t ** (p - 1.0), 1e-12)
        out[keep] = t
    return out


def qgst(y: Quaternion, params: GstParams) -> Quaternion:
    """Lp shrinkage of one quaternion: zero below the threshold, else the
    fixed point scaled onto the ray signQ(y)."""
    mod = abs(y)
    if mod == 0.0:
        return Quaternion()
    t = float(qgst_moduli(np.array([mod]), params.nu, params.p, params.inner_iters)[0])
    if t == 0.0:
        return Quaternion()
    scale = t / mod
    return Quaternion(y.w * scale, y.x * scale, y.y * scale, y.z * scale)
