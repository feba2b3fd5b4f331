"""Quaternion scalar/matrix algebra and SVD via the complex-adjoint embedding.

A quaternion matrix is stored as four real component planes (w, x, y, z),
which keeps all bulk arithmetic inside real BLAS kernels and makes the
2n1 x 2n2 complex-adjoint embedding a pair of block copies.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

__all__ = [
    "NumericalError",
    "Quaternion",
    "hamilton_product",
    "QMatrix",
    "conj_transpose",
    "inner_product",
    "norm",
    "elementwise_sign_abs",
    "ComplexAdjoint",
    "complex_adjoint",
    "QsvdFactors",
    "qsvd",
    "numerical_rank",
    "random_qmatrix",
    "save_qmatrix",
    "load_qmatrix",
]


class NumericalError(RuntimeError):
    """A numerical kernel (complex SVD, basis completion) failed to converge."""


# ---------------------------------------------------------------------------
# scalars
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Quaternion:
    """A quaternion w + x*i + y*j + z*k with real components."""

    w: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @property
    def is_pure(self) -> bool:
        return self.w == 0.0

    def conjugate(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def __abs__(self) -> float:
        return math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)

    def __add__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(self.w + other.w, self.x + other.x,
                          self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(self.w - other.w, self.x - other.x,
                          self.y - other.y, self.z - other.z)

    def __neg__(self) -> "Quaternion":
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return hamilton_product(self, other)
        return Quaternion(self.w * other, self.x * other,
                          self.y * other, self.z * other)

    def __rmul__(self, other):
        # real * quaternion commutes
        return Quaternion(self.w * other, self.x * other,
                          self.y * other, self.z * other)


def hamilton_product(a: Quaternion, b: Quaternion) -> Quaternion:
    """Noncommutative quaternion product (i*j = k, j*k = i, k*i = j)."""
    return Quaternion(
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    )


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------


class QMatrix:
    """Immutable dense quaternion matrix held as four (n1, n2) float64 planes."""

    __slots__ = ("w", "x", "y", "z")

    def __init__(self, w, x, y, z):
        planes = []
        for p in (w, x, y, z):
            a = np.array(p, dtype=np.float64)
            if a.ndim != 2:
                raise ValueError("component planes must be 2-D arrays")
            planes.append(a)
        shape = planes[0].shape
        if any(p.shape != shape for p in planes[1:]):
            raise ValueError("component planes must share one shape")
        if shape[0] < 1 or shape[1] < 1:
            raise ValueError("quaternion matrices must have at least one row and column")
        for p in planes:
            p.setflags(write=False)
        self.w, self.x, self.y, self.z = planes

    # -- constructors ------------------------------------------------------

    @classmethod
    def zeros(cls, n1: int, n2: int) -> "QMatrix":
        z = np.zeros((n1, n2))
        return cls(z, z.copy(), z.copy(), z.copy())

    @classmethod
    def eye(cls, n: int) -> "QMatrix":
        z = np.zeros((n, n))
        return cls(np.eye(n), z, z.copy(), z.copy())

    @classmethod
    def from_real(cls, a) -> "QMatrix":
        a = np.asarray(a, dtype=np.float64)
        z = np.zeros_like(a)
        return cls(a, z, z.copy(), z.copy())

    @classmethod
    def pure(cls, x, y, z) -> "QMatrix":
        """Pure quaternion matrix (zero real plane) from three imaginary planes."""
        x = np.asarray(x, dtype=np.float64)
        return cls(np.zeros_like(x), x, y, z)

    # -- basic queries -----------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return self.w.shape

    @property
    def n1(self) -> int:
        return self.w.shape[0]

    @property
    def n2(self) -> int:
        return self.w.shape[1]

    @property
    def components(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return (self.w, self.x, self.y, self.z)

    @property
    def is_pure(self) -> bool:
        return not np.any(self.w)

    def entry(self, i: int, j: int) -> Quaternion:
        return Quaternion(float(self.w[i, j]), float(self.x[i, j]),
                          float(self.y[i, j]), float(self.z[i, j]))

    def abs_entries(self) -> np.ndarray:
        """Elementwise quaternion modulus as a real (n1, n2) array."""
        return np.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)

    def __repr__(self) -> str:
        return f"QMatrix(shape={self.shape})"

    # -- linear-space arithmetic -------------------------------------------

    def __add__(self, other: "QMatrix") -> "QMatrix":
        return QMatrix(self.w + other.w, self.x + other.x,
                       self.y + other.y, self.z + other.z)

    def __sub__(self, other: "QMatrix") -> "QMatrix":
        return QMatrix(self.w - other.w, self.x - other.x,
                       self.y - other.y, self.z - other.z)

    def __neg__(self) -> "QMatrix":
        return QMatrix(-self.w, -self.x, -self.y, -self.z)

    def __mul__(self, s) -> "QMatrix":
        """Scale by a real scalar or an elementwise real array."""
        s = np.asarray(s, dtype=np.float64)
        return QMatrix(self.w * s, self.x * s, self.y * s, self.z * s)

    __rmul__ = __mul__

    def __truediv__(self, s: float) -> "QMatrix":
        return self * (1.0 / s)

    def __matmul__(self, other: "QMatrix") -> "QMatrix":
        """Quaternion matrix product via 16 real GEMMs."""
        if self.n2 != other.n1:
            raise ValueError(f"shape mismatch for product: {self.shape} @ {other.shape}")
        aw, ax, ay, az = self.components
        bw, bx, by, bz = other.components
        return QMatrix(
            aw @ bw - ax @ bx - ay @ by - az @ bz,
            aw @ bx + ax @ bw + ay @ bz - az @ by,
            aw @ by - ax @ bz + ay @ bw + az @ bx,
            aw @ bz + ax @ by - ay @ bx + az @ bw,
        )

    def conj(self) -> "QMatrix":
        return QMatrix(self.w, -self.x, -self.y, -self.z)

    @property
    def H(self) -> "QMatrix":
        """Conjugate transpose."""
        return QMatrix(self.w.T, -self.x.T, -self.y.T, -self.z.T)


def conj_transpose(X: QMatrix) -> QMatrix:
    """Conjugate transpose: (X*)_ij = conj(X_ji)."""
    return X.H


def inner_product(X: QMatrix, Y: QMatrix) -> float:
    """Real inner product Re(tr(X* Y)) = sum over planes of elementwise products."""
    if X.shape != Y.shape:
        raise ValueError(f"shape mismatch: {X.shape} vs {Y.shape}")
    return float(np.vdot(X.w, Y.w) + np.vdot(X.x, Y.x)
                 + np.vdot(X.y, Y.y) + np.vdot(X.z, Y.z))


def norm(X: QMatrix, kind: str = "fro", p: float | None = None) -> float:
    """Quaternion matrix norm.

    kind is one of "l1", "fro", "inf", "lp", "nuclear", "spectral".
    "lp" is the entrywise (sum |x_ij|^p)^(1/p) quasi-norm and requires
    0 < p < 1 (use "l1" for p = 1).  "nuclear" and "spectral" are computed
    from the quaternion SVD.
    """
    if kind == "fro":
        return math.sqrt(float(np.vdot(X.w, X.w) + np.vdot(X.x, X.x)
                               + np.vdot(X.y, X.y) + np.vdot(X.z, X.z)))
    if kind == "l1":
        return float(X.abs_entries().sum())
    if kind == "inf":
        return float(X.abs_entries().max())
    if kind == "lp":
        if p is None or not (0.0 < p < 1.0):
            raise ValueError("lp norm requires 0 < p < 1")
        mods = X.abs_entries()
        return float(np.sum(mods**p) ** (1.0 / p))
    if kind == "nuclear":
        return float(qsvd(X).sigma.sum())
    if kind == "spectral":
        return float(qsvd(X).sigma[0])
    raise ValueError(f"unknown norm kind: {kind!r}")


def elementwise_sign_abs(X: QMatrix) -> tuple[QMatrix, np.ndarray]:
    """Split X into unit directions signQ(x_ij) and moduli |x_ij|.

    Zero entries get the zero quaternion as direction, so
    sign * abs always reconstructs X.
    """
    mods = X.abs_entries()
    safe = np.where(mods > 0.0, mods, 1.0)
    sign = QMatrix(X.w / safe, X.x / safe, X.y / safe, X.z / safe)
    return sign, mods


# ---------------------------------------------------------------------------
# complex adjoint and QSVD
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComplexAdjoint:
    """The 2n1 x 2n2 complex embedding [[A, B], [-conj(B), conj(A)]] of a QMatrix.

    A = w + x*i and B = y + z*i; the embedding is an algebra homomorphism,
    so products, conjugate transposes and singular values carry over.
    """

    matrix: np.ndarray
    n1: int
    n2: int

    def to_qmatrix(self) -> QMatrix:
        """Invert the embedding from the top block row (exact up to rounding)."""
        A = self.matrix[: self.n1, : self.n2]
        B = self.matrix[: self.n1, self.n2:]
        return QMatrix(A.real, A.imag, B.real, B.imag)


def complex_adjoint(X: QMatrix) -> ComplexAdjoint:
    """Embed a quaternion matrix as its complex-adjoint matrix."""
    A = X.w + 1j * X.x
    B = X.y + 1j * X.z
    M = np.block([[A, B], [-B.conj(), A.conj()]])
    return ComplexAdjoint(M, X.n1, X.n2)


@dataclass(frozen=True)
class QsvdFactors:
    """QSVD factors X = U diag(sigma) V* with unitary quaternion U, V."""

    U: QMatrix
    sigma: np.ndarray
    V: QMatrix

    def reconstruct(self) -> QMatrix:
        """U diag(sigma) V* as a QMatrix."""
        return self.with_sigma(self.sigma)

    def with_sigma(self, values) -> QMatrix:
        """U diag(values) V* with the singular values replaced."""
        values = np.asarray(values, dtype=np.float64)
        m = self.sigma.size
        if values.shape != (m,):
            raise ValueError(f"expected {m} singular values, got {values.shape}")
        Us = _scale_columns(self.U, values, m)
        Vm = _take_columns(self.V, m)
        return Us @ Vm.H


def _take_columns(X: QMatrix, k: int) -> QMatrix:
    return QMatrix(X.w[:, :k], X.x[:, :k], X.y[:, :k], X.z[:, :k])


def _scale_columns(X: QMatrix, s: np.ndarray, k: int) -> QMatrix:
    return QMatrix(X.w[:, :k] * s, X.x[:, :k] * s, X.y[:, :k] * s, X.z[:, :k] * s)


def _kramers_partner(cols: np.ndarray, n: int) -> np.ndarray:
    """Partner columns under the quaternion structure of the adjoint.

    For a column [a; -conj(b)] encoding the quaternion vector a + b*j, the
    partner [b; conj(a)] is the second adjoint column of the same vector.
    """
    return np.concatenate([-cols[n:].conj(), cols[:n].conj()], axis=0)


def _symplectic_pick(cands: np.ndarray, n: int, count: int,
                     against: np.ndarray | None = None) -> np.ndarray:
    """Greedily select `count` columns whose Kramers pairs are orthonormal.

    Candidates are (2n, g) complex columns spanning a partner-closed subspace.
    Previously fixed columns may be passed in `against`; their partners are
    excluded as well.  Projection is applied twice per pick to keep
    orthogonality at working precision.
    """
    P = cands.astype(np.complex128, copy=True)
    if against is not None and against.shape[1] > 0:
        basis = np.concatenate([against, _kramers_partner(against, n)], axis=1)
        for _ in range(2):
            P -= basis @ (basis.conj().T @ P)
    picked = []
    for _ in range(count):
        norms = np.linalg.norm(P, axis=0)
        j = int(np.argmax(norms))
        if norms[j] < 1e-8:
            raise NumericalError("quaternion basis completion collapsed")
        v = P[:, j] / norms[j]
        picked.append(v)
        pair = np.stack([v, _kramers_partner(v[:, None], n)[:, 0]], axis=1)
        for _ in range(2):
            P -= pair @ (pair.conj().T @ P)
    return np.stack(picked, axis=1)


def _cols_to_qmatrix(cols: np.ndarray, n: int) -> QMatrix:
    """Decode (2n, k) adjoint columns into an n x k quaternion matrix."""
    a = cols[:n]
    b = -cols[n:].conj()
    return QMatrix(a.real, a.imag, b.real, b.imag)


def qsvd(X: QMatrix) -> QsvdFactors:
    """Quaternion SVD through the complex adjoint.

    The adjoint's singular values come in Kramers pairs; each pair is
    averaged into one quaternion singular value.  Degenerate groups are
    handled by a symplectic Gram-Schmidt pass so that U and V stay unitary
    for exactly repeated spectra (identity, zero and constructed matrices).
    """
    n1, n2 = X.shape
    m = min(n1, n2)
    M = complex_adjoint(X).matrix
    try:
        Uc, s, Vh = np.linalg.svd(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"complex SVD of the {2 * n1}x{2 * n2} adjoint did not converge: {exc}"
        ) from exc
    Vc = Vh.conj().T
    sigma = 0.5 * (s[0::2] + s[1::2])

    top = float(s[0]) if s.size else 0.0
    run_tol = 1e-12 * top
    null_tol = 1e-11 * top

    # split the 2m-value spectrum into runs of (numerically) equal values
    runs: list[tuple[int, int]] = []
    start = 0
    for k in range(1, 2 * m):
        if s[k - 1] - s[k] > run_tol:
            runs.append((start, k))
            start = k
    runs.append((start, 2 * m))

    u_cols: list[np.ndarray] = []
    v_cols: list[np.ndarray] = []
    for lo, hi in runs:
        if s[lo] <= null_tol:
            break  # trailing null runs are filled by completion below
        Vrun = Vc[:, lo:hi]
        Urun = Uc[:, lo:hi]
        picked = _symplectic_pick(Vrun, n2, (hi - lo) // 2)
        coeffs = Vrun.conj().T @ picked
        mapped = Urun @ coeffs
        mapped /= np.linalg.norm(mapped, axis=0)
        for t in range(picked.shape[1]):
            v_cols.append(picked[:, t])
            u_cols.append(mapped[:, t])

    r = len(v_cols)
    V_fixed = np.stack(v_cols, axis=1) if r else np.empty((2 * n2, 0), complex)
    U_fixed = np.stack(u_cols, axis=1) if r else np.empty((2 * n1, 0), complex)
    if r < n2:
        V_fixed = np.concatenate(
            [V_fixed, _symplectic_pick(Vc, n2, n2 - r, against=V_fixed)], axis=1)
    if r < n1:
        U_fixed = np.concatenate(
            [U_fixed, _symplectic_pick(Uc, n1, n1 - r, against=U_fixed)], axis=1)

    return QsvdFactors(U=_cols_to_qmatrix(U_fixed, n1),
                       sigma=sigma,
                       V=_cols_to_qmatrix(V_fixed, n2))


def numerical_rank(sigma: np.ndarray, eps: float) -> int:
    """Count singular values above eps * sigma_max (0 for a zero spectrum)."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.size == 0 or sigma[0] <= 0.0:
        return 0
    return int(np.count_nonzero(sigma > eps * sigma[0]))


def random_qmatrix(n1: int, n2: int, rng: np.random.Generator) -> QMatrix:
    """Quaternion matrix with independent standard-normal components."""
    return QMatrix(rng.standard_normal((n1, n2)), rng.standard_normal((n1, n2)),
                   rng.standard_normal((n1, n2)), rng.standard_normal((n1, n2)))


# ---------------------------------------------------------------------------
# debug dump format
# ---------------------------------------------------------------------------

_MAGIC = b"QMAT"


def save_qmatrix(path, X: QMatrix) -> None:
    """Write the binary dump: 16-byte header (magic, n1, n2) + 4 row-major f8 planes."""
    header = struct.pack("<4sII4x", _MAGIC, X.n1, X.n2)
    with open(path, "wb") as fh:
        fh.write(header)
        for plane in X.components:
            fh.write(np.ascontiguousarray(plane, dtype="<f8").tobytes())


def load_qmatrix(path) -> QMatrix:
    """Read a matrix written by save_qmatrix."""
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16:
            raise ValueError("truncated qmatrix dump header")
        magic, n1, n2 = struct.unpack("<4sII4x", header)
        if magic != _MAGIC:
            raise ValueError(f"bad magic {magic!r} in qmatrix dump")
        count = n1 * n2
        planes = []
        for _ in range(4):
            data = np.frombuffer(fh.read(8 * count), dtype="<f8", count=count)
            planes.append(data.reshape(n1, n2))
    return QMatrix(*planes)
