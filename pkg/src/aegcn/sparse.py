"""CSR sparse matrices and the graph-operator algebra used by the models.

Dense matrices are plain 2-D float64 ``numpy`` arrays throughout the package;
only the graph operators need a sparse representation.

All kernels are deterministic: every reduction happens in a fixed order
(``np.bincount`` over index-sorted data, or scipy's sequential per-row CSR
product), so the same input always yields bitwise-identical output.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse

from .errors import ArgumentError, DegenerateDegreeError, DimensionError

# rows*cols products materialised per chunk in spmm / sddmm
_CHUNK_ELEMS = 1 << 22


def _frozen(a, dtype):
    a = np.asarray(a, dtype=dtype)
    if a.flags.writeable or not a.flags.c_contiguous:
        a = np.array(a, dtype=dtype, order="C")
        a.flags.writeable = False
    return a


class SparseMatrix:
    """Immutable CSR matrix.

    Invariants (checked by :meth:`validate`): ``row_ptr`` is non-decreasing
    with ``row_ptr[0] == 0`` and ``row_ptr[-1] == nnz``; column indices are
    strictly increasing within each row and lie in ``[0, n_cols)``.
    Explicit zeros are allowed and kept.
    """

    __slots__ = ("n_rows", "n_cols", "row_ptr", "col_idx", "values", "_rows", "_keys", "_csr")

    def __init__(self, n_rows, n_cols, row_ptr, col_idx, values, check=True):
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.row_ptr = _frozen(row_ptr, np.int64)
        self.col_idx = _frozen(col_idx, np.int64)
        self.values = _frozen(values, np.float64)
        self._rows = None
        self._keys = None
        self._csr = None
        if check:
            self.validate()

    # -- construction -------------------------------------------------------

    @classmethod
    def from_coo(cls, n_rows, n_cols, rows, cols, values=None):
        """Build from coordinate triplets; duplicate coordinates are summed."""
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        if values is None:
            values = np.ones(rows.shape[0])
        values = np.asarray(values, dtype=np.float64).ravel()
        if not (rows.shape == cols.shape == values.shape):
            raise DimensionError("rows, cols and values must have equal length")
        if rows.size and (rows.min() < 0 or rows.max() >= n_rows):
            raise DimensionError("row index out of range")
        if cols.size and (cols.min() < 0 or cols.max() >= n_cols):
            raise DimensionError("column index out of range")
        uniq, inverse = np.unique(rows * n_cols + cols, return_inverse=True)
        merged = np.bincount(inverse, weights=values, minlength=uniq.size)
        return cls._from_sorted_keys(n_rows, n_cols, uniq, merged)

    @classmethod
    def _from_sorted_keys(cls, n_rows, n_cols, keys, values):
        rows = keys // n_cols if n_cols else keys
        cols = keys - rows * n_cols
        counts = np.bincount(rows, minlength=n_rows) if keys.size else np.zeros(n_rows, np.int64)
        row_ptr = np.zeros(n_rows + 1, dtype=np.int64)
        np.cumsum(counts, out=row_ptr[1:])
        out = cls(n_rows, n_cols, row_ptr, cols, values, check=False)
        out._keys = _frozen(keys, np.int64)
        return out

    @classmethod
    def from_dense(cls, dense, keep_zeros=False):
        dense = np.asarray(dense, dtype=np.float64)
        if dense.ndim != 2:
            raise DimensionError("expected a 2-D array")
        if keep_zeros:
            rows, cols = np.indices(dense.shape).reshape(2, -1)
        else:
            rows, cols = np.nonzero(dense)
        return cls.from_coo(dense.shape[0], dense.shape[1], rows, cols, dense[rows, cols])

    @classmethod
    def identity(cls, n):
        return cls(n, n, np.arange(n + 1), np.arange(n), np.ones(n), check=False)

    @classmethod
    def zeros(cls, n_rows, n_cols):
        return cls(n_rows, n_cols, np.zeros(n_rows + 1), np.zeros(0), np.zeros(0), check=False)

    # -- views --------------------------------------------------------------

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self):
        return int(self.col_idx.shape[0])

    @property
    def row_idx(self):
        """Row index of every stored entry (expanded ``row_ptr``)."""
        if self._rows is None:
            self._rows = _frozen(
                np.repeat(np.arange(self.n_rows, dtype=np.int64), np.diff(self.row_ptr)), np.int64
            )
        return self._rows

    @property
    def keys(self):
        """Linearised ``row * n_cols + col`` of every stored entry, sorted."""
        if self._keys is None:
            self._keys = _frozen(self.row_idx * self.n_cols + self.col_idx, np.int64)
        return self._keys

    def with_values(self, values):
        """Same sparsity pattern, new values."""
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (self.nnz,):
            raise DimensionError(f"expected {self.nnz} values, got {values.shape}")
        out = SparseMatrix(self.n_rows, self.n_cols, self.row_ptr, self.col_idx, values, check=False)
        out._rows = self._rows
        out._keys = self._keys
        return out

    def to_scipy(self):
        """Read-only ``scipy.sparse.csr_array`` view sharing this matrix's buffers."""
        if self._csr is None:
            self._csr = scipy.sparse.csr_array(
                (self.values, self.col_idx, self.row_ptr), shape=self.shape, copy=False
            )
        return self._csr

    def to_dense(self):
        out = np.zeros(self.shape)
        out[self.row_idx, self.col_idx] = self.values
        return out

    def row_sums(self):
        return np.bincount(self.row_idx, weights=self.values, minlength=self.n_rows)

    def transpose(self):
        order = np.lexsort((self.row_idx, self.col_idx))
        keys = self.col_idx[order] * self.n_rows + self.row_idx[order]
        return SparseMatrix._from_sorted_keys(self.n_cols, self.n_rows, keys, self.values[order])

    @property
    def T(self):
        return self.transpose()

    def is_symmetric(self, tol=0.0):
        if self.n_rows != self.n_cols:
            return False
        t = self.transpose()
        if not np.array_equal(t.keys, self.keys):
            return False
        return bool(np.all(np.abs(t.values - self.values) <= tol))

    def locate(self, rows, cols):
        """Positions of ``(rows, cols)`` in the stored entries; -1 where absent."""
        want = np.asarray(rows, dtype=np.int64) * self.n_cols + np.asarray(cols, dtype=np.int64)
        pos = np.searchsorted(self.keys, want)
        pos = np.minimum(pos, max(self.nnz - 1, 0))
        hit = self.keys[pos] == want if self.nnz else np.zeros(want.shape, bool)
        return np.where(hit, pos, -1)

    def gather(self, pattern):
        """Values of ``self`` at every stored position of ``pattern`` (0 where absent)."""
        if pattern.shape != self.shape:
            raise DimensionError(f"shape mismatch {pattern.shape} vs {self.shape}")
        pos = self.locate(pattern.row_idx, pattern.col_idx)
        out = np.zeros(pattern.nnz)
        hit = pos >= 0
        out[hit] = self.values[pos[hit]]
        return out

    def validate(self):
        """Raise ``ValueError`` unless the CSR invariants hold."""
        rp, ci = self.row_ptr, self.col_idx
        if rp.shape != (self.n_rows + 1,):
            raise ValueError("row_ptr must have length n_rows + 1")
        if rp[0] != 0 or rp[-1] != ci.shape[0] or ci.shape != self.values.shape:
            raise ValueError("row_ptr endpoints disagree with col_idx/values length")
        if np.any(np.diff(rp) < 0):
            raise ValueError("row_ptr must be non-decreasing")
        if ci.size:
            if ci.min() < 0 or ci.max() >= self.n_cols:
                raise ValueError("column index out of range")
            step = np.diff(ci)
            same_row = np.diff(self.row_idx) == 0
            if np.any(step[same_row] <= 0):
                raise ValueError("column indices must be strictly increasing within a row")
        return True

    def __repr__(self):
        return f"SparseMatrix(shape={self.shape}, nnz={self.nnz})"


def _require_square(A, what="matrix"):
    if A.n_rows != A.n_cols:
        raise DimensionError(f"{what} must be square, got {A.shape}")


def add_self_loops(A):
    """Return ``A + I`` (existing diagonal entries are incremented by one)."""
    _require_square(A)
    n = A.n_rows
    diag = np.arange(n, dtype=np.int64)
    return SparseMatrix.from_coo(
        n,
        n,
        np.concatenate([A.row_idx, diag]),
        np.concatenate([A.col_idx, diag]),
        np.concatenate([A.values, np.ones(n)]),
    )


def _degrees(A):
    deg = A.row_sums()
    bad = np.flatnonzero(deg <= 0)
    if bad.size:
        raise DegenerateDegreeError(f"{bad.size} row(s) with non-positive degree, first at row {bad[0]}")
    return deg


def sym_normalize(At):
    """``D^{-1/2} At D^{-1/2}`` with ``D`` the (weighted) row sums of ``At``."""
    _require_square(At)
    d = 1.0 / np.sqrt(_degrees(At))
    return At.with_values(d[At.row_idx] * At.values * d[At.col_idx])


def row_normalize(At):
    """``D^{-1} At``; every row of the result sums to one."""
    _require_square(At)
    d = _degrees(At)
    return At.with_values(At.values / d[At.row_idx])


def row_normalize_backward(At, S, grad_S):
    """Gradient w.r.t. the values of ``At`` given the gradient w.r.t. ``S = row_normalize(At)``.

    Both gradients live on the shared sparsity pattern.
    """
    d = At.row_sums()
    rows = At.row_idx
    inner = np.bincount(rows, weights=grad_S * S.values, minlength=At.n_rows)
    return (grad_S - inner[rows]) / d[rows]


def _row_chunks(S, width):
    """Split rows into contiguous ranges holding at most ~_CHUNK_ELEMS gathered entries."""
    if S.nnz * max(width, 1) <= _CHUNK_ELEMS:
        yield 0, S.n_rows
        return
    per_chunk = max(1, _CHUNK_ELEMS // max(width, 1))
    start = 0
    while start < S.n_rows:
        limit = S.row_ptr[start] + per_chunk
        stop = int(np.searchsorted(S.row_ptr, limit, side="right")) - 1
        stop = min(max(stop, start + 1), S.n_rows)
        yield start, stop
        start = stop


def spmm(S, H):
    """Sparse-dense product ``S @ H``."""
    H = np.asarray(H, dtype=np.float64)
    if H.ndim != 2 or S.n_cols != H.shape[0]:
        raise DimensionError(f"cannot multiply {S.shape} by {H.shape}")
    if S.nnz == 0 or H.shape[1] == 0:
        return np.zeros((S.n_rows, H.shape[1]))
    return np.asarray(S.to_scipy() @ H)


def sddmm(pattern, U, V):
    """Sampled dense-dense product: ``(U @ V.T)`` evaluated on ``pattern``'s entries.

    Returns a value array aligned with ``pattern``'s stored entries.
    """
    U = np.asarray(U, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    if U.shape[0] != pattern.n_rows or V.shape[0] != pattern.n_cols or U.shape[1] != V.shape[1]:
        raise DimensionError(f"sddmm shapes {pattern.shape}, {U.shape}, {V.shape} incompatible")
    out = np.empty(pattern.nnz)
    rows, cols = pattern.row_idx, pattern.col_idx
    for r0, r1 in _row_chunks(pattern, U.shape[1]):
        lo, hi = pattern.row_ptr[r0], pattern.row_ptr[r1]
        out[lo:hi] = np.einsum("ij,ij->i", U[rows[lo:hi]], V[cols[lo:hi]])
    return out


@dataclass(frozen=True)
class ProductPlan:
    """Symbolic result of ``A @ B`` for fixed sparsity patterns.

    Every scalar product ``A[e_left] * B[e_right]`` contributes to output
    entry ``target``. Reusing a plan skips the pattern computation when only
    values change between calls (as with trainable edge-type weights).
    """

    left_shape: tuple
    right_shape: tuple
    left_nnz: int
    right_nnz: int
    e_left: np.ndarray
    e_right: np.ndarray
    target: np.ndarray
    pattern: SparseMatrix

    def compatible(self, A, B):
        return (
            A.shape == self.left_shape
            and B.shape == self.right_shape
            and A.nnz == self.left_nnz
            and B.nnz == self.right_nnz
        )


def spgemm_plan(A, B):
    if A.n_cols != B.n_rows:
        raise DimensionError(f"cannot multiply {A.shape} by {B.shape}")
    counts = np.diff(B.row_ptr)[A.col_idx]
    total = int(counts.sum())
    e_left = np.repeat(np.arange(A.nnz, dtype=np.int64), counts)
    run_start = np.cumsum(counts) - counts
    offsets = np.arange(total, dtype=np.int64) - np.repeat(run_start, counts)
    e_right = np.repeat(B.row_ptr[A.col_idx], counts) + offsets
    keys = A.row_idx[e_left] * B.n_cols + B.col_idx[e_right]
    uniq, target = np.unique(keys, return_inverse=True)
    pattern = SparseMatrix._from_sorted_keys(A.n_rows, B.n_cols, uniq, np.zeros(uniq.size))
    return ProductPlan(A.shape, B.shape, A.nnz, B.nnz, e_left, e_right, target.astype(np.int64), pattern)


def sp_sp_matmul(A, B, plan=None):
    """Sparse-sparse product ``A @ B``.

    The output pattern is the structural product pattern (entries that cancel
    numerically are kept as explicit zeros).
    """
    if plan is None:
        plan = spgemm_plan(A, B)
    elif not plan.compatible(A, B):
        raise DimensionError("product plan does not match operands")
    vals = np.bincount(
        plan.target,
        weights=A.values[plan.e_left] * B.values[plan.e_right],
        minlength=plan.pattern.nnz,
    )
    return plan.pattern.with_values(vals)


def sp_sp_matmul_backward(A, B, plan, grad_out):
    """Gradients w.r.t. the stored values of ``A`` and ``B`` for ``C = A @ B``.

    ``grad_out`` is aligned with ``plan.pattern``.
    """
    g = grad_out[plan.target]
    grad_A = np.bincount(plan.e_left, weights=g * B.values[plan.e_right], minlength=A.nnz)
    grad_B = np.bincount(plan.e_right, weights=g * A.values[plan.e_left], minlength=B.nnz)
    return grad_A, grad_B


def weighted_sum(mats, weights):
    """Entrywise ``sum_k weights[k] * mats[k]`` on the union of the patterns."""
    mats = list(mats)
    weights = np.asarray(weights, dtype=np.float64).ravel()
    if not mats:
        raise ArgumentError("weighted_sum needs at least one matrix")
    if len(mats) != weights.shape[0]:
        raise ArgumentError(f"{len(mats)} matrices but {weights.shape[0]} weights")
    shape = mats[0].shape
    if any(m.shape != shape for m in mats):
        raise ArgumentError("all matrices must share one shape")
    keys = np.concatenate([m.keys for m in mats])
    vals = np.concatenate([w * m.values for m, w in zip(mats, weights)])
    uniq, inverse = np.unique(keys, return_inverse=True)
    merged = np.bincount(inverse, weights=vals, minlength=uniq.size)
    return SparseMatrix._from_sorted_keys(shape[0], shape[1], uniq, merged)


def hstack(mats):
    """Column-wise concatenation of matrices with equal row counts."""
    mats = list(mats)
    if not mats:
        raise ArgumentError("hstack needs at least one matrix")
    n = mats[0].n_rows
    if any(m.n_rows != n for m in mats):
        raise DimensionError("hstack operands must have equal row counts")
    offsets = np.cumsum([0] + [m.n_cols for m in mats])
    return SparseMatrix.from_coo(
        n,
        int(offsets[-1]),
        np.concatenate([m.row_idx for m in mats]),
        np.concatenate([m.col_idx + off for m, off in zip(mats, offsets)]),
        np.concatenate([m.values for m in mats]),
    )


def row_slice(S, r0, r1):
    """Rows ``r0:r1`` as a new matrix."""
    lo, hi = S.row_ptr[r0], S.row_ptr[r1]
    return SparseMatrix(r1 - r0, S.n_cols, S.row_ptr[r0 : r1 + 1] - lo, S.col_idx[lo:hi], S.values[lo:hi], check=False)
