"""Brute-force combinatorial dimension engines for finite partial classes.

A finite partial concept class is a matrix over {+1, -1, *} with concepts
as rows and domain points as columns (* = undefined, stored as 0).  The VC
engine enumerates column subsets and counts realized sign patterns; the
online-dimension engine runs the memoized mistake-tree recursion

    ldim(H) = max over columns x of 1 + min(ldim(H|x=+1), ldim(H|x=-1)),

with ldim(empty) = -1, and returns a certificate tree that an independent
validator re-checks without consulting the recursion's memo.  A * entry
never matches either branch.  Also here: the online Perceptron mistake
counter whose count is bounded by ceil(1/margin^2) on margin-separable
streams, Gap-Hamming-Distance matrix construction, and exhaustive search
for the disambiguation (per-entry * filling) minimizing the online
dimension.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from .concepts import LabeledSample
from .errors import SizeGuardError

STAR_CELL = "*"

VC_MAX_COLUMNS = 32
LDIM_BUDGET = 10**7
GHD_MAX_BITS = 12
DISAMBIGUATION_MAX_STARS = 20


@dataclass(frozen=True)
class PartialClassMatrix:
    """Rectangular {+1, -1, *} matrix with row/column labels (* stored as 0)."""

    entries: np.ndarray
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=np.int8)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"matrix must be 2-d and nonempty, got shape {arr.shape}")
        if not np.all(np.isin(arr, (-1, 0, 1))):
            raise ValueError("entries must be +1, -1 or 0 (star)")
        if len(self.row_labels) != arr.shape[0] or len(self.col_labels) != arr.shape[1]:
            raise ValueError("label counts must match the matrix shape")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)
        object.__setattr__(self, "row_labels", tuple(self.row_labels))
        object.__setattr__(self, "col_labels", tuple(self.col_labels))

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def star_cells(self) -> list[tuple[int, int]]:
        return [tuple(rc) for rc in np.argwhere(self.entries == 0)]


def matrix_from_entries(entries, row_labels=None, col_labels=None) -> PartialClassMatrix:
    arr = np.asarray(entries, dtype=np.int8)
    rows = row_labels if row_labels is not None else [f"h{i}" for i in range(arr.shape[0])]
    cols = col_labels if col_labels is not None else [f"x{j}" for j in range(arr.shape[1])]
    return PartialClassMatrix(entries=arr, row_labels=tuple(rows), col_labels=tuple(cols))


# ---------------------------------------------------------------------------
# CSV interchange: cells in {+1, -1, *}; first row / first column are labels.


def write_matrix_csv(matrix: PartialClassMatrix, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["", *matrix.col_labels])
        for label, row in zip(matrix.row_labels, matrix.entries):
            cells = [STAR_CELL if v == 0 else f"{int(v):+d}" for v in row]
            writer.writerow([label, *cells])


def read_matrix_csv(path) -> PartialClassMatrix:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if len(rows) < 2:
        raise ValueError(f"{path}: expected a label row plus at least one concept row")
    col_labels = tuple(rows[0][1:])
    row_labels = []
    entries = []
    for row in rows[1:]:
        if len(row) != len(col_labels) + 1:
            raise ValueError(f"{path}: ragged row {row!r}")
        row_labels.append(row[0])
        entries.append([_parse_cell(cell) for cell in row[1:]])
    return PartialClassMatrix(
        entries=np.asarray(entries, dtype=np.int8),
        row_labels=tuple(row_labels),
        col_labels=col_labels,
    )


def _parse_cell(cell: str) -> int:
    cell = cell.strip()
    if cell == STAR_CELL:
        return 0
    value = int(cell)
    if value not in (-1, 1):
        raise ValueError(f"cell must be +1, -1 or {STAR_CELL!r}, got {cell!r}")
    return value


# ---------------------------------------------------------------------------
# VC dimension


def vc_dim(matrix: PartialClassMatrix) -> tuple[int, tuple[int, ...]]:
    """Exact VC dimension with a maximum shattered column subset as witness.

    A subset is shattered iff every +-1 pattern on it appears among the
    rows with no star in those columns.  Enumeration grows the subset size
    until no subset of that size is shattered, which is conclusive because
    shattering is downward closed.
    """
    entries = matrix.entries
    n_rows, n_cols = entries.shape
    if n_cols > VC_MAX_COLUMNS:
        raise SizeGuardError(f"vc_dim enumerates column subsets; limit {VC_MAX_COLUMNS} columns")
    best: tuple[int, ...] = ()
    size = 1
    max_size = min(n_cols, int(np.floor(np.log2(max(n_rows, 1)))) if n_rows else 0)
    while size <= max_size:
        found = None
        for subset in combinations(range(n_cols), size):
            sub = entries[:, subset]
            defined = np.all(sub != 0, axis=1)
            if int(defined.sum()) < 2**size:
                continue
            patterns = (sub[defined] > 0) @ (1 << np.arange(size))
            if len(np.unique(patterns)) == 2**size:
                found = subset
                break
        if found is None:
            break
        best = found
        size += 1
    return len(best), best


# ---------------------------------------------------------------------------
# Online (mistake-tree) dimension


@dataclass(frozen=True)
class MistakeTreeCertificate:
    """Shattered mistake tree of the claimed depth.

    ``node_points`` maps an internal node's path from the root (a string of
    '+'/'-' branch labels, '' for the root) to a column index.
    ``witness_rows`` maps each full root-to-leaf path to a row whose
    entries realize every (column, branch) pair along it.
    """

    depth: int
    node_points: dict[str, int]
    witness_rows: dict[str, int]


def validate_certificate(matrix: PartialClassMatrix, cert: MistakeTreeCertificate) -> bool:
    """Re-check a certificate from the matrix alone (no engine state)."""
    if cert.depth == 0:
        return matrix.shape[0] >= 1
    entries = matrix.entries
    for bits in product("+-", repeat=cert.depth):
        path = "".join(bits)
        if path not in cert.witness_rows:
            return False
        row = entries[cert.witness_rows[path]]
        for depth_here in range(cert.depth):
            prefix = path[:depth_here]
            if prefix not in cert.node_points:
                return False
            col = cert.node_points[prefix]
            want = 1 if path[depth_here] == "+" else -1
            if row[col] != want:
                return False
    return True


class _LdimEngine:
    """Memoized recursion over deduplicated row subsets."""

    def __init__(self, entries: np.ndarray, budget: int = LDIM_BUDGET):
        # Duplicate concept rows never change the dimension; dedupe up front
        # and remember a representative original index for witnesses.
        uniq, first = np.unique(entries, axis=0, return_index=True)
        self.entries = uniq
        self.original_row = first
        self.n_cols = entries.shape[1]
        self.memo: dict[frozenset[int], int] = {}
        self.budget = budget
        self.charged = 0

    def ldim(self, rows: frozenset[int]) -> int:
        if not rows:
            return -1
        cached = self.memo.get(rows)
        if cached is not None:
            return cached
        self.charged += self.n_cols
        if self.charged > self.budget:
            raise SizeGuardError(
                f"mistake-tree recursion exceeded its {LDIM_BUDGET} state budget"
            )
        row_list = sorted(rows)
        sub = self.entries[row_list]
        best = 0
        for col in range(self.n_cols):
            column = sub[:, col]
            plus = frozenset(r for r, v in zip(row_list, column) if v == 1)
            minus = frozenset(r for r, v in zip(row_list, column) if v == -1)
            if plus and minus:
                value = 1 + min(self.ldim(plus), self.ldim(minus))
                if value > best:
                    best = value
        self.memo[rows] = best
        return best

    def best_column(self, rows: frozenset[int]) -> tuple[int, frozenset[int], frozenset[int]] | None:
        """First column achieving the optimum at this state (for certificates)."""
        target = self.ldim(rows)
        if target == 0:
            return None
        row_list = sorted(rows)
        sub = self.entries[row_list]
        for col in range(self.n_cols):
            column = sub[:, col]
            plus = frozenset(r for r, v in zip(row_list, column) if v == 1)
            minus = frozenset(r for r, v in zip(row_list, column) if v == -1)
            if plus and minus and 1 + min(self.ldim(plus), self.ldim(minus)) == target:
                return col, plus, minus
        raise AssertionError("memoized optimum lost its witness column")


def littlestone_dim(matrix: PartialClassMatrix) -> tuple[int, MistakeTreeCertificate]:
    """Exact online dimension plus a shattered mistake tree certificate."""
    engine = _LdimEngine(matrix.entries)
    all_rows = frozenset(range(len(engine.entries)))
    depth = engine.ldim(all_rows)
    node_points: dict[str, int] = {}
    witness_rows: dict[str, int] = {}

    def build(rows: frozenset[int], path: str, remaining: int) -> None:
        if remaining == 0:
            witness_rows[path] = int(engine.original_row[min(rows)])
            return
        col, plus, minus = engine.best_column(rows)
        node_points[path] = int(col)
        build(plus, path + "+", remaining - 1)
        build(minus, path + "-", remaining - 1)

    if depth > 0:
        build(all_rows, "", depth)
    cert = MistakeTreeCertificate(depth=depth, node_points=node_points, witness_rows=witness_rows)
    return depth, cert


def min_disambiguation_ldim(
    matrix: PartialClassMatrix,
) -> tuple[int, dict[tuple[int, int], int]]:
    """Minimum online dimension over all total fillings of the star cells.

    Exhaustive over 2^(number of stars); guarded at
    ``DISAMBIGUATION_MAX_STARS``.  Larger inputs should evaluate fixed
    fillings directly instead.
    """
    stars = matrix.star_cells()
    if len(stars) > DISAMBIGUATION_MAX_STARS:
        raise SizeGuardError(
            f"{len(stars)} star cells exceed the exhaustive limit of "
            f"{DISAMBIGUATION_MAX_STARS}; evaluate a fixed filling instead"
        )
    if not stars:
        depth, _ = littlestone_dim(matrix)
        return depth, {}
    best_depth: int | None = None
    best_fill: dict[tuple[int, int], int] = {}
    for assignment in product((-1, 1), repeat=len(stars)):
        filled = matrix.entries.copy()
        for (r, c), value in zip(stars, assignment):
            filled[r, c] = value
        depth, _ = littlestone_dim(matrix_from_entries(filled, matrix.row_labels, matrix.col_labels))
        if best_depth is None or depth < best_depth:
            best_depth = depth
            best_fill = {cell: int(v) for cell, v in zip(stars, assignment)}
    return best_depth, best_fill


# ---------------------------------------------------------------------------
# Perceptron mistake counting


def perceptron_mistakes(stream: LabeledSample, margin_promise: float) -> int:
    """Standard online Perceptron mistake count over the stream in order.

    Predicts by the sign of the running inner product (zero counts as a
    mistake) and adds y x on each mistake.  When the stream is separable
    with the promised margin, the count is at most ceil(1 / margin^2).
    """
    if not 0.0 < margin_promise <= 1.0:
        raise ValueError(f"margin promise must be in (0, 1], got {margin_promise}")
    v = np.zeros(stream.dim)
    mistakes = 0
    for x, y in zip(stream.points, stream.labels):
        if y * float(v @ x) <= 0.0:
            mistakes += 1
            v = v + y * x
    return mistakes


def perceptron_mistake_bound(margin_promise: float) -> int:
    return int(np.ceil(1.0 / margin_promise**2))


# ---------------------------------------------------------------------------
# Gap Hamming Distance


def build_ghd(n: int, margin: float) -> PartialClassMatrix:
    """Partial sign(<x, y>) matrix over {+-1}^n, defined when |<x,y>| >= margin*n.

    Rows and columns enumerate {+-1}^n in lexicographic order (-1 < +1);
    labels render -1 as '-' and +1 as '+'.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > GHD_MAX_BITS:
        raise SizeGuardError(f"Gap Hamming matrices are limited to n <= {GHD_MAX_BITS}")
    if not 0.0 < margin <= 1.0:
        raise ValueError(f"margin must be in (0, 1], got {margin}")
    vectors = np.array(list(product((-1, 1), repeat=n)), dtype=np.int64)
    grams = vectors @ vectors.T
    entries = np.zeros(grams.shape, dtype=np.int8)
    defined = np.abs(grams) >= margin * n
    entries[defined & (grams > 0)] = 1
    entries[defined & (grams < 0)] = -1
    labels = tuple("".join("+" if v > 0 else "-" for v in vec) for vec in vectors)
    return PartialClassMatrix(entries=entries, row_labels=labels, col_labels=labels)
