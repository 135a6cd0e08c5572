"""Undirected binary networks stored as an upper-triangle dyad vector."""

import csv
import functools
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import csgraph

MISSING = -1


class NetworkFormatError(ValueError):
    """The file could not be parsed into a network."""


class NetworkDataError(ValueError):
    """The file parsed but its contents are inconsistent."""


@functools.lru_cache(maxsize=64)
def dyad_index(n):
    """Row and column indices of the ``n(n-1)/2`` dyads, row-major ``i < j``."""
    rows, cols = np.triu_indices(n, k=1)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


def pair_position(i, j, n):
    """Position of dyad ``(i, j)`` (any order) in the dyad vector."""
    i, j = (i, j) if i < j else (j, i)
    return i * n - i * (i + 1) // 2 + (j - i - 1)


@dataclass(frozen=True)
class Network:
    """Symmetric binary network on ``n`` actors.

    ``y`` holds one code per dyad ``(i, j)``, ``i < j``, in the order given by
    :func:`dyad_index`: 1 for a tie, 0 for no tie, :data:`MISSING` for an
    unobserved dyad.
    """

    n: int
    y: np.ndarray
    labels: tuple = field(default=None, compare=False)

    def __post_init__(self):
        if self.n < 2:
            raise NetworkDataError("a network needs at least two actors")
        y = np.asarray(self.y, dtype=np.int8)
        if y.shape != (self.n * (self.n - 1) // 2,):
            raise NetworkDataError(
                f"expected {self.n * (self.n - 1) // 2} dyads, got {y.shape}")
        if not np.isin(y, (0, 1, MISSING)).all():
            raise NetworkDataError("dyad codes must be 0, 1 or missing")
        y = y.copy()
        y.setflags(write=False)
        object.__setattr__(self, "y", y)
        if self.labels is not None:
            if len(self.labels) != self.n:
                raise NetworkDataError("one label per actor required")
            object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))

    def __eq__(self, other):
        return (isinstance(other, Network) and self.n == other.n
                and np.array_equal(self.y, other.y))

    def __hash__(self):
        return hash((self.n, self.y.tobytes()))

    @classmethod
    def from_adjacency(cls, adj, labels=None):
        """Build from a square matrix; NaN entries mark missing dyads."""
        adj = np.asarray(adj, dtype=float)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise NetworkFormatError("adjacency matrix must be square")
        n = adj.shape[0]
        upper = adj[np.triu_indices(n, 1)]
        lower = adj.T[np.triu_indices(n, 1)]
        if not np.array_equal(upper, lower, equal_nan=True):
            raise NetworkFormatError("adjacency matrix is not symmetric")
        diag = np.diag(adj)
        if np.any(diag[~np.isnan(diag)] != 0):
            raise NetworkFormatError("adjacency matrix has self-loops")
        y = np.where(np.isnan(upper), MISSING, upper)
        if not np.isin(y, (0, 1, MISSING)).all():
            raise NetworkFormatError("adjacency entries must be 0 or 1")
        return cls(n, y.astype(np.int8), labels)

    @classmethod
    def from_edges(cls, n, edges, labels=None):
        """Build from 0-based ``(i, j)`` pairs; all other dyads are 0."""
        y = np.zeros(n * (n - 1) // 2, dtype=np.int8)
        for i, j in edges:
            if i == j or not (0 <= i < n and 0 <= j < n):
                raise NetworkDataError(f"invalid edge ({i}, {j}) for n={n}")
            y[pair_position(i, j, n)] = 1
        return cls(n, y, labels)

    @property
    def rows(self):
        return dyad_index(self.n)[0]

    @property
    def cols(self):
        return dyad_index(self.n)[1]

    @property
    def n_dyads(self):
        return self.y.size

    @property
    def observed(self):
        return self.y != MISSING

    @property
    def has_missing(self):
        return bool((self.y == MISSING).any())

    @property
    def n_edges(self):
        return int((self.y == 1).sum())

    def adjacency(self, missing=0.0):
        """Dense symmetric matrix; missing dyads filled with ``missing``."""
        a = np.zeros((self.n, self.n))
        vals = np.where(self.y == MISSING, missing, self.y).astype(float)
        a[self.rows, self.cols] = vals
        a[self.cols, self.rows] = vals
        return a

    def edges(self):
        idx = np.flatnonzero(self.y == 1)
        return list(zip(self.rows[idx].tolist(), self.cols[idx].tolist()))

    def with_missing(self, mask):
        """Copy with the dyads selected by ``mask`` marked missing."""
        y = self.y.copy()
        y[np.asarray(mask)] = MISSING
        return Network(self.n, y, self.labels)

    def with_values(self, y):
        return Network(self.n, np.asarray(y, dtype=np.int8), self.labels)


# ---------------------------------------------------------------------------
# file IO

_HEADER_N = re.compile(r"^\s*#?\s*n\s*=\s*(\d+)\s*$", re.IGNORECASE)
_MISSING_TOKENS = {"na", "nan", "?", ""}


def _split(line):
    return [t for t in re.split(r"[,\s]+", line.strip()) if t != ""]


def _read_edge_list(path, n=None, one_based=False):
    entries = []
    header_n = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            m = _HEADER_N.match(line)
            if m:
                header_n = int(m.group(1))
                continue
            if line.startswith("#"):
                continue
            tokens = _split(line)
            try:
                i, j = int(tokens[0]), int(tokens[1])
            except (ValueError, IndexError):
                if not entries:
                    continue  # free-form header row
                raise NetworkFormatError(f"{path}:{lineno}: cannot parse {raw!r}")
            if len(tokens) > 3:
                raise NetworkFormatError(f"{path}:{lineno}: too many columns")
            if len(tokens) == 3:
                tok = tokens[2].lower()
                if tok in _MISSING_TOKENS:
                    val = MISSING
                else:
                    try:
                        val = int(float(tok))
                    except ValueError:
                        raise NetworkFormatError(f"{path}:{lineno}: bad value {tokens[2]!r}")
                    if val not in (0, 1):
                        raise NetworkDataError(f"{path}:{lineno}: tie value must be 0 or 1")
            else:
                val = 1
            if one_based:
                i, j = i - 1, j - 1
            entries.append((lineno, i, j, val))

    if n is None:
        n = header_n
    if n is None:
        if not entries:
            raise NetworkFormatError(f"{path}: no edges and no n= header")
        n = max(max(i, j) for _, i, j, _ in entries) + 1
    if n < 2:
        raise NetworkDataError(f"{path}: need at least two actors")

    y = np.zeros(n * (n - 1) // 2, dtype=np.int8)
    seen = {}
    for lineno, i, j, val in entries:
        if not (0 <= i < n and 0 <= j < n):
            raise NetworkDataError(f"{path}:{lineno}: index out of range for n={n}")
        if i == j:
            raise NetworkDataError(f"{path}:{lineno}: self-loop ({i}, {j})")
        pos = pair_position(i, j, n)
        if pos in seen and seen[pos] != val:
            raise NetworkDataError(
                f"{path}:{lineno}: dyad ({min(i, j)}, {max(i, j)}) listed with conflicting values")
        seen[pos] = val
        y[pos] = val
    return Network(n, y)


def _read_matrix(path):
    rows = []
    with open(path, newline="") as fh:
        for raw in fh:
            if not raw.strip():
                continue
            tokens = _split(raw)
            try:
                rows.append([math.nan if t.lower() in _MISSING_TOKENS else float(t)
                             for t in tokens])
            except ValueError:
                if not rows:
                    continue  # column header
                raise NetworkFormatError(f"{path}: non-numeric entry in {raw!r}")
    if not rows or any(len(r) != len(rows) for r in rows):
        # tolerate a leading row-name column
        if rows and all(len(r) == len(rows) + 1 for r in rows):
            rows = [r[1:] for r in rows]
        else:
            raise NetworkFormatError(f"{path}: adjacency matrix is not square")
    return Network.from_adjacency(np.array(rows))


def load_network(path, format="edgelist", n=None, one_based=False):
    """Read a network file.

    Parameters
    ----------
    path : str or Path
    format : {"edgelist", "matrix"}
        Edge lists hold one ``i j`` (or ``i,j``) pair per line, optionally a
        third column with 0/1/NA, and may start with an ``n=<count>`` header.
        Matrices are square CSV/whitespace tables, ``NA`` marking missing.
    n : int, optional
        Actor count for edge lists; overrides the header.  Without either,
        the largest index decides, so trailing isolates need one of them.
    one_based : bool
        Edge-list indices start at 1.
    """
    path = Path(path)
    if format in ("edgelist", "edge-list", "edges"):
        return _read_edge_list(path, n=n, one_based=one_based)
    if format in ("matrix", "adjacency", "adjacency-matrix"):
        return _read_matrix(path)
    raise ValueError(f"unknown network format {format!r}")


def save_network(net, path, format="edgelist"):
    """Write ``net``; reading the file back gives an identical dyad vector."""
    path = Path(path)
    if format in ("edgelist", "edge-list", "edges"):
        with open(path, "w") as fh:
            fh.write(f"n={net.n}\n")
            for pos in np.flatnonzero(net.y != 0):
                i, j = net.rows[pos], net.cols[pos]
                if net.y[pos] == 1:
                    fh.write(f"{i} {j}\n")
                else:
                    fh.write(f"{i} {j} NA\n")
    elif format in ("matrix", "adjacency", "adjacency-matrix"):
        adj = net.adjacency(missing=math.nan)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            for row in adj:
                writer.writerow(["NA" if math.isnan(v) else str(int(v)) for v in row])
    else:
        raise ValueError(f"unknown network format {format!r}")


# ---------------------------------------------------------------------------
# descriptive statistics

STAT_NAMES = ("density", "transitivity", "assortativity",
              "mean_geodesic", "mean_degree", "sd_degree")


@dataclass(frozen=True)
class GraphStats:
    """Summary statistics; ``nan`` marks an undefined value."""

    density: float
    transitivity: float
    assortativity: float
    mean_geodesic: float
    mean_degree: float
    sd_degree: float

    def as_dict(self):
        return {k: getattr(self, k) for k in STAT_NAMES}

    def as_array(self):
        return np.array([getattr(self, k) for k in STAT_NAMES])


def _require_complete(net):
    if net.has_missing:
        raise NetworkDataError("statistic undefined on a network with missing dyads")


def degrees(net):
    """Degree of every actor."""
    _require_complete(net)
    d = np.bincount(net.rows, weights=net.y, minlength=net.n)
    d += np.bincount(net.cols, weights=net.y, minlength=net.n)
    return d.astype(int)


def adjacency_stats(adj):
    """The six summaries computed from a dense 0/1 symmetric matrix."""
    adj = np.asarray(adj, dtype=float)
    n = adj.shape[0]
    deg = adj.sum(axis=1)
    m2 = deg.sum()  # twice the number of edges

    density = m2 / (n * (n - 1))

    triples = float((deg * (deg - 1)).sum())
    if triples > 0:
        closed = float(np.einsum("ij,jk,ki->", adj, adj, adj))
        transitivity = closed / triples
    else:
        transitivity = math.nan

    if m2 > 0:
        i, j = np.nonzero(adj)  # both orientations of every edge
        x, z = deg[i], deg[j]
        sx, sz = x.std(), z.std()
        assortativity = float(((x - x.mean()) * (z - z.mean())).mean() / (sx * sz)) \
            if sx > 0 and sz > 0 else math.nan
    else:
        assortativity = math.nan

    if m2 > 0:
        dist = csgraph.shortest_path(adj, method="D", directed=False, unweighted=True)
        off = ~np.eye(n, dtype=bool) & np.isfinite(dist)
        mean_geodesic = float(dist[off].mean())
    else:
        mean_geodesic = math.nan

    mean_degree = m2 / n
    sd_degree = float(deg.std(ddof=1))
    return GraphStats(float(density), float(transitivity), float(assortativity),
                      mean_geodesic, float(mean_degree), sd_degree)


def graph_stats(net):
    """Density, transitivity, degree assortativity, mean geodesic and degree
    moments of a fully observed network.

    Transitivity is the global triple ratio.  Assortativity is the Pearson
    correlation of endpoint degrees with each edge counted in both
    directions.  The mean geodesic averages over reachable ordered pairs
    only.  The degree sd uses the ``n - 1`` denominator.
    """
    _require_complete(net)
    return adjacency_stats(net.adjacency())
