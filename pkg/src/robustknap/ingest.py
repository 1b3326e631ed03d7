"""Readers for SNAP edge lists and MovieLens CSVs, plus seeded subsampling."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp

from .objectives import Graph, RatingsModel

log = logging.getLogger(__name__)


class ParseError(ValueError):
    def __init__(self, path, lineno: int, msg: str):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.path = path
        self.lineno = lineno


@dataclass
class IngestStats:
    """Counts of silently repaired input, kept for assertions."""

    comments: int = 0
    self_loops: int = 0
    duplicate_edges: int = 0
    dropped_ratings: int = 0
    extra: dict = field(default_factory=dict)


def load_snap_edges(path: Union[str, Path], stats: Optional[IngestStats] = None) -> Graph:
    """Undirected simple graph from a whitespace edge list; ``#`` starts a comment line.

    Vertex ids are remapped to ``0..n-1`` in order of first appearance and
    the originals kept in ``Graph.labels``.
    """
    stats = stats if stats is not None else IngestStats()
    ids: dict[int, int] = {}
    edges = []
    seen = set()
    with open(path, newline=None) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                stats.comments += 1
                continue
            parts = line.split()
            if len(parts) < 2:
                raise ParseError(path, lineno, f"expected two vertex ids, got {line!r}")
            try:
                a, b = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(path, lineno, f"non-integer vertex id in {line!r}") from None
            u = ids.setdefault(a, len(ids))
            v = ids.setdefault(b, len(ids))
            if u == v:
                stats.self_loops += 1
                continue
            key = (min(u, v), max(u, v))
            if key in seen:
                stats.duplicate_edges += 1
                continue
            seen.add(key)
            edges.append(key)
    labels = np.fromiter(ids.keys(), dtype=np.int64, count=len(ids))
    if stats.self_loops or stats.duplicate_edges:
        log.info("%s: dropped %d self-loops, %d duplicate edges", path, stats.self_loops,
                 stats.duplicate_edges)
    return Graph.from_edges(len(ids), edges, labels)


def _rows(path):
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            row = [c.strip() for c in row]
            if not row or row == [""]:
                continue
            yield lineno, row


def load_movielens(ratings_path, movies_path, stats: Optional[IngestStats] = None) -> RatingsModel:
    """Mean-centred rating vectors: ``v[x, u] = r[x, u] - r_avg`` where rated, else 0.

    Ratings of movies missing from the movies file are dropped and counted.
    A first line whose rating column is not numeric is taken as a header.
    """
    stats = stats if stats is not None else IngestStats()
    movie_index: dict[int, int] = {}
    genres, titles = [], []
    for lineno, row in _rows(movies_path):
        if len(row) < 3:
            raise ParseError(movies_path, lineno, "expected movieId,title,genres")
        try:
            mid = int(row[0])
        except ValueError:
            if lineno == 1:
                continue
            raise ParseError(movies_path, lineno, f"bad movieId {row[0]!r}") from None
        g = row[-1]
        movie_index[mid] = len(titles)
        titles.append(",".join(row[1:-1]))
        genres.append(frozenset() if g in ("", "(no genres listed)") else frozenset(g.split("|")))

    users: dict[int, int] = {}
    mrow, ucol, vals = [], [], []
    for lineno, row in _rows(ratings_path):
        if len(row) < 3:
            raise ParseError(ratings_path, lineno, "expected userId,movieId,rating[,timestamp]")
        try:
            uid, mid, r = int(row[0]), int(row[1]), float(row[2])
        except ValueError:
            if lineno == 1:
                continue
            raise ParseError(ratings_path, lineno, f"malformed rating row {row!r}") from None
        x = movie_index.get(mid)
        if x is None:
            stats.dropped_ratings += 1
            continue
        mrow.append(x)
        ucol.append(users.setdefault(uid, len(users)))
        vals.append(r)
    if stats.dropped_ratings:
        log.warning("dropped %d ratings of unknown movies", stats.dropped_ratings)
    vals = np.asarray(vals)
    r_avg = float(vals.mean()) if vals.size else 0.0
    # keep an explicit zero where a rating equals the mean; the entry still marks "rated"
    mat = sp.csr_matrix((vals - r_avg, (np.asarray(mrow, dtype=np.int64), np.asarray(ucol, dtype=np.int64))),
                        shape=(len(titles), len(users)))
    mat.sum_duplicates()
    movie_ids = np.array(sorted(movie_index, key=movie_index.get), dtype=np.int64)
    user_ids = np.array(sorted(users, key=users.get), dtype=np.int64)
    return RatingsModel(movie_ids, user_ids, mat, genres, r_avg, titles)


def _pick(n: int, fraction: Optional[float], cap: Optional[int], seed: int) -> np.ndarray:
    if fraction is not None and not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    k = n if fraction is None else int(round(fraction * n))
    if cap is not None:
        k = min(k, int(cap))
    if k >= n:
        return np.arange(n)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n, size=k, replace=False))


def subsample(data, fraction: Optional[float] = None, cap: Optional[int] = None, seed: int = 0):
    """Seeded vertex (graph) or movie (ratings) subsample with induced structure."""
    if isinstance(data, Graph):
        keep = _pick(data.n, fraction, cap, seed)
        if keep.size == data.n:
            return data
        return data.induced(keep)
    if isinstance(data, RatingsModel):
        keep = _pick(data.n, fraction, cap, seed)
        if keep.size == data.n:
            return data
        return replace(data, movie_ids=data.movie_ids[keep], vectors=data.vectors[keep],
                       genres=[data.genres[i] for i in keep],
                       titles=[data.titles[i] for i in keep] if data.titles else [])
    raise TypeError(f"cannot subsample {type(data).__name__}")
