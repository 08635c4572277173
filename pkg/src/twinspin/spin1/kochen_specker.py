"""Finite Kochen-Specker value assignments.

A direction set is colourable when every direction can be given a value in
``{0, 1}`` such that each orthogonal triple holds exactly one 0 and two 1s.
Since any orthogonal pair extends to a triple on the sphere, two orthogonal
directions may not both be 0; that pair rule is applied by default.

Direction-set file format (plain text, ``#`` starts a comment)::

    directions
    1 0 0
    0 1 0
    ...
    triples
    0 1 2
    ...

The ``directions`` header is optional. Indices in the triples section are
zero-based. When the triples section is absent every orthogonal triple in
the set is used.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..config import tol
from ..errors import ValidationError

__all__ = [
    "TriplesSet",
    "KSResult",
    "ks_satisfiable",
    "load_direction_set",
    "parse_direction_set",
    "peres33",
    "canonical_ray",
]


def canonical_ray(v: Sequence[float]) -> np.ndarray:
    """Unit vector with its first nonzero coordinate positive."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValidationError("zero vector is not a direction")
    v = v / n
    for c in v:
        if abs(c) > tol().ray:
            if c < 0:
                v = -v
            break
    return v


@dataclass(frozen=True)
class TriplesSet:
    directions: tuple[tuple[float, float, float], ...]
    triples: tuple[tuple[int, int, int], ...]

    @classmethod
    def build(
        cls,
        directions: Iterable[Sequence[float]],
        triples: Iterable[Sequence[int]] | None = None,
    ) -> "TriplesSet":
        """Canonicalize rays, merge duplicates and validate the triples.

        ``triples`` index into the given ``directions``; ``None`` collects
        every orthogonal triple automatically.
        """
        eps = tol().ray
        rays: list[np.ndarray] = []
        remap: list[int] = []
        for d in directions:
            r = canonical_ray(d)
            for i, existing in enumerate(rays):
                if np.allclose(existing, r, rtol=0, atol=eps):
                    remap.append(i)
                    break
            else:
                remap.append(len(rays))
                rays.append(r)
        D = np.array(rays).reshape(-1, 3)
        if triples is None:
            G = np.abs(D @ D.T) < eps
            found = [
                t
                for t in itertools.combinations(range(len(rays)), 3)
                if G[t[0], t[1]] and G[t[0], t[2]] and G[t[1], t[2]]
            ]
        else:
            found = []
            seen = set()
            for t in triples:
                t = tuple(int(i) for i in t)
                if len(t) != 3 or any(i < 0 or i >= len(remap) for i in t):
                    raise ValidationError(f"bad triple {t}")
                m = tuple(sorted(remap[i] for i in t))
                if len(set(m)) != 3:
                    raise ValidationError(f"triple {t} repeats a direction")
                for i, j in itertools.combinations(m, 2):
                    if abs(float(D[i] @ D[j])) > eps:
                        raise ValidationError(f"triple {t} is not mutually orthogonal")
                if m not in seen:
                    seen.add(m)
                    found.append(m)
        return cls(
            directions=tuple(tuple(float(c) for c in r) for r in rays),
            triples=tuple(found),
        )

    @property
    def size(self) -> int:
        return len(self.directions)

    def orthogonal_pairs(self) -> list[tuple[int, int]]:
        D = np.array(self.directions).reshape(-1, 3)
        G = np.abs(D @ D.T) < tol().ray
        return [(i, j) for i, j in itertools.combinations(range(self.size), 2) if G[i, j]]


@dataclass(frozen=True)
class KSResult:
    satisfiable: bool
    assignment: dict[int, int] | None  # witness when satisfiable
    nodes: int  # search nodes visited; the size of the refutation when UNSAT
    constraints: int


def ks_satisfiable(ts: TriplesSet, orthogonal_pairs: bool = True) -> KSResult:
    """Decide colourability by backtracking with unit propagation.

    Returns a witness assignment when one exists. For an unsatisfiable set
    the exhaustive search tree (``nodes`` visited) is the certificate.
    """
    n = ts.size
    triples = [tuple(t) for t in ts.triples]
    pairs = ts.orthogonal_pairs() if orthogonal_pairs else []

    watch: list[list[int]] = [[] for _ in range(n)]
    constraints: list[tuple[str, tuple[int, ...]]] = []
    for t in triples:
        constraints.append(("t", t))
    for p in pairs:
        constraints.append(("p", p))
    for ci, (_, members) in enumerate(constraints):
        for v in members:
            watch[v].append(ci)

    # most constrained directions first
    order = sorted(range(n), key=lambda v: -len(watch[v]))
    val: list[int | None] = [None] * n
    nodes = 0

    def propagate(start: int, trail: list[int]) -> bool:
        queue = [start]
        while queue:
            v = queue.pop()
            for ci in watch[v]:
                kind, members = constraints[ci]
                vals = [val[m] for m in members]
                zeros = vals.count(0)
                free = [m for m, x in zip(members, vals) if x is None]
                if zeros > 1:
                    return False
                if kind == "t":
                    if zeros == 1:
                        forced = 1
                    elif vals.count(1) == 2 and free:
                        forced = 0
                    elif not free:
                        return False  # three 1s
                    else:
                        continue
                else:
                    if zeros == 1:
                        forced = 1
                    else:
                        continue
                for m in free:
                    val[m] = forced
                    trail.append(m)
                    queue.append(m)
        return True

    def search(pos: int) -> bool:
        nonlocal nodes
        while pos < n and val[order[pos]] is not None:
            pos += 1
        if pos == n:
            return True
        v = order[pos]
        for x in (0, 1):
            nodes += 1
            trail = [v]
            val[v] = x
            if propagate(v, trail) and search(pos + 1):
                return True
            for m in trail:
                val[m] = None
        return False

    ok = search(0)
    assignment = {i: int(val[i]) for i in range(n)} if ok else None
    return KSResult(ok, assignment, nodes, len(constraints))


def parse_direction_set(text: str) -> TriplesSet:
    directions: list[list[float]] = []
    triples: list[list[int]] | None = None
    section = "directions"
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.lower().strip("[]:")
        if head in ("directions", "triples"):
            section = head
            if head == "triples" and triples is None:
                triples = []
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 3:
            raise ValidationError(f"line {lineno}: expected three numbers, got {line!r}")
        try:
            if section == "directions":
                directions.append([float(p) for p in parts])
            else:
                triples.append([int(p) for p in parts])
        except ValueError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
    if not directions:
        raise ValidationError("direction set is empty")
    return TriplesSet.build(directions, triples)


def _read(path: str | Path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read direction set {str(path)!r}: {exc.strerror}") from None


def load_direction_set(path: str | Path) -> TriplesSet:
    return parse_direction_set(_read(path))


def direction_list(path: str | Path) -> list[list[float]]:
    """Raw direction rows of a direction-set file, in file order, unmodified."""
    rows = []
    for raw in _read(path).splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.lower().strip("[]:") == "triples":
            break
        if line.lower().strip("[]:") == "directions":
            continue
        try:
            rows.append([float(p) for p in line.replace(",", " ").split()])
        except ValueError as exc:
            raise ValidationError(f"bad direction line {line!r}: {exc}") from None
    return rows


def peres33() -> TriplesSet:
    """Peres' 33-ray set (external data bundled with the package)."""
    text = resources.files("twinspin.data").joinpath("peres33.txt").read_text()
    return parse_direction_set(text)
