"""Thurston transition matrices, tree Markov/degree pairs and the pulled-off
constant of the bi-neutral chord model.

Curve and tree files use 1-based indices, as in E_1, E_2, ...
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import connected_components
from sortedcontainers import SortedList

from .errors import ConvergenceFailure, DomainError, InvalidTree, ParseError
from .rotation import ONE, RotationNumber, comb_distance

SPECTRAL_TOL = 1e-8
POWER_TOL = 1e-13
POWER_CAP = 100_000


# ---------------------------------------------------------------- curve systems


@dataclass(frozen=True)
class CurveSystem:
    """``preimages[(s, t)]`` lists deg(f: alpha -> tau_t) over the components
    alpha of f^-1(tau_t) homotopic to sigma_s (0-based s, t)."""

    n: int
    preimages: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("a curve system has at least one curve")
        clean = {}
        for (s, t), degs in self.preimages.items():
            if not (0 <= s < self.n and 0 <= t < self.n):
                raise DomainError(f"curve index out of range in {(s, t)}")
            degs = tuple(int(d) for d in degs)
            if any(d < 1 for d in degs):
                raise DomainError("degrees must be >= 1")
            clean[(s, t)] = degs
        object.__setattr__(self, "preimages", clean)

    def with_component(self, s: int, t: int, deg: int) -> "CurveSystem":
        pre = dict(self.preimages)
        pre[(s, t)] = pre.get((s, t), ()) + (deg,)
        return CurveSystem(self.n, pre)


@dataclass(frozen=True)
class TransitionMatrix:
    exact: tuple[tuple[Fraction, ...], ...]

    @property
    def A(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.exact])

    @property
    def n(self) -> int:
        return len(self.exact)


def transition_matrix(cs: CurveSystem) -> TransitionMatrix:
    """A[s][t] = sum over alpha of 1/deg(f: alpha -> tau_t)."""
    rows = [[Fraction(0)] * cs.n for _ in range(cs.n)]
    for (s, t), degs in cs.preimages.items():
        rows[s][t] += sum((Fraction(1, d) for d in degs), Fraction(0))
    return TransitionMatrix(tuple(tuple(r) for r in rows))


# ---------------------------------------------------------------- Perron roots


def gershgorin_bounds(A: np.ndarray) -> tuple[float, float]:
    """For nonnegative A the spectral radius lies between min and max row sum."""
    s = A.sum(axis=1)
    return float(s.min()), float(s.max())


def classes(A: np.ndarray) -> list[np.ndarray]:
    """Strongly connected components of the support graph of A, ordered by
    their smallest member."""
    _, lab = connected_components(np.asarray(A) > 0, directed=True, connection="strong")
    groups = {}
    for i, c in enumerate(lab):
        groups.setdefault(c, []).append(i)
    return [np.array(g) for g in sorted(groups.values())]


def _block_root(B: np.ndarray, max_iter: int, fallback: bool) -> float:
    """Perron root of an irreducible nonnegative block.

    Power iteration on B + I (primitive, same Perron vector) bracketed by the
    Collatz-Wielandt quotients.
    """
    n = len(B)
    if n == 1:
        return float(B[0, 0])
    P = B + np.eye(n)
    x = np.ones(n) / n
    lo, hi = 0.0, math.inf
    for _ in range(max_iter):
        y = P @ x
        with np.errstate(divide="ignore", invalid="ignore"):
            q = y / x
        if np.all(x > 0):
            lo, hi = float(q.min()), float(q.max())
            if hi - lo <= POWER_TOL * hi:
                return 0.5 * (lo + hi) - 1.0
        x = y / y.sum()
    if fallback:
        return float(np.max(np.abs(np.linalg.eigvals(B))))
    bounds = gershgorin_bounds(B)
    if math.isfinite(hi):
        bounds = (max(bounds[0], lo - 1), min(bounds[1], hi - 1))
    raise ConvergenceFailure(f"power iteration did not converge in {max_iter} steps", bounds)


def class_roots(A: np.ndarray, max_iter: int = POWER_CAP, fallback: bool = True):
    A = np.asarray(A, dtype=float)
    return [(c, _block_root(A[np.ix_(c, c)], max_iter, fallback)) for c in classes(A)]


def spectral_radius(A, max_iter: int = POWER_CAP, fallback: bool = True) -> float:
    """Perron root of a nonnegative matrix.

    Computed class by class; a block whose power iteration stalls is handed
    to a dense eigenvalue solve unless ``fallback`` is off, in which case
    ConvergenceFailure carries the Gershgorin interval.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] != A.shape[1]:
        raise DomainError("matrix must be square")
    if np.any(A < 0):
        raise DomainError("matrix must be nonnegative")
    return max(r for _, r in class_roots(A, max_iter, fallback))


def _nonneg_inverse(exact) -> bool:
    """Whether I - A is invertible with a nonnegative inverse, in exact arithmetic.

    For A >= 0 this holds exactly when rho(A) < 1.
    """
    n = len(exact)
    M = [[(Fraction(int(i == j)) - exact[i][j]) for j in range(n)] +
         [Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return False
        M[col], M[piv] = M[piv], M[col]
        p = M[col][col]
        M[col] = [x / p for x in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    return all(M[i][n + j] >= 0 for i in range(n) for j in range(n))


def is_unobstructed(cs: CurveSystem) -> bool:
    return spectral_radius(transition_matrix(cs).A) < 1 - SPECTRAL_TOL


class VerdictKind(enum.Enum):
    UNOBSTRUCTED = 0
    OBSTRUCTED = 1
    CRITICAL = 3


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    lam: float

    def __str__(self):
        if self.kind is VerdictKind.CRITICAL:
            return f"CRITICAL λ≈1 (λ={self.lam:.12g})"
        return f"{self.kind.name} λ={self.lam:.10g}"

    @property
    def exit_code(self) -> int:
        return self.kind.value


def verdict(cs: CurveSystem) -> Verdict:
    """Exact decision of lambda < 1; near-1 values below 1 are CRITICAL."""
    T = transition_matrix(cs)
    lam = spectral_radius(T.A)
    if not _nonneg_inverse(T.exact):
        return Verdict(VerdictKind.OBSTRUCTED, lam)
    if lam >= 1 - SPECTRAL_TOL:
        return Verdict(VerdictKind.CRITICAL, lam)
    return Verdict(VerdictKind.UNOBSTRUCTED, lam)


# ---------------------------------------------------------------- trees


@dataclass(frozen=True)
class TreeDynamics:
    """Edges E_1..E_k (0-based here) as vertex pairs; ``paths[j]`` is the
    ordered edge path covering F(E_j); ``delta[i]`` the degree on E_i."""

    edges: tuple[tuple[int, int], ...]
    paths: tuple[tuple[int, ...], ...]
    delta: tuple[int, ...]
    vertex_map: dict | None = None

    def __post_init__(self):
        k = len(self.edges)
        if k == 0:
            raise InvalidTree("tree has no edges")
        if len(self.paths) != k or len(self.delta) != k:
            raise InvalidTree("need one path and one degree per edge")
        if any(d < 1 for d in self.delta):
            raise InvalidTree("edge degrees must be >= 1")
        _check_tree(self.edges)
        for j, path in enumerate(self.paths):
            ends = _path_ends(self.edges, path, j)
            if self.vertex_map is not None:
                u, v = self.edges[j]
                if {u, v} <= set(self.vertex_map):
                    want = {self.vertex_map[u], self.vertex_map[v]}
                    if want != set(ends):
                        raise InvalidTree(f"path of E_{j + 1} does not join F of its endpoints")


def _check_tree(edges):
    verts = sorted({v for e in edges for v in e})
    if len(verts) != len(edges) + 1:
        raise InvalidTree("edge list is not a tree")
    parent = {v: v for v in verts}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru == rv:
            raise InvalidTree("edge list contains a cycle")
        parent[ru] = rv


def _path_ends(edges, path, j) -> tuple[int, int]:
    """Walk an edge path; it must be an embedded arc."""
    if not path:
        raise InvalidTree(f"empty path for E_{j + 1}")
    if any(not 0 <= e < len(edges) for e in path):
        raise InvalidTree(f"path of E_{j + 1} uses a missing edge")
    if len(path) == 1:
        return edges[path[0]]
    a, b = edges[path[0]]
    c, d = edges[path[1]]
    if b in (c, d):
        cur, seen = b, [a, b]
    elif a in (c, d):
        cur, seen = a, [b, a]
    else:
        raise InvalidTree(f"path of E_{j + 1} is disconnected")
    for e in path[1:]:
        u, v = edges[e]
        if cur == u:
            cur = v
        elif cur == v:
            cur = u
        else:
            raise InvalidTree(f"path of E_{j + 1} is disconnected")
        if cur in seen:
            raise InvalidTree(f"path of E_{j + 1} is not embedded")
        seen.append(cur)
    return seen[0], seen[-1]


@dataclass(frozen=True)
class TreeMatrices:
    M: np.ndarray
    D: np.ndarray


def tree_matrices(t: TreeDynamics) -> TreeMatrices:
    """M[i, j] = 1 if E_i lies in F(E_j); D = diag(delta)."""
    k = len(t.edges)
    M = np.zeros((k, k))
    for j, path in enumerate(t.paths):
        M[list(path), j] = 1.0
    return TreeMatrices(M, np.diag(np.asarray(t.delta, dtype=float)))


def _reach(A: np.ndarray, comps) -> np.ndarray:
    """reach[a, b]: class a has access to class b (a path a -> ... -> b)."""
    k = len(comps)
    R = np.zeros((k, k), dtype=bool)
    for a, ca in enumerate(comps):
        for b, cb in enumerate(comps):
            R[a, b] = a == b or bool(np.any(A[np.ix_(ca, cb)] > 0))
    for m in range(k):
        R |= R[:, [m]] & R[[m], :]
    return R


def solve_MvDv(M, D, tol: float = SPECTRAL_TOL) -> np.ndarray | None:
    """Nonnegative v != 0 with Mv = Dv and |v|_1 = 1, or None.

    With B = D^-1 M, such v exists iff some class alpha of B has Perron root
    1 and every other class with access to alpha has root < 1.  The first
    such alpha (by smallest member) is used.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    D = np.atleast_2d(np.asarray(D, dtype=float))
    d = np.diag(D)
    if np.any(d <= 0) or np.any(D - np.diag(d)):
        raise DomainError("D must be diagonal with positive entries")
    B = M / d[:, None]
    roots = class_roots(B)
    comps = [c for c, _ in roots]
    R = _reach(B, comps)
    for a, (ca, ra) in enumerate(roots):
        if abs(ra - 1) > tol:
            continue
        up = [b for b in range(len(comps)) if b != a and R[b, a]]
        if any(roots[b][1] >= 1 - tol for b in up):
            continue
        v = np.zeros(len(B))
        Baa = B[np.ix_(ca, ca)]
        _, _, vt = np.linalg.svd(np.eye(len(ca)) - Baa)
        va = np.abs(vt[-1])
        v[ca] = va / va.sum()
        if up:
            U = np.concatenate([comps[b] for b in up])
            rhs = B[np.ix_(U, ca)] @ v[ca]
            v[U] = np.linalg.solve(np.eye(len(U)) - B[np.ix_(U, U)], rhs)
        v = np.maximum(v, 0.0)
        return v / v.sum()
    return None


# ---------------------------------------------------------------- text formats


def parse_obstruction_file(text: str) -> CurveSystem | TreeDynamics:
    """Curve systems (``curve n`` / ``pre s t deg``) or trees
    (``edge u v`` / ``map v w`` / ``path E_j: E_a E_b ...`` / ``delta E_i d``)."""
    n = None
    pre = {}
    edges, maps, paths, deltas = [], {}, {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.replace(":", " : ").split()
        try:
            if tok[0] == "curve" and len(tok) == 2:
                n = int(tok[1])
            elif tok[0] == "pre" and len(tok) == 4:
                s, t, deg = int(tok[1]) - 1, int(tok[2]) - 1, int(tok[3])
                pre.setdefault((s, t), []).append(deg)
            elif tok[0] == "edge" and len(tok) == 3:
                edges.append((int(tok[1]), int(tok[2])))
            elif tok[0] == "map" and len(tok) == 3:
                maps[int(tok[1])] = int(tok[2])
            elif tok[0] == "path" and len(tok) >= 4 and tok[2] == ":":
                paths[_edge_name(tok[1])] = tuple(_edge_name(e) for e in tok[3:])
            elif tok[0] == "delta" and len(tok) == 3:
                deltas[_edge_name(tok[1])] = int(tok[2])
            else:
                raise ParseError(f"line {lineno}: cannot parse {raw!r}")
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"line {lineno}: {exc}") from None
    if n is not None and edges:
        raise ParseError("file mixes a curve system and a tree")
    try:
        if n is not None:
            return CurveSystem(n, pre)
        if edges:
            k = len(edges)
            missing = [j + 1 for j in range(k) if j not in paths]
            if missing:
                raise ParseError(f"no path for edges {missing}")
            return TreeDynamics(tuple(edges), tuple(paths[j] for j in range(k)),
                                tuple(deltas.get(j, 1) for j in range(k)), maps or None)
    except DomainError as exc:
        raise ParseError(str(exc)) from exc
    raise ParseError("neither 'curve' nor 'edge' lines found")


def _edge_name(tok: str) -> int:
    s = tok.upper().removeprefix("E").removeprefix("_")
    if not s.isdigit() or int(s) < 1:
        raise ParseError(f"bad edge name {tok!r}")
    return int(s) - 1


def read_obstruction_file(path):
    return parse_obstruction_file(Path(path).read_text())


def matrix_csv(name: str, A: np.ndarray) -> str:
    lines = [f"# {name}"]
    lines += [",".join(f"{x:.17g}" for x in row) for row in np.atleast_2d(A)]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- pulled-off constant


class _Unbounded:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "Unbounded"

    __str__ = __repr__


UNBOUNDED = _Unbounded()


def _fixed_angle(x) -> int:
    """Angle as an integer multiple of 2^-BITS, exact for floats and
    eventually golden rotation numbers."""
    if isinstance(x, RotationNumber):
        return x.fixed
    return math.floor(Fraction(x) * ONE) % ONE


@dataclass(frozen=True)
class ChordModel:
    """Chord from x on the circle of the fixed point 0 to y on the circle of
    infinity; the pullback moves the ends by -theta1 and -theta2."""

    theta1: float | RotationNumber
    theta2: float | RotationNumber
    x: float = 0.0
    y: float = 0.0
    reversed_orientation: bool = True

    def endpoints(self, j: int) -> tuple[float, float]:
        return ((self.x - j * float(self.theta1)) % 1.0, (self.y - j * float(self.theta2)) % 1.0)


def pulled_off_constant(theta1, theta2, chord: ChordModel | None = None, cap: int = 100_000):
    """Smallest n at which the chords gamma_0..gamma_n stop being laminally
    disjoint, or UNBOUNDED if that does not happen for n < cap.

    Disjointness is the compatibility of the cyclic order of the ends on the
    first circle with the reversed cyclic order on the second.  The check is
    incremental: a new end must land between the same two earlier chords
    on both circles.
    """
    if cap < 1:
        raise DomainError("cap must be >= 1")
    if chord is None:
        chord = ChordModel(theta1, theta2)
    t1, t2 = _fixed_angle(theta1), _fixed_angle(theta2)
    x0, y0 = _fixed_angle(chord.x), _fixed_angle(chord.y)
    sign = -1 if chord.reversed_orientation else 1
    # (position, chord index) on each circle, the second one read backwards
    A = SortedList([(x0, 0)])
    B = SortedList([((sign * y0) % ONE, 0)])
    for n in range(1, cap):
        a = (x0 - n * t1) % ONE
        b = (sign * (y0 - n * t2)) % ONE
        ia = A.bisect_left((a, -1))
        ib = B.bisect_left((b, -1))
        if (ia < len(A) and A[ia][0] == a) or (ib < len(B) and B[ib][0] == b):
            return n
        if n >= 2:
            na = (A[ia - 1][1], A[ia % len(A)][1])
            nb = (B[ib - 1][1], B[ib % len(B)][1])
            if na != nb:
                return n
        A.add((a, n))
        B.add((b, n))
    return UNBOUNDED


def speed_gap(theta1, theta2) -> float:
    """dist_{R/Z}(theta1, -theta2)."""
    return comb_distance(float(theta1), -float(theta2))

