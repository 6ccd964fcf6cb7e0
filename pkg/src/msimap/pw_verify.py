"""Numeric checks of Poincare inequalities and uniqueness sets on small graphs.

All operators here use the normalized Laplacian of the unweighted graph.
A node subset S is a Lambda-set when every signal supported on S obeys
``||phi|| <= Lambda ||L phi||``. For a polynomial operator
``psi = sum_k a_k L^k`` the matching constant is
``Lambda_psi = 1 / sqrt(sum_k a_k^2 / Lambda^(2k))``, and U = V \\ S should
then determine every signal band-limited below ``1 / Lambda_psi``.

Two readings of ``||psi phi||`` are supported:

``stacked``
    ``sqrt(sum_k a_k^2 ||L^k phi||^2)``, the norm of the per-term outputs
    kept separate (one block per term, as in a filter bank).
``summed``
    ``||sum_k a_k L^k phi||``, the norm of the combined operator output.
    Cancellation between terms makes the inequality fail in general, e.g.
    ``a = (1, -1)`` on any S = {s}.
"""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import OracleSizeError, ParameterError
from .graph import NORMALIZED, SparseGraph, build_laplacian

logger = logging.getLogger(__name__)

STACKED = "stacked"
SUMMED = "summed"
RANK_TOL = 1e-8
# relative slack when comparing an observed ratio with its bound
BOUND_SLACK = 1e-9
ENUMERATION_LIMIT = 10


def _neighbor_sets(graph: SparseGraph):
    nbrs = [set() for _ in range(graph.n_nodes)]
    for i, j in zip(graph.rows.tolist(), graph.cols.tolist()):
        nbrs[i].add(j)
        nbrs[j].add(i)
    return nbrs


def max_degree(graph: SparseGraph) -> int:
    """``d(G)``: largest number of neighbors of any node (weights ignored)."""
    if graph.n_nodes == 0:
        return 0
    return int(np.bincount(np.concatenate([graph.rows, graph.cols]), minlength=graph.n_nodes).max())


def check_conditions(graph: SparseGraph, subset, nbrs=None) -> tuple[bool, bool]:
    """Flags for the two neighborhood conditions on ``S = subset``.

    (1) every s in S has a neighbor in U = V \\ S;
    (2) every s in S has a neighbor u in U whose neighbors inside S are exactly {s}.
    """
    nbrs = _neighbor_sets(graph) if nbrs is None else nbrs
    s_set = set(int(s) for s in subset)
    cond1 = cond2 = True
    for s in s_set:
        outside = [u for u in nbrs[s] if u not in s_set]
        if not outside:
            cond1 = False
        if not any(nbrs[u] & s_set == {s} for u in outside):
            cond2 = False
    return cond1, cond2


@dataclass(frozen=True)
class LambdaSet:
    S: tuple
    U: tuple
    lam: float  # d(G)
    cond1: bool
    cond2: bool

    @property
    def empty(self) -> bool:
        return len(self.S) == 0

    @property
    def valid(self) -> bool:
        return not self.empty and self.cond1 and self.cond2


def _require_connected(graph):
    if graph.n_nodes < 1:
        raise ParameterError("graph has no nodes")
    if not graph.is_connected():
        raise ParameterError("graph must be connected")


def find_lambda_set(graph: SparseGraph) -> LambdaSet:
    """Greedy S: visit nodes in index order, keep s if both conditions hold for S + {s}.

    The result is maximal for this visiting order, not necessarily maximum.
    Only a graph without edges (a single node) yields an empty S.
    """
    g = graph.unweighted()
    _require_connected(g)
    nbrs = _neighbor_sets(g)
    chosen: list[int] = []
    for v in range(g.n_nodes):
        c1, c2 = check_conditions(g, chosen + [v], nbrs)
        if c1 and c2:
            chosen.append(v)
    c1, c2 = check_conditions(g, chosen, nbrs)
    if not chosen:
        logger.info("no nonempty Lambda-set found")
    u = tuple(v for v in range(g.n_nodes) if v not in set(chosen))
    return LambdaSet(tuple(chosen), u, float(max_degree(g)), c1, c2)


def enumerate_lambda_sets(graph: SparseGraph):
    """Exhaustive search (N <= 10): ``(max_size, all valid sets of that size)``."""
    g = graph.unweighted()
    n = g.n_nodes
    if n > ENUMERATION_LIMIT:
        raise OracleSizeError(f"enumeration limited to {ENUMERATION_LIMIT} nodes, got {n}")
    nbrs = _neighbor_sets(g)
    for size in range(n, 0, -1):
        found = [c for c in itertools.combinations(range(n), size) if all(check_conditions(g, c, nbrs))]
        if found:
            return size, found
    return 0, []


def _dense_normalized(graph: SparseGraph) -> np.ndarray:
    return build_laplacian(graph.unweighted(), NORMALIZED).matrix.toarray()


def _random_unit_signals(rng, n, support, trials):
    phi = np.zeros((trials, n))
    phi[:, support] = rng.standard_normal((trials, len(support)))
    phi /= np.linalg.norm(phi, axis=1, keepdims=True)
    return phi


@dataclass
class PoincareReport:
    bound: float
    trials: int
    max_ratio: float  # largest ||phi|| / ||op phi|| over the random trials
    exact_ratio: float  # the supremum over all phi supported on S
    violations: int
    worst_phi: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return self.violations == 0 and self.exact_ratio <= self.bound * (1 + BOUND_SLACK)


def _poincare(op_blocks, support, bound, trials, rng, n):
    """``op_blocks``: list of dense (n, n) matrices whose stacked output defines the norm."""
    if len(support) == 0:
        raise ParameterError("S is empty")
    stacked = np.vstack(op_blocks)[:, list(support)]
    sv = np.linalg.svd(stacked, compute_uv=False)
    exact = np.inf if sv[-1] <= 0 else 1.0 / sv[-1]
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    phi = _random_unit_signals(rng, n, list(support), trials)
    out = phi[:, list(support)] @ stacked.T
    norms = np.linalg.norm(out, axis=1)
    with np.errstate(divide="ignore"):
        ratios = 1.0 / norms
    bad = ratios > bound * (1 + BOUND_SLACK)
    worst = int(np.argmax(ratios))
    return PoincareReport(bound, trials, float(ratios[worst]), float(exact), int(bad.sum()), phi[worst])


def verify_poincare_laplacian(graph: SparseGraph, S: Sequence[int], trials: int = 1000, seed=0) -> PoincareReport:
    """Check ``||phi|| <= d(G) ||L phi||`` for random unit phi supported on S."""
    _require_connected(graph)
    lap = _dense_normalized(graph)
    return _poincare([lap], S, float(max_degree(graph)), trials, np.random.default_rng(seed), graph.n_nodes)


@dataclass(frozen=True)
class PolynomialOperator:
    """``psi = sum_k a_k L^k`` with ``|a_k| <= 1``."""

    coeffs: tuple

    def __post_init__(self):
        a = np.asarray(self.coeffs, dtype=float)
        if a.ndim != 1 or a.size == 0:
            raise ParameterError("coefficients must be a non-empty sequence")
        if not np.all(np.isfinite(a)) or np.any(np.abs(a) > 1):
            raise ParameterError("coefficients must satisfy |a_k| <= 1")
        if not np.any(a != 0):
            raise ParameterError("at least one coefficient must be nonzero")
        object.__setattr__(self, "coeffs", tuple(float(x) for x in a))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def terms(self, lap: np.ndarray) -> list[np.ndarray]:
        """``[a_0 I, a_1 L, ..., a_K L^K]`` as dense matrices."""
        n = lap.shape[0]
        power = np.eye(n)
        out = []
        for a in self.coeffs:
            out.append(a * power)
            power = power @ lap
        return out

    def apply(self, lap, phi) -> np.ndarray:
        """``sum_k a_k L^k phi`` by repeated multiplication (``lap`` dense or sparse)."""
        phi = np.asarray(phi, dtype=float)
        cur = phi
        out = self.coeffs[0] * phi
        for a in self.coeffs[1:]:
            cur = lap @ cur
            out = out + a * cur
        return out


def lambda_psi(op: PolynomialOperator, lam: float) -> float:
    if not lam > 0:
        raise ParameterError("lambda must be positive")
    k = np.arange(len(op.coeffs))
    a = np.asarray(op.coeffs)
    return float(1.0 / np.sqrt(np.sum(a * a / lam ** (2.0 * k))))


def verify_poincare_sgw(graph: SparseGraph, S: Sequence[int], op: PolynomialOperator, trials: int = 1000,
                        seed=0, norm: str = STACKED) -> PoincareReport:
    """Check ``||phi|| <= Lambda_psi ||psi phi||`` for random unit phi supported on S."""
    _require_connected(graph)
    if norm not in (STACKED, SUMMED):
        raise ParameterError(f"unknown norm {norm!r}")
    lap = _dense_normalized(graph)
    bound = lambda_psi(op, float(max_degree(graph)))
    terms = op.terms(lap)
    blocks = terms if norm == STACKED else [sum(terms)]
    return _poincare(blocks, S, bound, trials, np.random.default_rng(seed), graph.n_nodes)


@dataclass(frozen=True)
class PwSpace:
    omega: float
    eigenvalues: np.ndarray
    basis: np.ndarray  # (N, m), orthonormal columns

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def pw_space(graph: SparseGraph, omega: float, eig_tol: float = 1e-10) -> PwSpace:
    """Signals spanned by normalized-Laplacian eigenvectors with eigenvalue <= omega."""
    lam, vec = np.linalg.eigh(_dense_normalized(graph))
    keep = lam <= omega + eig_tol
    if not keep.any():
        raise ParameterError(f"no eigenvalue below omega = {omega}")
    return PwSpace(float(omega), lam[keep], vec[:, keep])


def uniqueness_rank_check(graph: SparseGraph, omega: float, U: Sequence[int]) -> bool:
    """True iff restriction to U is injective on the band-limited space PW_omega."""
    space = pw_space(graph, omega)
    U = list(U)
    if len(U) < space.dim:
        return False
    sv = np.linalg.svd(space.basis[U, :], compute_uv=False)
    return int(np.sum(sv > RANK_TOL * sv[0])) == space.dim


# graph families for sweeps and the command line

def path_graph(n: int) -> SparseGraph:
    if n < 2:
        raise ParameterError("path needs at least 2 nodes")
    i = np.arange(n - 1)
    return SparseGraph.from_edges(n, np.column_stack([i, i + 1]))


def star_graph(n: int) -> SparseGraph:
    """Hub 0 joined to leaves 1..n-1."""
    if n < 2:
        raise ParameterError("star needs at least 2 nodes")
    leaves = np.arange(1, n)
    return SparseGraph.from_edges(n, np.column_stack([np.zeros_like(leaves), leaves]))


def random_connected_graph(n: int, p: float = 0.15, seed=None) -> SparseGraph:
    """Random spanning tree plus each remaining pair with probability ``p``."""
    if n < 2:
        raise ParameterError("graph needs at least 2 nodes")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    edges = {tuple(sorted((int(perm[t]), int(perm[rng.integers(t)])))) for t in range(1, n)}
    iu, ju = np.triu_indices(n, 1)
    extra = rng.random(iu.size) < p
    edges.update(zip(iu[extra].tolist(), ju[extra].tolist()))
    return SparseGraph.from_edges(n, np.array(sorted(edges)))


def graph_family(name: str, n: int, seed=None, p: float = 0.15) -> SparseGraph:
    if name == "path":
        return path_graph(n)
    if name == "star":
        return star_graph(n)
    if name == "random":
        return random_connected_graph(n, p, seed)
    raise ParameterError(f"unknown graph family {name!r}")


def random_operator(rng, max_degree: int = 4) -> PolynomialOperator:
    while True:
        a = rng.uniform(-1.0, 1.0, rng.integers(1, max_degree + 2))
        if np.any(a != 0):
            return PolynomialOperator(tuple(a))


# counterexample persistence

def save_counterexample(path, graph: SparseGraph, S, phi, **meta) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    record = {
        "n_nodes": graph.n_nodes,
        "edges": np.column_stack([graph.rows, graph.cols]).tolist(),
        "S": [int(s) for s in S],
        "phi": np.asarray(phi, dtype=float).tolist(),
        **meta,
    }
    path.write_text(json.dumps(record, indent=1))
    return path


def load_counterexample(path):
    record = json.loads(Path(path).read_text())
    graph = SparseGraph.from_edges(record["n_nodes"], np.array(record["edges"], dtype=np.int64).reshape(-1, 2))
    return graph, tuple(record["S"]), np.array(record["phi"]), record


@dataclass
class SweepResult:
    configurations: int = 0
    trials: int = 0
    laplacian_violations: int = 0
    sgw_violations: int = 0
    uniqueness_checked: int = 0
    uniqueness_failures: int = 0
    counterexamples: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.laplacian_violations == 0 and self.sgw_violations == 0 and self.uniqueness_failures == 0


def poincare_sweep(total_trials: int = 10_000, trials_per_config: int = 100, max_nodes: int = 30,
                   families: Sequence[str] = ("path", "star", "random"), seed=0, norm: str = STACKED,
                   counterexample_dir=None) -> SweepResult:
    """Randomized sweep over (graph, S, phi, coefficients) on graphs with at most ``max_nodes`` nodes.

    Each configuration draws a graph, its greedy Lambda-set and a random
    operator, then checks both inequalities on ``trials_per_config`` random
    signals and the uniqueness of U = V \\ S just below ``1 / Lambda_psi``
    (which covers every smaller bandwidth, the spaces being nested).
    """
    rng = np.random.default_rng(seed)
    res = SweepResult()
    while res.trials < total_trials:
        fam = families[res.configurations % len(families)]
        n = int(rng.integers(3, max_nodes + 1))
        g = graph_family(fam, n, seed=rng.integers(2**31), p=float(rng.uniform(0.05, 0.4)))
        ls = find_lambda_set(g)
        res.configurations += 1
        if not ls.valid:
            continue
        op = random_operator(rng)
        sub = int(rng.integers(2**31))
        lap_rep = verify_poincare_laplacian(g, ls.S, trials_per_config, seed=sub)
        sgw_rep = verify_poincare_sgw(g, ls.S, op, trials_per_config, seed=sub, norm=norm)
        res.trials += trials_per_config
        res.laplacian_violations += lap_rep.violations
        res.sgw_violations += sgw_rep.violations
        for kind, rep in (("laplacian", lap_rep), ("sgw", sgw_rep)):
            if rep.violations and counterexample_dir is not None:
                p = Path(counterexample_dir) / f"{kind}_{res.configurations}.json"
                save_counterexample(p, g, ls.S, rep.worst_phi, kind=kind, coeffs=list(op.coeffs),
                                    bound=rep.bound, ratio=rep.max_ratio, norm=norm)
                res.counterexamples.append(str(p))
        if sgw_rep.violations == 0:
            omega = (1.0 / lambda_psi(op, ls.lam)) * (1 - 1e-9)
            res.uniqueness_checked += 1
            if not uniqueness_rank_check(g, omega, ls.U):
                res.uniqueness_failures += 1
                if counterexample_dir is not None:
                    p = Path(counterexample_dir) / f"uniqueness_{res.configurations}.json"
                    save_counterexample(p, g, ls.S, np.zeros(g.n_nodes), kind="uniqueness",
                                        coeffs=list(op.coeffs), omega=omega)
                    res.counterexamples.append(str(p))
    return res
