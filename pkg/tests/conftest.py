import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_connected(n, p, seed):
    """Random spanning tree plus extra edges, random positive weights."""
    from msimap.graph import SparseGraph

    r = np.random.default_rng(seed)
    perm = r.permutation(n)
    edges = {tuple(sorted((int(perm[t]), int(perm[r.integers(t)])))) for t in range(1, n)}
    iu, ju = np.triu_indices(n, 1)
    extra = r.random(iu.size) < p
    edges.update(zip(iu[extra].tolist(), ju[extra].tolist()))
    e = np.array(sorted(edges))
    return SparseGraph.from_edges(n, e, r.uniform(0.2, 1.0, len(e)))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for num in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[num])
