import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from flowincentives.harness import appendix_c_scenario, prepare
from flowincentives.network import Link, RoadNetwork


@pytest.fixture(scope="session")
def appendix_c():
    return appendix_c_scenario()


@pytest.fixture(scope="session")
def appendix_c_pipe(appendix_c):
    return prepare(appendix_c)


@pytest.fixture
def parallel_links_net():
    """One OD pair, three parallel links with distinct free-flow times."""
    return RoadNetwork(
        nodes=("a", "b"),
        links=(
            Link(0, "a", "b", 0.15, 10.0, 7.5),
            Link(1, "a", "b", 0.05, 10.0, 2.5),
            Link(2, "a", "b", 0.10, 10.0, 5.0),
        ),
    )


def all_simple_paths(net, origin, destination):
    """Exhaustive DFS over simple paths; independent of the package's search."""
    adjacency = {}
    for lk in net.links:
        adjacency.setdefault(lk.tail, []).append(lk)
    paths = []

    def walk(node, visited, links, cost):
        if node == destination:
            paths.append((cost, tuple(links)))
            return
        for lk in adjacency.get(node, []):
            if lk.head not in visited:
                walk(lk.head, visited | {lk.head}, links + [lk.id], cost + lk.t0_hours)

    walk(origin, {origin}, [], 0.0)
    return sorted(paths)


def total_travel_time_loop(vhat, net):
    """Naive double-loop evaluation of the total-travel-time sum."""
    n_links = net.num_links
    total = 0.0
    for t in range(len(vhat) // n_links):
        for ell in range(n_links):
            v = vhat[t * n_links + ell]
            lk = net.links[ell]
            total += v * lk.t0_hours * (1.0 + 0.15 * (v / lk.capacity) ** 4)
    return total


def make_assignment(columns, n_cols, choices):
    """Binary assignment matrix from one chosen column per driver."""
    s = np.zeros((n_cols, len(choices)))
    for n, col in enumerate(choices):
        s[col, n] = 1.0
    return s
