import numpy as np
import pytest

from routecf.core import Node, ProblemKind, VrpInstance


def make_nodes(coords, **per_node):
    """Build a node list from coordinates plus optional per-node field lists."""
    nodes = []
    for i, xy in enumerate(coords):
        kw = {k: v[i] for k, v in per_node.items() if v[i] is not None}
        nodes.append(Node(index=i, coords=tuple(xy), **kw))
    return tuple(nodes)


@pytest.fixture
def unit_square():
    """4 nodes on the unit square, TSP; optimal tour length 4."""
    coords = [(0, 0), (1, 0), (1, 1), (0, 1)]
    return VrpInstance(kind=ProblemKind.TSP, nodes=make_nodes(coords))


def random_tsp(n, rng):
    coords = rng.random((n, 2))
    return VrpInstance(kind=ProblemKind.TSP, nodes=make_nodes(coords.tolist()))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
