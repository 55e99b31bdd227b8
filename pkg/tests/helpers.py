import numpy as np

# criterion number -> one-line verdict, printed in the terminal summary
ACCEPTANCE: dict[int, str] = {}


def numeric_grad(fn, x, step=1e-6):
    """Central differences of scalar ``fn`` at array ``x``; independent of the tape."""
    x = np.array(x, dtype=float)
    g = np.zeros_like(x)
    for idx in np.ndindex(*x.shape):
        hi, lo = x.copy(), x.copy()
        hi[idx] += step
        lo[idx] -= step
        g[idx] = (fn(hi) - fn(lo)) / (2 * step)
    return g


def rel_err(a, b, floor=1e-4):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)))


def six_node_dataset():
    """6 nodes, 2 views, 2 classes, 3 features; hand-written and fixed."""
    from mgal.graphcore import MultiGraphDataset
    from mgal.ndcore import SparseMatrix

    X = np.array([
        [1.0, 0.2, -0.3],
        [0.8, -0.1, 0.4],
        [1.1, 0.5, 0.0],
        [-0.2, 1.0, 0.7],
        [0.1, 0.9, -0.6],
        [-0.4, 1.2, 0.3],
    ])
    e1 = [(0, 1), (1, 2), (3, 4), (4, 5), (2, 3)]
    e2 = [(0, 2), (0, 5), (3, 5), (1, 4), (2, 4)]

    def adj(edges):
        r = [i for i, j in edges] + [j for i, j in edges]
        c = [j for i, j in edges] + [i for i, j in edges]
        return SparseMatrix.from_coo(6, 6, r, c, np.ones(len(r)))

    return MultiGraphDataset(X, (adj(e1), adj(e2)), np.array([0, 0, 0, 1, 1, 1]), 2, name="six")
