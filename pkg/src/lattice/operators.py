import numpy as np
import scipy.sparse as sp
from .grid import TorusGrid


def difference_matrix(grid: TorusGrid) -> sp.csr_matrix:
    """
    Sparse (d * L^d) x L^d matrix G with (G u)[i, x] = u(x + e_i) - u(x).

    Row order matches VectorField.values.ravel(); the divergence is -G^T.
    """
    n = grid.n_sites
    sites = np.arange(n)
    coords = np.array(np.unravel_index(sites, grid.shape))
    blocks = []
    for i in range(grid.d):
        shifted = coords.copy()
        shifted[i] = (shifted[i] + 1) % grid.L
        heads = np.ravel_multi_index(tuple(shifted), grid.shape)
        rows = np.concatenate([sites, sites])
        cols = np.concatenate([heads, sites])
        data = np.concatenate([np.ones(n), -np.ones(n)])
        blocks.append(sp.csr_matrix((data, (rows, cols)), shape=(n, n)))
    return sp.vstack(blocks).tocsr()


def laplacian_matrix(grid: TorusGrid) -> sp.csr_matrix:
    G = difference_matrix(grid)
    return -(G.T @ G).tocsr()
