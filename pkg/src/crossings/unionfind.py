"""Flat-array union-find kernels: path compression and union by size."""

from numba import njit


@njit(cache=True, nogil=True)
def reset(parent, size):
    for i in range(parent.shape[0]):
        parent[i] = i
        size[i] = 1


@njit(cache=True, nogil=True)
def find_root(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True, nogil=True)
def union(parent, size, a, b):
    ra = find_root(parent, a)
    rb = find_root(parent, b)
    if ra == rb:
        return ra
    if size[ra] < size[rb]:
        ra, rb = rb, ra
    parent[rb] = ra
    size[ra] += size[rb]
    return ra
