"""Pure-Python versions of the compiled kernels in ``_kernels.pyx``."""

import numpy as np


def permanent_ryser(a):
    """Ryser permanent with Gray-code subset order (reference implementation)."""
    a = np.asarray(a, dtype=np.complex128)
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    cols = [a[:, j].tolist() for j in range(n)]
    rowsum = [0j] * n
    total = 0j
    parity = 0
    gray = 0
    for g in range(1, 1 << n):
        j = (g & -g).bit_length() - 1
        gray ^= 1 << j
        col = cols[j]
        if (gray >> j) & 1:
            rowsum = [x + y for x, y in zip(rowsum, col)]
        else:
            rowsum = [x - y for x, y in zip(rowsum, col)]
        parity ^= 1
        prod = rowsum[0]
        for x in rowsum[1:]:
            prod = prod * x
        if parity:
            total = total - prod
        else:
            total = total + prod
    return -total if n & 1 else total


def _kron_rows(vectors):
    # vectors: (n, k, 2) -> (n, 2**k), big-endian qubit order
    out = vectors[:, 0, :]
    for b in range(1, vectors.shape[1]):
        out = (out[:, :, None] * vectors[:, b, None, :]).reshape(out.shape[0], -1)
    return out


def sandwich_amplitudes(m, kets, bras):
    """Evaluate <b_1...b_q| m |k_1...k_p> for a batch of product states."""
    kin = _kron_rows(np.asarray(kets, dtype=np.complex128))
    bout = _kron_rows(np.asarray(bras, dtype=np.complex128)).conj()
    return np.einsum("nr,rc,nc->n", bout, np.asarray(m, dtype=np.complex128), kin)
