"""Exact integer linear algebra helpers.

Everything here works on plain Python ints (arbitrary precision): Hermite
normal form with transformation matrix, integer kernels, determinants, and a
solver for linear congruence systems.  A small floating-point LLL reduction
is included for conditioning lattice bases before enumeration; it never
affects exactness of any certified quantity.
"""

from __future__ import annotations

from fractions import Fraction
from typing import List, Sequence, Tuple

Matrix = List[List[int]]


def _identity(n: int) -> Matrix:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def hermite_normal_form(a: Sequence[Sequence[int]]) -> Tuple[Matrix, Matrix]:
    """Row-style Hermite normal form.

    Returns (H, U) with U unimodular and H = U @ A, H in row echelon form
    with positive pivots and entries above each pivot reduced modulo it.
    """
    h = [list(map(int, row)) for row in a]
    m = len(h)
    n = len(h[0]) if m else 0
    u = _identity(m)
    pivot_row = 0
    for col in range(n):
        if pivot_row >= m:
            break
        # Euclidean elimination below the pivot.
        while True:
            nz = [r for r in range(pivot_row, m) if h[r][col] != 0]
            if not nz:
                break
            r0 = min(nz, key=lambda r: abs(h[r][col]))
            if r0 != pivot_row:
                h[pivot_row], h[r0] = h[r0], h[pivot_row]
                u[pivot_row], u[r0] = u[r0], u[pivot_row]
            done = True
            for r in range(pivot_row + 1, m):
                if h[r][col] != 0:
                    qf = h[r][col] // h[pivot_row][col]
                    if qf:
                        h[r] = [x - qf * y for x, y in zip(h[r], h[pivot_row])]
                        u[r] = [x - qf * y for x, y in zip(u[r], u[pivot_row])]
                    if h[r][col] != 0:
                        done = False
            if done:
                break
        if h[pivot_row][col] == 0:
            continue
        if h[pivot_row][col] < 0:
            h[pivot_row] = [-x for x in h[pivot_row]]
            u[pivot_row] = [-x for x in u[pivot_row]]
        piv = h[pivot_row][col]
        for r in range(pivot_row):
            qf = h[r][col] // piv
            if qf:
                h[r] = [x - qf * y for x, y in zip(h[r], h[pivot_row])]
                u[r] = [x - qf * y for x, y in zip(u[r], u[pivot_row])]
        pivot_row += 1
    return h, u


def kernel_basis(a: Sequence[Sequence[int]]) -> Matrix:
    """Basis (as rows) of {x in Z^n : A x = 0} for an m x n integer matrix."""
    m = len(a)
    n = len(a[0]) if m else 0
    if n == 0:
        return []
    at = [[a[i][j] for i in range(m)] for j in range(n)]
    h, u = hermite_normal_form(at)
    basis = [u[r] for r in range(n) if all(x == 0 for x in h[r])]
    return basis


def det_int(a: Sequence[Sequence[int]]) -> int:
    """Exact determinant via fraction-free Bareiss elimination."""
    n = len(a)
    if n == 0:
        return 1
    m = [list(map(int, row)) for row in a]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if m[r][k] != 0), None)
            if swap is None:
                return 0
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
            m[i][k] = 0
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def generates_mod(vectors: Sequence[Sequence[int]], moduli: Sequence[int]) -> bool:
    """True iff the vectors generate the product of cyclic groups Z/m_t.

    Equivalent to the lattice spanned by the vectors together with
    diag(moduli) being all of Z^r.
    """
    r = len(moduli)
    rows = [list(v) for v in vectors]
    for t in range(r):
        rows.append([moduli[t] if j == t else 0 for j in range(r)])
    h, _ = hermite_normal_form(rows)
    for t in range(r):
        if t >= len(h) or h[t][t] != 1:
            return False
    return True


def solve_mod(
    a: Sequence[Sequence[int]], target: Sequence[int], modulus: int
) -> List[int] | None:
    """Solve A x = target (mod modulus) for integer x, or None if unsolvable.

    A is m x n; the solution is reduced into the centred range
    (-modulus/2, modulus/2].
    """
    m = len(a)
    n = len(a[0]) if m else 0
    # Augment with modulus * identity so the system is over Z.
    bt: Matrix = []
    for j in range(n):
        bt.append([int(a[i][j]) for i in range(m)])
    for i in range(m):
        bt.append([modulus if t == i else 0 for t in range(m)])
    h, u = hermite_normal_form(bt)
    # Express target in terms of the nonzero rows of H (triangular solve).
    coeffs = [0] * len(h)
    resid = [int(x) for x in target]
    for r in range(len(h)):
        lead = next((c for c in range(m) if h[r][c] != 0), None)
        if lead is None:
            continue
        if resid[lead] % h[r][lead] != 0:
            return None
        c = resid[lead] // h[r][lead]
        coeffs[r] = c
        if c:
            resid = [x - c * y for x, y in zip(resid, h[r])]
    if any(x != 0 for x in resid):
        return None
    y = [0] * (n + m)
    for r, c in enumerate(coeffs):
        if c:
            y = [x + c * z for x, z in zip(y, u[r])]
    sol = []
    for j in range(n):
        v = y[j] % modulus
        if v > modulus // 2:
            v -= modulus
        sol.append(v)
    return sol


def lll_reduce(basis: Sequence[Sequence[int]], delta: float = 0.99) -> Matrix:
    """LLL-reduce an integer basis (rows).  Floating-point Gram-Schmidt.

    Used only to condition bases before enumeration; callers must not rely
    on it for exact claims.
    """
    b = [list(map(int, row)) for row in basis]
    n = len(b)
    if n <= 1:
        return b

    def gso():
        bstar = []
        mu = [[0.0] * n for _ in range(n)]
        for i in range(n):
            v = [float(x) for x in b[i]]
            for j in range(i):
                denom = sum(x * x for x in bstar[j])
                mu[i][j] = (
                    sum(float(x) * y for x, y in zip(b[i], bstar[j])) / denom
                    if denom > 0
                    else 0.0
                )
                v = [x - mu[i][j] * y for x, y in zip(v, bstar[j])]
            bstar.append(v)
        return bstar, mu

    bstar, mu = gso()
    k = 1
    iters = 0
    max_iters = 10000
    while k < n and iters < max_iters:
        iters += 1
        for j in range(k - 1, -1, -1):
            q = round(mu[k][j])
            if q:
                b[k] = [x - q * y for x, y in zip(b[k], b[j])]
        bstar, mu = gso()
        nk = sum(x * x for x in bstar[k])
        nk1 = sum(x * x for x in bstar[k - 1])
        if nk >= (delta - mu[k][k - 1] ** 2) * nk1:
            k += 1
        else:
            b[k], b[k - 1] = b[k - 1], b[k]
            bstar, mu = gso()
            k = max(k - 1, 1)
    return b


def rational_det(basis: Sequence[Sequence[Fraction]]) -> Fraction:
    """Exact determinant of a small rational matrix (Laplace/Gauss)."""
    n = len(basis)
    m = [[Fraction(x) for x in row] for row in basis]
    det = Fraction(1)
    for k in range(n):
        piv = next((r for r in range(k, n) if m[r][k] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != k:
            m[k], m[piv] = m[piv], m[k]
            det = -det
        det *= m[k][k]
        inv = m[k][k]
        for r in range(k + 1, n):
            f = m[r][k] / inv
            if f:
                m[r] = [x - f * y for x, y in zip(m[r], m[k])]
    return det
