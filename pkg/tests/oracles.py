"""Scalar-loop reference implementations, written straight from the
definitions and sharing no code with the package."""
import cmath
import itertools
import math


def r_xy(x, y, l, f):
    K = len(x)
    total = 0j
    for k in range(K):
        total += x[k].conjugate() * y[(k + l) % K] * cmath.exp(2j * math.pi * k * f)
    return total


def objective(x, y, L, P, spacing):
    total = 0.0
    for l in range(-L, L + 1):
        for p in range(-P, P + 1):
            total += abs(r_xy(x, y, l, p * spacing)) ** 2
    return total


def quad(B, z):
    K = len(z)
    total = 0j
    for i in range(K):
        for j in range(K):
            total += z[i].conjugate() * B[i][j] * z[j]
    return total.real


def circular_correlate(column, x):
    K = len(x)
    return [sum(x[k].conjugate() * column[(k + m) % K] for k in range(K)) for m in range(K)]


def dft(row):
    N = len(row)
    return [sum(row[n] * cmath.exp(-2j * math.pi * n * p / N) for n in range(N)) for p in range(N)]


def quaternary_codes(K):
    """All 4**K codes over {1, j, -1, -j}, as lists of complex numbers."""
    alphabet = [1, 1j, -1, -1j]
    return [[alphabet[i] for i in idx] for idx in itertools.product(range(4), repeat=K)]


def discrete_local_maxima(values, K, tol=1e-9):
    """Values of quaternary codes no single-chip change can improve.

    ``values`` is indexed like ``itertools.product(range(4), repeat=K)``.
    """
    maxima = []
    for flat, v in enumerate(values):
        digits = [(flat // 4 ** (K - 1 - k)) % 4 for k in range(K)]
        best = True
        for k in range(K):
            for a in range(4):
                if a == digits[k]:
                    continue
                other = flat + (a - digits[k]) * 4 ** (K - 1 - k)
                if values[other] > v + tol:
                    best = False
                    break
            if not best:
                break
        if best:
            maxima.append(v)
    return maxima
