"""Slow, definitional reference implementations used by the test-suite.

Nothing here imports the scatter or eigensolver modules: each routine
recomputes its quantities from scratch so it can serve as an independent
check of the fast paths.
"""

import numpy as np

from .exceptions import EmptyClassError, SingularMatrixError
from .geig import GeigSolution


def _classes(labels, num_classes):
    groups = []
    for q in range(1, num_classes + 1):
        idx = [k for k, y in enumerate(labels) if y == q]
        if not idx:
            raise EmptyClassError(f"class {q} is empty")
        groups.append(idx)
    return groups


def naive_scatter(values, labels, num_classes, grand_mean="algorithm"):
    """Return ``(A, B)`` by literal summation of outer products.

    ``A = sum_q (Xbar_q - Xbar)(Xbar_q - Xbar)^T`` and
    ``B = sum_q 1/K_q sum_{y_k=q} (X_k - Xbar_q)(X_k - Xbar_q)^T`` with
    ``Xbar`` the unweighted mean of class means (``"algorithm"``) or the mean
    of all samples (``"weighted"``).
    """
    values = np.asarray(values, dtype=np.float64)
    _, n, _ = values.shape
    groups = _classes(list(labels), num_classes)
    class_means = []
    for idx in groups:
        total = np.zeros(values.shape[1:])
        for k in idx:
            total = total + values[k]
        class_means.append(total / len(idx))
    if grand_mean == "algorithm":
        xbar = sum(class_means) / num_classes
    else:
        xbar = sum(values[k] for k in range(values.shape[0])) / values.shape[0]

    A = np.zeros((n, n))
    B = np.zeros((n, n))
    for mean_q, idx in zip(class_means, groups):
        d = mean_q - xbar
        A += d @ d.T
        part = np.zeros((n, n))
        for k in idx:
            e = values[k] - mean_q
            part += e @ e.T
        B += part / len(idx)
    return A, B


def _sign(vectors):
    out = []
    for v in vectors:
        pivot = int(np.argmax(np.abs(v)))
        out.append(-v if v[pivot] < 0 else v)
    return np.array(out)


def dense_geig_by_inversion(A, B, c_diag, alpha, ridge, k=1):
    """Top ``k`` eigenpairs of ``(B + alpha C + ridge I)^{-1} A`` via a general
    dense eigendecomposition, sorted by real part."""
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    metric = np.asarray(B, dtype=np.float64) + alpha * np.diag(c_diag) + ridge * np.eye(n)
    try:
        inverse = np.linalg.inv(metric)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc))
    w, v = np.linalg.eig(inverse @ A)
    order = np.argsort(-w.real, kind="stable")[:k]
    vecs = v[:, order].real.T
    vecs = vecs / np.linalg.norm(vecs, axis=1, keepdims=True)
    vecs = _sign(vecs)
    residuals = np.array(
        [np.linalg.norm(A @ p - lam * (metric @ p)) for p, lam in zip(vecs, w[order].real)]
    )
    return GeigSolution(vecs, w[order].real, residuals)


def rayleigh_random_search(A, Bstar, trials, seed, extra=None):
    """Largest ``q^T A q`` over random ``q`` scaled to ``q^T Bstar q = 1``.

    ``extra`` rows, if given, join the candidate set.
    """
    rng = np.random.default_rng(seed)
    A = np.asarray(A, dtype=np.float64)
    Bstar = np.asarray(Bstar, dtype=np.float64)
    q = rng.standard_normal((trials, A.shape[0]))
    if extra is not None:
        q = np.vstack([q, np.atleast_2d(extra)])
    scale = np.einsum("ti,ij,tj->t", q, Bstar, q)
    q = q / np.sqrt(scale)[:, None]
    return float(np.max(np.einsum("ti,ij,tj->t", q, A, q)))


def standardize(values, epsilon=1e-8):
    """Per-channel z-scoring over all samples and pixels."""
    values = np.asarray(values, dtype=np.float64)
    flat = values.reshape(-1, values.shape[-1])
    mu = flat.mean(axis=0)
    sd = np.sqrt(np.maximum(flat.var(axis=0), epsilon))
    return (values - mu) / sd


def single_pixel_scan(values, labels, num_classes, normalize=True):
    """1-based pixel whose indicator pooling has the largest ``A_nn / B_nn``.

    Pixels with a non-positive ``B_nn`` are skipped and returned in the second
    element; ties go to the lowest pixel.
    """
    if normalize:
        values = standardize(values)
    A, B = naive_scatter(values, labels, num_classes)
    best_n, best = None, -np.inf
    skipped = []
    for n in range(A.shape[0]):
        if B[n, n] <= 0:
            skipped.append(n + 1)
            continue
        r = A[n, n] / B[n, n]
        if r > best:
            best_n, best = n + 1, r
    return best_n, skipped


def brute_separability(pooled, labels, num_classes):
    """Per-location ``(S_b, S_w)`` by looping over samples and classes."""
    pooled = np.asarray(pooled, dtype=np.float64)
    k_total, m_total, _ = pooled.shape
    sb = np.zeros(m_total)
    sw = np.zeros(m_total)
    for m in range(m_total):
        zs = [pooled[k, m] for k in range(k_total)]
        zbar = sum(zs) / k_total
        for q in range(1, num_classes + 1):
            members = [zs[k] for k in range(k_total) if labels[k] == q]
            zq = sum(members) / len(members)
            sb[m] += float(np.dot(zq - zbar, zq - zbar)) / num_classes
            sw[m] += sum(float(np.dot(z - zq, z - zq)) for z in members) / len(members) / num_classes
    return sb, sw
