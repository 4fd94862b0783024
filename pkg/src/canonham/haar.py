"""Haar-measure moments on U(d): exact second/fourth moments and Monte Carlo sampling."""

import numpy as np

from .operators import as_matrix


class HaarSampler:
    """Seeded stream of Haar-random unitaries.

    Unitaries are drawn as QR factors of complex Ginibre matrices, with the
    columns of ``Q`` multiplied by the phases of ``diag(R)`` so the factor
    is unique and the distribution exactly Haar.

    Per-worker streams come from :meth:`spawn`, which seeds a child generator
    from the entropy pair ``(seed, worker_index)`` via ``numpy.random.SeedSequence``.
    """

    def __init__(self, d, seed=0):
        self.d = int(d)
        self.seed = int(seed)
        self._rng = np.random.default_rng(np.random.SeedSequence(self.seed))

    def spawn(self, worker_index):
        child = HaarSampler(self.d, self.seed)
        child._rng = np.random.default_rng(np.random.SeedSequence([self.seed, int(worker_index)]))
        return child

    def sample_batch(self, n):
        """``n`` independent unitaries, shape ``(n, d, d)``."""
        d = self.d
        # one contiguous draw per sample, so the stream does not depend on batch sizes
        g = self._rng.standard_normal((n, d, d, 2))
        z = (g[..., 0] + 1j * g[..., 1]) / np.sqrt(2.0)
        q, r = np.linalg.qr(z)
        diag = np.diagonal(r, axis1=-2, axis2=-1)
        return q * (diag / np.abs(diag))[:, None, :]

    def sample_unitary(self):
        return self.sample_batch(1)[0]


def sample_unitary(sampler):
    return sampler.sample_unitary()


def second_moment(m):
    """``int dU U^dag m U = tr(m)/d * I``."""
    m = as_matrix(m)
    d = m.shape[0]
    return np.trace(m) / d * np.eye(d)


def tabulate_bilinear(f, d):
    """Values ``F[a, c, b, e] = f(|a><c|, |b><e|)`` of a bilinear functional."""
    units = np.zeros((d, d, d, d), complex)
    for a in range(d):
        for c in range(d):
            units[a, c, a, c] = 1.0
    table = np.empty((d, d, d, d), complex)
    for a in range(d):
        for c in range(d):
            for b in range(d):
                for e in range(d):
                    table[a, c, b, e] = f(units[a, c], units[b, e])
    return table


def _as_table(f, d):
    if callable(f):
        return tabulate_bilinear(f, d)
    table = np.asarray(f, dtype=complex)
    if table.shape != (d, d, d, d):
        raise ValueError(f"expected a table of shape {(d,) * 4}, got {table.shape}")
    return table


def fourth_moment_contract(f, d):
    """Haar average of ``f(U r U^dag, U r U^dag)`` for a pure reference state ``r``.

    For pure states the pair average is ``(I + SWAP) / (d(d+1))``, so only
    the ``d^2`` diagonal and ``d^2`` exchange elementary pairs contribute.

    Args:
        f: bilinear functional, either a callable on two ``d x d`` matrices
            or its table of values from :func:`tabulate_bilinear`.
        d: Hilbert-space dimension.
    """
    table = _as_table(f, d)
    direct = np.einsum("aabb->", table)
    exchange = np.einsum("abba->", table)
    return (direct + exchange) / (d * (d + 1))


def four_moment_operator(d):
    """``int dU U (x) U^dag (x) U (x) U^dag`` from the four permutation operators.

    Returned as a tensor ``T[i1, i2, i3, i4, j1, j2, j3, j4]`` (row indices, then
    column indices).  The two pair swaps carry ``1/(d^2-1)`` and the two
    4-cycles ``-1/(d(d^2-1))``.  Builds ``d^8`` entries, so it is meant as a
    check for small ``d``.
    """
    t = np.zeros((d,) * 8)
    j1, j2, j3, j4 = np.indices((d,) * 4).reshape(4, -1)
    c_pair = 1.0 / (d * d - 1)
    c_cycle = -1.0 / (d * (d * d - 1))
    # (12)(34), (14)(23), and the two 4-cycles, as maps |j1 j2 j3 j4> -> |i1 i2 i3 i4>
    for rows, c in (
        ((j2, j1, j4, j3), c_pair),
        ((j4, j3, j2, j1), c_pair),
        ((j2, j3, j4, j1), c_cycle),
        ((j4, j1, j2, j3), c_cycle),
    ):
        np.add.at(t, (*rows, j1, j2, j3, j4), c)
    return t


def fourth_moment_contract_permutation(f, d, reference=0):
    """Same average as :func:`fourth_moment_contract`, via the permutation formula.

    ``E[r_ac r_be] = int U_{a0} U^dag_{0c} U_{b0} U^dag_{0e}`` is read off the
    four-moment operator with the reference state ``|reference>``.
    """
    table = _as_table(f, d)
    t = four_moment_operator(d)
    r = reference
    pair = t[:, r, :, r, r, :, r, :]  # indices (a, b, c, e)
    return np.einsum("acbe,abce->", table, pair)


def mc_average(sampler, n_samples, estimand, vectorized=False, chunk=20000):
    """Monte Carlo mean and standard error of ``estimand(U)`` over Haar ``U``.

    Args:
        sampler: a :class:`HaarSampler`; its stream advances.
        n_samples: number of samples (>= 2).
        estimand: function of a unitary returning a scalar or array.  With
            ``vectorized=True`` it receives a stack ``(n, d, d)`` and returns
            an array with leading axis ``n``.

    Returns:
        ``(mean, stderr)``, elementwise for array-valued estimands; the error
        is computed separately for real and imaginary parts and combined as
        ``stderr = se_re + 1j * se_im``.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    count = 0
    mean = m2_re = m2_im = None
    while count < n_samples:
        n = min(chunk, n_samples - count)
        us = sampler.sample_batch(n)
        vals = np.asarray(estimand(us)) if vectorized else np.array([estimand(u) for u in us])
        c_mean = vals.mean(axis=0)
        c_re = ((vals.real - np.real(c_mean)) ** 2).sum(axis=0)
        c_im = ((np.imag(vals) - np.imag(c_mean)) ** 2).sum(axis=0)
        if mean is None:
            mean, m2_re, m2_im = c_mean, c_re, c_im
        else:
            # pairwise merge of running moments
            delta = c_mean - mean
            tot = count + n
            m2_re = m2_re + c_re + np.real(delta) ** 2 * count * n / tot
            m2_im = m2_im + c_im + np.imag(delta) ** 2 * count * n / tot
            mean = mean + delta * n / tot
        count += n
    se_re = np.sqrt(m2_re / (n_samples - 1) / n_samples)
    se_im = np.sqrt(m2_im / (n_samples - 1) / n_samples)
    if not np.iscomplexobj(mean):
        return mean, se_re
    return mean, se_re + 1j * se_im
