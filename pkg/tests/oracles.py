"""Independent reference computations used across the test modules."""
import numpy as np
from scipy import integrate, stats


def quad_cdf(logpdf, lo, hi, support_lo=0.0, n_grid=2000, log_grid=True):
    """Callable CDF built by adaptive quadrature of ``exp(logpdf)``.

    The CDF is tabulated on a grid spanning ``[lo, hi]`` (geometric when
    ``log_grid``) and linearly interpolated; mass below ``lo`` is
    integrated from ``support_lo``.
    """
    f = lambda x: np.exp(logpdf(x))
    grid = np.geomspace(lo, hi, n_grid) if log_grid else np.linspace(lo, hi, n_grid)
    first = integrate.quad(f, support_lo, grid[0], limit=200)[0] if support_lo < grid[0] else 0.0
    pieces = [integrate.quad(f, a, b, limit=200)[0] for a, b in zip(grid[:-1], grid[1:])]
    cdf = np.concatenate([[first], first + np.cumsum(pieces)])

    def F(x):
        # outside the grid the error is bounded by the tail mass left out
        return np.interp(x, grid, cdf, left=first, right=1.0)

    return F, cdf[-1]


def ks_stat(sample, F):
    """Two-sided Kolmogorov-Smirnov distance to the CDF ``F``."""
    return stats.kstest(np.ravel(sample), F).statistic


def sample_range(sample, lo_q=1e-4, hi_q=1 - 1e-4):
    lo, hi = np.quantile(sample, [lo_q, hi_q])
    return lo, hi


def batch_means_se(x, n_batches=50):
    """Standard error of the mean of a correlated series."""
    x = np.asarray(x, dtype=np.float64)
    m = len(x) // n_batches
    b = x[: m * n_batches].reshape(n_batches, m).mean(axis=1)
    return b.std(ddof=1) / np.sqrt(n_batches)


def dense_b_posterior(X, Y, Psi, prior_var):
    """Posterior of vec(B) by explicit Kronecker algebra.

    Model: vec(Y) ~ N((I_K kron X) vec(B), Psi kron I_n), vec(B) ~ N(0, diag(vec(Omega))).
    """
    n, p = X.shape
    K = Y.shape[1]
    D = np.kron(np.eye(K), X)
    Sinv = np.kron(np.linalg.inv(Psi), np.eye(n))
    prec = D.T @ Sinv @ D + np.diag(1.0 / prior_var.T.ravel())
    W = np.linalg.inv(prec)
    M = W @ D.T @ Sinv @ Y.T.ravel()
    return M, W


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def gl_cdf(logpdf, lo, hi, support_lo=0.0, n_grid=3000, log_grid=True):
    """Like :func:`quad_cdf` but with 16-point Gauss-Legendre per grid cell.

    ``logpdf`` must accept arrays.  Much faster than adaptive quadrature
    and accurate to ~1e-10 on the fine grids used here; the mass below
    ``lo`` still comes from adaptive quadrature.
    """
    grid = np.geomspace(lo, hi, n_grid) if log_grid else np.linspace(lo, hi, n_grid)
    a, b = grid[:-1, None], grid[1:, None]
    x = 0.5 * (b - a) * _GL_NODES + 0.5 * (a + b)
    cells = 0.5 * (b - a)[:, 0] * (np.exp(logpdf(x)) @ _GL_WEIGHTS)
    f = lambda t: np.exp(logpdf(np.asarray(t)))
    first = integrate.quad(f, support_lo, grid[0], limit=200)[0] if support_lo < grid[0] else 0.0
    cdf = np.concatenate([[first], first + np.cumsum(cells)])
    return (lambda t: np.interp(t, grid, cdf, left=first, right=1.0)), cdf[-1]
