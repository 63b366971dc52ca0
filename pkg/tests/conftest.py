"""Shared test helpers: scripted random sources and naive law oracles."""

import numpy as np


class StubRng:
    """Generator stand-in that returns scripted uniforms, then 0.5 forever.

    A uniform of exactly 0.5 maps to a zero Laplace draw, so running an
    estimator through a fresh StubRng strips out all mechanism noise.
    """

    def __init__(self, uniforms=()):
        self._queue = list(uniforms)

    def _next(self) -> float:
        return self._queue.pop(0) if self._queue else 0.5

    def random(self, size=None):
        if size is None:
            return self._next()
        return np.array([self._next() for _ in range(int(size))])

    def normal(self, loc=0.0, scale=1.0, size=None):
        if size is None:
            return float(loc)
        return np.full(int(size), float(loc))


def naive_bin_probabilities(values, xmin, xmax, m, epsilon):
    """Direct width * exp(eps/2 * utility) normalization, no log-space tricks."""
    values = np.sort(np.asarray(values, dtype=np.float64))
    edges = np.concatenate(([xmin], values, [xmax]))
    widths = np.diff(edges)
    n = values.size
    utilities = np.array(
        [i + 1 - m if i < m else m - i for i in range(n + 1)], dtype=np.float64)
    weights = widths * np.exp(0.5 * epsilon * utilities)
    return weights / weights.sum()


def density_at_points(db, m, epsilon, bounds, ys):
    """Vector of exact densities at the points ys, sharing one bin layout."""
    from dpci import build_bins

    layout = build_bins(db, bounds, m)
    logw = layout.log_weights(epsilon)
    peak = logw.max()
    log_z = peak + np.log(np.sum(np.exp(logw - peak)))
    idx = np.searchsorted(layout.edges, ys, side="right") - 1
    return np.exp(0.5 * epsilon * layout.utilities[idx] - log_z)
