"""Brute-force reference computations shared by the test modules."""

import math


def product_weights(history, decay, K, R):
    """Weights by direct products over a newest-first list of (region, multipliers)."""
    w = [[1.0] * R for _ in range(K)]
    for age, (region, mults) in enumerate(history):
        for k in range(K):
            w[k][region] *= mults[k] ** (decay ** age)
    return w


def weighted_mean(outputs, weights):
    return math.fsum(o * w for o, w in zip(outputs, weights)) / math.fsum(weights)
