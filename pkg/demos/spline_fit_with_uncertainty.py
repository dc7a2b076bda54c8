#!/usr/bin/env python3
"""Fit a regression spline to noisy data and read off its uncertainty.

The first step of the two-step estimator is ordinary least squares on a
B-spline basis. This script fits a cubic spline to noisy samples of a sine
wave, then checks three things the estimation layer relies on:

  * the residual variance estimate tracks the true noise level,
  * the pointwise variance gives honest error bars for the curve,
  * the derivative of the fit tracks the true derivative away from the ends.
"""

import numpy as np

from gradmatch import (
    BSplineBasis,
    KnotSequence,
    eval_fit,
    eval_fit_derivative,
    fit_least_squares,
    pointwise_variance,
    uniform_knots,
)


def main():
    rng = np.random.default_rng(11)
    n, sigma = 200, 0.1
    times = np.linspace(0.0, 6.0, n)
    truth = np.sin(times)
    y = truth + sigma * rng.standard_normal(n)

    interval = (0.0, 6.0)
    knots = KnotSequence(interval, tuple(uniform_knots(interval, 8)), order=4)
    fit = fit_least_squares(BSplineBasis(knots), times, y)

    print("regression spline on noisy sin(t), n=%d, sigma=%.2f" % (n, sigma))
    print("basis dimension:", fit.basis.dimension)
    print("estimated noise sd: %.4f (true %.2f)" % (np.sqrt(fit.residual_variance[0]), sigma))
    print()

    probe = np.array([0.5, 1.5, 3.0, 4.5, 5.5])
    curve = eval_fit(fit, probe)[:, 0]
    band = 2.0 * np.sqrt(pointwise_variance(fit, probe)[:, 0])
    slope = eval_fit_derivative(fit, probe)[:, 0]
    print("   t     fit    +-2se   truth   d/dt fit   cos(t)")
    for t, c, b, s in zip(probe, curve, band, slope):
        print("%5.2f  %6.3f  %6.3f  %6.3f  %9.3f  %7.3f" % (t, c, b, np.sin(t), s, np.cos(t)))

    covered = np.abs(curve - np.sin(probe)) <= band
    print()
    print("true curve inside the 2-se band at %d of %d probe points" % (covered.sum(), probe.size))


if __name__ == "__main__":
    main()
