"""Helpers shared between the solver tests and the acceptance suite."""

import math

from isccopt.cost import Scenario
from isccopt.solvers import min_rate_time


def make_scenario(**kw):
    base = dict(t_max=0.8, r_t=0.85, p_max=1.0, nu_max=8e6, nu_s=1e11,
                kappa=1e-21, bandwidth=1e5, g_over_bn0=100.0, t0=1e-5,
                m_chirps=50000, fs=1e7, q_max=6, splits=tuple(range(1, 8)))
    base.update(kw)
    return Scenario(**base)


def pc_objective(ctx, sc, t, nu):
    """Communication plus computation energy at inverse rate t, frequency nu."""
    return ctx.a1 * math.expm1(math.log(2.0) / t) * t / sc.g_over_bn0 \
        + sc.kappa * ctx.a2 * nu**2


def kkt_residuals(ctx, sc, sol):
    """Relative stationarity and complementary-slackness residuals of a
    power/frequency solution."""
    g = sc.g_over_bn0
    z = math.log(2.0) / sol.t
    phi_t = (ctx.a1 / g) * (math.exp(z) * (1.0 - z) - 1.0)
    mu2 = 0.0
    t_min = min_rate_time(sc)
    if sol.t <= t_min * (1 + 1e-9):
        mu2 = phi_t + sol.mu1 * ctx.a1
    stat_t = phi_t + sol.mu1 * ctx.a1 - mu2
    scale_t = max(abs(phi_t), sol.mu1 * ctx.a1, 1e-300)
    mu3 = 0.0
    if sol.nu_e >= sc.nu_max * (1 - 1e-9):
        mu3 = sol.mu1 * ctx.a2 / sol.nu_e**2 - 2 * sc.kappa * ctx.a2 * sol.nu_e
    stat_nu = 2 * sc.kappa * ctx.a2 * sol.nu_e - sol.mu1 * ctx.a2 / sol.nu_e**2 + mu3
    scale_nu = max(2 * sc.kappa * ctx.a2 * sol.nu_e, 1e-300)
    comp2 = mu2 * (t_min - sol.t)
    comp3 = mu3 * (sol.nu_e - sc.nu_max)
    return (abs(stat_t) / scale_t, abs(stat_nu) / scale_nu,
            abs(comp2) / max(abs(mu2) * t_min, 1e-300) if mu2 else 0.0,
            abs(comp3) / max(abs(mu3) * sc.nu_max, 1e-300) if mu3 else 0.0)
