"""Outer enumeration over split point and quantization bits with inner
alternating optimization, the three ablation baselines, and parameter
sweeps."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace

from . import netmodel
from .accuracy import AccuracyParams, PenaltyTerms, min_sensing_power
from .cost import Allocation, CostBreakdown, Scenario, comm_cost, total_cost
from .errors import InfeasibleError
from .quant import delta_coeff
from .solvers import (SubproblemContext, min_rate_time, solve_pc_nue,
                      solve_rho_ps)

ORIGINS = ("proposed", "on_server", "on_device", "no_prune")


@dataclass(frozen=True)
class Solution:
    """Outcome of one solve: allocation + cost when feasible, otherwise the
    per-(l, q) infeasibility reasons."""

    origin: str
    feasible: bool
    alloc: Allocation | None
    cost: CostBreakdown | None
    iterations: int
    trace: tuple[float, ...]
    reasons: tuple[tuple[int, int, str], ...] = ()

    @property
    def e_total(self) -> float:
        return self.cost.e_total if self.cost is not None else math.inf


def penalty_terms(net, l: int, ap: AccuracyParams) -> PenaltyTerms:
    """Split-dependent accuracy penalty coefficients.

    The quantization coefficient is dropped for a split after the last
    layer: nothing is transmitted there, so quantization cannot hurt.
    """
    prune_c = netmodel.pruning_penalty_coeff(net, l) if l >= 1 else 0.0
    if l < net.depth:
        quant_c = delta_coeff(net, l, ap.f_min, ap.f_max)
    else:
        quant_c = 0.0
    return PenaltyTerms(prune_coeff=prune_c, quant_coeff=quant_c,
                        tail_norm=netmodel.tail_norm_product(net, l))


def _rho_step(l, q, p_c, nu_e, net, sc, terms, ap, eps_rho, fix_rho):
    if fix_rho is None:
        return solve_rho_ps(l, q, p_c, nu_e, net, sc, terms, ap, eps_rho=eps_rho)
    t_comm, _ = comm_cost(l, q if q is not None else 2, p_c, net, sc)
    t_server = netmodel.cum_flops(net, l + 1, net.depth, 1.0) / sc.nu_s
    t1 = sc.t_max - sc.t_sen - t_server - t_comm
    if netmodel.cum_flops(net, 1, l, fix_rho, warn=False) > t1 * nu_e:
        raise InfeasibleError("latency_budget",
                              f"edge compute at rho={fix_rho} misses the deadline")
    return fix_rho, min_sensing_power(fix_rho, q, terms, ap, sc.r_t, sc.p_max)


def _pc_step(l, q, rho, p_c, nu_e, net, sc):
    """Optimal (p_c, nu_e) given the rest; handles the no-communication
    (l = L) and no-computation (zero edge FLOPs) corners."""
    t_server = netmodel.cum_flops(net, l + 1, net.depth, 1.0) / sc.nu_s
    t2 = sc.t_max - sc.t_sen - t_server
    a2 = netmodel.cum_flops(net, 1, l, rho, warn=False)
    if l == net.depth:
        if t2 <= 0:
            raise InfeasibleError("latency_budget", "sensing alone exceeds the deadline")
        if a2 > 0:
            nu_req = a2 / t2
            if nu_req > sc.nu_max * (1.0 + 1e-12):
                raise InfeasibleError("latency_budget",
                                      f"needs {nu_req:.4g} FLOP/s > {sc.nu_max:.4g}")
            nu_e = min(nu_req, sc.nu_max)
        return p_c, nu_e
    a1 = netmodel.feature_dim(net, l) * q / sc.bandwidth
    if a2 <= 0:
        # nothing to compute on the edge: stretch transmission to the budget
        t_star = t2 / a1
        if t_star < min_rate_time(sc):
            raise InfeasibleError("latency_budget",
                                  "upload misses the deadline even at p_max")
        return math.expm1(math.log(2.0) / t_star) / sc.g_over_bn0, nu_e
    sol = solve_pc_nue(SubproblemContext(a1=a1, a2=a2, t2=t2), sc)
    return sol.p_c, sol.nu_e


def alternate_inner(l, q, net, sc: Scenario, terms: PenaltyTerms,
                    ap: AccuracyParams, rel_tol: float = 1e-6,
                    max_iter: int = 100, eps_rho: float = 1e-6,
                    fix_rho: float | None = None,
                    origin: str = "proposed",
                    init: tuple[float, float] | None = None) -> Solution:
    """Alternating optimization of (rho, p_s) and (p_c, nu_e) for one
    (l, q) pair, starting from the most permissive (p_max, nu_max) unless
    an explicit (p_c, nu_e) start is given.

    Each block is solved to optimality, so the objective trace is
    nonincreasing; stops on relative change below rel_tol or after
    max_iter rounds. Raises InfeasibleError if either subproblem is empty.
    """
    p_c, nu_e = init if init is not None else (sc.p_max, sc.nu_max)
    trace = []
    prev = None
    rho = p_s = None
    for it in range(1, max_iter + 1):
        rho, p_s = _rho_step(l, q, p_c, nu_e, net, sc, terms, ap, eps_rho, fix_rho)
        p_c, nu_e = _pc_step(l, q, rho, p_c, nu_e, net, sc)
        alloc = Allocation(l=l, q=q if q is not None else 2, rho=rho,
                           p_s=p_s, p_c=p_c, nu_e=nu_e)
        breakdown = total_cost(alloc, net, sc)
        obj = breakdown.e_total
        trace.append(obj)
        if prev is not None and abs(prev - obj) <= rel_tol * max(obj, 1e-300):
            break
        prev = obj
    return Solution(origin=origin, feasible=True, alloc=alloc, cost=breakdown,
                    iterations=it, trace=tuple(trace))


def _warm_start(l, q, net, sc):
    """(p_c, nu_e) KKT optimum for the unpruned edge model; None when even
    rho=1 misses the deadline. Second deterministic start that keeps the
    alternation from stalling in the aggressive-pruning corner."""
    try:
        return _pc_step(l, q, 1.0, sc.p_max, sc.nu_max, net, sc)
    except InfeasibleError:
        return None


def _enumerate(net, sc, ap, fix_rho, origin, rel_tol, max_iter, eps_rho):
    """Shared outer loop of the proposed method and the no-prune baseline."""
    splits = sorted(sc.splits or net.split_candidates)
    candidates = []
    reasons = []
    for l in splits:
        on_device_split = l == net.depth
        terms = penalty_terms(net, l, ap)
        qs = [None] if on_device_split else list(range(2, sc.q_max + 1))
        for q in qs:
            try:
                sol = alternate_inner(l, q, net, sc, terms, ap, rel_tol=rel_tol,
                                      max_iter=max_iter, eps_rho=eps_rho,
                                      fix_rho=fix_rho, origin=origin)
            except InfeasibleError as err:
                reasons.append((l, q if q is not None else 2, err.reason))
                continue
            if fix_rho is None:
                warm = _warm_start(l, q, net, sc)
                if warm is not None:
                    try:
                        alt = alternate_inner(l, q, net, sc, terms, ap,
                                              rel_tol=rel_tol, max_iter=max_iter,
                                              eps_rho=eps_rho, origin=origin,
                                              init=warm)
                    except InfeasibleError:
                        alt = None
                    if alt is not None and alt.cost.e_total < sol.cost.e_total:
                        sol = alt
            candidates.append((sol.cost.e_total, sol.alloc.q, l, sol))
    if not candidates:
        return Solution(origin=origin, feasible=False, alloc=None, cost=None,
                        iterations=0, trace=(), reasons=tuple(reasons))
    candidates.sort(key=lambda c: (c[0], c[1], c[2]))
    best = candidates[0][3]
    return replace(best, reasons=tuple(reasons))


def solve_scenario(net, sc: Scenario, ap: AccuracyParams, rel_tol: float = 1e-6,
                   max_iter: int = 100, eps_rho: float = 1e-6) -> Solution:
    """Minimum-energy allocation over all (l, q) pairs.

    Enumerates every admissible split and bit width, runs the alternating
    inner loop on each, and returns the feasible solution of least energy
    (ties broken by smaller q, then smaller l). When every pair is
    infeasible the Solution carries one reason per pair.
    """
    return _enumerate(net, sc, ap, None, "proposed", rel_tol, max_iter, eps_rho)


def solve_baseline(kind: str, net, sc: Scenario, ap: AccuracyParams,
                   rel_tol: float = 1e-6, max_iter: int = 100,
                   eps_rho: float = 1e-6) -> Solution:
    """Ablation baselines.

    on_server: upload the raw (quantized) input, all compute on the server.
    on_device: split after the last layer, pruning allowed, no uplink.
    no_prune: full enumeration with the pruning ratio pinned to 1.
    """
    if kind == "on_server":
        return _solve_on_server(net, sc, ap)
    if kind == "on_device":
        terms = penalty_terms(net, net.depth, ap)
        try:
            sol = alternate_inner(net.depth, None, net, sc, terms, ap,
                                  rel_tol=rel_tol, max_iter=max_iter,
                                  eps_rho=eps_rho, origin="on_device")
        except InfeasibleError as err:
            return Solution(origin="on_device", feasible=False, alloc=None,
                            cost=None, iterations=0, trace=(),
                            reasons=((net.depth, 2, err.reason),))
        return sol
    if kind == "no_prune":
        return _enumerate(net, sc, ap, 1.0, "no_prune", rel_tol, max_iter, eps_rho)
    raise ValueError(f"unknown baseline {kind!r}")


def _solve_on_server(net, sc, ap):
    q_raw = sc.q_max
    terms = penalty_terms(net, 0, ap)
    try:
        p_s = min_sensing_power(1.0, q_raw, terms, ap, sc.r_t, sc.p_max)
        t_server = netmodel.cum_flops(net, 1, net.depth, 1.0) / sc.nu_s
        t2 = sc.t_max - sc.t_sen - t_server
        a1 = net.input_dim * q_raw / sc.bandwidth
        if t2 <= 0 or t2 / a1 < min_rate_time(sc):
            raise InfeasibleError("latency_budget",
                                  "raw upload misses the deadline even at p_max")
    except InfeasibleError as err:
        return Solution(origin="on_server", feasible=False, alloc=None,
                        cost=None, iterations=0, trace=(),
                        reasons=((0, q_raw, err.reason),))
    t_star = t2 / a1
    p_c = math.expm1(math.log(2.0) / t_star) / sc.g_over_bn0
    alloc = Allocation(l=0, q=q_raw, rho=1.0, p_s=p_s, p_c=p_c, nu_e=sc.nu_max)
    breakdown = total_cost(alloc, net, sc)
    return Solution(origin="on_server", feasible=True, alloc=alloc,
                    cost=breakdown, iterations=1, trace=(breakdown.e_total,))


@dataclass(frozen=True)
class SweepRow:
    axis: str
    value: float
    solution: Solution


def apply_axis(sc: Scenario, axis: str, value: float) -> Scenario:
    """Scenario with one swept quantity replaced. The snr axis takes the
    linear SNR per watt (g/(B*N0))."""
    if axis == "t_max":
        return replace(sc, t_max=value)
    if axis == "r_t":
        return replace(sc, r_t=value)
    if axis == "snr":
        return replace(sc, g_over_bn0=value)
    raise ValueError(f"unknown sweep axis {axis!r}")


def sweep(net, sc: Scenario, ap: AccuracyParams, axis: str, values,
          origins: tuple[str, ...] = ORIGINS, **solver_opts) -> list[SweepRow]:
    """Re-solve the proposed method and every baseline per swept value.

    Infeasible points are recorded as infeasible rows; the sweep continues.
    """
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    rows = []
    for value in values:
        sc_v = apply_axis(sc, axis, value)
        for origin in origins:
            if origin == "proposed":
                sol = solve_scenario(net, sc_v, ap, **solver_opts)
            else:
                sol = solve_baseline(origin, net, sc_v, ap, **solver_opts)
            rows.append(SweepRow(axis=axis, value=value, solution=sol))
    return rows


CSV_COLUMNS = ("scenario_id", "origin", "l", "q", "rho", "p_s", "p_c", "nu_e",
               "e_sen", "e_comp", "e_comm", "e_total", "t_total", "feasible",
               "iters")


def solution_row(scenario_id: str, sol: Solution) -> dict:
    row = {"scenario_id": scenario_id, "origin": sol.origin,
           "feasible": sol.feasible, "iters": sol.iterations}
    if sol.feasible:
        a, c = sol.alloc, sol.cost
        row.update(l=a.l, q=a.q, rho=repr(a.rho), p_s=repr(a.p_s),
                   p_c=repr(a.p_c), nu_e=repr(a.nu_e), e_sen=repr(c.e_sen),
                   e_comp=repr(c.e_comp), e_comm=repr(c.e_comm),
                   e_total=repr(c.e_total), t_total=repr(c.t_total))
    else:
        row.update({k: "" for k in CSV_COLUMNS if k not in row})
    return row


def write_solutions_csv(path, rows) -> None:
    """Write solution rows (dicts keyed by CSV_COLUMNS) deterministically."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def solution_to_dict(sol: Solution) -> dict:
    """JSON-ready view of a Solution, full precision, including the trace."""
    out = {"origin": sol.origin, "feasible": sol.feasible,
           "iterations": sol.iterations, "trace": list(sol.trace),
           "reasons": [list(r) for r in sol.reasons]}
    if sol.feasible:
        a, c = sol.alloc, sol.cost
        out["allocation"] = {"l": a.l, "q": a.q, "rho": a.rho, "p_s": a.p_s,
                             "p_c": a.p_c, "nu_e": a.nu_e}
        out["cost"] = {"e_sen": c.e_sen, "e_comp": c.e_comp, "e_comm": c.e_comm,
                       "e_total": c.e_total, "t_sen": c.t_sen,
                       "t_comp_edge": c.t_comp_edge,
                       "t_comp_server": c.t_comp_server, "t_comm": c.t_comm,
                       "t_total": c.t_total}
    return out


def solution_from_dict(data: dict) -> Solution:
    """Inverse of solution_to_dict (costs are reconstructed, not re-derived)."""
    if not data.get("feasible"):
        return Solution(origin=data["origin"], feasible=False, alloc=None,
                        cost=None, iterations=data.get("iterations", 0),
                        trace=tuple(data.get("trace", ())),
                        reasons=tuple(tuple(r) for r in data.get("reasons", ())))
    a = data["allocation"]
    c = data["cost"]
    alloc = Allocation(l=a["l"], q=a["q"], rho=a["rho"], p_s=a["p_s"],
                       p_c=a["p_c"], nu_e=a["nu_e"])
    cost = CostBreakdown(e_sen=c["e_sen"], e_comp=c["e_comp"], e_comm=c["e_comm"],
                         t_sen=c["t_sen"], t_comp_edge=c["t_comp_edge"],
                         t_comp_server=c["t_comp_server"], t_comm=c["t_comm"])
    return Solution(origin=data["origin"], feasible=True, alloc=alloc, cost=cost,
                    iterations=data["iterations"], trace=tuple(data["trace"]),
                    reasons=tuple(tuple(r) for r in data.get("reasons", ())))


def dump_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
