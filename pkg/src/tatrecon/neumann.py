"""Neumann-series inversion ``f = sum_m K^m A chi h`` and the time-reversal baseline."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .elliptic import project_hd
from .grid import Region, ScalarField, hd_norm, l2_rel_error
from .time_reversal import time_reverse
from .wave import DEFAULT_CFL, BoundaryTrace, PMLProfile, forward_measure

log = logging.getLogger(__name__)

STOP_REASONS = ("tolerance", "max_terms", "norm_increase")


@dataclass
class NSOptions:
    max_terms: int = 21
    tol: float = 0.05
    region_K: Optional[Region] = None
    cfl: float = DEFAULT_CFL

    def __post_init__(self):
        if self.max_terms < 1:
            raise ValueError("max_terms must be at least 1")
        if self.tol < 0:
            raise ValueError("tol must be non-negative")


@dataclass
class ReconstructionReport:
    iterates: list                       # partial sums g_0 .. g_k
    term_norms: list                     # hd_norm of each K^m A h
    rel_errors: list = field(default_factory=list)
    stop_reason: str = "max_terms"
    k_used: int = 0

    @property
    def result(self) -> ScalarField:
        return self.iterates[-1]

    @property
    def tr(self) -> ScalarField:
        return self.iterates[0]

    def summary(self) -> dict:
        return {"k_used": self.k_used, "n_terms": self.k_used + 1,
                "stop_reason": self.stop_reason,
                "term_norms": [float(x) for x in self.term_norms],
                "rel_errors": [float(x) for x in self.rel_errors],
                "rel_error": float(self.rel_errors[-1]) if self.rel_errors else None}


@dataclass(frozen=True)
class StopDecision:
    reason: Optional[str]     # None means continue
    m: int


def stop_decision(term_norms, max_terms: int, tol: float, partial: bool = False) -> StopDecision:
    """Decide after term ``m = len(term_norms) - 1`` has been computed.

    A ``norm_increase`` decision means term m is discarded.
    """
    norms = list(term_norms)
    if not norms:
        raise ValueError("need at least one term norm")
    m = len(norms) - 1
    if partial and m >= 1 and norms[m] > norms[m - 1]:
        return StopDecision("norm_increase", m)
    if norms[0] == 0.0 or (m >= 1 and norms[m] / norms[0] < tol):
        return StopDecision("tolerance", m)
    if len(norms) >= max_terms:
        return StopDecision("max_terms", m)
    return StopDecision(None, m)


def _clamp(f: ScalarField, omega: Region) -> ScalarField:
    return f.with_data(np.where(omega.mask, f.data, 0.0))


def reconstruct_ns(trace: BoundaryTrace, c: ScalarField, T: Optional[float] = None,
                   opts: Optional[NSOptions] = None, pml: Optional[PMLProfile] = None,
                   truth: Optional[ScalarField] = None) -> ReconstructionReport:
    """Partial sums ``g_N = sum_{m<=N} K^m A(chi h)``, with ``K = Id - A chi Lambda``
    (or ``Id - Pi_K A chi Lambda`` when ``opts.region_K`` is set)."""
    opts = opts or NSOptions()
    T = trace.T if T is None else T
    grid = c.grid
    omega = Region.omega(grid)
    if pml is None:
        pml = PMLProfile.for_grid(grid)
    region_K = opts.region_K

    def back_project(tr: BoundaryTrace) -> ScalarField:
        g = time_reverse(tr, c, T)
        return project_hd(g, region_K) if region_K is not None else g

    term = _clamp(back_project(trace), omega)
    partial_sum = term
    report = ReconstructionReport([partial_sum], [hd_norm(term, omega)])
    if truth is not None:
        report.rel_errors.append(l2_rel_error(partial_sum, truth, omega))

    decision = stop_decision(report.term_norms, opts.max_terms, opts.tol, trace.partial)
    while decision.reason is None:
        measured = forward_measure(term, c, T, pml, cfl=opts.cfl, mask=trace.mask)
        term = _clamp(term - back_project(measured), omega)
        report.term_norms.append(hd_norm(term, omega))
        decision = stop_decision(report.term_norms, opts.max_terms, opts.tol, trace.partial)
        if decision.reason == "norm_increase":
            break
        partial_sum = partial_sum + term
        report.iterates.append(partial_sum)
        if truth is not None:
            report.rel_errors.append(l2_rel_error(partial_sum, truth, omega))
        log.info("term %d: norm %.4e%s", decision.m, report.term_norms[-1],
                 f", rel error {report.rel_errors[-1]:.4f}" if truth is not None else "")
    report.stop_reason = decision.reason
    report.k_used = len(report.iterates) - 1
    return report


def reconstruct_tr(trace: BoundaryTrace, c: ScalarField, T: Optional[float] = None,
                   region_K: Optional[Region] = None) -> ScalarField:
    """Time-reversal baseline: the zeroth Neumann iterate A(chi h)."""
    return reconstruct_ns(trace, c, T, NSOptions(max_terms=1, region_K=region_K)).iterates[0]
