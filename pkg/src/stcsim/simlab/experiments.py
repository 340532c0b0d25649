"""Experiment runners: from a parsed spec to a result table.

Metric naming: each curve is one metric string, parameterized combos carry a
bracket suffix, e.g. ``C_mc[nt=4,nr=2]`` or ``ber[stacked_ostbc/qam16/ml]``.
Closed-form curves have std_error 0 and trials 0. COND_PDF rows reuse the
snr_db column for the histogram bin center (the table schema is fixed); the
metric name makes the meaning unambiguous.
"""

from itertools import product

import numpy as np

from ..channel import SystemConfig, draw_channel
from ..detect import cond_histogram
from ..inforate import (
    abs_loss_bounds,
    cap_lower_oyman,
    cap_upper_ergodic,
    cap_upper_jensen,
    capacity_from_eigs,
    ergodic_mc,
    gram_eigs,
    rate_stacked_from_eigs,
    ratio_bounds,
    rsa_lower,
    rsa_upper,
    stacked_gram_eigs,
)
from .ber import ber_curve
from .specfile import normalized_constellations, validate_spec
from .table import ResultTable


def _add_closed_form(table, cfg, metric, fn):
    for snr, rho in zip(cfg.snr_db, cfg.rho):
        table.add(snr, metric, fn(rho), 0.0, 0)


def _add_mc(table, metric, estimates):
    for e in estimates:
        table.add(e.snr_db, metric, e.mean, e.std_error, e.trials)


def _rates_combo(table, spec, n_t, n_r, workers):
    cfg = SystemConfig(n_t, n_r, spec.snr_db, spec.seed)
    tag = f"[nt={n_t},nr={n_r}]"
    cap = ergodic_mc(lambda eigs, rho: capacity_from_eigs(eigs, rho, n_t),
                     cfg, spec.trials, prepare=gram_eigs, workers=workers)
    rsa = ergodic_mc(lambda eigs, rho: rate_stacked_from_eigs(eigs, rho, n_t),
                     cfg, spec.trials, prepare=stacked_gram_eigs, workers=workers)
    _add_mc(table, "C_mc" + tag, cap)
    _add_mc(table, "Rsa_mc" + tag, rsa)
    _add_closed_form(table, cfg, "C_ub" + tag, lambda r: cap_upper_ergodic(n_t, n_r, r))
    _add_closed_form(table, cfg, "C_jen" + tag, lambda r: cap_upper_jensen(n_t, n_r, r))
    _add_closed_form(table, cfg, "C_lb" + tag, lambda r: cap_lower_oyman(n_t, n_r, r))
    _add_closed_form(table, cfg, "Rsa_ub" + tag, lambda r: rsa_upper(n_t, n_r, r))
    _add_closed_form(table, cfg, "Rsa_lb" + tag, lambda r: rsa_lower(n_t, n_r, r))


def _paired_rates(cfg, trials):
    """Per-trial capacity and stacked-rate samples, each (trials, n_snr)."""
    rhos = np.asarray(cfg.rho)
    cvals = np.empty((trials, rhos.size))
    rvals = np.empty((trials, rhos.size))
    for t in range(trials):
        h = draw_channel(cfg, t)
        ce = gram_eigs(h)
        se = stacked_gram_eigs(h)
        for k, rho in enumerate(rhos):
            cvals[t, k] = capacity_from_eigs(ce, rho, cfg.n_t)
            rvals[t, k] = rate_stacked_from_eigs(se, rho, cfg.n_t)
    return cvals, rvals


def _ratio_combo(table, spec, n_t, n_r):
    cfg = SystemConfig(n_t, n_r, spec.snr_db, spec.seed)
    tag = f"[nt={n_t},nr={n_r}]"
    cvals, rvals = _paired_rates(cfg, spec.trials)
    n = spec.trials
    for k, (snr, rho) in enumerate(zip(cfg.snr_db, cfg.rho)):
        mc, mr = cvals[:, k].mean(), rvals[:, k].mean()
        vc, vr = cvals[:, k].var(), rvals[:, k].var()
        cov = ((cvals[:, k] - mc) * (rvals[:, k] - mr)).mean()
        ratio = mc / mr
        # delta method for the ratio of two correlated sample means
        var = (vc / mr**2 + (mc**2 / mr**4) * vr - 2.0 * (mc / mr**3) * cov) / n
        table.add(snr, "ratio_mc" + tag, ratio, float(np.sqrt(max(var, 0.0))), n)
        lo, hi = ratio_bounds(n_t, n_r, rho)
        table.add(snr, "ratio_lb" + tag, lo, 0.0, 0)
        table.add(snr, "ratio_ub" + tag, hi, 0.0, 0)


def _abs_loss_combo(table, spec, n_t, n_r):
    cfg = SystemConfig(n_t, n_r, spec.snr_db, spec.seed)
    tag = f"[nt={n_t},nr={n_r}]"
    cvals, rvals = _paired_rates(cfg, spec.trials)
    diffs = cvals - rvals
    n = spec.trials
    for k, (snr, rho) in enumerate(zip(cfg.snr_db, cfg.rho)):
        d = diffs[:, k]
        table.add(snr, "loss_mc" + tag, float(d.mean()),
                  float(d.std() / np.sqrt(n)), n)
        lo, hi = abs_loss_bounds(n_t, n_r, rho)
        table.add(snr, "loss_lb" + tag, lo, 0.0, 0)
        table.add(snr, "loss_ub" + tag, hi, 0.0, 0)


def _cond_block(table, spec):
    n_t, n_r = spec.n_t[0], spec.n_r[0]
    cfg = SystemConfig(n_t, n_r, (0.0,), spec.seed)
    for kind in spec.schemes:
        for with_lr, name in ((False, f"cond_pdf[{kind}]"), (True, f"cond_pdf_lr[{kind}]")):
            hist = cond_histogram(kind, cfg, spec.trials, with_lr=with_lr,
                                  delta=spec.delta)
            centers = 0.5 * (hist.bin_edges[:-1] + hist.bin_edges[1:])
            for c, d in zip(centers, hist.density):
                table.add(float(c), name, float(d), 0.0, spec.trials)
            mean_name = "cond_lnmean_lr" if with_lr else "cond_lnmean"
            table.add(0.0, f"{mean_name}[{kind}]", hist.mean,
                      float(hist.samples.std() / np.sqrt(spec.trials)), spec.trials)


def _ber_block(table, spec, workers):
    n_t, n_r = spec.n_t[0], spec.n_r[0]
    cfg = SystemConfig(n_t, n_r, spec.snr_db, spec.seed)
    consts = normalized_constellations(spec)
    for (kind, cname), det in product(zip(spec.schemes, consts), spec.detectors):
        curve = ber_curve(kind, cname, det, cfg, spec.trials,
                          delta=spec.delta, workers=workers)
        metric = f"ber[{kind}/{cname}/{det}]"
        for pt in curve:
            table.add(pt.snr_db, metric, pt.ber, pt.std_error, spec.trials)
    return cfg


def run_experiment(spec, workers=None):
    """Run one experiment spec and return the filled ResultTable."""
    validate_spec(spec)
    table = ResultTable()
    if spec.kind == "ERGODIC_RATES":
        for n_t, n_r in product(spec.n_t, spec.n_r):
            _rates_combo(table, spec, n_t, n_r, workers)
    elif spec.kind == "RATIO":
        for n_t, n_r in product(spec.n_t, spec.n_r):
            _ratio_combo(table, spec, n_t, n_r)
    elif spec.kind == "ABS_LOSS":
        for n_t, n_r in product(spec.n_t, spec.n_r):
            _abs_loss_combo(table, spec, n_t, n_r)
    elif spec.kind == "COND_PDF":
        _cond_block(table, spec)
    else:
        _ber_block(table, spec, workers)
    return table
