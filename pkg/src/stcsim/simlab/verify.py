"""Fast self-check suite: one PASS/FAIL line per invariant, exit code style.

These are smoke-level versions of the property tests: small trial counts,
fixed seeds, checks that rely on exact structure rather than statistics, so
the whole run stays well under a minute while still exercising every layer
(algebra, numerics, lattice reduction, detection, the batched BER engine,
and the spec/CSV round trips).
"""

import os
import tempfile

import numpy as np

from ..channel import (
    SystemConfig,
    draw_bits,
    draw_channel,
    draw_noise,
    stream,
    NOISE_STREAM,
)
from ..constellations import make_constellation, map_bits
from ..detect import lr_zf_detect, ml_detect, zf_detect, real_equivalent_channel
from ..inforate import (
    abs_loss_bounds,
    cap_lower_oyman,
    cap_upper_ergodic,
    cap_upper_jensen,
    instantaneous_capacity,
    rate_stacked,
    ratio_bounds,
    rsa_lower,
    rsa_upper,
)
from ..lattice import lll_reduce
from ..numerics import expint_scaled
from ..simlab.ber import ber_curve
from ..simlab.specfile import ExperimentSpec, emit_spec, load_spec
from ..simlab.table import ResultTable, emit_csv, load_csv
from ..stcodes import (
    encode_qstbc4,
    encode_stacked,
    equivalent_channel_qstbc,
    equivalent_channel_stacked,
    qstbc_decompose,
    qstbc_subsystem_outputs,
    receive_to_equivalent_qstbc,
    receive_to_equivalent_stacked,
)


def _crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(0.5)


def _check_stacked_model():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(25):
        n_t = int(rng.choice([2, 4, 6]))
        n_r = int(rng.integers(1, 4))
        h = _crandn(rng, n_r, n_t)
        x = _crandn(rng, n_t)
        y = encode_stacked(x, n_t) @ h.T
        lhs = receive_to_equivalent_stacked(y)
        rhs = equivalent_channel_stacked(h) @ x
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst < 1e-12, f"max deviation {worst:.2e}"


def _check_qstbc_model():
    rng = np.random.default_rng(12)
    worst = 0.0
    for _ in range(25):
        n_r = int(rng.integers(1, 4))
        h = _crandn(rng, n_r, 4)
        x = _crandn(rng, 4)
        y = encode_qstbc4(x) @ h.T
        lhs = receive_to_equivalent_qstbc(y)
        rhs = equivalent_channel_qstbc(h) @ x
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst < 1e-12, f"max deviation {worst:.2e}"


def _check_qstbc_subsystems():
    const = make_constellation("qam4")
    rng = np.random.default_rng(13)
    for t in range(30):
        n_r = int(rng.integers(1, 3))
        h = _crandn(rng, n_r, 4)
        bits = rng.integers(0, 2, 8).astype(np.uint8)
        x = map_bits(bits, const)
        y = encode_qstbc4(x) @ h.T + 0.4 * _crandn(rng, 4, n_r)
        y_q = receive_to_equivalent_qstbc(y)
        full = ml_detect(y_q, equivalent_channel_qstbc(h), const)
        dec = qstbc_decompose(h)
        y_o, y_e = qstbc_subsystem_outputs(h, y_q, dec)
        odd = ml_detect(y_o, dec.h_eq, const)
        even = ml_detect(y_e, dec.h_eq, const)
        got = np.array([odd.symbols[0], even.symbols[1], odd.symbols[1], even.symbols[0]])
        if not np.array_equal(got, full.symbols):
            return False, f"trial {t}: subsystem and joint ML disagree"
    return True, "30/30 joint == decoupled"


def _check_expint():
    from scipy.special import expn

    worst = 0.0
    for m in range(1, 9):
        for x in (0.05, 0.3, 1.0, 2.5, 8.0, 30.0):
            ref = float(np.exp(x) * expn(m, x))
            got = expint_scaled(m, x)
            worst = max(worst, abs(got - ref) / ref)
    return worst < 1e-8, f"max rel err {worst:.2e}"


def _check_nr1_identity():
    rng = np.random.default_rng(14)
    worst = 0.0
    for _ in range(20):
        n_t = int(rng.choice([2, 4, 6]))
        h = _crandn(rng, 1, n_t)
        for rho in (0.5, 10.0, 1000.0):
            worst = max(worst, abs(rate_stacked(h, rho) - instantaneous_capacity(h, rho)))
    return worst < 1e-10, f"max |R_sA - C| = {worst:.2e}"


def _check_bound_order():
    for n_t, n_r in ((4, 2), (8, 2), (4, 4), (2, 1), (6, 1)):
        for snr in (0.0, 10.0, 20.0, 30.0):
            rho = 10.0 ** (snr / 10.0)
            if cap_lower_oyman(n_t, n_r, rho) > cap_upper_ergodic(n_t, n_r, rho) + 1e-12:
                return False, f"capacity band inverted at ({n_t},{n_r},{snr})"
            if cap_lower_oyman(n_t, n_r, rho) > cap_upper_jensen(n_t, n_r, rho) + 1e-12:
                return False, f"capacity/Jensen band inverted at ({n_t},{n_r},{snr})"
            if rsa_lower(n_t, n_r, rho) > rsa_upper(n_t, n_r, rho) + 1e-12:
                return False, f"stacked-rate band inverted at ({n_t},{n_r},{snr})"
            lo, hi = abs_loss_bounds(n_t, n_r, rho)
            if lo > hi:
                return False, f"loss band inverted at ({n_t},{n_r},{snr})"
            lo, hi = ratio_bounds(n_t, n_r, rho)
            if not (1.0 <= lo <= hi <= 2.0):
                return False, f"ratio band escapes [1,2] at ({n_t},{n_r},{snr})"
    return True, "all bands ordered"


def _check_lll():
    rng = np.random.default_rng(15)
    for t in range(150):
        m, n = (8, 8) if t % 2 == 0 else (16, 8)
        b = rng.standard_normal((m, n))
        red = lll_reduce(b)
        if not np.allclose(red.reduced @ red.transform, b, atol=1e-8):
            return False, f"trial {t}: basis change does not reproduce the input"
        det = round(abs(np.linalg.det(red.transform.astype(float))))
        if det != 1:
            return False, f"trial {t}: |det R| = {det}, not unimodular"
        if not np.array_equal(red.transform @ red.transform_inv, np.eye(n, dtype=np.int64)):
            return False, f"trial {t}: transform_inv is not the inverse"
    return True, "150/150 unimodular round trips"


def _check_noiseless_detection():
    rng = np.random.default_rng(16)
    const = make_constellation("qam16")
    for t in range(30):
        h = _crandn(rng, 2, 4)
        bits = rng.integers(0, 2, 16).astype(np.uint8)
        x = map_bits(bits, const)
        y = equivalent_channel_stacked(h) @ x
        z = zf_detect(y, equivalent_channel_stacked(h), const)
        if not np.array_equal(z.bits, bits):
            return False, f"trial {t}: noiseless zf missed"
        m = real_equivalent_channel("stacked_ostbc", h)
        lr = lr_zf_detect(np.concatenate([y.real, y.imag]), m, const)
        if not np.array_equal(lr.bits, bits):
            return False, f"trial {t}: noiseless lr-zf missed"
    return True, "30/30 exact at zero noise"


def _check_ber_engine():
    cfg = SystemConfig(4, 2, (0.0, 12.0, 24.0), seed=77)
    const = make_constellation("qam4")
    trials = 24
    for det in ("ml", "lr_zf"):
        curve = ber_curve("stacked_ostbc", "qam4", det, cfg, trials)
        errs = np.zeros(3, dtype=int)
        for t in range(trials):
            h = draw_channel(cfg, t)
            bits = draw_bits(cfg, t, 8)
            x = map_bits(bits, const)
            heq = equivalent_channel_stacked(h)
            g = encode_stacked(x, 4)
            for k, snr in enumerate(cfg.snr_db):
                n = draw_noise((2, 2), snr, 4, stream(cfg.seed, t, NOISE_STREAM))
                y = receive_to_equivalent_stacked(g @ h.T + n)
                if det == "ml":
                    r = ml_detect(y, heq, const)
                else:
                    m = real_equivalent_channel("stacked_ostbc", h)
                    r = lr_zf_detect(np.concatenate([y.real, y.imag]), m, const)
                errs[k] += int(np.count_nonzero(r.bits != bits))
        got = np.array([p.bit_errors for p in curve])
        if not np.array_equal(got, errs):
            return False, f"{det}: engine counts {got.tolist()} vs one-shot {errs.tolist()}"
    return True, "batched engine matches one-shot detectors"


def _check_spec_roundtrip():
    spec = ExperimentSpec(
        kind="BER", n_t=(4,), n_r=(4,), snr_db=(0.0, 4.0, 8.0), trials=500,
        seed=3, schemes=("stacked_ostbc", "qstbc4"),
        constellations=("qam4", "qam16"), detectors=("ml", "lr_zf"),
    )
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "x.spec")
        emit_spec(spec, path)
        back = load_spec(path)
    return back == spec, "emit/load round trip"


def _check_csv_roundtrip():
    t = ResultTable()
    t.add(0.0, "C_mc[nt=2,nr=1]", 1.2345678901234567, 0.01, 100)
    t.add(10.0, "C_mc[nt=2,nr=1]", 3.5, 0.02, 100)
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "x.csv")
        emit_csv(t, path)
        back = load_csv(path)
    same = back.sorted_rows() == t.sorted_rows()
    return same, "emit/load round trip"


_CHECKS = (
    ("stacked equivalent model", _check_stacked_model),
    ("quasi-orthogonal equivalent model", _check_qstbc_model),
    ("quasi-orthogonal decoupled ML", _check_qstbc_subsystems),
    ("scaled exponential integrals", _check_expint),
    ("single-receive-antenna rate identity", _check_nr1_identity),
    ("closed-form bound ordering", _check_bound_order),
    ("lattice reduction round trips", _check_lll),
    ("noiseless detection is exact", _check_noiseless_detection),
    ("batched BER engine", _check_ber_engine),
    ("spec file round trip", _check_spec_roundtrip),
    ("CSV round trip", _check_csv_roundtrip),
)


def run_checks():
    """Run every check, print one line each, return the number of failures."""
    failures = 0
    for name, fn in _CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        failures += 0 if ok else 1
    return failures
