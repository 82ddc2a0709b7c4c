"""Acceptance checks for the full pipeline.

Each check returns ``(passed, detail)``. Under pytest every check prints one
``PASS``/``FAIL`` line to the terminal; ``python3 tests/test_acceptance.py``
prints the same lines without pytest.
"""
import functools
import math
import sys
import tempfile
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent))

from conftest import make_link, random_taps  # noqa: E402
from wiener_imdd.channel import build_conv_operator, propagate  # noqa: E402
from wiener_imdd.cli import main  # noqa: E402
from wiener_imdd.config import DEFAULT_SNR_GRID_DB  # noqa: E402
from wiener_imdd.constellation import build_pam  # noqa: E402
from wiener_imdd.sim import run_sweep, sample_statistics  # noqa: E402
from wiener_imdd.wiener import output_stats, solve_wf  # noqa: E402

V = 100_000
SEED = 2024
BTB_GRID = tuple(s for s in DEFAULT_SNR_GRID_DB if s <= 26.28)


def db(x):
    return 10.0 * math.log10(x)


@functools.lru_cache(maxsize=None)
def _link(length_km):
    return make_link(length_km)


@functools.lru_cache(maxsize=None)
def sweep(Q, length_km=20.0, grid=DEFAULT_SNR_GRID_DB, variants=("matched", "naive")):
    ln = _link(length_km)
    return run_sweep(ln.op, ln.cir, Q, ln.p_tx, list(grid), variants, V, SEED)


def rows(Q, variant, length_km=20.0, grid=DEFAULT_SNR_GRID_DB):
    return [r for r in sweep(Q, length_km, grid) if r.variant == variant]


def at(rs, snr):
    return min(rs, key=lambda r: abs(r.snr_el_db - snr))


def check_statistics_oracle(n_instances=20, n_draws=10**7):
    worst = 0.0
    for i in range(n_instances):
        rng = np.random.default_rng(1000 + i)
        M, K = int(rng.integers(1, 6)), int(rng.integers(1, 7))
        op = build_conv_operator(random_taps(rng, M), K)
        p = rng.uniform(0.2, 2.0)
        pam = build_pam(int(rng.integers(2, 9)), p, rng.uniform(0.05, 1.0) * 2 * p)
        sig = float(rng.uniform(0.0, 0.5))
        st = output_stats(op, pam.mean, pam.var, pam.mu4, sig)
        mc = sample_statistics(op, pam.points, sig, n_draws, 5000 + i)
        for ana, emp, se in ((st.c_su, mc.c_su, mc.c_su_se), (st.mu_u, mc.mu_u, mc.mu_u_se), (st.c_uu, mc.c_uu, mc.c_uu_se)):
            z = np.abs(ana - emp) / np.maximum(se, 1e-300)
            z[np.abs(ana - emp) <= 1e-12] = 0.0
            worst = max(worst, float(z.max()))
    return worst <= 4.0, f"{n_instances} instances, {n_draws:.0e} draws, worst entry {worst:.2f} standard errors (limit 4)"


def check_scalar_closed_form():
    op = build_conv_operator([1.0], 1)
    pam = build_pam(2, 1.0, 2.0)
    ok = True
    for sig in (0.0, 0.5, 3.0):
        st = output_stats(op, pam.mean, pam.var, pam.mu4, sig)
        ok &= st.c_su[0] == 2.0 and st.mu_u[0] == 2.0 and st.c_uu[0, 0] == 4.0 + sig
    f = solve_wf(output_stats(op, pam.mean, pam.var, pam.mu4, 0.0), pam.mean)
    s = pam.points
    err = np.max(np.abs(f.apply((s**2)[:, None]) - s))
    ok &= err == 0.0
    return bool(ok), f"c=2, mu_u=2, C=4+sigma^2 exact; noiseless recovery error {err:g}"


def check_zero_dispersion_identity():
    ln = _link(0.0)
    rng = np.random.default_rng(3)
    s = build_pam(4, 1.0, 1.5).points[rng.integers(0, 4, 20_000)]
    u = np.abs(propagate(s, ln.cir.taps)) ** 2
    even = u[ln.cir.center_index :: 2][: s.size]
    rel = float(np.max(np.abs(even - s**2)) / np.max(s**2))
    return rel < 1e-3, f"max relative error {rel:.2e} over {s.size} symbols (limit 1e-3)"


def check_rate_saturation():
    need = {4: 1.95, 8: 2.90, 16: 3.70}
    got = {Q: rows(Q, "matched")[-1].rate_bpcu for Q in need}
    btb = at(rows(4, "matched", 0.0, BTB_GRID), 26.28)
    ok = all(got[Q] >= need[Q] for Q in need) and btb.rate_bpcu >= 1.95
    detail = ", ".join(f"{Q}-PAM {got[Q]:.4f} (>= {need[Q]})" for Q in need)
    return ok, f"{detail}; back-to-back 4-PAM at {btb.snr_el_db:.2f} dB {btb.rate_bpcu:.4f} (>= 1.95)"


def check_naive_floor():
    ok = True
    parts = []
    best = math.inf
    for Q in (4, 8, 16):
        rs = rows(Q, "naive")
        plateau = [r.rate_bpcu for r in rs if r.snr_el_db >= 40.0]
        ok &= all(abs(x - 1.10) <= 0.10 for x in plateau)
        best = min(best, min(db(r.esr_empirical) for r in rs))
        parts.append(f"{Q}-PAM plateau {min(plateau):.3f}..{max(plateau):.3f}")
    ok &= best >= -7.0
    return bool(ok), "; ".join(parts) + f"; best naive ESR {best:.2f} dB (floor -7.0)"


def check_esr_plateau():
    rs = rows(4, "matched")
    a, b = at(rs, 40.72), at(rs, 65.60)
    ea, eb = db(a.esr_empirical), db(b.esr_empirical)
    ok = abs(ea + 16.3) <= 1.5 and abs(eb + 24.7) <= 1.5
    return ok, f"{a.snr_el_db:.2f} dB: {ea:.2f} dB (target -16.3 +/- 1.5); {b.snr_el_db:.2f} dB: {eb:.2f} dB (target -24.7 +/- 1.5)"


def check_shaping_trend():
    ok = True
    parts = []
    for Q in (4, 8, 16):
        rs = rows(Q, "matched")
        low = [r.d_norm for r in rs if r.snr_el_db < 15.0]
        d = [r.d_norm for r in rs]
        ok &= all(abs(x - 1.0) <= 0.01 for x in low)
        ok &= all(y <= x * (1 + 1e-3) for x, y in zip(d, d[1:]))
        parts.append(f"{Q}-PAM min plateau {min(low):.4f}")
    d4 = at(rows(4, "matched"), 40.72).d_norm
    ok &= abs(d4 - 0.29) <= 0.05
    return bool(ok), "; ".join(parts) + f"; non-increasing; 4-PAM d_norm at 40.72 dB = {d4:.4f} (0.29 +/- 0.05)"


def check_empirical_vs_analytic():
    worst, n = 0.0, 0
    for rs in [rows(Q, "matched") for Q in (4, 8, 16)] + [rows(4, "matched", 0.0, BTB_GRID)]:
        for r in rs:
            if db(r.esr_analytic) > -25.0:
                worst = max(worst, abs(db(r.esr_empirical) - db(r.esr_analytic)))
                n += 1
    return worst < 0.2, f"{n} matched points, worst |empirical - analytic| = {worst:.3f} dB (limit 0.2)"


def check_determinism():
    with tempfile.TemporaryDirectory() as tmp:
        cfg = Path(tmp) / "c.yaml"
        cfg.write_text("sweep:\n  snr_grid_db: [0.0, 21.77, 40.72, 65.6]\n  n_symbols: 20000\n")
        outs = []
        for threads in ("1", "4"):
            out = Path(tmp) / f"t{threads}.csv"
            code = main(["sweep", "--config", str(cfg), "--seed", "99", "--threads", threads, "--out", str(out)])
            outs.append((code, out.read_bytes()))
    ok = outs[0][0] == outs[1][0] == 0 and outs[0][1] == outs[1][1]
    return ok, f"threads 1 vs 4: {len(outs[0][1])} bytes, identical={outs[0][1] == outs[1][1]}"


CHECKS = [
    (1, "statistics oracle", check_statistics_oracle),
    (2, "scalar closed form", check_scalar_closed_form),
    (3, "zero-dispersion identity", check_zero_dispersion_identity),
    (4, "rate saturation", check_rate_saturation),
    (5, "naive floor", check_naive_floor),
    (6, "ESR plateau values", check_esr_plateau),
    (7, "shaping trend", check_shaping_trend),
    (8, "empirical vs analytic ESR", check_empirical_vs_analytic),
    (9, "determinism across threads", check_determinism),
]


def _report(num, name, fn):
    ok, detail = fn()
    return ok, f"criterion {num} [{name}]: {'PASS' if ok else 'FAIL'} - {detail}"


def _run(num, capsys):
    _, name, fn = CHECKS[num - 1]
    ok, line = _report(num, name, fn)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


def test_criterion_1_statistics_oracle(capsys):
    _run(1, capsys)


def test_criterion_2_scalar_closed_form(capsys):
    _run(2, capsys)


def test_criterion_3_zero_dispersion_identity(capsys):
    _run(3, capsys)


def test_criterion_4_rate_saturation(capsys):
    _run(4, capsys)


def test_criterion_5_naive_floor(capsys):
    _run(5, capsys)


def test_criterion_6_esr_plateau(capsys):
    _run(6, capsys)


def test_criterion_7_shaping_trend(capsys):
    _run(7, capsys)


def test_criterion_8_empirical_vs_analytic(capsys):
    _run(8, capsys)


def test_criterion_9_determinism(capsys):
    _run(9, capsys)


if __name__ == "__main__":
    failed = 0
    for num, name, fn in CHECKS:
        ok, line = _report(num, name, fn)
        print(line, flush=True)
        failed += not ok
    sys.exit(1 if failed else 0)
