"""End-to-end acceptance suite.

Each test is one numbered acceptance criterion; the terminal summary prints
one PASS/FAIL line per criterion.  All criteria run offline on the bundled
data with pinned seeds, so every number asserted here is reproducible
bit-for-bit.
"""

import subprocess
import sys
import time

import numpy as np
import pytest

from hypersr import data, exprtree, fitness, fixtures, pareto
from hypersr.evolve import EvolutionConfig, random_tree, run_discovery
from hypersr.exprtree import Const
from hypersr.mechanics import (Mode, MooneyRivlin, Ogden3, SymbolicW, Yeoh3,
                               calibrate_baseline, dataset_mse,
                               energy_along_path, invariants, locking_stretch,
                               nominal_stress, ogden_forensic,
                               tangent_stiffness_ut)


def test_criterion_01_invariant_transforms():
    """Invariant identities hold exactly; UT/ET duality to 1e-12."""
    for mode in Mode:
        i1, i2 = invariants(mode, 1.0)
        assert i1 == 0.0 and i2 == 0.0
    i1, i2 = invariants(Mode.UT, 2.0)
    assert i1 == 4.0 + 1.0 - 3.0 and i2 == 4.0 + 0.25 - 3.0
    i1, i2 = invariants(Mode.PS, 2.0)
    assert i1 == i2 == 4.0 + 0.25 - 2.0
    lam = np.random.default_rng(101).uniform(1.0, 9.0, size=100)
    ut = invariants(Mode.UT, lam**-2)
    et = invariants(Mode.ET, lam)
    np.testing.assert_allclose(ut[0], et[0], rtol=1e-12)
    np.testing.assert_allclose(ut[1], et[1], rtol=1e-12)


def test_criterion_02_derivative_engine(iso_skill):
    """1000 random whitelist trees x 10 interior points: AD matches FD to
    1e-5 relative; Hessians bit-symmetric; NaN propagation; under 30 s."""
    rng = np.random.default_rng(202)
    t0 = time.monotonic()
    h = 1e-6
    checked = 0
    for _ in range(1000):
        tree = random_tree(rng, iso_skill, maxsize=14)
        pts = rng.uniform(0.1, 3.0, size=(2, 10))
        vals, grads, hess = exprtree.evaluate_d2_batch(tree, pts)
        assert np.array_equal(hess[0, 1], hess[1, 0], equal_nan=True)
        ok = (np.isfinite(vals) & np.isfinite(grads).all(axis=0)
              & np.isfinite(hess).all(axis=(0, 1))
              & (np.abs(grads).max(axis=0) < 1e4)
              & (np.abs(vals) < 1e6))
        if not np.any(ok):
            continue
        p = pts[:, ok]
        for i in range(2):
            hi, lo = p.copy(), p.copy()
            hi[i] += h
            lo[i] -= h
            fd = (exprtree.evaluate_batch(tree, hi)
                  - exprtree.evaluate_batch(tree, lo)) / (2 * h)
            np.testing.assert_allclose(grads[i][ok], fd, rtol=1e-5, atol=1e-6)
        checked += 1
    assert checked >= 500
    # non-finite evaluations propagate instead of being masked
    bad = exprtree.parse("I1 / (I2 - I2)")
    v, _, _ = exprtree.evaluate_d2_batch(bad, np.ones((2, 3)))
    assert not np.any(np.isfinite(v))
    assert time.monotonic() - t0 < 30.0


def test_criterion_03_stress_energy_consistency(rational_hybrid):
    """Nominal stress equals the stretch-derivative of the path energy to
    1e-6 relative for all model families and all three modes."""
    h = 1e-6
    factor = {Mode.UT: 1.0, Mode.ET: 2.0, Mode.PS: 1.0}
    models = [SymbolicW(rational_hybrid),
              MooneyRivlin(0.2, 0.03),
              Yeoh3(0.24, -0.01, 0.001),
              Ogden3((0.63, 0.0012, -0.01), (1.3, 5.0, -2.0))]
    lam = np.linspace(1.1, 3.5, 40)
    for model in models:
        for mode in Mode:
            p = nominal_stress(model, mode, lam)
            dw = (energy_along_path(model, mode, lam + h)
                  - energy_along_path(model, mode, lam - h)) / (2 * h)
            np.testing.assert_allclose(factor[mode] * p, dw, rtol=1e-6)


def test_criterion_04_rational_hybrid_physics(rational_hybrid, default_grid):
    """The rational-locking hybrid: certified convex, correct locking
    stretch, stiffness floor, and invariant limit."""
    model = SymbolicW(rational_hybrid)
    lam_lock = locking_stretch(model, Mode.UT)
    assert 8.6 <= lam_lock <= 8.9
    lam = np.linspace(1.01, lam_lock * 0.98, 500)
    k = tangent_stiffness_ut(model, lam)
    assert float(np.min(k)) == pytest.approx(0.30, abs=0.05)
    assert fitness.hessian_penalty(rational_hybrid, default_grid) == 0.0
    report = pareto.structural_audit(rational_hybrid, default_grid)
    assert report.convexity == pareto.CERTIFIED
    assert report.locking_invariant_limit == pytest.approx(74.19, abs=0.01)


def test_criterion_05_nonconvex_competitor_rejected(rational_hybrid, sqrt_eq,
                                                    default_grid,
                                                    treloar_split):
    """The nested-root competitor is flagged violated and ranked below the
    certified hybrid even with lower training error."""
    assert fitness.hessian_penalty(sqrt_eq, default_grid) > 0.0
    audit = pareto.structural_audit(sqrt_eq, default_grid)
    assert audit.convexity == pareto.VIOLATED
    assert pareto.FLAG_NESTED_TRANSCENDENTAL in audit.flags

    def point(expr, mse):
        return pareto.ParetoPoint(
            complexity=exprtree.complexity(expr), train_mse=mse,
            holdout_mse=None, expr=expr,
            audit=pareto.structural_audit(expr, default_grid))

    ranked = pareto.rank_candidates([point(sqrt_eq, 0.006),
                                     point(rational_hybrid, 0.008)])
    assert ranked[0].expr == rational_hybrid


def test_criterion_06_baseline_hierarchy(rational_hybrid, treloar_split):
    """Fit-quality ladder on the bundled data: the hybrid beats every
    classical baseline except Ogden, which needs a negative exponent."""
    train, holdout = treloar_split.train, treloar_split.holdout
    hybrid_train, hybrid_per_mode = dataset_mse(SymbolicW(rational_hybrid), train)
    hybrid_holdout, _ = dataset_mse(SymbolicW(rational_hybrid), holdout)
    assert hybrid_train <= 0.02
    assert hybrid_holdout <= 0.015

    mr = calibrate_baseline("mooney_rivlin", train)
    assert mr.mse >= 0.1

    yeoh = calibrate_baseline("yeoh3", train)
    assert yeoh.mse_per_mode[Mode.ET] >= 10.0 * hybrid_per_mode[Mode.ET]

    ogden = calibrate_baseline("ogden3", train)
    assert ogden.mse <= hybrid_train
    assert any(a < 0 for a in ogden.model.alpha)


def test_criterion_07_ogden_forensic():
    """Severe transverse compression amplifies the negative-exponent Ogden
    term by lambda^alpha in [340, 380]; both powers are reported."""
    model = Ogden3((0.62, 0.00118, -0.00981), (1.3, 5.0, -3.18))
    report = ogden_forensic(model, lam_transverse=0.157)
    worst = max(report.terms, key=lambda t: abs(t.stretch_power))
    assert worst.alpha == -3.18
    assert 340.0 <= worst.stretch_power <= 380.0
    assert report.any_ill_conditioned
    for term in report.terms:
        assert term.stretch_power == pytest.approx(0.157**term.alpha)
        assert term.stiffness_power == pytest.approx(
            0.157**(term.alpha - 2.0))


def test_criterion_08_exact_recovery(iso_skill):
    """Noise-free Mooney-Rivlin data, seed 42, 10 iterations x 8 islands:
    the exact generating law is recovered at complexity <= 7 with constants
    within 1%, and the rerun is bit-identical."""
    truth = MooneyRivlin(0.2, 0.05)
    lam = np.linspace(1.05, 6.0, 25)
    train = [data.synth_generate(truth, Mode.UT, lam),
             data.synth_generate(truth, Mode.ET, lam)]
    config = EvolutionConfig(iterations=10, populations=8, rng_seed=42)
    hall = run_discovery(iso_skill, train, config)
    hits = [(c, e, r) for c, (e, r) in hall.entries.items()
            if c <= 7 and r.train_mse < 1e-6]
    assert hits, "no sub-1e-6 candidate at complexity <= 7"
    _, expr, report = min(hits, key=lambda t: t[2].train_mse)
    consts = sorted(n.value for n in exprtree.iter_nodes(expr)
                    if isinstance(n, Const))
    assert consts == pytest.approx([0.05, 0.2], rel=0.01)
    hall2 = run_discovery(iso_skill, train, config)
    assert sorted(hall.entries) == sorted(hall2.entries)
    for c in hall.entries:
        assert hall.entries[c][0] == hall2.entries[c][0]
        assert hall.entries[c][1].composite == hall2.entries[c][1].composite


def test_criterion_09_full_discovery(iso_skill, treloar_split, tmp_path):
    """Full pipeline on the bundled data, 25 iterations x 8 islands, pinned
    seed: the recommended model is admissible and accurate, and the front
    CSV is byte-identical across reruns."""
    config = EvolutionConfig(iterations=25, populations=8, rng_seed=2)
    pconf = fitness.default_penalty_config(treloar_split.train, iso_skill)

    def run(tag):
        hall = run_discovery(iso_skill, treloar_split.train, config, pconf)
        front = pareto.extract_front(hall, treloar_split.holdout,
                                     pconf.samples)
        path = tmp_path / f"front_{tag}.csv"
        pareto.write_front_csv(front, path)
        return front, path.read_bytes()

    front, csv1 = run("a")
    rec = pareto.rank_candidates(front)[0]
    assert fitness.hessian_penalty(rec.expr, pconf.samples) == 0.0
    assert rec.train_mse <= 0.05
    assert rec.audit.convexity == pareto.CERTIFIED

    _, csv2 = run("b")
    assert csv1 == csv2


def test_criterion_10_fiber_constraints():
    """Anisotropic gates: bare quadratic fiber energy is penalized in
    compression, the bracketed reinforcement passes, and the Macaulay form
    is exactly zero on every compressive state."""
    i4 = np.linspace(-0.5, 1.5, 61)
    bare = exprtree.parse("0.5 * I4 ^ 2.0", var_names=("I4",))
    assert fitness.fiber_compression_penalty(bare, i4) > 0.0

    hgo = fixtures.hgo_fiber_expr(k1=0.8, k2=1.2)
    assert fitness.fiber_compression_penalty(hgo, i4) == 0.0
    assert fitness.fiber_convexity_penalty(hgo, i4) == 0.0

    compressive = i4[i4 <= 0.0].reshape(1, -1)
    w = exprtree.evaluate_batch(hgo, compressive)
    assert np.all(w == 0.0)


def test_criterion_11_offline_completeness():
    """The whole pipeline (import, fixtures, a discovery step, audit, agent
    refusal) runs in a fresh process without the HTTP stack ever loading."""
    script = (
        "import sys\n"
        "import numpy as np\n"
        "from hypersr import agent, data, evolve, fitness, pareto, skills\n"
        "from hypersr.mechanics import Mode, MooneyRivlin\n"
        "skill = skills.builtin_isotropic()\n"
        "lam = np.linspace(1.05, 4.0, 20)\n"
        "train = [data.synth_generate(MooneyRivlin(0.2, 0.05), m, lam)\n"
        "         for m in (Mode.UT, Mode.ET)]\n"
        "cfg = evolve.EvolutionConfig(iterations=1, populations=2,\n"
        "                             population_size=8, rng_seed=0)\n"
        "hall = evolve.run_discovery(skill, train, cfg)\n"
        "pconf = fitness.default_penalty_config(train, skill)\n"
        "pareto.extract_front(hall, (), pconf.samples)\n"
        "provider = agent.ProviderConfig('https://example.invalid', 'K', 'm')\n"
        "try:\n"
        "    agent.synthesize_skill('x', provider)\n"
        "except agent.AgentError:\n"
        "    pass\n"
        "else:\n"
        "    raise SystemExit('agent did not refuse offline use')\n"
        "assert 'requests' not in sys.modules, 'HTTP stack was imported'\n"
        "print('offline ok')\n"
    )
    proc = subprocess.run([sys.executable, "-c", script],
                          capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr
    assert "offline ok" in proc.stdout
