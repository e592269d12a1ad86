"""Continuum-mechanics layer: invariants, stresses, calibration, forensics."""

import numpy as np
import pytest

from hypersr import fixtures, mechanics
from hypersr.mechanics import (
    Mode,
    MooneyRivlin,
    NeoHookean,
    Ogden3,
    SymbolicW,
    Yeoh3,
    calibrate_baseline,
    dataset_mse,
    energy_along_path,
    invariants,
    locking_stretch,
    model_from_params,
    model_params,
    nominal_stress,
    ogden_forensic,
    ogden_principal_hessian,
    tangent_stiffness_ut,
)


class TestInvariants:
    def test_reference_state_is_zero(self):
        for mode in Mode:
            i1, i2 = invariants(mode, 1.0)
            assert i1 == 0.0 and i2 == 0.0

    def test_known_values(self):
        i1, i2 = invariants(Mode.UT, 2.0)
        assert i1 == pytest.approx(2.0)
        assert i2 == pytest.approx(1.25)
        i1, i2 = invariants(Mode.PS, 2.0)
        assert i1 == i2 == pytest.approx(2.25)

    def test_ut_et_duality(self, rng):
        # equibiaxial tension at lam is the same material state as uniaxial
        # compression at lam**-2, so the invariant pairs coincide exactly
        lam = rng.uniform(1.0, 9.0, size=100)
        ut1, ut2 = invariants(Mode.UT, lam**-2)
        et1, et2 = invariants(Mode.ET, lam)
        np.testing.assert_allclose(ut1, et1, rtol=1e-12)
        np.testing.assert_allclose(ut2, et2, rtol=1e-12)

    def test_derivatives_match_finite_differences(self, rng):
        h = 1e-6
        lam = rng.uniform(1.1, 6.0, size=50)
        for mode in Mode:
            d1, d2, dd1, dd2 = mechanics.invariant_derivatives(mode, lam)
            a1, a2 = invariants(mode, lam + h)
            b1, b2 = invariants(mode, lam - h)
            np.testing.assert_allclose(d1, (a1 - b1) / (2 * h), rtol=1e-5)
            np.testing.assert_allclose(d2, (a2 - b2) / (2 * h), rtol=1e-5)
            e1, e2, _, _ = mechanics.invariant_derivatives(mode, lam + h)
            f1, f2, _, _ = mechanics.invariant_derivatives(mode, lam - h)
            np.testing.assert_allclose(dd1, (e1 - f1) / (2 * h), rtol=1e-5)
            np.testing.assert_allclose(dd2, (e2 - f2) / (2 * h), rtol=1e-5)

    def test_rejects_nonpositive_stretch(self):
        with pytest.raises(ValueError):
            invariants(Mode.UT, 0.0)

    def test_principal_stretches_incompressible(self, rng):
        lam = rng.uniform(0.2, 5.0, size=20)
        for mode in Mode:
            l1, l2, l3 = mechanics.principal_stretches(mode, lam)
            np.testing.assert_allclose(l1 * l2 * l3, 1.0, rtol=1e-12)


class TestStress:
    MODELS = [
        NeoHookean(0.27),
        MooneyRivlin(0.21, 0.028),
        Yeoh3(0.24, -0.01, 0.001),
        Ogden3((0.63, 0.0012, -0.01), (1.3, 5.0, -2.0)),
        SymbolicW(fixtures.rational_hybrid_expr()),
    ]
    # dW/dlam picks up the work of both in-plane directions in equibiaxial
    # tension, so it equals 2P there and P in the other modes
    FACTOR = {Mode.UT: 1.0, Mode.ET: 2.0, Mode.PS: 1.0}

    @pytest.mark.parametrize("model", MODELS, ids=lambda m: type(m).__name__)
    @pytest.mark.parametrize("mode", list(Mode))
    def test_stress_is_energy_gradient(self, model, mode):
        h = 1e-6
        lam = np.linspace(1.1, 3.5, 30)
        p = nominal_stress(model, mode, lam)
        dw = (energy_along_path(model, mode, lam + h)
              - energy_along_path(model, mode, lam - h)) / (2 * h)
        np.testing.assert_allclose(self.FACTOR[mode] * p, dw, rtol=1e-6)

    def test_reference_state_is_stress_free(self):
        for model in self.MODELS:
            for mode in Mode:
                assert nominal_stress(model, mode, 1.0) == pytest.approx(
                    0.0, abs=1e-12)

    def test_tangent_stiffness_matches_fd(self):
        h = 1e-5
        lam = np.linspace(1.2, 4.0, 25)
        for model in self.MODELS:
            k = tangent_stiffness_ut(model, lam)
            fd = (energy_along_path(model, Mode.UT, lam + h)
                  - 2 * energy_along_path(model, Mode.UT, lam)
                  + energy_along_path(model, Mode.UT, lam - h)) / h**2
            np.testing.assert_allclose(k, fd, rtol=1e-4, atol=1e-8)


class TestLocking:
    def test_rational_hybrid_locks_in_tension(self, rational_hybrid):
        model = SymbolicW(rational_hybrid)
        lam_ut = locking_stretch(model, Mode.UT)
        lam_et = locking_stretch(model, Mode.ET)
        assert lam_ut == pytest.approx(8.772827340916027, abs=1e-6)
        assert lam_et == pytest.approx(6.212479572882904, abs=1e-6)

    def test_polynomial_models_do_not_lock(self):
        for model in (NeoHookean(0.27), MooneyRivlin(0.2, 0.03)):
            assert locking_stretch(model, Mode.UT) is None


class TestOgdenHessian:
    MODEL = Ogden3((0.63, 0.0012, -0.01), (1.3, 5.0, -2.0))

    def test_matches_finite_differences(self, rng):
        h = 1e-5

        def w(l1, l2):
            out = 0.0
            for mu, al in zip(self.MODEL.mu, self.MODEL.alpha):
                out += (mu / al) * (l1**al + l2**al + (l1 * l2)**-al - 3.0)
            return out

        for _ in range(20):
            l1, l2 = rng.uniform(0.5, 2.5, size=2)
            h11, h12, h22 = ogden_principal_hessian(self.MODEL, l1, l2)
            fd11 = (w(l1 + h, l2) - 2 * w(l1, l2) + w(l1 - h, l2)) / h**2
            fd22 = (w(l1, l2 + h) - 2 * w(l1, l2) + w(l1, l2 - h)) / h**2
            fd12 = (w(l1 + h, l2 + h) - w(l1 + h, l2 - h)
                    - w(l1 - h, l2 + h) + w(l1 - h, l2 - h)) / (4 * h**2)
            assert h11 == pytest.approx(fd11, rel=1e-4, abs=1e-6)
            assert h22 == pytest.approx(fd22, rel=1e-4, abs=1e-6)
            assert h12 == pytest.approx(fd12, rel=1e-4, abs=1e-6)


class TestParamsRoundTrip:
    @pytest.mark.parametrize("kind,params", [
        ("neo_hookean", [0.27]),
        ("mooney_rivlin", [0.2, 0.03]),
        ("yeoh3", [0.24, -0.01, 0.001]),
        ("ogden3", [0.63, 0.0012, -0.01, 1.3, 5.0, -2.0]),
    ])
    def test_round_trip(self, kind, params):
        assert model_params(model_from_params(kind, params)) == params

    def test_wrong_arity_rejected(self):
        with pytest.raises(ValueError):
            model_from_params("yeoh3", [0.1, 0.2])
        with pytest.raises(ValueError):
            model_from_params("nope", [0.1])


class TestCalibration:
    def test_deterministic(self, treloar_split):
        a = calibrate_baseline("mooney_rivlin", treloar_split.train)
        b = calibrate_baseline("mooney_rivlin", treloar_split.train)
        assert model_params(a.model) == model_params(b.model)
        assert a.mse == b.mse

    def test_exact_recovery_from_synthetic(self):
        from hypersr.data import synth_generate
        truth = MooneyRivlin(0.2, 0.05)
        lam = np.linspace(1.05, 6.0, 25)
        train = [synth_generate(truth, Mode.UT, lam),
                 synth_generate(truth, Mode.ET, lam)]
        res = calibrate_baseline("mooney_rivlin", train)
        assert res.mse < 1e-20
        assert model_params(res.model) == pytest.approx([0.2, 0.05],
                                                        rel=1e-6)

    def test_model_hierarchy_on_bundled_data(self, treloar_split):
        mses = {k: calibrate_baseline(k, treloar_split.train).mse
                for k in ("neo_hookean", "mooney_rivlin", "yeoh3", "ogden3")}
        assert mses["ogden3"] < mses["mooney_rivlin"] < mses["neo_hookean"]

    def test_yeoh_fails_equibiaxial_hardest(self, treloar_split):
        res = calibrate_baseline("yeoh3", treloar_split.train)
        assert res.mse_per_mode[Mode.ET] > res.mse_per_mode[Mode.UT]

    def test_unknown_kind(self, treloar_split):
        with pytest.raises(ValueError):
            calibrate_baseline("gent", treloar_split.train)

    def test_dataset_mse_weighted_by_point(self, treloar_split):
        model = NeoHookean(0.27)
        overall, per_mode = dataset_mse(model, treloar_split.train)
        n = sum(len(ds) for ds in treloar_split.train)
        manual = sum(per_mode[ds.mode] * len(ds)
                     for ds in treloar_split.train) / n
        assert overall == pytest.approx(manual, rel=1e-12)


class TestOgdenForensic:
    def test_negative_exponent_amplifies_under_compression(self):
        model = Ogden3((0.62, 0.00118, -0.00981), (1.3, 5.0, -3.18))
        report = ogden_forensic(model, lam_transverse=0.157)
        assert report.any_ill_conditioned
        worst = max(report.terms, key=lambda t: abs(t.stretch_power))
        assert worst.alpha == -3.18
        assert 340.0 <= worst.stretch_power <= 380.0
        # both the energy and stiffness powers are reported per term
        assert all(t.stiffness_power == pytest.approx(
            0.157**(t.alpha - 2.0)) for t in report.terms)

    def test_benign_exponents_pass(self):
        model = Ogden3((0.3, 0.1, 0.05), (2.0, 1.0, 0.5))
        report = ogden_forensic(model, lam_transverse=0.5)
        assert not report.any_ill_conditioned

    def test_rejects_tensile_transverse_stretch(self):
        model = Ogden3((0.3, 0.1, 0.05), (2.0, 1.0, 0.5))
        with pytest.raises(ValueError):
            ogden_forensic(model, lam_transverse=1.2)
