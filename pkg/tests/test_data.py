"""Dataset loading, validation, unit conversion, splitting, synthesis."""

import numpy as np
import pytest

from hypersr import data
from hypersr.data import DataError, Dataset, KG_PER_CM2_TO_MPA
from hypersr.mechanics import Mode, MooneyRivlin


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


GOOD = "# mode: UT\nlambda,stress_mpa\n1.0,0.0\n1.5,0.4\n2.0,0.8\n3.0,1.4\n"


class TestLoadCsv:
    def test_good_file(self, tmp_path):
        ds = data.load_csv(write(tmp_path, GOOD))
        assert ds.mode is Mode.UT
        assert len(ds) == 4
        assert ds.stress[2] == 0.8

    def test_unit_conversion(self, tmp_path):
        mpa = data.load_csv(write(tmp_path, GOOD))
        legacy = GOOD.replace("# mode: UT\n", "# mode: UT\n# unit: kg/cm2\n")
        kg = data.load_csv(write(tmp_path, legacy, "kg.csv"))
        np.testing.assert_allclose(kg.stress, mpa.stress * KG_PER_CM2_TO_MPA)

    @pytest.mark.parametrize("text,needle", [
        ("lambda,stress_mpa\n1.0,0.0\n1.5,0.4\n2.0,0.8\n3.0,1.4\n",
         "mode"),
        ("# mode: XX\nlambda,stress_mpa\n1.0,0.0\n", "unknown mode"),
        ("# mode: UT\n# unit: psi\nlambda,stress_mpa\n1.0,0.0\n1.5,0.4\n"
         "2.0,0.8\n3.0,1.4\n", "unknown unit"),
        ("# mode: UT\nlambda,stress_mpa\n1.0,0.0\n1.5,abc\n2.0,0.8\n"
         "3.0,1.4\n", ":4:"),
        ("# mode: UT\nlambda,stress_mpa\n1.0,0.0,9\n1.5,0.4\n2.0,0.8\n"
         "3.0,1.4\n", ":3:"),
        ("# mode: UT\nlambda,stress_mpa\n1.0,0.0\n2.0,0.8\n1.5,0.4\n"
         "3.0,1.4\n", "increasing"),
        ("# mode: UT\nlambda,stress_mpa\n1.0,0.0\n1.5,-0.4\n2.0,0.8\n"
         "3.0,1.4\n", "non-negative"),
        ("# mode: UT\nlambda,stress_mpa\n1.0,0.0\n1.5,0.4\n", "at least 4"),
    ])
    def test_rejects_with_location(self, tmp_path, text, needle):
        with pytest.raises(DataError) as exc:
            data.load_csv(write(tmp_path, text))
        assert needle in str(exc.value)

    def test_round_trip_via_save(self, tmp_path):
        ds = data.load_csv(write(tmp_path, GOOD))
        out = tmp_path / "copy.csv"
        data.save_csv(ds, out)
        back = data.load_csv(out)
        assert back.mode is ds.mode
        np.testing.assert_array_equal(back.stretch, ds.stretch)
        np.testing.assert_array_equal(back.stress, ds.stress)


class TestDatasetValidation:
    def test_arrays_are_read_only(self, tmp_path):
        ds = data.load_csv(write(tmp_path, GOOD))
        with pytest.raises(ValueError):
            ds.stress[0] = 99.0

    def test_compression_rejected(self):
        with pytest.raises(DataError):
            Dataset(Mode.UT, np.array([0.9, 1.0, 1.5, 2.0]),
                    np.array([0.0, 0.0, 0.3, 0.6]))


class TestDirectoryAndSplit:
    def test_load_directory_sorted(self, tmp_path):
        write(tmp_path, GOOD, "b_ut.csv")
        write(tmp_path, GOOD.replace("UT", "ET"), "a_et.csv")
        datasets, files = data.load_directory(tmp_path, return_paths=True)
        assert [f.name for f in files] == ["a_et.csv", "b_ut.csv"]
        assert [d.mode for d in datasets] == [Mode.ET, Mode.UT]

    def test_empty_directory(self, tmp_path):
        with pytest.raises(DataError):
            data.load_directory(tmp_path)

    def test_default_split_holds_out_pure_shear(self):
        split = data.default_split(data.treloar_datasets())
        assert {ds.mode for ds in split.train} == {Mode.UT, Mode.ET}
        assert {ds.mode for ds in split.holdout} == {Mode.PS}

    def test_default_split_requires_both_train_modes(self, tmp_path):
        ds = data.load_csv(write(tmp_path, GOOD))
        with pytest.raises(DataError) as exc:
            data.default_split([ds])
        assert "ET" in str(exc.value)


class TestSynthetic:
    def test_noise_free_matches_model(self):
        model = MooneyRivlin(0.2, 0.05)
        lam = np.linspace(1.05, 6.0, 20)
        ds = data.synth_generate(model, Mode.UT, lam)
        from hypersr.mechanics import nominal_stress
        np.testing.assert_array_equal(ds.stress,
                                      nominal_stress(model, Mode.UT, lam))

    def test_noisy_is_seed_deterministic(self):
        model = MooneyRivlin(0.2, 0.05)
        lam = np.linspace(1.05, 6.0, 20)
        a = data.synth_generate(model, Mode.UT, lam, noise_std=0.05, seed=7)
        b = data.synth_generate(model, Mode.UT, lam, noise_std=0.05, seed=7)
        c = data.synth_generate(model, Mode.UT, lam, noise_std=0.05, seed=8)
        np.testing.assert_array_equal(a.stress, b.stress)
        assert not np.array_equal(a.stress, c.stress)


class TestBundledData:
    def test_shapes_and_ranges(self):
        ut, et, ps = data.treloar_datasets()
        assert ut.mode is Mode.UT and et.mode is Mode.ET and ps.mode is Mode.PS
        for ds in (ut, et, ps):
            assert len(ds) >= 10
            assert ds.stretch[0] >= 1.0
        assert ut.stretch[-1] > 7.0   # deep-tension stations present
