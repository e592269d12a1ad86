"""Skill schema: builtins, JSON round trip, strict validation."""

import json

import pytest

from hypersr import skills
from hypersr.skills import SkillError


class TestBuiltins:
    def test_isotropic_shape(self, iso_skill):
        assert iso_skill.transform_id == "iso_invariants"
        assert iso_skill.feature_names == ("I1", "I2")
        assert "sqrt" not in iso_skill.operator_whitelist
        assert "log" not in iso_skill.operator_whitelist
        kinds = {c.kind for c in iso_skill.constraints}
        assert "hessian_psd" in kinds

    def test_anisotropic_shape(self):
        s = skills.builtin_anisotropic()
        assert s.feature_names == ("I1", "I4")
        assert "macaulay" in s.operator_whitelist
        assert s.structure_template == "additive_iso_plus_fiber"
        targets = {(c.kind, c.target) for c in s.constraints}
        assert ("inactive_in_compression", "fiber_term") in targets
        assert ("hessian_psd", "fiber_term") in targets

    @pytest.mark.parametrize("name,builder", [
        ("hyperelastic_iso", skills.builtin_isotropic),
        ("fiber_aniso", skills.builtin_anisotropic),
    ])
    def test_bundled_files_equal_builtins(self, name, builder):
        assert skills.bundled_skill(name) == builder()


class TestRoundTrip:
    def test_dict_round_trip(self, iso_skill):
        assert skills.skill_from_dict(skills.skill_to_dict(iso_skill)) == iso_skill

    def test_file_round_trip(self, tmp_path, iso_skill):
        p = tmp_path / "s.skill.json"
        skills.save_skill(iso_skill, p)
        assert skills.load_skill(p) == iso_skill


class TestValidation:
    def base(self):
        return skills.skill_to_dict(skills.builtin_isotropic())

    def test_unknown_top_level_field(self):
        d = self.base()
        d["wildcard"] = True
        with pytest.raises(SkillError, match="unknown fields"):
            skills.skill_from_dict(d)

    def test_unknown_constraint_field(self):
        d = self.base()
        d["constraints"][0]["mystery"] = 1
        with pytest.raises(SkillError, match="constraints\\[0\\]"):
            skills.skill_from_dict(d)

    def test_schema_version_mismatch(self):
        d = self.base()
        d["schema_version"] = 99
        with pytest.raises(SkillError, match="schema_version"):
            skills.skill_from_dict(d)

    def test_missing_required_field(self):
        d = self.base()
        del d["operator_whitelist"]
        with pytest.raises(SkillError, match="operator_whitelist"):
            skills.skill_from_dict(d)

    def test_unsupported_operator(self):
        d = self.base()
        d["operator_whitelist"].append("tanh")
        with pytest.raises(SkillError, match="tanh"):
            skills.skill_from_dict(d)

    def test_bad_constraint_kind(self):
        with pytest.raises(SkillError):
            skills.ConstraintDescriptor("be_nice")

    def test_zero_weight_only_for_structural_constraint(self):
        skills.ConstraintDescriptor("zero_at_reference", weight=0.0)
        with pytest.raises(SkillError):
            skills.ConstraintDescriptor("hessian_psd", weight=0.0)

    def test_sampling_bounds(self):
        with pytest.raises(SkillError):
            skills.SamplingDomain(lambda_min=1.5)

    def test_invalid_json_file(self, tmp_path):
        p = tmp_path / "bad.skill.json"
        p.write_text("{not json")
        with pytest.raises(SkillError, match="invalid JSON"):
            skills.load_skill(p)

    def test_error_names_offending_file(self, tmp_path):
        p = tmp_path / "bad.skill.json"
        p.write_text(json.dumps({"schema_version": 1}))
        with pytest.raises(SkillError, match="bad.skill.json"):
            skills.load_skill(p)
