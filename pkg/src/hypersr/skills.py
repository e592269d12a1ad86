"""Declarative discovery skills: transform, operator whitelist, constraints.

A skill bundles everything that configures a discovery run: which invariant
transform produces the feature space, which operators the search may use,
which physical constraints are penalized, and how the admissible deformation
domain is sampled.  Skills load from versioned JSON files; the same schema
is the response contract for the optional LLM synthesis in `agent`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

from .exprtree import ALL_OPS

__all__ = [
    "Skill",
    "ConstraintDescriptor",
    "SamplingDomain",
    "SkillError",
    "load_skill",
    "save_skill",
    "skill_from_dict",
    "skill_to_dict",
    "builtin_isotropic",
    "builtin_anisotropic",
]

SCHEMA_VERSION = 1

_TRANSFORMS = {"iso_invariants": 2, "aniso_invariants": 2}
_CONSTRAINT_KINDS = {"hessian_psd", "quantity_nonnegative", "zero_at_reference",
                     "inactive_in_compression"}
_TARGETS = {"energy", "fiber_term"}
_TEMPLATES = {"none", "additive_iso_plus_fiber"}

DEFAULT_HESSIAN_WEIGHT = 1e3
DEFAULT_REFERENCE_WEIGHT = 1e3


class SkillError(ValueError):
    pass


@dataclass(frozen=True)
class ConstraintDescriptor:
    kind: str
    target: str = "energy"
    weight: float = 1.0

    def __post_init__(self):
        if self.kind not in _CONSTRAINT_KINDS:
            raise SkillError(f"constraint kind: unknown value {self.kind!r}")
        if self.target not in _TARGETS:
            raise SkillError(f"constraint target: unknown value {self.target!r}")
        if not self.weight >= 0.0:
            raise SkillError(f"constraint weight: must be >= 0, got {self.weight}")
        # zero_at_reference is the one constraint allowed weight 0: the
        # shifted features already enforce it structurally.
        if self.weight == 0.0 and self.kind != "zero_at_reference":
            raise SkillError(f"constraint weight: must be > 0 for {self.kind}")


@dataclass(frozen=True)
class SamplingDomain:
    mode: str = "principal_stretch_grid"
    lambda_min: float = 0.25
    lambda_max: float = 4.0
    grid_n: int = 12
    path_points: int = 32
    auto_from_data: bool = True
    data_margin: float = 1.1

    def __post_init__(self):
        if self.mode != "principal_stretch_grid":
            raise SkillError(f"sampling mode: unknown value {self.mode!r}")
        if not (0.0 < self.lambda_min < 1.0 < self.lambda_max):
            raise SkillError("sampling: need 0 < lambda_min < 1 < lambda_max")
        if self.grid_n < 4:
            raise SkillError(f"sampling grid_n: must be >= 4, got {self.grid_n}")
        if self.path_points < 16:
            raise SkillError(f"sampling path_points: must be >= 16, got {self.path_points}")
        if self.data_margin < 1.0:
            raise SkillError("sampling data_margin: must be >= 1")


@dataclass(frozen=True)
class Skill:
    name: str
    transform_id: str
    feature_count: int
    operator_whitelist: frozenset
    constraints: tuple
    sampling: SamplingDomain
    structure_template: str = "none"
    pow_constant_exponent_only: bool = True
    feature_names: tuple = ()

    def __post_init__(self):
        if self.transform_id not in _TRANSFORMS:
            raise SkillError(f"transform_id: unsupported value {self.transform_id!r}")
        if self.feature_count != _TRANSFORMS[self.transform_id]:
            raise SkillError(
                f"feature_count: {self.transform_id} requires "
                f"{_TRANSFORMS[self.transform_id]} features, got {self.feature_count}")
        wl = frozenset(self.operator_whitelist)
        bad = wl - ALL_OPS
        if bad:
            raise SkillError(f"operator_whitelist: unsupported operators {sorted(bad)}")
        object.__setattr__(self, "operator_whitelist", wl)
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.structure_template not in _TEMPLATES:
            raise SkillError(f"structure_template: unknown value {self.structure_template!r}")
        if not self.feature_names:
            names = ("I1", "I2") if self.transform_id == "iso_invariants" else ("I1", "I4")
            object.__setattr__(self, "feature_names", names)


def builtin_isotropic() -> Skill:
    """Discovery skill for incompressible isotropic hyperelasticity.

    log and sqrt are excluded from the default whitelist: they breed the
    nested-root pathologies that the convexity filter exists to reject.
    Re-enable them explicitly (CLI --allow-sqrt-log) to reproduce the
    non-convex competitor.
    """
    return Skill(
        name="isotropic-hyperelasticity",
        transform_id="iso_invariants",
        feature_count=2,
        operator_whitelist=frozenset({"add", "sub", "mul", "div", "pow", "exp", "neg"}),
        constraints=(
            ConstraintDescriptor("hessian_psd", "energy", DEFAULT_HESSIAN_WEIGHT),
            ConstraintDescriptor("zero_at_reference", "energy", 0.0),
        ),
        sampling=SamplingDomain(),
    )


def builtin_anisotropic() -> Skill:
    """Fiber-reinforced skill: additive isotropic matrix plus fiber term.

    Features are (I1~, I4~) with I4~ = I4 - 1; the fiber term must vanish in
    compression (I4~ <= 0) and be convex in tension, so the whitelist adds
    the Macaulay bracket.
    """
    return Skill(
        name="fiber-reinforced-anisotropy",
        transform_id="aniso_invariants",
        feature_count=2,
        operator_whitelist=frozenset(
            {"add", "sub", "mul", "div", "pow", "exp", "neg", "macaulay"}),
        constraints=(
            ConstraintDescriptor("hessian_psd", "fiber_term", DEFAULT_HESSIAN_WEIGHT),
            ConstraintDescriptor("inactive_in_compression", "fiber_term",
                                 DEFAULT_HESSIAN_WEIGHT),
            ConstraintDescriptor("zero_at_reference", "energy", 0.0),
        ),
        sampling=SamplingDomain(),
        structure_template="additive_iso_plus_fiber",
    )


# ---------------------------------------------------------------------------
# JSON schema
# ---------------------------------------------------------------------------

_SKILL_FIELDS = {"schema_version", "name", "transform_id", "feature_count",
                 "operator_whitelist", "constraints", "sampling",
                 "structure_template", "pow_constant_exponent_only",
                 "feature_names"}
_CONSTRAINT_FIELDS = {"kind", "target", "weight"}
_SAMPLING_FIELDS = {"mode", "lambda_min", "lambda_max", "grid_n",
                    "path_points", "auto_from_data", "data_margin"}


def _reject_unknown(obj: dict, allowed: set, where: str):
    unknown = set(obj) - allowed
    if unknown:
        raise SkillError(f"{where}: unknown fields {sorted(unknown)}")


def skill_from_dict(obj: dict) -> Skill:
    if not isinstance(obj, dict):
        raise SkillError("skill document must be a JSON object")
    _reject_unknown(obj, _SKILL_FIELDS, "skill")
    version = obj.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SkillError(f"schema_version: expected {SCHEMA_VERSION}, got {version!r}")
    for req in ("name", "transform_id", "feature_count", "operator_whitelist",
                "constraints", "sampling"):
        if req not in obj:
            raise SkillError(f"skill: missing required field {req!r}")
    constraints = []
    for i, c in enumerate(obj["constraints"]):
        _reject_unknown(c, _CONSTRAINT_FIELDS, f"constraints[{i}]")
        if "kind" not in c:
            raise SkillError(f"constraints[{i}]: missing 'kind'")
        constraints.append(ConstraintDescriptor(
            kind=c["kind"], target=c.get("target", "energy"),
            weight=float(c.get("weight", 1.0))))
    s = obj["sampling"]
    _reject_unknown(s, _SAMPLING_FIELDS, "sampling")
    sampling = SamplingDomain(**s)
    return Skill(
        name=str(obj["name"]),
        transform_id=obj["transform_id"],
        feature_count=int(obj["feature_count"]),
        operator_whitelist=frozenset(obj["operator_whitelist"]),
        constraints=tuple(constraints),
        sampling=sampling,
        structure_template=obj.get("structure_template", "none"),
        pow_constant_exponent_only=bool(obj.get("pow_constant_exponent_only", True)),
        feature_names=tuple(obj.get("feature_names", ())),
    )


def skill_to_dict(skill: Skill) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "name": skill.name,
        "transform_id": skill.transform_id,
        "feature_count": skill.feature_count,
        "operator_whitelist": sorted(skill.operator_whitelist),
        "constraints": [
            {"kind": c.kind, "target": c.target, "weight": c.weight}
            for c in skill.constraints
        ],
        "sampling": {
            "mode": skill.sampling.mode,
            "lambda_min": skill.sampling.lambda_min,
            "lambda_max": skill.sampling.lambda_max,
            "grid_n": skill.sampling.grid_n,
            "path_points": skill.sampling.path_points,
            "auto_from_data": skill.sampling.auto_from_data,
            "data_margin": skill.sampling.data_margin,
        },
        "structure_template": skill.structure_template,
        "pow_constant_exponent_only": skill.pow_constant_exponent_only,
        "feature_names": list(skill.feature_names),
    }


def load_skill(path) -> Skill:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as e:
            raise SkillError(f"{path}: invalid JSON ({e})") from None
    try:
        return skill_from_dict(obj)
    except SkillError as e:
        raise SkillError(f"{path}: {e}") from None


def save_skill(skill: Skill, path) -> None:
    with open(path, "w") as fh:
        json.dump(skill_to_dict(skill), fh, indent=2, sort_keys=True)
        fh.write("\n")


def bundled_skill(name: str) -> Skill:
    """Load a skill shipped with the package (e.g. 'hyperelastic_iso')."""
    ref = resources.files("hypersr").joinpath(f"assets/skills/{name}.skill.json")
    with resources.as_file(ref) as path:
        return load_skill(path)
