"""Dataset ingestion, validation, splitting and synthetic generation.

CSV format: optional `# mode: UT|ET|PS` and `# unit: MPa|kg/cm2` directive
lines, then a `lambda,stress_mpa` header and one point per row.  Stresses
are stored in MPa; kg/cm2 inputs are converted on load.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .mechanics import Mode, nominal_stress

__all__ = [
    "Dataset",
    "Split",
    "DataError",
    "load_csv",
    "save_csv",
    "load_directory",
    "default_split",
    "synth_generate",
    "treloar_datasets",
    "KG_PER_CM2_TO_MPA",
]

KG_PER_CM2_TO_MPA = 0.0980665


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    """Per-mode stretch/nominal-stress records, stress in MPa."""

    mode: Mode
    stretch: np.ndarray
    stress: np.ndarray
    source: str = ""

    def __post_init__(self):
        lam = np.asarray(self.stretch, dtype=float)
        p = np.asarray(self.stress, dtype=float)
        lam.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "stretch", lam)
        object.__setattr__(self, "stress", p)
        if lam.shape != p.shape or lam.ndim != 1:
            raise DataError("stretch and stress must be 1-D arrays of equal length")
        if len(lam) < 4:
            raise DataError(f"need at least 4 points, got {len(lam)}")
        if np.any(lam < 1.0):
            raise DataError("tension dataset requires stretch >= 1")
        if np.any(np.diff(lam) <= 0.0):
            raise DataError("stretch must be strictly increasing")
        if not np.all(np.isfinite(p)) or np.any(p < 0.0):
            raise DataError("stress must be finite and non-negative")

    def __len__(self) -> int:
        return len(self.stretch)


@dataclass(frozen=True)
class Split:
    train: tuple
    holdout: tuple


def load_csv(path) -> Dataset:
    """Load and validate one dataset file; errors carry the offending line."""
    path = Path(path)
    mode = None
    unit = "MPa"
    lams, stresses = [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.lower().startswith("mode:"):
                    tag = body.split(":", 1)[1].strip().upper()
                    try:
                        mode = Mode(tag)
                    except ValueError:
                        raise DataError(f"{path}:{lineno}: unknown mode {tag!r}")
                elif body.lower().startswith("unit:"):
                    unit = body.split(":", 1)[1].strip()
                continue
            if line.lower().replace(" ", "").startswith("lambda,"):
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected 'lambda,stress', got {line!r}")
            try:
                lams.append(float(parts[0]))
                stresses.append(float(parts[1]))
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed number in {line!r}")
    if mode is None:
        raise DataError(f"{path}: missing '# mode:' directive")
    stress = np.asarray(stresses)
    if unit.lower() in ("kg/cm2", "kg/cm^2", "kgf/cm2"):
        stress = stress * KG_PER_CM2_TO_MPA
    elif unit.lower() != "mpa":
        raise DataError(f"{path}: unknown unit {unit!r}")
    try:
        return Dataset(mode=mode, stretch=np.asarray(lams), stress=stress,
                       source=str(path))
    except DataError as e:
        raise DataError(f"{path}: {e}") from None


def save_csv(dataset: Dataset, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"# mode: {dataset.mode.value}\n")
        fh.write("lambda,stress_mpa\n")
        for lam, p in zip(dataset.stretch, dataset.stress):
            fh.write(f"{float(lam)!r},{float(p)!r}\n")


def load_directory(directory, return_paths: bool = False):
    """Load every *.csv dataset in a directory, sorted by filename."""
    directory = Path(directory)
    files = sorted(directory.glob("*.csv"))
    if not files:
        raise DataError(f"no CSV datasets found in {directory}")
    datasets = [load_csv(f) for f in files]
    if return_paths:
        return datasets, files
    return datasets


def default_split(datasets) -> Split:
    """Train on UT+ET, hold out PS (the zero-shot generalization mode)."""
    by_mode = {}
    for ds in datasets:
        by_mode.setdefault(ds.mode, []).append(ds)
    missing = [m.value for m in (Mode.UT, Mode.ET) if m not in by_mode]
    if missing:
        raise DataError(f"default split requires UT and ET data; missing {missing}")
    train = tuple(by_mode[Mode.UT] + by_mode[Mode.ET])
    holdout = tuple(by_mode.get(Mode.PS, []))
    return Split(train=train, holdout=holdout)


def synth_generate(model, mode: Mode, lam_grid, noise_std: float = 0.0,
                   seed: int = 0, source: str = "synthetic") -> Dataset:
    """Exact (or noisy) stress curves from a model, for oracle tests."""
    lam = np.asarray(lam_grid, dtype=float)
    p = nominal_stress(model, mode, lam)
    if not np.all(np.isfinite(p)):
        bad = lam[~np.isfinite(np.asarray(p))]
        raise DataError(f"model is singular on the grid (first bad stretch {bad[0]})")
    if noise_std > 0.0:
        p = p + np.random.default_rng(seed).normal(0.0, noise_std, size=lam.shape)
        p = np.maximum(p, 0.0)
    return Dataset(mode=mode, stretch=lam, stress=p, source=source)


def treloar_datasets() -> list:
    """Bundled reference tensile datasets (UT, ET, PS), stresses in MPa.

    Classic vulcanized-rubber stretch stations with reconstructed stress
    values; see the CSV headers for provenance notes.
    """
    out = []
    root = resources.files("hypersr").joinpath("assets/data")
    for name in ("treloar_ut.csv", "treloar_et.csv", "treloar_ps.csv"):
        with resources.as_file(root.joinpath(name)) as path:
            out.append(load_csv(path))
    return out
