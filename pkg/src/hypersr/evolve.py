"""Island-model genetic-programming search over skill-constrained trees.

Islands evolve independently and exchange their best individuals along a
ring every few iterations.  A per-complexity hall of fame collects the best
valid candidate seen at every tree size; its non-dominated subset is the
Pareto front extracted downstream.  Determinism: every island draws from
its own RNG stream derived from (seed, island index), and islands are
processed in index order, so results depend only on the config and seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import exprtree
from .exprtree import Const, Expr, Op, Var
from .fitness import (FitnessReport, PenaltyConfig, default_penalty_config,
                      evaluate_fitness)
from .mechanics import Mode, invariants
from .optim import levenberg_marquardt
from .skills import Skill

__all__ = [
    "EvolutionConfig",
    "HallOfFame",
    "DiscoveryError",
    "run_discovery",
    "mutate",
    "crossover",
    "optimize_constants",
    "migrate",
    "random_tree",
    "save_checkpoint",
    "load_checkpoint",
]


DEFAULT_MUTATION_WEIGHTS = {
    "point_mutation": 1.0,
    "subtree_replace": 1.0,
    "insert_node": 1.0,
    "delete_subtree": 1.0,
    "constant_perturb": 2.0,
    "crossover": 3.0,
}


class DiscoveryError(RuntimeError):
    pass


@dataclass(frozen=True)
class EvolutionConfig:
    iterations: int = 100
    populations: int = 30
    workers: int = 4
    population_size: int = 64
    maxsize: int = 18
    tournament_k: int = 5
    migration_interval: int = 10
    migration_fraction: float = 0.1
    mutation_weights: dict = field(default_factory=lambda: dict(DEFAULT_MUTATION_WEIGHTS))
    constant_opt_max_iters: int = 50
    constant_opt_restarts: int = 2
    rng_seed: int = 0

    def __post_init__(self):
        if self.maxsize < 3:
            raise ValueError("maxsize must be >= 3")
        if self.populations < 1:
            raise ValueError("populations must be >= 1")
        w = dict(self.mutation_weights)
        if any(v < 0 for v in w.values()) or not any(v > 0 for v in w.values()):
            raise ValueError("mutation weights must be >= 0 with at least one > 0")
        object.__setattr__(self, "mutation_weights", w)


@dataclass
class HallOfFame:
    """Best valid candidate per complexity 1..maxsize."""

    maxsize: int
    entries: dict = field(default_factory=dict)   # complexity -> (Expr, FitnessReport)

    def consider(self, expr: Expr, report: FitnessReport) -> bool:
        """Admit the candidate if it beats the incumbent at its size.

        Ties keep the earlier-discovered individual.  Returns True on entry.
        """
        if not report.valid or not math.isfinite(report.composite):
            return False
        c = report.complexity
        if c > self.maxsize:
            return False
        old = self.entries.get(c)
        if old is None or report.composite < old[1].composite:
            self.entries[c] = (expr, report)
            return True
        return False

    def best(self):
        """(Expr, FitnessReport) with the lowest composite, or None."""
        if not self.entries:
            return None
        return min(self.entries.values(), key=lambda er: er[1].composite)


# ---------------------------------------------------------------------------
# Random trees and variation operators
# ---------------------------------------------------------------------------

def _sorted_ops(skill: Skill):
    unary = sorted(skill.operator_whitelist & exprtree.UNARY_OPS)
    binary = sorted(skill.operator_whitelist & exprtree.BINARY_OPS)
    return unary, binary


def _random_const(rng) -> Const:
    return Const(float(np.round(rng.uniform(0.05, 2.0), 3)))


def _random_leaf(rng, skill: Skill) -> Expr:
    if rng.random() < 0.55:
        return Var(int(rng.integers(0, skill.feature_count)))
    return _random_const(rng)


def _random_monomial(rng, skill: Skill) -> Expr:
    v = Var(int(rng.integers(0, skill.feature_count)))
    r = rng.random()
    if r < 0.6:
        return v
    if r < 0.8 and "pow" in skill.operator_whitelist:
        return Op("pow", (v, Const(float(rng.integers(2, 4)))))
    if "exp" in skill.operator_whitelist:
        return Op("exp", (Op("mul", (_random_const(rng), v)),))
    return v


def _linear_combo(rng, skill: Skill, maxsize: int) -> Expr:
    """Sum of 1-3 scaled monomials: the workhorse shape of polynomial energies."""
    n_terms = int(rng.integers(1, 4))
    tree = None
    for _ in range(n_terms):
        term = Op("mul", (_random_const(rng), _random_monomial(rng, skill)))
        tree = term if tree is None else Op("add", (tree, term))
        if exprtree.complexity(tree) > maxsize - 4:
            break
    return tree


def random_tree(rng, skill: Skill, maxsize: int, depth: int = 3) -> Expr:
    """Grow-style random tree within the whitelist and size bound.

    A 40% share of linear combinations of scaled monomials seeds the search
    with the additive shapes most admissible energies are built from.
    """
    if "add" in skill.operator_whitelist and rng.random() < 0.4:
        t = _linear_combo(rng, skill, maxsize)
        if exprtree.complexity(t) <= maxsize:
            return t
    unary, binary = _sorted_ops(skill)

    def grow(d):
        if d == 0 or rng.random() < 0.3:
            return _random_leaf(rng, skill)
        kinds = binary + unary
        kind = kinds[int(rng.integers(0, len(kinds)))]
        if kind in exprtree.UNARY_OPS:
            return Op(kind, (grow(d - 1),))
        if kind == "pow" and skill.pow_constant_exponent_only:
            return Op(kind, (grow(d - 1), Const(float(rng.integers(2, 4)))))
        return Op(kind, (grow(d - 1), grow(d - 1)))

    for _ in range(16):
        t = grow(depth)
        if exprtree.complexity(t) <= maxsize:
            return t
    return _random_leaf(rng, skill)


def _paths(expr: Expr):
    """All node paths in pre-order; () is the root."""
    out = []

    def walk(e, path):
        out.append(path)
        if isinstance(e, Op):
            for i, a in enumerate(e.args):
                walk(a, path + (i,))

    walk(expr, ())
    return out


def _get(expr: Expr, path):
    for i in path:
        expr = expr.args[i]
    return expr


def _replace(expr: Expr, path, new: Expr) -> Expr:
    if not path:
        return new
    args = list(expr.args)
    args[path[0]] = _replace(args[path[0]], path[1:], new)
    return Op(expr.kind, tuple(args))


def _valid(expr: Expr, skill: Skill, maxsize: int) -> bool:
    if exprtree.complexity(expr) > maxsize:
        return False
    if exprtree.operators_used(expr) - skill.operator_whitelist:
        return False
    if exprtree.max_var_index(expr) >= skill.feature_count:
        return False
    if skill.pow_constant_exponent_only:
        for n in exprtree.iter_nodes(expr):
            if isinstance(n, Op) and n.kind == "pow":
                if not exprtree.is_constant_expr(n.args[1]):
                    return False
    return True


def _point_mutation(expr: Expr, skill: Skill, rng) -> Expr:
    unary, binary = _sorted_ops(skill)
    paths = _paths(expr)
    path = paths[int(rng.integers(0, len(paths)))]
    node = _get(expr, path)
    if isinstance(node, Const):
        return _replace(expr, path, _random_const(rng))
    if isinstance(node, Var):
        return _replace(expr, path, _random_leaf(rng, skill))
    pool = unary if node.kind in exprtree.UNARY_OPS else binary
    kind = pool[int(rng.integers(0, len(pool)))]
    if kind == "pow" and skill.pow_constant_exponent_only:
        return _replace(expr, path, Op(kind, (node.args[0],
                                              Const(float(rng.integers(2, 4))))))
    return _replace(expr, path, Op(kind, node.args))


def _subtree_replace(expr: Expr, skill: Skill, rng, maxsize: int) -> Expr:
    paths = _paths(expr)
    path = paths[int(rng.integers(0, len(paths)))]
    room = maxsize - (exprtree.complexity(expr)
                      - exprtree.complexity(_get(expr, path)))
    sub = random_tree(rng, skill, max(room, 1), depth=2)
    return _replace(expr, path, sub)


def _insert_node(expr: Expr, skill: Skill, rng) -> Expr:
    unary, binary = _sorted_ops(skill)
    paths = _paths(expr)
    path = paths[int(rng.integers(0, len(paths)))]
    node = _get(expr, path)
    kinds = binary + unary
    kind = kinds[int(rng.integers(0, len(kinds)))]
    if kind in exprtree.UNARY_OPS:
        wrapped = Op(kind, (node,))
    elif kind == "pow" and skill.pow_constant_exponent_only:
        wrapped = Op(kind, (node, Const(float(rng.integers(2, 4)))))
    else:
        leaf = _random_leaf(rng, skill)
        wrapped = Op(kind, (node, leaf) if rng.random() < 0.5 else (leaf, node))
    return _replace(expr, path, wrapped)


def _delete_subtree(expr: Expr, skill: Skill, rng) -> Expr:
    op_paths = [p for p in _paths(expr) if isinstance(_get(expr, p), Op)]
    if not op_paths:
        return expr
    path = op_paths[int(rng.integers(0, len(op_paths)))]
    node = _get(expr, path)
    child = node.args[int(rng.integers(0, len(node.args)))]
    return _replace(expr, path, child)


def _constant_perturb(expr: Expr, rng) -> Expr:
    const_paths = [p for p in _paths(expr) if isinstance(_get(expr, p), Const)]
    if not const_paths:
        return expr
    path = const_paths[int(rng.integers(0, len(const_paths)))]
    c = _get(expr, path).value
    new = c * (1.0 + 0.2 * rng.standard_normal()) if c != 0.0 else rng.normal(0.0, 0.1)
    if not np.isfinite(new):
        return expr
    return _replace(expr, path, Const(float(new)))


_MUTATIONS = ("point_mutation", "subtree_replace", "insert_node",
              "delete_subtree", "constant_perturb")


def mutate(expr: Expr, skill: Skill, rng, config: EvolutionConfig,
           kind: str | None = None) -> Expr:
    """Apply one mutation; retries up to 8 times, else returns the input."""
    weights = np.array([config.mutation_weights.get(k, 0.0) for k in _MUTATIONS])
    if weights.sum() == 0:
        return expr
    probs = weights / weights.sum()
    for _ in range(8):
        k = kind or _MUTATIONS[int(rng.choice(len(_MUTATIONS), p=probs))]
        if k == "point_mutation":
            cand = _point_mutation(expr, skill, rng)
        elif k == "subtree_replace":
            cand = _subtree_replace(expr, skill, rng, config.maxsize)
        elif k == "insert_node":
            cand = _insert_node(expr, skill, rng)
        elif k == "delete_subtree":
            cand = _delete_subtree(expr, skill, rng)
        else:
            cand = _constant_perturb(expr, rng)
        if _valid(cand, skill, config.maxsize):
            return cand
    return expr


def crossover(a: Expr, b: Expr, skill: Skill, rng,
              config: EvolutionConfig):
    """Subtree exchange; oversize children are rejected in favor of parents."""
    pa = _paths(a)
    pb = _paths(b)
    path_a = pa[int(rng.integers(0, len(pa)))]
    path_b = pb[int(rng.integers(0, len(pb)))]
    sub_a = _get(a, path_a)
    sub_b = _get(b, path_b)
    child_a = _replace(a, path_a, sub_b)
    child_b = _replace(b, path_b, sub_a)
    if not _valid(child_a, skill, config.maxsize):
        child_a = a
    if not _valid(child_b, skill, config.maxsize):
        child_b = b
    return child_a, child_b


# ---------------------------------------------------------------------------
# Constant optimization (damped least squares with exact gradients)
# ---------------------------------------------------------------------------

def _stress_factors(mode: Mode, lam: np.ndarray):
    """Coefficients (a, b) with P = a * W1 + b * W2 along the mode path."""
    if mode is Mode.UT:
        a = 2 * (lam - lam**-2)
        return a, a / lam
    if mode is Mode.ET:
        a = 2 * (lam - lam**-5)
        return a, a * lam**2
    a = 2 * (lam - lam**-3)
    return a, a


def optimize_constants(expr: Expr, train, config: EvolutionConfig | None = None,
                       skill: Skill | None = None) -> Expr:
    """Refine the tree's constants against the training stresses.

    Gradients of the residuals with respect to the constants are exact:
    constants are promoted to extra input variables, so the mixed second
    derivatives from the forward-mode propagation give d(W1)/dc directly.
    Never returns a tree with worse training MSE; falls back to a
    derivative-free simplex if the least-squares path fails.
    """
    config = config or EvolutionConfig()
    const_paths = [p for p in _paths(expr) if isinstance(_get(expr, p), Const)]
    if not const_paths:
        return expr
    nc = len(const_paths)
    ext = expr
    for j, path in enumerate(const_paths):
        ext = _replace(ext, path, Var(2 + j))

    per_mode = []
    for ds in train:
        lam = np.asarray(ds.stretch)
        i1, i2 = invariants(ds.mode, lam)
        a, b = _stress_factors(ds.mode, lam)
        per_mode.append((np.stack([i1, i2]), a, b, np.asarray(ds.stress)))

    def stresses_and_jac(c):
        preds, jacs = [], []
        for feats, a, b, _obs in per_mode:
            n = feats.shape[1]
            x = np.vstack([feats, np.repeat(c[:, None], n, axis=1)])
            _, g, h = exprtree.evaluate_d2_batch(ext, x)
            preds.append(a * g[0] + b * g[1])
            jacs.append((a * h[0, 2:] + b * h[1, 2:]).T)
        return np.concatenate(preds), np.vstack(jacs)

    obs = np.concatenate([p[3] for p in per_mode])

    def residuals(c):
        pred, _ = stresses_and_jac(c)
        return np.nan_to_num(pred - obs, nan=1e6, posinf=1e6, neginf=-1e6)

    def jacobian(c):
        _, j = stresses_and_jac(c)
        return np.nan_to_num(j, nan=0.0, posinf=0.0, neginf=0.0)

    def mse_of(c):
        r = residuals(c)
        with np.errstate(all="ignore"):
            return float(np.mean(r * r))

    c0 = np.array([_get(expr, p).value for p in const_paths])
    best_c, best_mse = c0, mse_of(c0)

    starts = [c0]
    rng = np.random.default_rng(config.rng_seed ^ 0x5EED)
    for _ in range(config.constant_opt_restarts):
        starts.append(c0 * (1.0 + 0.3 * rng.standard_normal(nc)))
    for s in starts:
        sol = levenberg_marquardt(residuals, jacobian, s,
                                  config.constant_opt_max_iters)
        m = mse_of(sol)
        if np.all(np.isfinite(sol)) and m < best_mse:
            best_c, best_mse = sol, m
    if best_mse >= mse_of(c0) - 0.0:
        # least-squares made no progress; try a short simplex run
        try:
            sol = optimize.minimize(mse_of, c0, method="Nelder-Mead",
                                    options={"maxiter": config.constant_opt_max_iters * 4,
                                             "xatol": 1e-10, "fatol": 1e-14})
            if np.all(np.isfinite(sol.x)) and mse_of(sol.x) < best_mse:
                best_c = sol.x
        except Exception:
            pass

    out = expr
    for j, path in enumerate(const_paths):
        if np.isfinite(best_c[j]):
            out = _replace(out, path, Const(float(best_c[j])))
        else:
            return expr
    return out


# ---------------------------------------------------------------------------
# Islands, migration, main loop
# ---------------------------------------------------------------------------

@dataclass
class _Island:
    rng: np.random.Generator
    population: list       # list of (Expr, FitnessReport)


def _tournament(island: _Island, k: int) -> int:
    idx = island.rng.integers(0, len(island.population), size=k)
    return int(min(idx, key=lambda i: (island.population[i][1].composite, i)))


def migrate(islands, fraction: float, rng=None):
    """Copy each island's best individuals onto its ring neighbor's worst.

    Population sizes are conserved and no individual is lost from the
    sending island, so the global best can only improve.
    """
    if len(islands) < 2:
        return islands
    n = max(1, int(round(fraction * len(islands[0].population))))
    packets = []
    for isl in islands:
        ranked = sorted(range(len(isl.population)),
                        key=lambda i: (isl.population[i][1].composite, i))
        packets.append([isl.population[i] for i in ranked[:n]])
    for i, isl in enumerate(islands):
        incoming = packets[(i - 1) % len(islands)]
        ranked = sorted(range(len(isl.population)),
                        key=lambda i2: (isl.population[i2][1].composite, i2),
                        reverse=True)
        for slot, ind in zip(ranked[:n], incoming):
            isl.population[slot] = ind
    return islands


def run_discovery(skill: Skill, train, config: EvolutionConfig,
                  penalty_config: PenaltyConfig | None = None,
                  checkpoint_path=None) -> HallOfFame:
    """Full island-model search; deterministic for a fixed seed.

    The generation budget is iterations x populations: each iteration runs
    one breed/evaluate cycle on every island, with migration every
    migration_interval iterations.
    """
    if not train:
        raise ValueError("no training datasets")
    if skill.structure_template != "none":
        raise DiscoveryError(
            "discovery currently runs on single-tree skills; the additive "
            "fiber template is supported at the constraint/audit level only")
    pconf = penalty_config or default_penalty_config(train, skill)
    hall = HallOfFame(maxsize=config.maxsize)
    n_invalid = 0
    n_evals = 0

    def evaluate(expr):
        nonlocal n_invalid, n_evals
        report = evaluate_fitness(expr, train, pconf, skill)
        n_evals += 1
        if not report.valid:
            n_invalid += 1
        return report

    def admit(expr, report):
        """Hall insertion: canonicalize, then refine constants on entrants."""
        candidates = [(expr, report)]
        simp = exprtree.simplify(expr)
        if simp != expr and _valid(simp, skill, config.maxsize):
            candidates.append((simp, evaluate(simp)))
        for e, r in candidates:
            if hall.consider(e, r) and any(
                    isinstance(n, Const) for n in exprtree.iter_nodes(e)):
                tuned = exprtree.simplify(optimize_constants(e, train, config))
                if tuned != e:
                    hall.consider(tuned, evaluate(tuned))

    seed_seq = np.random.SeedSequence(config.rng_seed)
    island_seeds = seed_seq.spawn(config.populations)
    islands = []
    for s in island_seeds:
        rng = np.random.default_rng(s)
        pop = []
        for _ in range(config.population_size):
            t = random_tree(rng, skill, config.maxsize)
            r = evaluate(t)
            pop.append((t, r))
            admit(t, r)
        islands.append(_Island(rng=rng, population=pop))

    xw = config.mutation_weights.get("crossover", 0.0)
    mw = sum(config.mutation_weights.get(k, 0.0) for k in _MUTATIONS)
    p_cross = xw / (xw + mw) if xw + mw > 0 else 0.0

    for it in range(config.iterations):
        for isl in islands:
            children = []
            while len(children) < config.population_size:
                if isl.rng.random() < p_cross and len(isl.population) >= 2:
                    a = isl.population[_tournament(isl, config.tournament_k)][0]
                    b = isl.population[_tournament(isl, config.tournament_k)][0]
                    ca, cb = crossover(a, b, skill, isl.rng, config)
                    children.extend([ca, cb])
                else:
                    parent = isl.population[_tournament(isl, config.tournament_k)][0]
                    children.append(mutate(parent, skill, isl.rng, config))
            children = children[:config.population_size]
            evaluated = []
            for ch in children:
                r = evaluate(ch)
                evaluated.append((ch, r))
                admit(ch, r)
            merged = isl.population + evaluated
            ranked = sorted(range(len(merged)),
                            key=lambda i: (merged[i][1].composite, i))
            isl.population = [merged[i] for i in ranked[:config.population_size]]
        if (it + 1) % config.migration_interval == 0:
            migrate(islands, config.migration_fraction)
            if checkpoint_path is not None:
                save_checkpoint(checkpoint_path, hall, islands, config)

    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, hall, islands, config)
    if not hall.entries:
        raise DiscoveryError(
            f"search budget exhausted with an empty hall of fame: "
            f"{n_invalid}/{n_evals} evaluations were invalid "
            f"(non-finite on the data or penalty grid)")
    return hall


# ---------------------------------------------------------------------------
# Checkpointing
# ---------------------------------------------------------------------------

def _report_to_json(r: FitnessReport) -> dict:
    return {
        "mse_per_mode": {m.value: v for m, v in r.mse_per_mode.items()},
        "train_mse": r.train_mse,
        "complexity": r.complexity,
        "penalty_hessian": r.penalty_hessian,
        "penalty_reference": r.penalty_reference,
        "composite": r.composite,
        "valid": r.valid,
    }


def _report_from_json(obj: dict) -> FitnessReport:
    return FitnessReport(
        mse_per_mode={Mode(k): v for k, v in obj["mse_per_mode"].items()},
        train_mse=obj["train_mse"], complexity=obj["complexity"],
        penalty_hessian=obj["penalty_hessian"],
        penalty_reference=obj["penalty_reference"],
        composite=obj["composite"], valid=obj["valid"])


def save_checkpoint(path, hall: HallOfFame, islands, config: EvolutionConfig):
    doc = {
        "maxsize": hall.maxsize,
        "rng_seed": config.rng_seed,
        "hall": {
            str(c): {"expr": exprtree.to_json(e), "report": _report_to_json(r)}
            for c, (e, r) in sorted(hall.entries.items())
        },
        "islands": [
            {
                "rng_state": isl.rng.bit_generator.state,
                "population": [
                    {"expr": exprtree.to_json(e), "report": _report_to_json(r)}
                    for e, r in isl.population
                ],
            }
            for isl in islands
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_checkpoint(path):
    """Returns (hall, islands) reconstructed from a checkpoint file."""
    with open(path) as fh:
        doc = json.load(fh)
    hall = HallOfFame(maxsize=doc["maxsize"])
    for c, entry in doc["hall"].items():
        hall.entries[int(c)] = (exprtree.from_json(entry["expr"]),
                                _report_from_json(entry["report"]))
    islands = []
    for isl in doc["islands"]:
        rng = np.random.default_rng()
        rng.bit_generator.state = isl["rng_state"]
        pop = [(exprtree.from_json(p["expr"]), _report_from_json(p["report"]))
               for p in isl["population"]]
        islands.append(_Island(rng=rng, population=pop))
    return hall, islands
