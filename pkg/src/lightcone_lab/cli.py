"""Experiment orchestration and the `lightcone-lab` command line.

Every experiment writes one or more CSV files (comma separated, '.' decimal,
LF endings, UTF-8; the first line is a timestamp comment, the body below it is
byte-deterministic for a fixed config) plus a run manifest JSON carrying the
config echo, fitted constants and wall time.

Exit codes: 0 success, 1 unknown experiment kind, 2 hypothesis/capacity
violation, 3 numerical-tolerance failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import bounds as bc
from .condexp import (
    bimodule_residual,
    build_dyadic_mode_plan,
    conditional_expectation,
)
from .config import EXPERIMENT_KINDS, ExperimentConfig, validate
from .errors import (
    CapacityError,
    ConfigError,
    HypothesisError,
    LightconeLabError,
    PlanError,
    TruncationError,
)
from .fock import (
    FockOperator,
    ModelSpec,
    PROJECTION_LOSS_LIMIT,
    annihilation_operator,
    anticommutator_difference,
    clustering_probe,
    creation_operator,
    gram_schmidt_basis,
    ground_state,
    heisenberg_evolve,
    nested_volume_differences,
)
from .grids import (
    Grid,
    GridFunction,
    SmearingFunction,
    decay_envelope,
    make_bump,
    make_gaussian,
    write_gridfunction_csv,
)
from .onebody import (
    EnergyCutoff,
    OneBodyOperator,
    annulus_probe,
    assemble,
    momentum_norm_under_cutoff,
    overlap_scan,
    propagation_norm,
)
from .smoothstep import smoothstep_sup_norms

EXIT_OK = 0
EXIT_UNKNOWN = 1
EXIT_HYPOTHESIS = 2
EXIT_NUMERICAL = 3


def _format(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (np.floating,)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header: list[str], rows: list[tuple]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# generated_at={datetime.now(timezone.utc).isoformat()}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_format(v) for v in row) + "\n")


def read_csv_body(path: Path) -> tuple[list[str], list[list[str]]]:
    """Header and raw body cells, skipping comment lines."""
    lines = [
        line.rstrip("\n")
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if not line.startswith("#")
    ]
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]


def _worker_count(jobs: int | None) -> int:
    env = os.environ.get("LIGHTCONE_LAB_THREADS")
    if env:
        return max(1, int(env))
    return max(1, jobs or 1)


def _parallel_map(fn, items, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# model assembly from a config
# ---------------------------------------------------------------------------

def build_grid(cfg: ExperimentConfig) -> Grid:
    return Grid(cfg.dimension, cfg.points_per_axis, cfg.box_length)


def build_potential(cfg: ExperimentConfig, grid: Grid) -> GridFunction:
    if cfg.potential == "zero":
        return GridFunction(grid, np.zeros(grid.size))
    if cfg.potential == "cos":
        coords = grid.coordinates()
        vals = cfg.potential_amplitude * np.cos(
            2 * np.pi * coords[:, 0] / grid.box_length
        )
        return GridFunction(grid, vals)
    raise ConfigError(f"unknown potential {cfg.potential!r}")


def build_interaction(cfg: ExperimentConfig) -> bc.InteractionSpec:
    if cfg.interaction_kind == "zero":
        return bc.InteractionSpec(
            profile=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
            c_W=1e-12,
            n_W=cfg.interaction_decay_power,
        )
    if cfg.interaction_kind == "gaussian":
        s, w = cfg.interaction_strength, cfg.interaction_width
        n_w = cfg.interaction_decay_power
        rs = np.linspace(0.0, 40.0, 8001)
        c = float(np.max(np.exp(-(rs**2) / (2 * w**2)) * np.maximum(rs, 1.0) ** n_w))
        return bc.InteractionSpec(
            profile=lambda r: s * np.exp(-np.asarray(r, dtype=float) ** 2 / (2 * w**2)),
            c_W=abs(s) * c * 1.0001 + 1e-300,
            n_W=n_w,
        )
    raise ConfigError(f"unknown interaction kind {cfg.interaction_kind!r}")


def build_mode_model(cfg: ExperimentConfig, grid: Grid, T: OneBodyOperator) -> ModelSpec:
    M = cfg.mode_count
    positions = (np.arange(M) - (M - 1) / 2) * cfg.mode_spacing
    q = cfg.mode_profile_power
    seeds = []
    for p in positions:
        r = grid.distances_to([p] * grid.dimension if grid.dimension == 2 else [p])
        seeds.append(GridFunction(grid, (1.0 + r**2) ** (-q)).normalized())
    tags = [{"position": float(p)} for p in positions]
    basis = gram_schmidt_basis(grid, seeds, tags)
    centers = cfg.centers or [float(p) for p in positions[1:-1]][:12]
    centers_arr = [[c] for c in centers]
    return ModelSpec.from_onebody(
        basis,
        T,
        build_interaction(cfg),
        sigma=cfg.sigma,
        centers=centers_arr,
        quad_weight=cfg.quad_weight,
    )


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def run_onebody_scan(cfg: ExperimentConfig, out: Path, jobs: int) -> dict:
    grid = build_grid(cfg)
    T = assemble(grid, cfg.kappa, build_potential(cfg, grid))
    center = tuple(cfg.smearing_center[: grid.dimension]) or (0.0,) * grid.dimension
    smear = SmearingFunction("gaussian", center, sigma=cfg.sigma)
    write_gridfunction_csv(smear.sample(grid), out / "smearing.csv")
    probes = [annulus_probe(grid, center, d, d + 1.0) for d in sorted(cfg.distance_list)]

    def one_time(t):
        return overlap_scan(T, smear, probes, [t], cfg.n, cfg.delta)

    chunks = _parallel_map(one_time, sorted(cfg.t_list), jobs)
    rows = []
    for chunk in chunks:
        for row in chunk:
            rows.append(
                (row.t, row.distance, row.lhs_overlap, row.lhs_diff_overlap,
                 row.rhs_envelope, row.ratio)
            )
    rows.sort(key=lambda r: (r[0], r[1]))
    write_csv(
        out / "onebody_scan.csv",
        ["t", "distance", "lhs_overlap", "lhs_diff_overlap", "rhs_envelope", "ratio"],
        rows,
    )
    fitted = max((r[5] for r in rows), default=0.0)
    return {"fitted_onebody_constant": fitted, "rows": len(rows)}


def run_propagation_norm(cfg: ExperimentConfig, out: Path, jobs: int) -> dict:
    grid = build_grid(cfg)
    T = assemble(grid, cfg.kappa, build_potential(cfg, grid))
    cutoff = EnergyCutoff(E=cfg.E, alpha=cfg.alpha)
    c_e = momentum_norm_under_cutoff(T, cfg.alpha, cfg.E)
    points = [(t, R) for t in sorted(cfg.t_list) for R in sorted(cfg.distance_list)]

    def one_point(point):
        t, R = point
        return propagation_norm(T, cutoff, cfg.r, R, t)

    values = _parallel_map(one_point, points, jobs)
    rows = [
        (t, cfg.r, R, cfg.E, cfg.alpha, c_e, v)
        for (t, R), v in zip(points, values)
    ]
    write_csv(
        out / "propagation_norm.csv",
        ["t", "r", "R", "E", "alpha", "c_E", "norm"],
        rows,
    )
    return {"speed_scale": c_e, "rows": len(rows)}


def _mode_pairs_by_distance(model: ModelSpec, distances: list[float]) -> list[tuple[int, int, float]]:
    positions = [tag.get("position", 0.0) for tag in model.basis.tags]
    pairs = []
    for target in distances:
        best = None
        for i in range(model.basis.size):
            for j in range(i, model.basis.size):
                d = abs(positions[j] - positions[i])
                score = abs(d - target)
                if best is None or score < best[0]:
                    best = (score, i, j, d)
        pairs.append((best[1], best[2], best[3]))
    return pairs


def run_manybody_scan(cfg: ExperimentConfig, out: Path, jobs: int) -> dict:
    grid = build_grid(cfg)
    T = assemble(grid, cfg.kappa, build_potential(cfg, grid))
    model = build_mode_model(cfg, grid, T)
    model.hamiltonian()
    loss = model.max_projection_loss
    if loss > PROJECTION_LOSS_LIMIT:
        raise HypothesisError(
            f"smearing projection loss {loss:.3f} exceeds {PROJECTION_LOSS_LIMIT}"
        )
    params = bc.BoundParams(
        n=cfg.n, delta=cfg.delta, sigma=cfg.sigma, alpha=cfg.alpha,
        n_V=cfg.potential_smoothness, n_W=cfg.interaction_decay_power,
        c_W=model.interaction.c_W, W_l1=max(model.interaction.sample(grid).l1_norm(), 1e-300),
    )
    pairs = _mode_pairs_by_distance(model, sorted(cfg.distance_list))
    points = [(t, pair) for t in sorted(cfg.t_list) for pair in pairs]

    def one_point(point):
        t, (i, j, d) = point
        f, g = model.basis.modes[i], model.basis.modes[j]
        value = anticommutator_difference(model, f, g, t)
        envelope = bc.pair_envelope_integral(f, g, cfg.n, t)
        xi = bc.manybody_time_envelope(t, params, grid.dimension)
        rhs = math.sqrt(xi * envelope)
        ratio = value / rhs if rhs > 0 else math.inf
        return (t, d, value, rhs, ratio, loss, model.basis.size, len(model.centers))

    rows = _parallel_map(one_point, points, jobs)
    rows.sort(key=lambda r: (r[0], r[1]))
    write_csv(
        out / "manybody_scan.csv",
        ["t", "dist", "F_t", "bound_rhs", "ratio", "projection_loss", "M", "centers"],
        rows,
    )
    finite = [r[4] for r in rows if math.isfinite(r[4]) and r[4] > 0]
    return {
        "fitted_manybody_constant": max(finite, default=0.0),
        "rows": len(rows),
    }


def run_condexp_check(cfg: ExperimentConfig, out: Path, jobs: int) -> dict:
    grid = build_grid(cfg)
    width = max(cfg.sigma, 4 * grid.spacing)
    kept = [-1.5 * width, 1.5 * width]
    region_half = 3.0 * width
    base = region_half + width
    complement = [
        base + 2.5 * width, -(base + 2.5 * width),
        base + 6.0 * width, -(base + 6.0 * width),
    ]
    seeds = [make_bump(grid, width, [p], "l2") for p in kept + complement]
    tags = [{"position": p} for p in kept + complement]
    basis = gram_schmidt_basis(grid, seeds, tags)
    mask = grid.distances_to((0.0,) * grid.dimension) <= region_half
    plan = build_dyadic_mode_plan(mask, basis, C_X=width, C_J=2.0, n=cfg.n)
    (out / "plan_manifest.json").write_text(json.dumps(plan.manifest(), indent=2))
    rng = np.random.default_rng(cfg.seed)
    dim = 2**basis.size
    parity = np.where(
        np.array([bin(s).count("1") for s in range(dim)]) % 2 == 0, 1.0, -1.0
    )
    rows = []
    worst = 0.0
    for trial in range(10):
        mat = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        A = FockOperator(basis.size, mat)
        EA = conditional_expectation(A, plan)
        contr = EA.norm() - A.norm()
        idem = (conditional_expectation(EA, plan) - EA).norm()
        even = FockOperator(
            basis.size, np.where(parity[:, None] == parity[None, :], mat, 0.0)
        )
        B = creation_operator(basis.modes[0], basis) @ annihilation_operator(
            basis.modes[0], basis
        )
        tom = bimodule_residual(even, B, B, plan)
        rows.append((trial, "contractivity_excess", max(contr, 0.0)))
        rows.append((trial, "idempotence_residual", idem))
        rows.append((trial, "bimodule_residual", tom))
        worst = max(worst, max(contr, 0.0), idem, tom)
    write_csv(out / "condexp_check.csv", ["trial", "check", "residual"], rows)
    if worst > 1e-10:
        raise ArithmeticError(f"conditional-expectation residual {worst} above 1e-10")
    return {"worst_residual": worst, "rows": len(rows)}


def run_constants_report(cfg: ExperimentConfig, out: Path, jobs: int) -> dict:
    sups = smoothstep_sup_norms(max(cfg.n, 3) + 2)
    constants = []
    # window-norm domination over the (E, n, p) lattice
    worst_ratio = 0.0
    for E in (1.0, 4.0, 16.0):
        for n in (1, 2, 3):
            for p in (0.5, 1.0, 2.0):
                cutoff = EnergyCutoff(E=E, alpha=cfg.alpha)
                spec = bc.SmoothFunctionSpec(
                    derivatives=[cutoff]
                    + [
                        (lambda k: (lambda x: float(cutoff.derivatives(float(x), k)[k])))(k)
                        for k in range(1, n + 3)
                    ],
                    derivative_support=cutoff.derivative_support(),
                )
                norm = bc.weighted_derivative_norm(spec, n, p)
                bound = bc.cutoff_norm_bound(sups, cfg.alpha, E, n, p)
                worst_ratio = max(worst_ratio, norm / bound)
    constants.append(
        {
            "name": "window_norm_vs_bound",
            "fitted_value": worst_ratio,
            "sweep_range": "E in {1,4,16} x n in {1,2,3} x p in {0.5,1,2}",
            "max_ratio": worst_ratio,
        }
    )
    fit = bc.convolution_decay_check(1.0, 2, 1.0, 1.0, 2, 1.0)
    constants.append(
        {
            "name": "convolution_decay_constant",
            "fitted_value": fit.fitted_c,
            "sweep_range": f"|x| <= {fit.max_abs_x}",
            "max_ratio": fit.fitted_c,
        }
    )
    ok, worst = bc.time_moment_inequality_check(
        1 + 2 * cfg.delta, 2.0 * cfg.dimension, 3, cfg.t_list
    )
    constants.append(
        {
            "name": "time_moment_inequality",
            "fitted_value": worst,
            "sweep_range": f"t in {sorted(cfg.t_list)}",
            "max_ratio": worst,
        }
    )
    constants.append(
        {
            "name": "power_weight_integral_2",
            "fitted_value": bc.power_weight_integral(2.0),
            "sweep_range": "k = 2",
            "max_ratio": 1.0,
        }
    )
    (out / "constants.json").write_text(json.dumps(constants, indent=2))
    # envelope table + series terms for plotting
    env_rows = []
    for t in sorted(cfg.t_list):
        for rr in np.linspace(0.0, 4 * cfg.horizon(), 81):
            env_rows.append((t, float(rr), decay_envelope(cfg.n, t, float(rr))))
    write_csv(out / "envelope_table.csv", ["t", "r", "G"], env_rows)
    grid = Grid(1, 256, 64.0)
    f = make_gaussian(grid, cfg.sigma, [-2.0], "l2")
    g = make_gaussian(grid, cfg.sigma, [2.0], "l2")
    phi_l2 = make_gaussian(grid, cfg.sigma, [0.0], "l1").l2_norm()
    params = bc.BoundParams(
        n=min(cfg.n, 2), delta=cfg.delta, sigma=cfg.sigma, alpha=cfg.alpha,
        n_V=cfg.potential_smoothness, n_W=max(cfg.interaction_decay_power, 2),
        c_W=1.0, W_l1=1.0,
    ).with_derived_mb_constants(phi_l2)
    series = bc.iteration_series_terms(
        20, max(cfg.t_list), params, phi_l2, f, g, 1
    )
    write_csv(
        out / "series_terms.csv",
        ["k", "S_k", "R_N"],
        list(zip(series.order, series.main_terms, series.remainders)),
    )
    if not ok:
        raise ArithmeticError(f"time-moment inequality violated: ratio {worst}")
    if worst_ratio > 1.0:
        raise ArithmeticError("window norm exceeded its closed-form bound")
    return {"constants": constants}


def run_clustering(cfg: ExperimentConfig, out: Path, jobs: int) -> dict:
    grid = build_grid(cfg)
    M = cfg.mode_count
    positions = (np.arange(M) - (M - 1) / 2) * cfg.mode_spacing
    seeds = [make_gaussian(grid, cfg.sigma, [p], "l2") for p in positions]
    basis = gram_schmidt_basis(grid, seeds, [{"position": float(p)} for p in positions])
    chain = np.zeros((M, M))
    for j in range(M - 1):
        chain[j, j + 1] = chain[j + 1, j] = -1.0
    chain += np.diag([0.3 * (-1) ** j for j in range(M)])
    model = ModelSpec(
        basis=basis,
        one_body=chain,
        centers=np.array([[p] for p in positions[2 : min(M - 2, 8)]]),
        interaction=build_interaction(cfg),
        sigma=cfg.sigma,
        quad_weight=cfg.quad_weight,
    )
    H = model.hamiltonian()
    gs = ground_state(H)
    A = creation_operator(basis.modes[0], basis)
    rows = []
    for b in sorted(cfg.b_list):
        for j in range(1, M, max(1, (M - 1) // 4)):
            B = annihilation_operator(basis.modes[j], basis)
            val = clustering_probe(H, A, B, b)
            d_min = abs(float(positions[j] - positions[0]))
            rows.append((b, d_min, abs(val), gs.gap))
    write_csv(out / "clustering.csv", ["b", "dmin", "value", "gap"], rows)
    return {"gap": gs.gap, "rows": len(rows)}


def run_volume_convergence(cfg: ExperimentConfig, out: Path, jobs: int) -> dict:
    grid = build_grid(cfg)
    T = assemble(grid, cfg.kappa, build_potential(cfg, grid))
    M = cfg.mode_count
    positions = (np.arange(M) - (M - 1) / 2) * cfg.mode_spacing
    seeds = [make_gaussian(grid, cfg.sigma, [p], "l2") for p in positions]
    basis = gram_schmidt_basis(grid, seeds, [{"position": float(p)} for p in positions])
    order = np.argsort(np.abs(positions))  # grow outward from the middle
    models = []
    for count in sorted(cfg.volume_sizes):
        chosen = sorted(float(positions[i]) for i in order[:count])
        models.append(
            ModelSpec.from_onebody(
                basis, T, build_interaction(cfg), sigma=cfg.sigma,
                centers=[[c] for c in chosen], quad_weight=cfg.quad_weight,
            )
        )
    f = basis.modes[int(order[0])]
    rows = nested_volume_differences(models, f, sorted(cfg.t_list))
    write_csv(out / "volume_convergence.csv", ["t", "k", "difference"], rows)
    return {"rows": len(rows)}


RUNNERS = {
    "onebody-scan": run_onebody_scan,
    "propagation-norm": run_propagation_norm,
    "manybody-scan": run_manybody_scan,
    "condexp-check": run_condexp_check,
    "constants-report": run_constants_report,
    "clustering": run_clustering,
    "volume-convergence": run_volume_convergence,
}


def run(cfg: ExperimentConfig, out_dir: str | None = None, jobs: int | None = None) -> int:
    """Execute one experiment; returns the process exit code."""
    if cfg.kind not in EXPERIMENT_KINDS:
        print(f"unknown experiment kind: {cfg.kind}", file=sys.stderr)
        return EXIT_UNKNOWN
    violations = validate(cfg)
    if violations:
        for v in violations:
            print(f"config violation: {v}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    try:
        summary = RUNNERS[cfg.kind](cfg, out, _worker_count(jobs or cfg.jobs))
    except (HypothesisError, CapacityError, PlanError, TruncationError, ConfigError) as exc:
        print(f"hypothesis/capacity error: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (ArithmeticError, LightconeLabError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    manifest = {
        "config": cfg.echo(),
        "summary": summary,
        "wall_time_s": time.perf_counter() - start,
        "generated_at": datetime.now(timezone.utc).isoformat(),
    }
    (out / "run_manifest.json").write_text(json.dumps(manifest, indent=2, default=str))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="lightcone-lab",
        description=(
            "Numerical experiments on propagation bounds for smeared continuum "
            "fermions.  All quantities use natural units (hbar = mass = 1)."
        ),
    )
    parser.add_argument("experiment", choices=sorted(EXPERIMENT_KINDS), help="experiment kind")
    parser.add_argument("--config", required=True, help="INI config file")
    parser.add_argument("--jobs", type=int, default=None, help="worker pool size")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument(
        "--max-points", type=int, default=None, help="sweep size guard (default 10^4)"
    )
    args = parser.parse_args(argv)
    try:
        cfg = ExperimentConfig.from_file(args.config)
    except (ConfigError, ValueError) as exc:
        print(f"bad config: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN
    cfg.kind = args.experiment
    if args.max_points is not None:
        cfg.max_points = args.max_points
    if args.jobs is not None:
        cfg.jobs = args.jobs
    return run(cfg, out_dir=args.out, jobs=args.jobs)


if __name__ == "__main__":
    sys.exit(main())
