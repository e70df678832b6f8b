"""Experiment runners behind the CLI.

Each runner returns an ``Outcome``: named tables (columns, rows), a JSON
summary and a dict of named invariant checks.  ``run`` writes the artifacts
and maps the checks to an exit status.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import ortho_group

from . import fock_lab as fl
from .config import RunConfig
from .errors import LabError, RangeError, SCFDivergedError
from .hartree import commutator_report, scf_solve
from .io import artifact_path, write_csv, write_json
from .lattice import Grid, ModelParams, build_laplacian
from .phase_space import PhaseSpaceGrid, wigner_transform
from .potentials import (PowerLaw, apply_cutoff, fourier_l1, sample_external, tail_lp_norm,
                         v_norm)
from .semiclassics import (RATE_COLUMNS, NumberExperimentConfig, SweepConfig,
                           convergence_sweep, number_estimate_experiment, rate_fit,
                           weyl_law_check, window_count_check)
from .thomas_fermi import tf_energy, tf_solve

log = logging.getLogger(__name__)

SCF_RESIDUAL_FACTOR = 1e-6
EIG_SLACK = 1e-10


@dataclass
class Outcome:
    tables: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(self.checks.values())


def _grid(cfg: RunConfig):
    return Grid.uniform(cfg.L, cfg.n)


def _tf(cfg: RunConfig, grid=None):
    grid = grid or _grid(cfg)
    return tf_solve(cfg.external_potential(), cfg.scf_pair(grid), grid, d=cfg.d)


def scf_certificate(state) -> dict:
    nu = state.factors.nu
    return {"residual": state.residual, "residual_bound": SCF_RESIDUAL_FACTOR * state.params.N,
            "eig_min": float(np.min(nu, initial=0.0)), "eig_max": float(np.max(nu, initial=0.0)),
            "ok": bool(state.residual <= SCF_RESIDUAL_FACTOR * state.params.N
                       and np.all(nu >= -EIG_SLACK) and np.all(nu <= 1 + EIG_SLACK))}


# -- lattice runners -----------------------------------------------------------

def run_tf(cfg: RunConfig) -> Outcome:
    grid = _grid(cfg)
    U = cfg.external_potential()
    V = cfg.scf_pair(grid)
    tf = tf_solve(U, V, grid, d=cfg.d)
    rows = [{"x": x, "rho": r} for x, r in zip(grid.points, tf.rho)]
    summary = {"mu": tf.mu, "mass": tf.mass, "energy": tf_energy(tf.rho, U, V, grid, cfg.d),
               "fixed_point_residual": tf.residual, "n": grid.n, "L": grid.L}
    checks = {"unit_mass": abs(tf.mass - 1) <= 1e-8, "fixed_point": tf.residual <= 1e-8}
    return Outcome({"density": (("x", "rho"), rows)}, summary, checks)


def _hartree_state(cfg: RunConfig, N=None):
    grid = _grid(cfg)
    tf = _tf(cfg, grid)
    params = ModelParams.from_particles(N or cfg.N, cfg.L, cfg.n, d=cfg.d)
    state = scf_solve(cfg.external_potential(), cfg.scf_pair(grid), tf.mu, params,
                      alpha=cfg.alpha, tol=cfg.tol, max_iter=cfg.max_iter)
    return tf, state


def run_hartree(cfg: RunConfig) -> Outcome:
    tf, state = _hartree_state(cfg)
    grid = state.params.grid
    rows = [{"x": x, "rho_hartree": r, "rho_tf": t} for x, r, t in zip(grid.points, state.rho, tf.rho)]
    cert = scf_certificate(state)
    summary = {"mu": state.mu, "N": state.params.N, "hbar": state.params.hbar,
               "trace": state.trace, "iterations": state.iterations, "alpha": state.alpha,
               "energy": state.energy, "energy_hf": state.energy_hf, "certificate": cert,
               "commutators": commutator_report(state.factors, state.params, cfg.xi_samples)}
    return Outcome({"density": (("x", "rho_hartree", "rho_tf"), rows)}, summary,
                   {"scf_certificate": cert["ok"]})


def run_sweep(cfg: RunConfig) -> Outcome:
    grid = _grid(cfg)
    sc = SweepConfig(N_list=cfg.N_list, U=cfg.external_potential(), V=cfg.scf_pair(grid),
                     L=cfg.L, n=cfg.n, d=cfg.d, alpha=cfg.alpha, tol=cfg.tol,
                     max_iter=cfg.max_iter, xi_samples=cfg.xi_samples)
    rep = convergence_sweep(sc)
    rows = [{k: r[k] for k in RATE_COLUMNS} for r in rep.rows]
    td = [r["trace_dist"] for r in rep.rows]
    summary = {"fit": rep.fit, "tf_mu": rep.tf_mu, "rows": rep.extras,
               "failed": [e.get("N") for e, r in zip(rep.extras, rep.rows) if not r["ok"]]}
    checks = {"all_rows_converged": not rep.failed,
              "trace_dist_decreasing": bool(np.all(np.diff(td) < 0)),
              "norm_ordering": all(r["trace_dist"] >= r["hs_dist"] for r in rep.rows if r["ok"])}
    return Outcome({"rates": (RATE_COLUMNS, rows)}, summary, checks)


def run_wigner(cfg: RunConfig) -> Outcome:
    tf, state = _hartree_state(cfg)
    grid = state.params.grid
    psg = PhaseSpaceGrid.for_grid(grid, state.params.hbar)
    f = wigner_transform(state.gamma, psg)
    norm = f.integral() / (2 * np.pi * state.params.hbar) / state.params.N
    keep_p = np.flatnonzero(np.abs(psg.p) <= cfg.wigner_p_max)
    keep_x = np.unique(np.linspace(0, grid.n - 1, min(cfg.wigner_x_points, grid.n)).round().astype(int))
    rows = [{"x": grid.points[j], "p": psg.p[k], "f": f.values[k, j]} for j in keep_x for k in keep_p]
    summary = {"normalization": norm, "trace_over_N": state.trace / state.params.N,
               "l2_norm": f.l2_norm(), "hbar": state.params.hbar}
    checks = {"normalization": abs(norm - state.trace / state.params.N) <= 1e-8,
              "scf_certificate": scf_certificate(state)["ok"]}
    return Outcome({"wigner": (("x", "p", "f"), rows)}, summary, checks)


def run_weyl_law(cfg: RunConfig, tolerance=2.0) -> Outcome:
    grid = _grid(cfg)
    W = sample_external(cfg.external_potential(), grid) - cfg.weyl_shift
    rows = []
    for h in cfg.hbar_list:
        r = weyl_law_check(W, grid, h, d=cfg.d)
        rows.append({"hbar": h, **r})
    worst = max(r["deficit"] for r in rows)
    return Outcome({"weyl": (("hbar", "count", "phase_volume", "deficit"), rows)},
                   {"max_deficit": worst, "tolerance": tolerance},
                   {"deficit_bounded": worst <= tolerance})


def run_window(cfg: RunConfig) -> Outcome:
    grid = _grid(cfg)
    tf = _tf(cfg, grid)
    rows = []
    for N in cfg.N_list:
        params = ModelParams.from_particles(N, cfg.L, cfg.n, d=cfg.d)
        state = scf_solve(cfg.external_potential(), cfg.scf_pair(grid), tf.mu, params,
                          alpha=cfg.alpha, tol=cfg.tol, max_iter=cfg.max_iter)
        for eps in cfg.eps_list:
            w = window_count_check(state, eps)
            rows.append({"N": N, "hbar": params.hbar, "eps": w.eps, "count": w.count,
                         "bound_ratio": w.bound_ratio})
    ratios = [r["bound_ratio"] for r in rows]
    return Outcome({"window": (("N", "hbar", "eps", "count", "bound_ratio"), rows)},
                   {"max_ratio": max(ratios), "min_ratio": min(ratios)},
                   {"counts_nonnegative": all(r["count"] >= 0 for r in rows),
                    "ratio_finite": bool(np.all(np.isfinite(ratios)))})


def cutoff_table(V, grid: Grid, cutoffs, p_list, d=1, rel_tol=0.15):
    """Tail norms over the cutoffs and fitted slopes against ``-(d/p - a)``."""
    rows, fits = [], []
    for p in p_list:
        pts = []
        for lam in cutoffs:
            val = tail_lp_norm(apply_cutoff(V, lam, grid), p)
            rows.append({"Lambda": lam, "p": p, "tail_norm": val})
            pts.append((lam, val))
        slope = rate_fit(pts)["beta"]
        target = -(d / p - V.a)
        fits.append({"p": p, "slope": slope, "target": target,
                     "ok": abs(slope - target) <= rel_tol * abs(target)})
    return rows, fits


def run_cutoff(cfg: RunConfig) -> Outcome:
    grid = _grid(cfg)
    V = cfg.pair_potential()
    if not isinstance(V, PowerLaw):
        raise LabError("cutoff tails need a power-law pair potential")
    rows, fits = cutoff_table(V, grid, cfg.cutoffs, cfg.p_list, cfg.d)
    return Outcome({"tails": (("Lambda", "p", "tail_norm"), rows)}, {"fits": fits},
                   {f"slope_p={f['p']}": f["ok"] for f in fits})


# -- Fock-space batteries --------------------------------------------------------

def fock_instance(seed, M=6, n_occ=3, L=6.0, n=128, Lambda=8.0):
    """Random rotation of the lowest harmonic modes, a random occupied set and
    the cutoff power-law tensor in that basis."""
    rng = np.random.default_rng(seed)
    grid = Grid.uniform(L, n)
    hbar = 1.0 / n_occ
    H = build_laplacian(grid, hbar) + np.diag(grid.points**2)
    _, q = np.linalg.eigh(H)
    Q = ortho_group.rvs(M, random_state=rng) if seed % 2 else np.eye(M)
    modes = q[:, :M] @ Q
    V = apply_cutoff(PowerLaw(float(rng.uniform(0.1, 1.0)), 0.5), Lambda, grid)
    S = tuple(sorted(rng.choice(M, size=n_occ, replace=False)))
    h = modes.T @ H @ modes
    return {"modes": modes, "grid": grid, "V": V, "S": S, "h": h, "hbar": hbar, "rng": rng,
            "W": fl.pair_tensor(modes, V, grid)}


def fock_batteries(cfg: RunConfig) -> tuple:
    M6 = 6
    records = []

    def rec(lemma, seed, residual=None, min_eig=None, ok=True, **extra):
        records.append({"lemma": lemma, "instance_seed": seed, "residual": residual,
                        "min_eigenvalue": min_eig, "ok": bool(ok), **extra})

    for M in sorted({min(cfg.M, 10), M6}):
        r = fl.car_residual(fl.FockSpace(M))
        rec("car", M, residual=r, ok=r <= 1e-14)
    fs = fl.FockSpace(M6)
    for k in range(cfg.instances):
        seed = cfg.seed * 1000 + k
        inst = fock_instance(seed)
        ph = fl.particle_hole(inst["S"], fs)
        rng = inst["rng"]
        c = max(fl.conjugation_residual(ph), fl.unitarity_residual(ph))
        rec("particle_hole", seed, residual=c, ok=c <= 1e-12)
        A = rng.normal(size=(M6, M6))
        A = A + A.T
        r3 = fl.verify_one_body_conjugation(A, ph)
        rec("one_body_conjugation", seed, residual=r3, ok=r3 <= 1e-10)
        W = inst["W"]
        r4 = fl.verify_two_body_conjugation(W, ph)
        rec("two_body_conjugation", seed, residual=r4, ok=r4 <= 1e-9)
        r1 = fl.verify_lemma1_assembly(inst["h"], W, len(inst["S"]), ph)
        rec("hamiltonian_assembly", seed, residual=r1, ok=r1 <= 1e-9)
        if k < max(1, cfg.instances // 5):
            rec_q = quadratic_form_instance(inst, ph)
            worst = min(v for key, v in rec_q.items() if key not in ("scale", "exchange_max_expectation", "C0"))
            rec("quadratic_forms", seed, min_eig=worst,
                ok=worst >= -1e-8 * rec_q["scale"] and rec_q["exchange_max_expectation"] > 0, **rec_q)
    rng = np.random.default_rng(cfg.seed)
    for k in range(20):
        H = rng.normal(size=(min(cfg.M, 8),) * 2)
        H = H + H.T
        w = np.linalg.eigvalsh(H)
        mu = float(rng.uniform(w[0] - 0.5, w[-1] + 0.5))
        eps = float(rng.uniform(0.05, 1.0))
        m = fl.verify_gap_inequality(H, mu, eps)
        rec("gap_inequality", k, min_eig=m, ok=m >= -1e-10, mu=mu, eps=eps)
    m = fl.verify_gap_inequality(np.diag([0.0, 0.5, 1.0, 1.5, 2.0, 3.0]), 1.0, 0.1)
    rec("gap_inequality_degenerate", 0, min_eig=m, ok=m >= -1e-10)
    est = fl.estimate_battery(M=M6, trials=cfg.trials, seed=cfg.seed)
    for name in fl.ESTIMATES:
        rec(f"estimate_{name}", cfg.seed, min_eig=est["min_margin"][name],
            ok=est["violations"][name] == 0, violations=est["violations"][name])
    return records


def quadratic_form_instance(inst, ph) -> dict:
    modes, grid, hbar = inst["modes"], inst["grid"], inst["hbar"]
    N = len(inst["S"])
    xis = (0.5, 1.0, 2.0, 4.0)
    params = ModelParams(d=1, N=N, hbar=hbar, L=grid.L, n=grid.n)
    glat = modes @ ph.gamma @ modes.T
    C0 = max(commutator_report(glat, params, xis)["fourier_comm_max"],
             fl.mode_commutator_constant(modes, ph.gamma, grid, xis, N, hbar))
    rep = fl.verify_quadratic_form_bounds(inst["W"], ph, hbar, N, C0, v_norm(inst["V"]),
                                          fourier_l1(inst["V"]))
    return {**rep, "C0": C0}


def run_fock_verify(cfg: RunConfig) -> Outcome:
    records = fock_batteries(cfg)
    rows = [{k: r[k] for k in ("lemma", "instance_seed", "residual", "min_eigenvalue", "ok")}
            for r in records]
    checks = {}
    for r in records:
        checks[r["lemma"]] = checks.get(r["lemma"], True) and r["ok"]
    return Outcome({"batteries": (("lemma", "instance_seed", "residual", "min_eigenvalue", "ok"),
                                  [{k: ("" if v is None else v) for k, v in row.items()} for row in rows])},
                   {"reports": records}, checks)


NBODY_COLUMNS = ("lambda", "fluctuation", "fluctuation_identity", "trace_dist", "bound", "c",
                 "identity_residual", "E0", "E_hf")


def nbody_checks(result) -> dict:
    rows = result["rows"]
    zero = [r for r in rows if r["lambda"] == 0]
    exp = result["lambda_exponent"]
    return {
        "free_fluctuation_zero": all(r["fluctuation"] <= 1e-10 and r["trace_dist"] <= 1e-10 for r in zero),
        "lambda_exponent": exp is not None and abs(exp - 2) <= 0.2,
        "rdm_bound": all(r["trace_dist"] <= r["bound"] for r in rows),
        "variational_order": all(r["E0"] <= r["E_hf"] + 1e-12 * max(1.0, abs(r["E_hf"])) for r in rows),
        "fluctuation_identity": all(abs(r["fluctuation"] - r["fluctuation_identity"]) <= 1e-10 for r in rows),
        "field_identity": all(r["identity_residual"] <= 1e-10 for r in rows),
    }


def run_nbody(cfg: RunConfig) -> Outcome:
    ncfg = NumberExperimentConfig(M=cfg.M, N=cfg.fock_N, lambdas=cfg.lambdas, a=cfg.a,
                                  Lambda=cfg.fock_Lambda, L=cfg.fock_L, n=cfg.fock_n,
                                  omega2=cfg.omega2)
    res = number_estimate_experiment(ncfg)
    rows = [{k: r[k] for k in NBODY_COLUMNS} for r in res["rows"]]
    return Outcome({"number": (NBODY_COLUMNS, rows)}, res, nbody_checks(res))


RUNNERS = {"tf": run_tf, "hartree": run_hartree, "sweep": run_sweep, "wigner": run_wigner,
           "weyl-law": run_weyl_law, "window": run_window, "cutoff": run_cutoff,
           "fock-verify": run_fock_verify, "nbody": run_nbody}


def run(subcommand: str, cfg: RunConfig, out_dir=None) -> int:
    """Execute one subcommand, write its artifacts and return the exit status."""
    out = Path(out_dir or cfg.out)
    digest = cfg.digest()
    runner = RUNNERS[subcommand]
    try:
        outcome = runner(cfg)
    except (LabError, ArithmeticError, np.linalg.LinAlgError) as exc:
        diag = {"subcommand": subcommand, "error": type(exc).__name__, "message": str(exc),
                "config": cfg.source}
        if isinstance(exc, SCFDivergedError):
            diag["residual_history"] = exc.history
        if isinstance(exc, RangeError):
            diag["hint"] = "tail exponent outside the admissible range"
        path = write_json(artifact_path(out, subcommand, digest, "diagnostics", "json"), diag)
        log.error("%s failed: %s (diagnostics in %s)", subcommand, exc, path)
        return 1
    for name, (columns, rows) in outcome.tables.items():
        write_csv(artifact_path(out, subcommand, digest, name, "csv"), columns, rows)
    write_json(artifact_path(out, subcommand, digest, "summary", "json"),
               {"subcommand": subcommand, "config_hash": digest, "summary": outcome.summary,
                "checks": outcome.checks, "ok": outcome.ok})
    for name, passed in outcome.checks.items():
        log.info("%-28s %s", name, "PASS" if passed else "FAIL")
    return 0 if outcome.ok else 1
