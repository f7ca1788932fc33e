"""Verification suite: nine numbered end-to-end checks of the simulator.

Each criterion returns a CriterionResult with a one-line PASS/FAIL summary
carrying the measured numbers.  `run_verification` executes a level:

* quick -- subsets of the seeded populations and fewer grid-engine runs,
  sized to finish in well under a minute;
* full  -- the complete populations (20x5 half-period pairs, 1000 compiled
  targets, grid-engine abacus moves and CNOT truth table, ...).

Criteria draw their randomness from per-criterion generators seeded as
(seed, criterion_number), so results are reproducible and independent of
execution order; independent criteria may run concurrently, capped by the
ABACUS_NUM_THREADS environment variable.
"""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .abacus import (
    apply_gate,
    bump_profile,
    classical_run,
    cnot_trigger,
    compile_gate,
    prepare,
    readout,
)
from .config import DEFAULT_CONFIG, DEFAULT_GRID_NODES, DEFAULT_N_MODES
from .errors import PhysicsContractError
from .evolve import evolve_grid_cn, evolve_modal, half_period_map, run_schedule
from .oscillator import GridState, _resolve_workspace, make_grid
from .pointint import fd_oracle_levels, robin_levels, scattering_amplitudes, spectrum
from .su2 import (
    HADAMARD,
    IDENTITY,
    MINUS_IDENTITY,
    PAULI_X,
    PAULI_Z,
    UnitaryGate,
    conjugate,
    decompose_gate,
    random_bloch,
    random_unitary,
)

__all__ = ["CriterionResult", "VerificationReport", "run_verification",
           "CRITERION_NAMES"]

CRITERION_NAMES = {
    1: "half-period identity (grid engine vs -iU, modal exactness, refinement)",
    2: "equally spaced ladder for scale-invariant gates (+ fd oracle)",
    3: "isospectrality under conjugation (analytic + fd)",
    4: "Hadamard transmission one-half and scattering unitarity",
    5: "gate compiler: <= 4 reflection steps, modal execution",
    6: "Robin solver: exact ladders, fd agreement, O(h^2) convergence",
    7: "abacus moves: NOT / closed / double-NOT / Hadamard populations",
    8: "trigger CNOT truth table and superposed-control rejection",
    9: "conjugation covariance of modal evolution",
}


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    measured: dict
    seconds: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return (f"[{tag}] criterion {self.number}: {self.name} -- "
                f"{self.detail} ({self.seconds:.1f}s)")

    def to_jsonable(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "detail": self.detail, "measured": self.measured,
                "seconds": self.seconds}


@dataclass
class VerificationReport:
    level: str
    seed: int
    results: list[CriterionResult]

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)

    def lines(self) -> list[str]:
        out = [r.line() for r in self.results]
        n_fail = sum(not r.passed for r in self.results)
        out.append(f"{'ALL PASS' if n_fail == 0 else f'{n_fail} FAILED'} "
                   f"({len(self.results)} criteria, level={self.level}, seed={self.seed})")
        return out

    def to_jsonable(self) -> dict:
        return {"level": self.level, "seed": self.seed,
                "all_passed": self.all_passed,
                "results": [r.to_jsonable() for r in self.results]}


def _rng(seed: int, number: int) -> np.random.Generator:
    return np.random.default_rng([seed, number])


def _l2_diff(a: GridState, b: GridState) -> float:
    return math.sqrt(a.grid.h * float(
        np.sum(np.abs(a.psi_plus - b.psi_plus) ** 2)
        + np.sum(np.abs(a.psi_minus - b.psi_minus) ** 2)))


def _fidelity(a: GridState, b: GridState) -> float:
    return abs(a.inner(b)) ** 2 / (a.norm_sq() * b.norm_sq())


def _build_pair_state(grid, params) -> GridState:
    f = bump_profile(grid, center=params["center"] * grid.cfg.ell)
    return GridState(grid, params["alpha"] * f, params["beta"] * f)


# --------------------------------------------------------------------------
# criterion bodies: each returns (passed, detail, measured)


def _criterion_1(level, seed, grid_nodes, dt):
    """Half period under 20 seeded Bloch gates = -iU pointwise: grid-engine
    fidelity >= 0.999 (improving under refinement), modal L2 error <= 1e-10."""
    cfg = DEFAULT_CONFIG
    nodes = grid_nodes or DEFAULT_GRID_NODES
    n_gates, n_profiles, n_refine = (20, 5, 2) if level == "full" else (4, 2, 1)
    rng = _rng(seed, 1)
    gates = [random_bloch(rng).gate() for _ in range(20)][:n_gates]
    profiles = []
    for _ in range(5):
        z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        z /= np.linalg.norm(z)
        profiles.append({"center": rng.uniform(2.8, 3.8),
                         "alpha": complex(z[0]), "beta": complex(z[1])})
    profiles = profiles[:n_profiles]

    grid = make_grid(cfg, nodes)
    fine_grid = make_grid(cfg, 2 * nodes)
    ws = _resolve_workspace(grid, DEFAULT_N_MODES, None)

    worst_fid = 1.0
    worst_modal = 0.0
    refinements = []
    pair_no = 0
    for g in gates:
        ref_mat = half_period_map(g).m
        for params in profiles:
            state = _build_pair_state(grid, params)
            ref = state.apply_pointwise(ref_mat)
            modal = evolve_modal(g, ws.project(state, g, normalize=False), cfg.tau, cfg)
            worst_modal = max(worst_modal, _l2_diff(ws.synthesize(modal), ref))
            res = evolve_grid_cn(g, state, cfg.tau, dt=dt)
            fid = _fidelity(res, ref)
            worst_fid = min(worst_fid, fid)
            if pair_no < n_refine:
                fine_state = _build_pair_state(fine_grid, params)
                fine_ref = fine_state.apply_pointwise(ref_mat)
                dt_cur = dt if dt is not None else cfg.tau / 2000.0
                fine_res = evolve_grid_cn(g, fine_state, cfg.tau, dt=dt_cur / 2.0)
                refinements.append((1.0 - fid, 1.0 - _fidelity(fine_res, fine_ref)))
            pair_no += 1

    refine_ok = all(fine < coarse for coarse, fine in refinements)
    passed = worst_fid >= 0.999 and worst_modal <= 1e-10 and refine_ok
    detail = (f"grid fidelity >= {worst_fid:.6f} over {pair_no} pairs, "
              f"modal L2 error <= {worst_modal:.2e}, refinement deficits "
              + ", ".join(f"{c:.1e}->{f:.1e}" for c, f in refinements))
    return passed, detail, {
        "worst_grid_fidelity": worst_fid, "worst_modal_l2": worst_modal,
        "pairs": pair_no, "nodes": nodes,
        "refinement_deficits": [[c, f] for c, f in refinements]}


def _criterion_2(level, seed, grid_nodes, dt):
    """Scale-invariant gates: exact (n + 1/2) ladder; fd oracle within 1e-4."""
    rng = _rng(seed, 2)
    gates = [PAULI_X, PAULI_Z, HADAMARD] + [random_bloch(rng).gate() for _ in range(3)]
    expected = np.arange(8) + 0.5
    worst_exact = 0.0
    worst_fd = 0.0
    for g in gates:
        analytic = spectrum(g, count=8)
        worst_exact = max(worst_exact, float(np.abs(analytic.levels - expected).max()))
        fd = spectrum(g, count=8, method="fd")
        worst_fd = max(worst_fd, float(np.abs(fd.levels - expected).max()))
    passed = worst_exact == 0.0 and worst_fd < 1e-4
    detail = (f"analytic deviation {worst_exact:.1e} (exact), "
              f"fd deviation {worst_fd:.2e} over {len(gates)} gates")
    return passed, detail, {"analytic_deviation": worst_exact,
                            "fd_deviation": worst_fd, "gates": len(gates)}


def _sample_safe_theta(rng) -> float:
    # stay away from the deep-bound-state window just below pi, where the
    # fd oracle at default resolution cannot track the level
    if rng.uniform() < 0.5:
        return float(rng.uniform(0.25, math.pi - 0.35))
    return float(rng.uniform(math.pi + 0.10, 2.0 * math.pi - 0.25))


def _criterion_3(level, seed, grid_nodes, dt):
    """spectrum(V U V^-1) = spectrum(U) for generic diagonal U, within 1e-4
    against the fd oracle and 1e-9 between analytic solves."""
    rng = _rng(seed, 3)
    n_pairs = 5
    worst_an = 0.0
    worst_fd = 0.0
    for _ in range(n_pairs):
        thp = _sample_safe_theta(rng)
        thm = _sample_safe_theta(rng)
        while abs(thp - thm) < 0.1:
            thm = _sample_safe_theta(rng)
        u = np.diag([np.exp(1j * thp), np.exp(1j * thm)])
        v = random_unitary(rng)
        uc = conjugate(u, v)
        a_u = spectrum(u, count=8)
        a_c = spectrum(uc, count=8)
        worst_an = max(worst_an, float(np.abs(a_u.levels - a_c.levels).max()))
        fd_c = spectrum(uc, count=8, method="fd")
        worst_fd = max(worst_fd, float(np.abs(a_u.levels - fd_c.levels).max()))
    passed = worst_an < 1e-9 and worst_fd < 1e-4
    detail = (f"analytic mismatch {worst_an:.2e}, fd cross-check {worst_fd:.2e} "
              f"over {n_pairs} conjugated pairs")
    return passed, detail, {"analytic_mismatch": worst_an, "fd_mismatch": worst_fd}


def _criterion_4(level, seed, grid_nodes, dt):
    """|t|^2 = 1/2 for the Hadamard junction at all energies; unitarity."""
    rng = _rng(seed, 4)
    ks = np.geomspace(0.1, 10.0, 50) / DEFAULT_CONFIG.ell
    worst_half = 0.0
    for k in ks:
        amp = scattering_amplitudes(HADAMARD, float(k))
        worst_half = max(worst_half, abs(amp.transmission - 0.5))
    gates = [PAULI_X, PAULI_Z, HADAMARD, IDENTITY, MINUS_IDENTITY]
    gates += [random_unitary(rng) for _ in range(3)]
    gates += [random_bloch(rng).gate() for _ in range(2)]
    worst_uni = 0.0
    for g in gates:
        for k in ks[:: 5 if level == "quick" else 1]:
            worst_uni = max(worst_uni,
                            scattering_amplitudes(g, float(k)).unitarity_residual())
    passed = worst_half < 1e-12 and worst_uni < 1e-12
    detail = (f"| |t|^2 - 1/2 | <= {worst_half:.1e} at 50 energies, "
              f"unitarity residual <= {worst_uni:.1e} over {len(gates)} gates")
    return passed, detail, {"hadamard_deviation": worst_half,
                            "unitarity_residual": worst_uni}


def _criterion_5(level, seed, grid_nodes, dt):
    """Compiler: <= 4 reflection steps, reconstruction <= 1e-12; compiled
    schedules on the modal engine reproduce amplitudes within 1e-8."""
    cfg = DEFAULT_CONFIG
    rng = _rng(seed, 5)
    n_targets = 1000 if level == "full" else 100
    specials = [PAULI_X, HADAMARD, IDENTITY, MINUS_IDENTITY, PAULI_Z,
                UnitaryGate(1j * np.eye(2)),
                UnitaryGate(np.diag([np.exp(1j * np.pi / 5), np.exp(-1j * np.pi / 5)]))]
    targets = specials + [random_unitary(rng)
                          for _ in range(max(0, n_targets - len(specials)))]
    # modal accuracy is insensitive to the node count; keep the runs cheap
    grid = make_grid(cfg, 1024)
    ws = _resolve_workspace(grid, DEFAULT_N_MODES, None)
    f = bump_profile(grid).astype(complex)

    worst_rec = 0.0
    worst_amp = 0.0
    max_bloch = 0
    for u in targets:
        dec = decompose_gate(u)
        worst_rec = max(worst_rec, dec.max_error())
        max_bloch = max(max_bloch, sum(1 for s in dec.steps if not isinstance(s, str)))
        compiled = compile_gate(u, cfg)
        max_bloch = max(max_bloch, compiled.n_gate_steps)
        z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        z /= np.linalg.norm(z)
        state = GridState(grid, z[0] * f, z[1] * f)
        run = run_schedule(compiled.schedule, state, "modal", workspace=ws)
        amp = np.array([grid.h * complex(np.vdot(f, run.final.psi_plus)),
                        grid.h * complex(np.vdot(f, run.final.psi_minus))])
        expected = compiled.recorded_phase * (u.m @ z)
        worst_amp = max(worst_amp, float(np.abs(amp - expected).max()))
    passed = worst_rec <= 1e-12 and max_bloch <= 4 and worst_amp <= 1e-8
    detail = (f"{len(targets)} targets: reconstruction <= {worst_rec:.1e}, "
              f"<= {max_bloch} reflection steps, modal amplitude error <= {worst_amp:.2e}")
    return passed, detail, {"targets": len(targets), "reconstruction": worst_rec,
                            "max_bloch_steps": max_bloch, "amplitude_error": worst_amp}


def _criterion_6(level, seed, grid_nodes, dt):
    """Robin solver: exact Dirichlet/Neumann ladders; theta = pi/2 agreement
    between the Gamma-function roots and the fd oracle; O(h^2) convergence."""
    neu = robin_levels(0.0, 8)
    diri = robin_levels(math.pi, 8)
    dev_n = float(np.abs(neu.levels - (2.0 * np.arange(8) + 0.5)).max())
    dev_d = float(np.abs(diri.levels - (2.0 * np.arange(8) + 1.5)).max())

    th = math.pi / 2.0
    analytic = robin_levels(th, 8)
    agree = float(np.abs(
        analytic.levels - fd_oracle_levels(th, 8, nodes=8192).levels).max())
    fd_hi = fd_oracle_levels(th, 8, nodes=4096)
    fd_lo = fd_oracle_levels(th, 8, nodes=2048)
    err_hi = np.abs(fd_hi.levels - analytic.levels)
    err_lo = np.abs(fd_lo.levels - analytic.levels)
    mask = err_hi > 1e-12
    ratio = float(np.median(err_lo[mask] / err_hi[mask])) if mask.any() else 4.0

    passed = dev_n == 0.0 and dev_d == 0.0 and agree < 1e-4 and 2.8 <= ratio <= 5.5
    detail = (f"exact ladder deviations ({dev_n:.1e}, {dev_d:.1e}), theta=pi/2 "
              f"fd agreement {agree:.2e}, error ratio at h -> h/2 is {ratio:.2f} "
              "(expect ~4)")
    return passed, detail, {"neumann_dev": dev_n, "dirichlet_dev": dev_d,
                            "fd_agreement": agree, "h2_ratio": ratio}


def _criterion_7(level, seed, grid_nodes, dt):
    """Abacus moves on |0>: populations for NOT, closed, double-NOT, Hadamard
    within 1e-8 (modal) and 2e-3 (grid); profile survives double-NOT."""
    cfg = DEFAULT_CONFIG
    nodes = grid_nodes or DEFAULT_GRID_NODES
    grid = make_grid(cfg, nodes)
    scenarios = [("NOT", ["open"], (0.0, 1.0)),
                 ("closed", ["closed"], (1.0, 0.0)),
                 ("double-NOT", ["open", "open"], (1.0, 0.0))]
    worst_modal = 0.0
    worst_grid = 0.0
    fid_dnot = 1.0
    decoherent = False
    for name, moves, want in scenarios:
        rm = classical_run(moves, "modal", cfg, grid=grid)
        ro = rm.readouts[-1]
        worst_modal = max(worst_modal, abs(ro.p0 - want[0]), abs(ro.p1 - want[1]))
        decoherent |= rm.decoherent
        if level == "full" or name == "double-NOT":
            rg = classical_run(moves, "grid", cfg, grid=grid, dt=dt)
            rgo = rg.readouts[-1]
            worst_grid = max(worst_grid, abs(rgo.p0 - want[0]), abs(rgo.p1 - want[1]))
            decoherent |= rg.decoherent
            if name == "double-NOT":
                fid_dnot = rgo.fidelity_plus  # particle is back on the + side
    q = prepare("bump", 0, cfg, grid=grid)
    qm, _ = apply_gate(q, HADAMARD, "modal")
    rom = readout(qm)
    worst_modal = max(worst_modal, abs(rom.p0 - 0.5), abs(rom.p1 - 0.5))
    qg, _ = apply_gate(q, HADAMARD, "grid", dt=dt)
    rog = readout(qg)
    worst_grid = max(worst_grid, abs(rog.p0 - 0.5), abs(rog.p1 - 0.5))

    passed = (worst_modal <= 1e-8 and worst_grid <= 2e-3
              and fid_dnot >= 0.999 and not decoherent)
    detail = (f"population error <= {worst_modal:.1e} (modal), "
              f"<= {worst_grid:.2e} (grid); double-NOT profile fidelity "
              f"{fid_dnot:.6f}; decoherent={decoherent}")
    return passed, detail, {"modal_error": worst_modal, "grid_error": worst_grid,
                            "double_not_fidelity": fid_dnot, "decoherent": decoherent}


def _criterion_8(level, seed, grid_nodes, dt):
    """Trigger CNOT: the four classical inputs realize the truth table with
    side populations >= 0.999; a superposed control is rejected."""
    cfg = DEFAULT_CONFIG
    nodes = grid_nodes or DEFAULT_GRID_NODES
    grid = make_grid(cfg, nodes)
    engines = ["modal"] + (["grid"] if level == "full" else [])
    worst = 1.0
    truth_ok = True
    for engine in engines:
        for cb in (0, 1):
            for tb in (0, 1):
                c = prepare("bump", cb, cfg, grid=grid)
                t = prepare("bump", tb, cfg, grid=grid)
                res = cnot_trigger(c, t, engine=engine, dt=dt)
                want_t = tb ^ (1 - cb)  # the x>0 side carries |0> and fires the trigger
                ro_c, ro_t = readout(res.control), readout(res.target)
                worst = min(worst,
                            ro_c.p0 if cb == 0 else ro_c.p1,
                            ro_t.p0 if want_t == 0 else ro_t.p1)
                truth_ok &= (res.applied == (cb == 0) and ro_c.bit() == cb
                             and ro_t.bit() == want_t)
    q0 = prepare("bump", 0, cfg, grid=grid)
    superposed, _ = apply_gate(q0, HADAMARD, "modal")
    try:
        cnot_trigger(superposed, prepare("bump", 0, cfg, grid=grid), engine="modal")
        rejected = False
    except PhysicsContractError:
        rejected = True
    passed = worst >= 0.999 and truth_ok and rejected
    detail = (f"truth table over {engines}: min population {worst:.6f}, "
              f"table={'ok' if truth_ok else 'WRONG'}, superposed control "
              f"{'rejected' if rejected else 'NOT rejected'}")
    return passed, detail, {"min_population": worst, "truth_table_ok": truth_ok,
                            "superposed_rejected": rejected, "engines": engines}


def _criterion_9(level, seed, grid_nodes, dt):
    """Modal covariance: evolving V U V^-1 on V Psi equals V times evolving
    U on Psi, within 1e-9 in L2."""
    cfg = DEFAULT_CONFIG
    rng = _rng(seed, 9)
    grid = make_grid(cfg)
    ws = _resolve_workspace(grid, DEFAULT_N_MODES, None)
    ell = cfg.ell
    worst = 0.0
    for _ in range(10):
        u = random_bloch(rng).gate()
        v = random_unitary(rng)
        f1 = bump_profile(grid, center=float(rng.uniform(2.8, 3.8)) * ell)
        f2 = bump_profile(grid, center=float(rng.uniform(2.8, 3.8)) * ell)
        z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        z /= np.linalg.norm(z)
        state = GridState(grid, z[0] * f1, z[1] * f2)
        t = float(rng.uniform(0.3, 2.0)) * cfg.tau
        uc = conjugate(u, v)
        lhs = ws.synthesize(evolve_modal(
            uc, ws.project(state.apply_pointwise(v.m), uc, normalize=False), t, cfg))
        rhs = ws.synthesize(evolve_modal(
            u, ws.project(state, u, normalize=False), t, cfg)).apply_pointwise(v.m)
        worst = max(worst, _l2_diff(lhs, rhs))
    passed = worst <= 1e-9
    detail = f"max L2 mismatch {worst:.2e} over 10 seeded (U, V, state, t) tuples"
    return passed, detail, {"max_l2_mismatch": worst}


# --------------------------------------------------------------------------


_CRITERIA = {1: _criterion_1, 2: _criterion_2, 3: _criterion_3, 4: _criterion_4,
             5: _criterion_5, 6: _criterion_6, 7: _criterion_7, 8: _criterion_8,
             9: _criterion_9}


def _max_workers() -> int:
    raw = os.environ.get("ABACUS_NUM_THREADS", "")
    try:
        cap = int(raw)
    except ValueError:
        cap = 0
    if cap <= 0:
        cap = min(4, os.cpu_count() or 1)
    return cap


def run_verification(level: str = "quick", seed: int = 12345, criteria=None,
                     grid_nodes: int | None = None, dt: float | None = None,
                     parallel: bool = True) -> VerificationReport:
    """Run the verification suite and return per-criterion results.

    `criteria` selects a subset by number; `grid_nodes`/`dt` override the
    grid-engine resolution (coarsening them demonstrates that the fidelity
    criteria really measure discretization error).  A criterion that raises
    is reported as FAIL with the exception message.
    """
    if level not in ("quick", "full"):
        raise ValueError("level must be 'quick' or 'full'")
    numbers = sorted(criteria) if criteria else sorted(_CRITERIA)
    bad = [n for n in numbers if n not in _CRITERIA]
    if bad:
        raise ValueError(f"unknown criteria {bad}; valid: {sorted(_CRITERIA)}")

    def run_one(n: int) -> CriterionResult:
        t0 = time.perf_counter()
        try:
            passed, detail, measured = _CRITERIA[n](level, seed, grid_nodes, dt)
        except Exception as exc:  # a crashed criterion is an honest FAIL
            passed, detail, measured = False, f"raised {type(exc).__name__}: {exc}", {
                "exception": repr(exc)}
        return CriterionResult(number=n, name=CRITERION_NAMES[n], passed=passed,
                               detail=detail, measured=measured,
                               seconds=time.perf_counter() - t0)

    workers = _max_workers() if parallel else 1
    if workers > 1 and len(numbers) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_one, numbers))
    else:
        results = [run_one(n) for n in numbers]
    return VerificationReport(level=level, seed=seed, results=results)
