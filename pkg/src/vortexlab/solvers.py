"""Solution finding and continuation for the eps-scaled vortex system.

newton_solve updates the state by corrections z = D_eps^* y where y solves
the codomain normal equations

    D_eps D_eps^* y = -F_eps(state)

by preconditioned conjugate gradients; every correction therefore lies in
the image of the adjoint, which keeps it eps-orthogonal to the gauge orbit
(the slice identity dstar_eps D_eps^* y = 0 holds exactly once the second
row of the normal equations is solved).  descend performs Armijo-guarded
steepest descent on the Bogomolny functional, whose gradient is exactly
adjoint_apply(residual).  eps_continuation walks a decreasing ladder of
scales, recording diagnostics per rung.  spectrum_probe assembles the
linearization as a sparse matrix (stencil graph coloring keeps this to a
few dozen operator applications) and reads off the smallest singular values
of the weighted normal operator via shift-inverted Lanczos.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import operators as ops
from .diagnostics import DiagRecord
from .fields import (
    CoTriple,
    FieldState,
    Tangent,
    exp_update,
    inner_cod,
    inner_eps,
    norm_eps,
)
from .gauge import gauge_invariant_distance, project_to_slice

__all__ = [
    "SolverError",
    "SolveReport",
    "descend",
    "newton_solve",
    "eps_continuation",
    "spectrum_probe",
    "local_uniqueness_test",
    "theta_vortex_seed",
]


class SolverError(RuntimeError):
    pass


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    residual_history: list
    final_residual: float
    correction_norm: float
    wall_time: float
    cg_iterations: list = field(default_factory=list)
    floor_reached: bool = False


# -- linear solve on the codomain -----------------------------------------


def _normal_diag(state: FieldState) -> CoTriple:
    """Pointwise diagonal estimate of D_eps D_eps^* for Jacobi preconditioning."""
    g, eps = state.grid, state.eps
    c2 = 1.0 / g.lam**2
    dlap = 0.5 / g.h_s**2 + 0.5 / g.h_t**2
    w2u2 = state.model.weights[:, None, None] ** 2 * np.abs(state.u) ** 2
    lsl = np.sum(w2u2, axis=0)
    diag_xi = c2 * dlap + 2.0 * w2u2 / eps**2 + 1e-12
    diag_sc = c2 * dlap + lsl / eps**2 + 1e-12
    return CoTriple(diag_xi.astype(complex), diag_sc, diag_sc.copy())


def _pcg_normal(state: FieldState, rhs: CoTriple, tol: float, max_iter: int):
    """CG on D_eps D_eps^* y = rhs in the codomain inner product."""
    diag = _normal_diag(state)

    def precond(r: CoTriple) -> CoTriple:
        return CoTriple(r.xi / np.real(diag.xi), r.phi / diag.phi, r.psi / diag.psi)

    y = CoTriple.zeros(state.model, state.grid)
    r = rhs.copy()
    rhs_norm = np.sqrt(inner_cod(state, rhs, rhs))
    if rhs_norm == 0.0:
        return y, 0
    z = precond(r)
    p = z.copy()
    rz = inner_cod(state, r, z)
    for it in range(1, max_iter + 1):
        Ap = ops.normal_apply(state, p)
        pAp = inner_cod(state, p, Ap)
        if pAp <= 0:
            raise SolverError(f"normal operator lost positivity in CG (pAp={pAp:.3e})")
        alpha = rz / pAp
        y = y + alpha * p
        r = r - alpha * Ap
        res = np.sqrt(inner_cod(state, r, r))
        if res <= tol * rhs_norm:
            return y, it
        z = precond(r)
        rz_new = inner_cod(state, r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    if res <= 3e-1 * rhs_norm:
        return y, max_iter  # partial solve; outer damping guards the step
    raise SolverError(
        f"CG on the normal equations stalled at {res / rhs_norm:.3e} relative after {max_iter} iterations"
    )


def newton_step(state: FieldState, cg_tol: float = 1e-10, cg_max_iter: int = 2000):
    """One least-norm Newton correction z = D_eps^* y with D D^* y = -F."""
    F = ops.residual_cotriple(state)
    y, its = _pcg_normal(state, -1.0 * F, cg_tol, cg_max_iter)
    return ops.adjoint_apply(state, y), F, its


def newton_solve(
    state: FieldState,
    tol: float = 1e-10,
    max_iter: int = 40,
    cg_tol: float = 1e-10,
    cg_max_iter: int = 2000,
    step_cap: float | None = None,
    stall_accept: float | None = None,
    cg_adaptive: bool = False,
) -> tuple[FieldState, SolveReport]:
    """Newton iteration on the augmented residual; damped until the basin.

    Far from a solution the least-norm step can be much larger than the
    state scale, so steps are clipped to an adaptive trust radius and then
    Armijo-backtracked on the Bogomolny functional.  Full steps are taken
    once the residual has dropped below 1e-2 of its starting value.

    The discrete moduli directions carry O(h^2)-lifted singular values, so
    on degenerate families the residual can floor at the discretization
    level instead of reaching tol.  When stall_accept is set, a stagnating
    iteration below that level returns success with floor_reached=True;
    otherwise stalls raise SolverError.  cg_adaptive=True loosens the inner
    tolerance to an Eisenstat-Walker forcing term, which the poorly
    conditioned small-eps floor regime needs to stay within the CG budget.
    """
    t0 = time.perf_counter()
    start = state
    cur = state
    history = [ops.residual_norm(cur)]
    cg_iters = []
    if history[0] <= tol:
        report = SolveReport(True, 0, history, history[0], 0.0, time.perf_counter() - t0, [])
        return cur, report
    g = state.grid
    cap = step_cap or 0.25 * np.sqrt(state.model.level * g.L_s * g.L_t)
    for it in range(1, max_iter + 1):
        cg_tol_it = cg_tol
        if cg_adaptive:
            cg_tol_it = max(cg_tol, min(1e-2, 0.05 * history[-1] / history[0]))
        zhat, F, its = newton_step(cur, cg_tol_it, cg_max_iter)
        cg_iters.append(its)
        res0 = history[-1]
        if res0 < 1e-2 * history[0]:
            # local phase: accept full steps, tolerating mild overshoots so
            # the iteration can wander along nearly-flat moduli directions
            trial = exp_update(cur, zhat)
            nt = ops.residual_norm(trial)
            if nt <= 10.0 * res0:
                cur = trial
            else:
                best, bn = trial, nt
                for tau in (0.5, 0.25, 0.125):
                    t = exp_update(cur, tau * zhat)
                    ntt = ops.residual_norm(t)
                    if ntt < bn:
                        best, bn = t, ntt
                cur = best
        else:
            znorm = norm_eps(cur, zhat, 0, 2)
            tau0 = min(1.0, cap / max(znorm, 1e-300))
            B0 = ops.bogomolny_functional(cur)
            slope = inner_cod(cur, F, ops.linearize_apply(cur, zhat))
            tau, accepted = tau0, False
            for _ in range(40):
                trial = exp_update(cur, tau * zhat)
                if ops.bogomolny_functional(trial) <= B0 + 1e-4 * tau * slope:
                    cur, accepted = trial, True
                    break
                tau *= 0.5
            if not accepted:
                raise SolverError("Armijo backtracking collapsed; not in the Newton basin")
            if tau == tau0:
                cap *= 2.0  # trust recovers whenever the first trial succeeds
            else:
                cap = max(tau * znorm, 1e-6)
        history.append(ops.residual_norm(cur))
        done = history[-1] <= tol
        stalled = (
            not done
            and stall_accept is not None
            and history[-1] <= stall_accept
            and len(history) >= 4
            and history[-1] > 0.98 * history[-4]
        )
        if done or stalled:
            corr = Tangent(cur.u - start.u, cur.Phi - start.Phi, cur.Psi - start.Psi)
            report = SolveReport(
                True, it, history, history[-1],
                norm_eps(cur, corr, 2, 2), time.perf_counter() - t0, cg_iters,
                floor_reached=stalled,
            )
            return cur, report
    if stall_accept is not None and history[-1] <= stall_accept:
        corr = Tangent(cur.u - start.u, cur.Phi - start.Phi, cur.Psi - start.Psi)
        report = SolveReport(
            True, max_iter, history, history[-1],
            norm_eps(cur, corr, 2, 2), time.perf_counter() - t0, cg_iters,
            floor_reached=True,
        )
        return cur, report
    raise SolverError(
        f"Newton did not reach tol={tol:.2e} in {max_iter} iterations; residuals {history[-3:]}"
    )


def descend(state: FieldState, steps: int = 50, step_size: float = 0.2) -> tuple[FieldState, list]:
    """Armijo-guarded steepest descent on the Bogomolny functional."""
    cur = state
    values = [ops.bogomolny_functional(cur)]
    tau = step_size
    for _ in range(steps):
        grad = ops.adjoint_apply(cur, ops.residual_cotriple(cur))
        g2 = inner_eps(cur, grad, grad)
        if g2 == 0.0:
            break
        accepted = False
        for _ in range(40):
            trial = exp_update(cur, -tau * grad)
            val = ops.bogomolny_functional(trial)
            if val <= values[-1] - 1e-4 * tau * g2:
                cur, accepted = trial, True
                values.append(val)
                tau = min(tau * 1.5, 1e3)
                break
            tau *= 0.5
        if not accepted:
            break  # step collapse: already at the floor of this basin
    return cur, values


# -- seeds ------------------------------------------------------------------


def theta_vortex_seed(model, grid, eps: float, rng=None, mix: np.ndarray | None = None) -> FieldState:
    """Twist-exact degree-d seed from theta sections, softly normalized.

    Components are independent combinations of the d basis sections (falling
    back to the same section when d < n would make them dependent anyway),
    scaled toward the moment level set away from zeros.
    """
    from .elliptic import theta_section
    from .grids import constant_curvature_connection

    d = grid.degree
    if d < 1:
        raise ValueError("theta seed needs a positive-degree grid")
    basis = [theta_section(grid, j) for j in range(d)]
    rng = np.random.default_rng(0) if rng is None else rng
    if mix is None:
        mix = rng.standard_normal((model.n, d)) + 1j * rng.standard_normal((model.n, d))
        mix[0, :] = np.abs(mix[0, :])  # keep the first component generic but fixed-phase
    comps = []
    for k in range(model.n):
        acc = sum(mix[k, j] * basis[j] for j in range(d))
        comps.append(acc)
    u = np.stack(comps)
    norm = np.sqrt(np.sum(model.weights[:, None, None] * np.abs(u) ** 2, axis=0))
    floor = 0.05 * np.max(norm)
    u = np.sqrt(model.level) * u / np.sqrt(norm**2 + floor**2)
    Phi, Psi = constant_curvature_connection(grid)
    return FieldState(model, grid, u, Phi, Psi, eps)


# -- anchored (zero-scale seed) corrections ----------------------------------


def tangent_to_vec(model, grid, z: Tangent) -> np.ndarray:
    parts = []
    for k in range(model.n):
        parts += [np.real(z.xi[k]).ravel(), np.imag(z.xi[k]).ravel()]
    parts += [z.phi.ravel(), z.psi.ravel()]
    return np.concatenate(parts)


def vec_to_tangent(model, grid, v: np.ndarray) -> Tangent:
    b = v.reshape(2 * model.n + 2, grid.N_s, grid.N_t)
    xi = np.stack([b[2 * k] + 1j * b[2 * k + 1] for k in range(model.n)])
    return Tangent(xi, b[2 * model.n].copy(), b[2 * model.n + 1].copy())


def near_null_basis(state: FieldState, k: int = 10) -> list:
    """eps-orthonormal basis of the k smallest right-singular directions."""
    import scipy.sparse.linalg as spla

    A, M_dom, M_cod = assemble_linearization(state)
    N = (A.T @ M_cod @ A).tocsc()
    scale = abs(N).sum(axis=1).max()
    _, vecs = spla.eigsh(N, k=k, M=M_dom.tocsc(), sigma=-1e-9 * float(scale), which="LM")
    basis = []
    for i in range(vecs.shape[1]):
        v = vec_to_tangent(state.model, state.grid, vecs[:, i])
        for b in basis:
            v = v + (-inner_eps(state, v, b)) * b
        v = (1.0 / np.sqrt(max(inner_eps(state, v, v), 1e-300))) * v
        basis.append(v)
    return basis


def anchored_correction(
    anchor: FieldState,
    tol: float = 1e-9,
    max_iter: int = 60,
    deflate: int = 10,
    cg_tol: float = 1e-8,
    cg_max_iter: int = 1500,
) -> tuple[Tangent, FieldState, dict]:
    """Frozen-anchor recursion for the correction from a zero-scale seed.

    Iterates zeta <- zeta + zhat with zhat = D_anchor^* y solving the
    anchored normal equations against the full nonlinear map (including its
    slice row), all corrections deflated off the anchor's discrete
    near-kernel.  The returned zeta is the discrete analogue of the
    zero-scale-to-eps correction: eps-orthogonal to the near-null moduli
    directions, slice-aligned, with norm scaling like eps^2.
    """
    V = near_null_basis(anchor, deflate) if deflate else []
    zeta = Tangent.zeros(anchor.model, anchor.grid)
    history = []
    best = None
    for it in range(max_iter):
        F = ops.F_eps(anchor, zeta)
        nF = float(np.sqrt(inner_cod(anchor, F, F)))
        history.append(nF)
        if best is None or nF < best[0]:
            best = (nF, zeta.copy())
        if nF <= tol:
            break
        if len(history) >= 4 and nF > 0.98 * history[-4]:
            break
        y, _ = _pcg_normal(anchor, -1.0 * F, cg_tol, cg_max_iter)
        zhat = ops.adjoint_apply(anchor, y)
        for v in V:
            zhat = zhat + (-inner_eps(anchor, zhat, v)) * v
        zeta = zeta + zhat
    nF, zeta = best
    info = {"residual": nF, "iterations": len(history), "history": history}
    return zeta, exp_update(anchor, zeta), info


# -- continuation ------------------------------------------------------------


def default_stall_accept(state: FieldState) -> float:
    """Discretization-floor residual scale: the moduli valley is h^2-rough."""
    g = state.grid
    return 0.05 * g.h_s * g.h_t * np.sqrt(state.model.level * g.L_s * g.L_t)


def eps_continuation(
    seed: FieldState,
    ladder,
    from_seed: bool = False,
    tol: float = 1e-10,
    descend_steps: int = 0,
    newton_kwargs: dict | None = None,
    anchored_kwargs: dict | None = None,
) -> tuple[list, list]:
    """Solve along a decreasing eps ladder; one DiagRecord per rung.

    from_seed=True measures the zero-scale corrections: every rung runs the
    deflated frozen-anchor recursion at the seed (corrections scale like
    eps^2 there); otherwise each rung warm-starts Newton from the previous
    solution, accepting a discretization-floor stall.  A failed rung is
    recorded and truncates the ladder in continuation mode.
    """
    ladder = list(ladder)
    if any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("ladder must be strictly decreasing in eps")
    newton_kwargs = dict(newton_kwargs or {})
    records, states = [], []
    prev = seed
    for eps in ladder:
        t0 = time.perf_counter()
        if from_seed:
            anchor = seed.with_eps(eps)
            try:
                zeta, sol, info = anchored_correction(anchor, **(anchored_kwargs or {}))
            except SolverError as exc:
                records.append(DiagRecord(eps=eps, converged=False, note=str(exc)))
                continue
            rec = diagnostics_record(sol)
            rec.residual = info["residual"]
            rec.iterations = info["iterations"]
            rec.correction_norm_1 = norm_eps(anchor, zeta, 1, 2)
            rec.correction_norm_2 = norm_eps(anchor, zeta, 2, 2)
            rec.wall_time = time.perf_counter() - t0
            records.append(rec)
            states.append(sol)
            continue
        base = prev.with_eps(eps)
        try:
            work = base
            if descend_steps:
                work, _ = descend(work, steps=descend_steps)
            kwargs = dict(newton_kwargs)
            kwargs.setdefault("stall_accept", default_stall_accept(base))
            kwargs.setdefault("cg_adaptive", True)
            sol, rep = newton_solve(work, tol=tol, **kwargs)
        except SolverError as exc:
            records.append(DiagRecord(eps=eps, converged=False, note=str(exc)))
            break
        rec = diagnostics_record(sol, rep)
        if rep.floor_reached:
            rec.note = "discretization floor"
        corr = Tangent(sol.u - base.u, sol.Phi - base.Phi, sol.Psi - base.Psi)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                sliced = project_to_slice(base, corr, tol=1e-8)
            rec.correction_norm_1 = norm_eps(base, sliced.zeta0, 1, 2)
            rec.correction_norm_2 = norm_eps(base, sliced.zeta0, 2, 2)
        except Exception:
            rec.correction_norm_1 = norm_eps(base, corr, 1, 2)
            rec.correction_norm_2 = norm_eps(base, corr, 2, 2)
        rec.wall_time = time.perf_counter() - t0
        records.append(rec)
        states.append(sol)
        prev = sol
    return records, states


def diagnostics_record(sol: FieldState, rep: SolveReport | None = None) -> DiagRecord:
    mu = ops.mu_field(sol)
    g = sol.grid
    rec = DiagRecord(
        eps=sol.eps,
        energy=ops.energy_eps(sol),
        energy_top=ops.topological_energy(sol),
        sup_mu=float(np.max(np.abs(mu))),
        l2_mu=float(np.sqrt(np.sum(mu**2) * g.lam**2 * g.area_weight)),
        residual=ops.residual_norm(sol),
        converged=True if rep is None else rep.converged,
        iterations=0 if rep is None else rep.iterations,
        wall_time=0.0 if rep is None else rep.wall_time,
    )
    if sol.model.n >= 2 and np.all(sol.model.weights == 1):
        try:
            q = ops.quotient_diagnostics(sol)
            rec.dbar_fs = q["dbar_fs"]
        except ValueError:
            rec.dbar_fs = float("nan")
    return rec


# -- spectrum ----------------------------------------------------------------


def _component_views(model, grid):
    """Real coordinate layout: Re/Im of each u-component, then phi, psi."""
    n = model.n
    return 2 * n + 2


def assemble_linearization(state: FieldState):
    """Sparse matrix of D_eps over real coordinates, by stencil coloring.

    Requires N_s and N_t divisible by 4 (color classes 3-separated even
    across the periodic seam).  Returns (A, M_dom, M_cod) with the diagonal
    weight matrices of the eps-inner products.
    """
    import scipy.sparse as sp

    model, grid = state.model, state.grid
    n, Ns, Nt = model.n, grid.N_s, grid.N_t
    if Ns % 4 or Nt % 4:
        raise ValueError("spectrum assembly needs grid sizes divisible by 4")
    ncomp = _component_views(model, grid)
    size = ncomp * Ns * Nt

    def dom_from_vec(vec):
        z = Tangent.zeros(model, grid)
        blocks = vec.reshape(ncomp, Ns, Nt)
        for k in range(n):
            z.xi[k] = blocks[2 * k] + 1j * blocks[2 * k + 1]
        z.phi[:] = blocks[2 * n]
        z.psi[:] = blocks[2 * n + 1]
        return z

    rows, cols, vals = [], [], []
    vert_idx = np.arange(Ns * Nt).reshape(Ns, Nt)

    def emit(out: CoTriple, comp: int, ii: np.ndarray, jj: np.ndarray):
        """Attribute outputs to the probed columns at (comp, ii x jj)."""
        planes = []
        for k in range(n):
            planes.append(np.real(out.xi[k]))
            planes.append(np.imag(out.xi[k]))
        planes.append(out.phi)
        planes.append(out.psi)
        col_base = comp * Ns * Nt
        for oc, plane in enumerate(planes):
            nz_i, nz_j = np.nonzero(plane)
            if len(nz_i) == 0:
                continue
            src_i = (ii[0] + 4 * np.round((nz_i - ii[0]) / 4).astype(int)) % Ns
            src_j = (jj[0] + 4 * np.round((nz_j - jj[0]) / 4).astype(int)) % Nt
            rows.append(oc * Ns * Nt + vert_idx[nz_i, nz_j])
            cols.append(col_base + vert_idx[src_i, src_j])
            vals.append(plane[nz_i, nz_j])

    for comp in range(ncomp):
        for a in range(4):
            for b in range(4):
                vec = np.zeros(size)
                blocks = vec.reshape(ncomp, Ns, Nt)
                ii = np.arange(a, Ns, 4)
                jj = np.arange(b, Nt, 4)
                blocks[comp][np.ix_(ii, jj)] = 1.0
                out = ops.linearize_apply(state, dom_from_vec(vec))
                emit(out, comp, ii, jj)

    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(size, size),
    )
    area = grid.area_weight
    lam2 = grid.lam**2
    eps2 = state.eps**2
    dom_w = np.empty(size)
    cod_w = np.empty(size)
    NsNt = Ns * Nt
    for k in range(n):
        dom_w[2 * k * NsNt : (2 * k + 2) * NsNt] = lam2 * area
        cod_w[2 * k * NsNt : (2 * k + 2) * NsNt] = area
    dom_w[2 * n * NsNt :] = eps2 * area
    cod_w[2 * n * NsNt :] = eps2 * lam2 * area
    return A, sp.diags(dom_w), sp.diags(cod_w)


def spectrum_probe(state: FieldState, count: int = 12, null_threshold: float = 1e-3) -> dict:
    """Smallest singular values of D_eps at the state, with a nullity report.

    Solves the generalized problem A^T M_cod A x = sigma^2 M_dom x by
    shift-inverted Lanczos; the null cluster is split at the largest
    consecutive ratio and counted against null_threshold * gap.
    """
    import scipy.sparse.linalg as spla

    A, M_dom, M_cod = assemble_linearization(state)
    N = (A.T @ M_cod @ A).tocsc()
    scale = abs(N).sum(axis=1).max()
    shift = -1e-9 * float(scale)
    vals = spla.eigsh(
        N, k=count, M=M_dom.tocsc(), sigma=shift, which="LM", return_eigenvectors=False
    )
    vals = np.sort(np.maximum(vals, 0.0))
    sing = np.sqrt(vals)
    floor = max(sing[-1], 1e-300) * 1e-14
    ratios = (sing[1:] + floor) / (sing[:-1] + floor)
    split = int(np.argmax(ratios))
    gap = sing[split + 1]
    nullity = int(np.sum(sing < null_threshold * gap))
    return {
        "singular_values": sing,
        "gap": float(gap),
        "nullity": nullity,
        "cluster_split": split + 1,
    }


# -- local uniqueness --------------------------------------------------------


def local_uniqueness_test(
    solution: FieldState,
    delta: float,
    rng: np.random.Generator,
    p: float = 4,
    tol: float = 1e-10,
    distance_tol: float = 1e-6,
) -> dict:
    """Perturb in the slice by size delta * eps^{2/p + 1/2}, re-solve, compare.

    recovered is True when the gauge-invariant distance between the re-solved
    state and the original solution is below distance_tol.
    """
    from .sampling import random_tangent

    eps = solution.eps
    raw = random_tangent(solution.model, solution.grid, rng, amp=1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sliced = project_to_slice(solution, 1e-6 * raw, tol=1e-10).zeta0
    size = norm_eps(solution, sliced, 1, p)
    target = delta * eps ** (2.0 / p + 0.5)
    zeta = (target / max(size, 1e-300)) * sliced
    if delta == 0.0:
        zeta = 0.0 * sliced
    perturbed = exp_update(solution, zeta)
    resolved, rep = newton_solve(perturbed, tol=tol)
    dist = gauge_invariant_distance(solution, resolved)
    return {
        "recovered": bool(dist <= distance_tol),
        "gauge_distance": float(dist),
        "report": rep,
    }
