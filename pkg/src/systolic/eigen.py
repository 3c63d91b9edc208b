"""Symmetric eigensolver on a grid of 2x2 blocks with plane rotations.

Each diagonal cell annihilates its off-diagonal pair; off-diagonal cells
apply the row rotation from their row's diagonal cell and the column
rotation from their column's.  Between steps, rows and columns are permuted
by a fixed nearest-neighbour cycle so every index pair meets on the diagonal
exactly once per N-1 steps.

Two schedules produce identical grids step for step: broadcast mode updates
the whole matrix at once, while delayed mode runs on the simulation engine
with cell (i, j) clocked at ticks 3s + |i - j| and rotation parameters
hopping one cell per tick outward from the diagonal.  Both share the same
scalar update order, so the agreement is exact, not approximate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import engine
from .engine import CellId, CellProgram, Wire, build_array


class RotationPair(NamedTuple):
    c: float
    s: float


IDENTITY_ROTATION = RotationPair(1.0, 0.0)


def jacobi_rotation(alpha: float, beta: float, delta: float) -> RotationPair:
    """Inner rotation (|angle| <= pi/4) annihilating the off-diagonal of
    [[alpha, beta], [beta, delta]] under R^T B R with R = [[c, s], [-s, c]]."""
    if beta == 0.0:
        return IDENTITY_ROTATION
    tau = (delta - alpha) / (2.0 * beta)
    sign = 1.0 if tau >= 0.0 else -1.0
    t = sign / (abs(tau) + math.hypot(1.0, tau))  # hypot: no overflow for huge tau
    c = 1.0 / math.sqrt(1.0 + t * t)
    return RotationPair(c, t * c)


def rotate_block(b00, b01, b10, b11, ci, si, cj, sj):
    """R_i^T [[b00,b01],[b10,b11]] R_j, row transform first, fixed op order."""
    t00 = ci * b00 - si * b10
    t01 = ci * b01 - si * b11
    t10 = si * b00 + ci * b10
    t11 = si * b01 + ci * b11
    return (cj * t00 - sj * t01, sj * t00 + cj * t01,
            cj * t10 - sj * t11, sj * t10 + cj * t11)


# -- permutation -------------------------------------------------------------


def position_permutation(size: int) -> tuple:
    """sigma over 0-based positions: the content at p moves to sigma[p].

    One application pairs a fresh set of indices on the diagonal blocks;
    size - 1 applications visit every unordered pair exactly once and
    return to the identity arrangement.
    """
    if size % 2:
        raise ValueError("position permutation is defined for even sizes")
    sig = list(range(size))
    if size >= 4:
        for p in range(3, size - 2, 2):
            sig[p - 1] = p + 1  # odd 1-based positions step up by two
        sig[size - 2] = size - 1  # 2n-1 -> 2n
        for p in range(4, size + 1, 2):
            sig[p - 1] = p - 3  # even 1-based positions step down by two
        sig[1] = 2  # 2 -> 3
    return tuple(sig)


@dataclass(frozen=True)
class BlockGrid:
    """Current working matrix (physically permuted) plus the index tracker."""

    mat: np.ndarray
    tracker: tuple  # tracker[pos] = original 0-based index at this position

    @property
    def size(self) -> int:
        return self.mat.shape[0]

    @property
    def half(self) -> int:
        return self.size // 2

    def block(self, i: int, j: int) -> np.ndarray:
        return self.mat[2 * i: 2 * i + 2, 2 * j: 2 * j + 2]

    def diagonal_pairs(self) -> list[tuple]:
        """Original indices meeting in each diagonal cell, at this step."""
        return [(self.tracker[2 * i], self.tracker[2 * i + 1])
                for i in range(self.half)]

    def check_symmetry(self, tol: float = 1e-9):
        m = self.mat
        if not np.allclose(m, m.T, atol=tol * max(1.0, np.max(np.abs(m)))):
            raise ValueError("grid lost symmetry")


def pack_grid(a: np.ndarray) -> tuple[BlockGrid, int]:
    """Pad odd sizes with one decoupled zero index; returns (grid, original n)."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    scale = max(np.max(np.abs(a)), 1.0)
    if not np.allclose(a, a.T, atol=1e-12 * scale):
        raise ValueError("matrix must be symmetric")
    a = 0.5 * (a + a.T)
    if n % 2:
        padded = np.zeros((n + 1, n + 1))
        padded[:n, :n] = a
        a = padded
    return BlockGrid(mat=a, tracker=tuple(range(a.shape[0]))), n


def permute(grid: BlockGrid) -> BlockGrid:
    """Apply the inter-step permutation to columns and rows (and the tracker)."""
    sig = np.array(position_permutation(grid.size))
    new = np.empty_like(grid.mat)
    new[np.ix_(sig, sig)] = grid.mat
    tracker = [0] * grid.size
    for p, orig in enumerate(grid.tracker):
        tracker[sig[p]] = orig
    return BlockGrid(mat=new, tracker=tuple(tracker))


def step_rotations(mat: np.ndarray, threshold: float) -> tuple[list, int]:
    """Rotations for each diagonal block; identity when below threshold.

    Returns (rotations, skipped) where skipped counts nonzero off-diagonal
    entries left alone because of the threshold.
    """
    h = mat.shape[0] // 2
    rots = []
    skipped = 0
    for i in range(h):
        beta = mat[2 * i, 2 * i + 1]
        if beta != 0.0 and abs(beta) < threshold:
            rots.append(IDENTITY_ROTATION)
            skipped += 1
        else:
            rots.append(jacobi_rotation(mat[2 * i, 2 * i], beta, mat[2 * i + 1, 2 * i + 1]))
    return rots, skipped


def apply_rotations(mat: np.ndarray, rots: Sequence[RotationPair]) -> np.ndarray:
    """R^T M R with R block-diagonal; same op order as the per-cell update."""
    h = mat.shape[0] // 2
    out = mat.copy()
    for i, (c, s) in enumerate(rots):
        if s != 0.0 or c != 1.0:
            r0 = out[2 * i].copy()
            r1 = out[2 * i + 1].copy()
            out[2 * i] = c * r0 - s * r1
            out[2 * i + 1] = s * r0 + c * r1
    for j, (c, s) in enumerate(rots):
        if s != 0.0 or c != 1.0:
            c0 = out[:, 2 * j].copy()
            c1 = out[:, 2 * j + 1].copy()
            out[:, 2 * j] = c * c0 - s * c1
            out[:, 2 * j + 1] = s * c0 + c * c1
    return out


def grid_step(grid: BlockGrid, threshold: float) -> tuple[BlockGrid, list]:
    """One parallel step: rotate every block, then permute rows and columns."""
    rots, _ = step_rotations(grid.mat, threshold)
    rotated = apply_rotations(grid.mat, rots)
    return permute(BlockGrid(mat=rotated, tracker=grid.tracker)), rots


def off_norm(mat: np.ndarray) -> float:
    # summing the off-diagonal entries directly avoids the cancellation a
    # "total minus diagonal" form hits once off(A) is tiny
    m = mat.copy()
    np.fill_diagonal(m, 0.0)
    return float(np.sqrt(np.sum(m * m)))


def default_threshold_schedule(a: np.ndarray) -> Callable[[int], float]:
    """Per-sweep threshold: off(A0)_F / (n^2 4^r), dropping to 0 after sweep 6."""
    base = off_norm(np.asarray(a, dtype=float))
    n = a.shape[0]

    def schedule(sweep: int) -> float:
        if sweep > 6:
            return 0.0
        return base / (n * n * 4.0 ** sweep)

    return schedule


@dataclass
class SweepReport:
    sweeps_used: int
    converged: bool
    off_norms: list = field(default_factory=list)  # after each step
    skipped_per_sweep: list = field(default_factory=list)
    rotations_performed: int = 0
    ticks: int = 0  # delayed mode only
    trace: engine.Trace | None = None


@dataclass(frozen=True)
class EigenResult:
    eigenvalues: np.ndarray  # ordered by original index
    eigenvectors: np.ndarray | None
    report: SweepReport


def _extract(grid: BlockGrid, n: int) -> np.ndarray:
    """Diagonal entries mapped back through the tracker, padding dropped."""
    vals = np.empty(n)
    for pos in range(grid.size):
        orig = grid.tracker[pos]
        if orig < n:
            vals[orig] = grid.mat[pos, pos]
    return vals


def run_sweeps(a, threshold_schedule=None, max_sweeps: int = 10,
               mode: str = "broadcast", compute_vectors: bool = False,
               tol: float = 1e-10) -> EigenResult:
    """Diagonalise symmetric a; sweeps of size-1 steps until off(A) < tol*|A|_F."""
    if mode not in ("broadcast", "delayed"):
        raise ValueError(f"unknown mode {mode!r}")
    grid0, n = pack_grid(a)
    size = grid0.size
    steps_per_sweep = max(size - 1, 1)
    if threshold_schedule is None:
        threshold_schedule = default_threshold_schedule(grid0.mat)
    elif not callable(threshold_schedule):
        seq = list(threshold_schedule)
        threshold_schedule = lambda r, _s=seq: _s[min(r, len(_s) - 1)]
    fro = float(np.linalg.norm(grid0.mat))
    stop_at = tol * max(fro, 1.0)
    if mode == "delayed":
        return _run_delayed(grid0, n, threshold_schedule, max_sweeps,
                            steps_per_sweep, stop_at, compute_vectors)

    grid = grid0
    report = SweepReport(sweeps_used=0, converged=off_norm(grid.mat) < stop_at)
    vec = np.eye(size) if compute_vectors else None
    sig = np.array(position_permutation(size))
    inv_sig = np.argsort(sig)
    for sweep in range(max_sweeps):
        if report.converged:
            break
        thr = threshold_schedule(sweep)
        skipped = 0
        for _ in range(steps_per_sweep):
            rots, sk = step_rotations(grid.mat, thr)
            skipped += sk
            report.rotations_performed += sum(1 for r in rots if r != IDENTITY_ROTATION)
            rotated = apply_rotations(grid.mat, rots)
            if vec is not None:
                for i, (c, s) in enumerate(rots):
                    if s != 0.0 or c != 1.0:
                        c0 = vec[:, 2 * i].copy()
                        c1 = vec[:, 2 * i + 1].copy()
                        vec[:, 2 * i] = c * c0 - s * c1
                        vec[:, 2 * i + 1] = s * c0 + c * c1
                vec = vec[:, inv_sig]
            grid = permute(BlockGrid(mat=rotated, tracker=grid.tracker))
            report.off_norms.append(off_norm(grid.mat))
        report.skipped_per_sweep.append(skipped)
        report.sweeps_used = sweep + 1
        report.converged = report.off_norms[-1] < stop_at
    eigenvalues = _extract(grid, n)
    vectors = None
    if vec is not None:
        vectors = np.empty((n, n))
        for pos in range(size):
            orig = grid.tracker[pos]
            if orig < n:
                vectors[:, orig] = vec[:n, pos]
    return EigenResult(eigenvalues=eigenvalues, eigenvectors=vectors, report=report)


# -- delayed (engine-backed) mode --------------------------------------------


def _assembly_sources(size: int):
    """For each block (i, j) and entry (r, c): the (drow, dcol, entry) feeding it."""
    sig = position_permutation(size)
    inv = [0] * size
    for p, q in enumerate(sig):
        inv[q] = p
    h = size // 2
    plan = {}
    for i in range(h):
        for j in range(h):
            entries = []
            for r in range(2):
                for c in range(2):
                    sp, sq = inv[2 * i + r], inv[2 * j + c]
                    entries.append((sp // 2 - i, sq // 2 - j, (sp % 2, sq % 2)))
            plan[(i, j)] = entries
    return plan


_ENTRY_NAMES = {(0, 0): "b00", (0, 1): "b01", (1, 0): "b10", (1, 1): "b11"}


def delayed_activation(h: int, total_steps: int):
    def active(cell, t):
        d = abs(cell.row - cell.col)
        if t < d or (t - d) % 3:
            return False
        return (t - d) // 3 < total_steps

    return active


def _make_delayed_step(h: int, plan, thresholds: Sequence[float], steps_per_sweep: int):
    def step(state, ins, ctx):
        i, j = ctx.cell.row, ctx.cell.col
        s = (ctx.tick - abs(i - j)) // 3
        par = s & 1
        prev_par = (s - 1) & 1
        if s == 0:
            b00, b01, b10, b11 = state["b00"], state["b01"], state["b10"], state["b11"]
        else:
            own = state
            got = []
            for (dr, dc, (er, ec)) in plan[(i, j)]:
                name = _ENTRY_NAMES[(er, ec)]
                if dr == 0 and dc == 0:
                    got.append(own[name])
                else:
                    got.append(ins[f"in{dr + 1}{dc + 1}_{name}_{prev_par}"])
            b00, b01, b10, b11 = got
        if i == j:
            thr = thresholds[min(s // steps_per_sweep, len(thresholds) - 1)]
            if b01 != 0.0 and abs(b01) < thr:
                ci, si = IDENTITY_ROTATION
            else:
                ci, si = jacobi_rotation(b00, b01, b11)
            cj, sj = ci, si
        else:
            ci, si = ins["rowc_in"], ins["rows_in"]
            cj, sj = ins["colc_in"], ins["cols_in"]
        n00, n01, n10, n11 = rotate_block(b00, b01, b10, b11, ci, si, cj, sj)
        outs = {}
        if j >= i:
            outs["rowc_R"] = ci
            outs["rows_R"] = si
        if j <= i:
            outs["rowc_L"] = ci
            outs["rows_L"] = si
        if i >= j:
            outs["colc_D"] = cj
            outs["cols_D"] = sj
        if i <= j:
            outs["colc_U"] = cj
            outs["cols_U"] = sj
        outs[f"b00_{par}"] = n00
        outs[f"b01_{par}"] = n01
        outs[f"b10_{par}"] = n10
        outs[f"b11_{par}"] = n11
        return {"b00": n00, "b01": n01, "b10": n10, "b11": n11}, outs

    return step


def build_delayed_array(grid: BlockGrid, thresholds: Sequence[float],
                        steps_per_sweep: int, total_steps: int):
    size = grid.size
    h = size // 2
    plan = _assembly_sources(size)
    wiring = []
    for i in range(h):
        for j in range(h):
            # rotation-parameter chains, outward from the diagonal
            if j > i:
                wiring.append(Wire(CellId(i, j - 1), "rowc_R", CellId(i, j), "rowc_in"))
                wiring.append(Wire(CellId(i, j - 1), "rows_R", CellId(i, j), "rows_in"))
                wiring.append(Wire(CellId(i + 1, j), "colc_U", CellId(i, j), "colc_in"))
                wiring.append(Wire(CellId(i + 1, j), "cols_U", CellId(i, j), "cols_in"))
            elif j < i:
                wiring.append(Wire(CellId(i, j + 1), "rowc_L", CellId(i, j), "rowc_in"))
                wiring.append(Wire(CellId(i, j + 1), "rows_L", CellId(i, j), "rows_in"))
                wiring.append(Wire(CellId(i - 1, j), "colc_D", CellId(i, j), "colc_in"))
                wiring.append(Wire(CellId(i - 1, j), "cols_D", CellId(i, j), "cols_in"))
            # double-buffered block exchange with every contributing neighbour
            for (dr, dc, (er, ec)) in set(plan[(i, j)]):
                if dr == 0 and dc == 0:
                    continue
                name = _ENTRY_NAMES[(er, ec)]
                for par in (0, 1):
                    wiring.append(Wire(CellId(i + dr, j + dc), f"{name}_{par}",
                                       CellId(i, j), f"in{dr + 1}{dc + 1}_{name}_{par}"))
    spec = engine.grid(h, h, wiring, activation=delayed_activation(h, total_steps))
    step = _make_delayed_step(h, plan, thresholds, steps_per_sweep)
    progs = {}
    for i in range(h):
        for j in range(h):
            blk = grid.block(i, j)
            progs[CellId(i, j)] = CellProgram(step, {
                "b00": float(blk[0, 0]), "b01": float(blk[0, 1]),
                "b10": float(blk[1, 0]), "b11": float(blk[1, 1]),
            })
    return build_array(spec, progs)


def delayed_grids_from_trace(tr: engine.Trace, size: int, total_steps: int):
    """Rotated (pre-permutation) grids per step, rebuilt from cell states."""
    h = size // 2
    grids = [np.zeros((size, size)) for _ in range(total_steps)]
    for rec in tr:
        i, j = rec.cell.row, rec.cell.col
        s = (rec.tick - abs(i - j)) // 3
        g = grids[s]
        g[2 * i, 2 * j] = rec.state["b00"]
        g[2 * i, 2 * j + 1] = rec.state["b01"]
        g[2 * i + 1, 2 * j] = rec.state["b10"]
        g[2 * i + 1, 2 * j + 1] = rec.state["b11"]
    return grids


def _run_delayed(grid0: BlockGrid, n: int, threshold_schedule, max_sweeps: int,
                 steps_per_sweep: int, stop_at: float, compute_vectors: bool):
    size = grid0.size
    h = size // 2
    total_steps = max_sweeps * steps_per_sweep
    thresholds = [threshold_schedule(r) for r in range(max_sweeps)]
    arr = build_delayed_array(grid0, thresholds, steps_per_sweep, total_steps)
    n_ticks = 3 * (total_steps - 1) + (h - 1) + 1
    _, tr = engine.run(arr, None, n_ticks, trace=True)
    rotated = delayed_grids_from_trace(tr, size, total_steps)

    sig = np.array(position_permutation(size))
    inv_sig = np.argsort(sig)
    report = SweepReport(sweeps_used=0, converged=False, ticks=n_ticks, trace=tr)
    tracker = tuple(range(size))
    grid = grid0
    vec = np.eye(size) if compute_vectors else None
    rot_by_step = _diag_rotations_from_trace(tr, h, total_steps) if compute_vectors else None
    stop_step = None
    for s, rot in enumerate(rotated):
        tracker_next = [0] * size
        for p, orig in enumerate(tracker):
            tracker_next[sig[p]] = orig
        new = np.empty_like(rot)
        new[np.ix_(sig, sig)] = rot
        if vec is not None:
            for i, (c, c_s) in enumerate(rot_by_step[s]):
                if c_s != 0.0 or c != 1.0:
                    c0 = vec[:, 2 * i].copy()
                    c1 = vec[:, 2 * i + 1].copy()
                    vec[:, 2 * i] = c * c0 - c_s * c1
                    vec[:, 2 * i + 1] = c_s * c0 + c * c1
            vec = vec[:, inv_sig]
        grid = BlockGrid(mat=new, tracker=tuple(tracker_next))
        tracker = grid.tracker
        report.off_norms.append(off_norm(grid.mat))
        if (s + 1) % steps_per_sweep == 0:
            report.sweeps_used = (s + 1) // steps_per_sweep
            if report.off_norms[-1] < stop_at:
                report.converged = True
                stop_step = s + 1
                break
    if stop_step is None:
        report.sweeps_used = max_sweeps
    eigenvalues = _extract(grid, n)
    vectors = None
    if vec is not None:
        vectors = np.empty((n, n))
        for pos in range(size):
            orig = grid.tracker[pos]
            if orig < n:
                vectors[:, orig] = vec[:n, pos]
    return EigenResult(eigenvalues=eigenvalues, eigenvectors=vectors, report=report)


def _diag_rotations_from_trace(tr: engine.Trace, h: int, total_steps: int):
    rots = [[IDENTITY_ROTATION] * h for _ in range(total_steps)]
    for rec in tr:
        i, j = rec.cell.row, rec.cell.col
        if i != j:
            continue
        s = rec.tick // 3
        c = rec.outputs.get("rowc_R")
        si = rec.outputs.get("rows_R")
        rots[s][i] = RotationPair(c, si)
    return rots
