"""End-to-end runs: generate, estimate, classify, and write checkpoint rows."""
import csv
import itertools
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import analysis
from .clustering import ClusterMetrics, stream_metrics
from .config import RunConfig, parse_config
from .datagen import MLRStream, StreamBlock
from .estimator import EstimatorState, NumericError, new_state, run_stream
from .linalg import inv_spd, sym_eigvals

COLUMNS = ["n", "err_sq", "q", "r", "alpha_mean", "lambda_min", "lambda_max", "thm1_bound",
           "miss_alg_avg", "miss_oracle_avg", "miss_gap", "thm2_bound", "jn_avg", "thm3_excess"]

CHUNK = 1 << 16


def fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path, header, rows):
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path):
    """Return ``(header, float array)``; an empty body gives a 0-row array."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    header = rows[0]
    body = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    return header, body.reshape(-1, len(header))


@dataclass
class Trajectory:
    rows: list
    snapshots: list
    failed_at: int = None


class _Tracker:
    """Accumulates everything needed for checkpoint rows across chunks."""

    def __init__(self, cfg, checkpoints):
        self.cfg = cfg
        self.ckpts = list(checkpoints)
        self.state = new_state(cfg.estimator)
        self.metrics = ClusterMetrics()
        self.gram = inv_spd(cfg.estimator.P0)
        self.alpha_sum = 0.0
        self.last_ckpt = 0
        self.rows = []
        self.snapshots = []
        self.target = cfg.generator.target

    def feed(self, block):
        n0 = self.state.n
        wanted = [c for c in self.ckpts if n0 < c <= n0 + len(block)]
        try:
            res = run_stream(self.cfg.estimator, block.phi, block.y, self.state, snapshot_at=wanted)
        except NumericError as exc:
            res = exc.partial
            done = len(res.alpha)
            self._rows(replace_block(block, done), res, n0)
            raise
        self._rows(block, res, n0)
        self.state = res.state

    def _rows(self, block, res, n0):
        cfg = self.cfg
        if len(res.alpha) == 0:
            return
        trace = stream_metrics(res.beta_pre, cfg.generator.beta_star, block.phi[:len(res.alpha)],
                               block.y[:len(res.alpha)], block.z[:len(res.alpha)], start=self.metrics)
        alpha_cum = self.alpha_sum + np.cumsum(res.alpha)
        kap = cfg.analysis.kappa
        done = 0
        for snap in res.snapshots:
            n = snap.n
            i = n - n0 - 1
            seg = block.phi[done:i + 1]
            self.gram = self.gram + seg.T @ seg
            done = i + 1
            lam = sym_eigvals(self.gram)
            prev_sum = alpha_cum[self.last_ckpt - n0 - 1] if self.last_ckpt > n0 else self.alpha_sum
            m = trace.at(i + 1, n)
            beta = snap.q * snap.theta
            self.rows.append([
                n,
                float(np.sum((self.target - beta) ** 2)),
                snap.q,
                snap.r,
                (alpha_cum[i] - prev_sum) / (n - self.last_ckpt),
                lam[0],
                lam[-1],
                float(analysis.thm1_bound(n, lam[0], kap)),
                m.miss_alg / n,
                m.miss_oracle / n,
                abs(m.miss_alg - m.miss_oracle) / n,
                analysis.thm2_bound(n, cfg.estimator.delta),
                m.J / n,
                analysis.thm3_excess(m.J, n, cfg.generator.sigma2, kap),
            ])
            self.snapshots.append(snap)
            self.last_ckpt = n
        k = len(res.alpha)
        seg = block.phi[done:k]
        self.gram = self.gram + seg.T @ seg
        self.alpha_sum = float(alpha_cum[-1])
        self.metrics = trace.at(k, n0 + k)


def replace_block(block, count):
    return StreamBlock(block.n[:count], block.phi[:count], block.y[:count], block.z[:count],
                       block.w[:count])


def trajectory(cfg, blocks, checkpoints=None):
    """Run the estimator over an iterable of :class:`StreamBlock` objects."""
    tracker = _Tracker(cfg, checkpoints if checkpoints is not None else cfg.checkpoints())
    try:
        for block in blocks:
            tracker.feed(block)
    except NumericError as exc:
        return Trajectory(tracker.rows, tracker.snapshots, failed_at=exc.step)
    return Trajectory(tracker.rows, tracker.snapshots)


def _blocks(stream, N):
    left = N
    while left > 0:
        k = min(CHUNK, left)
        yield stream.draw(k)
        left -= k


def replication_config(cfg, r):
    gen = replace(cfg.generator, seed=int(cfg.generator.seed) ^ int(r))
    return replace(cfg, generator=gen)


def run_replication(cfg, r):
    rcfg = replication_config(cfg, r)
    return trajectory(rcfg, _blocks(MLRStream(rcfg.generator), cfg.horizon))


def _run_replication_args(args):
    return run_replication(*args)


@dataclass
class ExperimentResult:
    config: RunConfig
    replications: list

    @property
    def failed(self):
        return [t.failed_at for t in self.replications if t.failed_at is not None]

    def column(self, name):
        """Array (replications x checkpoints) of one column."""
        j = COLUMNS.index(name)
        return np.array([[row[j] for row in t.rows] for t in self.replications])

    def summary_header(self):
        return ["n"] + [f"{c}_{s}" for c in COLUMNS[1:] for s in ("mean", "max")]

    def summary_rows(self):
        reps = [np.array(t.rows, dtype=float) for t in self.replications]
        length = min(len(r) for r in reps)
        stack = np.stack([r[:length] for r in reps])
        out = []
        for i in range(length):
            row = [int(stack[0, i, 0])]
            for j in range(1, len(COLUMNS)):
                vals = stack[:, i, j]
                row += [float(np.mean(vals)), float(np.max(vals))]
            out.append(row)
        return out


def run_experiment(cfg, write=True):
    """All replications of ``cfg``; writes per-replication and summary CSVs.

    Replication r uses generator seed ``seed ^ r``.  Files written under the
    ``cfg.outputs`` prefix: ``_rep{r}.csv``, ``_rep{r}_snapshots.csv`` and
    ``_summary.csv``.  If any replication hits a numeric failure, the rows
    produced so far are still written and :class:`NumericError` is raised.
    """
    jobs = [(cfg, r) for r in range(cfg.replications)]
    if cfg.parallel_jobs > 1 and cfg.replications > 1:
        with ProcessPoolExecutor(max_workers=cfg.parallel_jobs) as pool:
            trajs = list(pool.map(_run_replication_args, jobs))
    else:
        trajs = [run_replication(*j) for j in jobs]
    result = ExperimentResult(cfg, trajs)
    if write:
        write_outputs(result)
    if result.failed:
        raise NumericError("numeric failure during run", result.failed[0])
    return result


def write_outputs(result):
    cfg = result.config
    prefix = cfg.outputs
    d = cfg.generator.d
    for r, t in enumerate(result.replications):
        write_csv(f"{prefix}_rep{r}.csv", COLUMNS, t.rows)
        write_csv(f"{prefix}_rep{r}_snapshots.csv", EstimatorState.row_header(d),
                  [s.to_row() for s in t.snapshots])
    if not result.failed:
        write_csv(f"{prefix}_summary.csv", result.summary_header(), result.summary_rows())


def _set_path(doc, path, value):
    keys = path.split(".")
    node = doc
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value


SWEEP_KEYS = ("generator.p", "estimator.delta", "generator.sigma2", "generator.regressor",
              "estimator.sigma2", "estimator.cap_mode")


def sweep(doc, grid, write=True):
    """Full run at every point of the cross product of ``grid``.

    ``doc`` is the raw config mapping and ``grid`` maps dotted field paths to
    value lists.  Returns ``(header, rows)``, one row per grid point holding
    the grid values followed by the final summary row of that run.
    """
    for key in grid:
        if key not in SWEEP_KEYS:
            raise ValueError(f"cannot sweep over {key!r}; allowed: {list(SWEEP_KEYS)}")
    keys = list(grid)
    header = None
    rows = []
    base = parse_config(doc)
    for values in itertools.product(*(grid[k] for k in keys)):
        point = json.loads(json.dumps(doc))
        for k, v in zip(keys, values):
            _set_path(point, k, v)
        cfg = parse_config(point)
        result = run_experiment(cfg, write=False)
        if header is None:
            header = keys + result.summary_header()
        rows.append([json.dumps(v) if not isinstance(v, (int, float)) else v for v in values]
                    + result.summary_rows()[-1])
    if write:
        path = f"{base.outputs}_sweep.csv"
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return header, rows


def write_stream(path, block):
    d = block.phi.shape[1]
    header = ["n"] + [f"phi_{i}" for i in range(d)] + ["y", "z"]
    write_csv(path, header, ([int(n), *phi, y, int(z)]
                             for n, phi, y, z in zip(block.n, block.phi, block.y, block.z)))


def read_stream(path):
    header, body = read_csv(path)
    d = sum(1 for h in header if h.startswith("phi_"))
    if header != ["n"] + [f"phi_{i}" for i in range(d)] + ["y", "z"]:
        raise ValueError(f"{path}: not a stream CSV (header {header})")
    return StreamBlock(body[:, 0].astype(np.int64), body[:, 1:1 + d].copy(), body[:, 1 + d].copy(),
                       body[:, 2 + d].astype(np.int64), np.full(len(body), np.nan))


def simulate(cfg, seed=None):
    """Raw labelled stream for ``cfg`` (replication 0 unless ``seed`` is given)."""
    gen = cfg.generator if seed is None else replace(cfg.generator, seed=seed)
    return MLRStream(gen).draw(cfg.horizon)


def evaluate(cfg, block, snapshot_path=None):
    """Replay the estimator on a stored stream.

    Returns ``(trajectory, max_snapshot_deviation)``; the deviation compares
    replayed states against a stored snapshot CSV (None when not given).
    """
    N = len(block)
    ck = [c for c in cfg.checkpoints() if c <= N]
    if not ck or ck[-1] != N:
        ck.append(N)
    stored = None
    if snapshot_path is not None:
        header, body = read_csv(snapshot_path)
        stored = [EstimatorState.from_row(r, cfg.generator.d) for r in body]
        ck = sorted(set(ck) | {s.n for s in stored if s.n <= N})
    traj = trajectory(cfg, [block], ck)
    dev = None
    if stored is not None:
        mine = {s.n: s for s in traj.snapshots}
        dev = 0.0
        for s in stored:
            if s.n not in mine:
                continue
            m = mine[s.n]
            dev = max(dev, float(np.max(np.abs(m.theta - s.theta))), float(np.max(np.abs(m.P - s.P))),
                      abs(m.q - s.q), abs(m.r - s.r))
    return traj, dev


def bounds_table(delta, epsilon, n, lambda_min):
    """Rows ``(n, lambda_min, thm1_bound, thm2_bound, thm3_rate)``."""
    kap = analysis.kappa(delta, epsilon)
    n = np.asarray(n, float)
    lam = np.asarray(lambda_min, float)
    t1 = analysis.thm1_bound(n, lam, kap)
    t2 = analysis.thm2_bound(n, delta)
    t3 = n ** (-(1.0 - kap) / 2.0)
    return [[int(a), b, c, dd, e] for a, b, c, dd, e in zip(n, lam, t1, np.atleast_1d(t2), t3)]
