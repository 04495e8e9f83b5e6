"""Monte Carlo for exponential functionals ``I(t) = int_0^t exp(-xi_s) ds``.

Paths are simulated on a time grid merged with the exact jump times.  The
continuous part (drift plus Brownian motion) is exact on the grid and is filled
in at jump times by Brownian bridges.  On each piece the integral of
``exp(-xi)`` is taken for the linear interpolation of ``xi`` between the two
endpoint values, which is exact for a pure drift.

Samples are produced in fixed-size chunks.  Chunk ``k`` draws from its own
Philox stream keyed by ``(seed, stream, k)``, so results do not depend on how
chunks are spread over threads, and reductions run in chunk order.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateWeights, DomainError, UnsupportedSubordinator
from .levy_model import LevyModel, ParetoPositive

CHUNK = 512
_SEED_MASK = (1 << 64) - 1


@dataclass
class MCEstimate:
    mean: float
    stderr: float
    n_samples: int
    seed: int
    scheme: str = "exact_increments"
    stderr_of_stderr: float = float("nan")
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {"mean": self.mean, "stderr": self.stderr, "n": self.n_samples,
                "seed": self.seed, "scheme": self.scheme}


@dataclass(frozen=True)
class PathScheme:
    dt: float | None = None
    jump_handling: str = "exact_times"
    integral_rule: str = "trapezoid"


def dt_policy(t: float) -> float:
    return min(1e-2, t / 1000.0)


def worker_count(threads: int | None = None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("LEVY_EXPFUN_THREADS")
    if env:
        return max(1, int(env))
    return max(1, min(8, os.cpu_count() or 1))


def chunk_rng(seed: int, chunk: int, stream: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed) & _SEED_MASK, int(stream), int(chunk)])
    return np.random.Generator(np.random.Philox(ss))


def _estimate(values: np.ndarray, seed: int, scheme="exact_increments", blocks: int = 10) -> MCEstimate:
    n = values.size
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
    return MCEstimate(mean, se, n, int(seed), scheme, _jackknife_se_of_se(values, blocks))


def _jackknife_se_of_se(values: np.ndarray, blocks: int = 10) -> float:
    """Spread of the standard error across leave-one-block-out subsamples."""
    n = values.size
    if n < 2 * blocks:
        return float("nan")
    parts = np.array_split(values, blocks)
    ses = []
    for i in range(blocks):
        rest = np.concatenate([p for j, p in enumerate(parts) if j != i])
        ses.append(np.std(rest, ddof=1) / np.sqrt(n))
    ses = np.array(ses)
    return float(np.sqrt((blocks - 1) / blocks * np.sum((ses - ses.mean()) ** 2)))


# ---------------------------------------------------------------- jumps
def _phi1(d):
    """``(1 - e^{-d}) / d`` with the limit 1 at ``d = 0``."""
    out = np.ones_like(d)
    nz = np.abs(d) > 1e-12
    out[nz] = -np.expm1(-d[nz]) / d[nz]
    return out


def _conditional_sizes(law, rng, n, c, above: bool):
    """Sizes conditioned on ``J >= c`` (``above``) or ``J < c``."""
    if isinstance(law, ParetoPositive):
        return law.sample_above(rng, n, c) if above else law.sample_below(rng, n, c)
    if law.has_negative:
        if above:
            raise DomainError("negative jumps are never big")
        return law.sample(rng, n)
    if hasattr(law, "eta"):
        if above:
            return c + rng.exponential(1.0 / law.eta, n)
        p = -np.expm1(-law.eta * c)
        return -np.log1p(-rng.random(n) * p) / law.eta
    if hasattr(law, "x"):
        return np.full(n, float(law.x))
    raise DomainError(f"cannot condition {type(law).__name__}")


def _big_prob(law, c):
    """``P(J >= c)`` for a jump law."""
    if law.has_negative:
        return 0.0
    if hasattr(law, "x"):
        return float(law.x >= c)
    return float(law.sf(c))


class PlainJumps:
    """Jumps of the model on ``[0, T]``: Poisson counts, uniform times, i.i.d. sizes."""

    def __init__(self, model: LevyModel):
        self.model = model

    def __call__(self, rng, n, T):
        ps, ts, js = [], [], []
        for c in self.model.jumps:
            k = rng.poisson(c.rate * T, n)
            tot = int(k.sum())
            ps.append(np.repeat(np.arange(n), k))
            ts.append(rng.uniform(0.0, T, tot))
            js.append(c.law.sample(rng, tot))
        return _sorted(ps, ts, js)


class SmallJumps:
    """Jumps conditioned on having no positive jump ``>= c`` on ``[0, T]``."""

    def __init__(self, model: LevyModel, c: float):
        self.model, self.c = model, c

    def __call__(self, rng, n, T):
        ps, ts, js = [], [], []
        for comp in self.model.jumps:
            p_small = 1.0 - _big_prob(comp.law, self.c)
            k = rng.poisson(comp.rate * p_small * T, n)
            tot = int(k.sum())
            ps.append(np.repeat(np.arange(n), k))
            ts.append(rng.uniform(0.0, T, tot))
            js.append(_conditional_sizes(comp.law, rng, tot, self.c, above=False))
        return _sorted(ps, ts, js)


class BigJumpFirst:
    """Jumps conditioned on at least one positive jump ``>= c`` on ``[0, T]``.

    The first big jump time has the truncated exponential law; before it only
    small jumps occur, after it the unconditioned jump process runs.
    """

    def __init__(self, model: LevyModel, c: float):
        self.model, self.c = model, c
        self.big_rates = np.array([comp.rate * _big_prob(comp.law, c) for comp in model.jumps])
        self.big_rate = float(self.big_rates.sum())
        if self.big_rate <= 0:
            raise DomainError("no big jumps at this threshold")

    def __call__(self, rng, n, T):
        lam = self.big_rate
        u = rng.random(n)
        tau = -np.log1p(-u * -np.expm1(-lam * T)) / lam
        which = rng.choice(len(self.model.jumps), size=n, p=self.big_rates / lam)
        size = np.empty(n)
        for i, comp in enumerate(self.model.jumps):
            sel = which == i
            if np.any(sel):
                size[sel] = _conditional_sizes(comp.law, rng, int(sel.sum()), self.c, above=True)
        ps, ts, js = [np.arange(n)], [tau], [size]
        for comp in self.model.jumps:
            p_small = 1.0 - _big_prob(comp.law, self.c)
            # small jumps before tau
            k = rng.poisson(comp.rate * p_small * tau)
            tot = int(k.sum())
            pp = np.repeat(np.arange(n), k)
            ps.append(pp)
            ts.append(rng.random(tot) * tau[pp])
            js.append(_conditional_sizes(comp.law, rng, tot, self.c, above=False))
            # everything after tau
            k = rng.poisson(comp.rate * (T - tau))
            tot = int(k.sum())
            pp = np.repeat(np.arange(n), k)
            ps.append(pp)
            ts.append(tau[pp] + rng.random(tot) * (T - tau[pp]))
            js.append(comp.law.sample(rng, tot))
        return _sorted(ps, ts, js)


def _sorted(ps, ts, js):
    if not ps:
        return np.zeros(0, int), np.zeros(0), np.zeros(0)
    p = np.concatenate(ps).astype(int)
    t = np.concatenate(ts)
    j = np.concatenate(js)
    order = np.lexsort((t, p))
    return p[order], t[order], j[order]


# ---------------------------------------------------------------- paths
def time_grid(times, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Uniform grid of step ``dt`` merged with the record ``times``; returns grid and record indices."""
    times = np.asarray(times, dtype=float)
    if np.any(times <= 0):
        raise DomainError("record times must be positive")
    T = float(times.max())
    base = np.arange(0.0, T, dt)
    grid = np.unique(np.concatenate([base, times, [0.0]]))
    # drop points closer than 1e-12 to a record time
    keep = np.concatenate([[True], np.diff(grid) > 1e-12])
    grid = grid[keep]
    idx = np.searchsorted(grid, times - 1e-12)
    grid[idx] = times
    return grid, idx


def simulate_chunk(model: LevyModel, grid: np.ndarray, rec_idx: np.ndarray, n: int,
                   rng: np.random.Generator, jumps=None) -> np.ndarray:
    """``I`` at the record indices for ``n`` paths, shape ``(n, len(rec_idx))``."""
    dts = np.diff(grid)
    m = dts.size
    mu, sigma = model.drift, model.sigma
    inc = np.broadcast_to(mu * dts, (n, m)).copy()
    if sigma > 0:
        inc += sigma * np.sqrt(dts) * rng.standard_normal((n, m))
    xc = np.zeros((n, m + 1))
    np.cumsum(inc, axis=1, out=xc[:, 1:])
    del inc
    T = float(grid[-1])
    if jumps is None:
        jumps = PlainJumps(model) if model.jumps else None
    if jumps is not None:
        p, tau, size = jumps(rng, n, T)
    else:
        p, tau, size = np.zeros(0, int), np.zeros(0), np.zeros(0)
    xi = xc.copy()
    if p.size:
        panel = np.clip(np.searchsorted(grid, tau, side="right") - 1, 0, m - 1)
        d = np.zeros((n, m + 1))
        np.add.at(d, (p, panel + 1), size)
        xi += np.cumsum(d, axis=1)
        del d
    e = np.exp(-xi[:, :-1])
    area = e * dts * _phi1(xi[:, 1:] - xi[:, :-1])
    del e
    if p.size:
        _fix_jump_panels(area, xc, xi, grid, p, tau, size, panel, sigma, rng)
    cum = np.cumsum(area, axis=1)
    return cum[:, rec_idx - 1]


def _fix_jump_panels(area, xc, xi, grid, p, tau, size, panel, sigma, rng):
    """Replace the area of panels containing jumps by the merged-grid integral."""
    key = p * area.shape[1] + panel
    first = np.r_[True, key[1:] != key[:-1]]
    start = np.maximum.accumulate(np.where(first, np.arange(key.size), 0))
    rank = np.arange(key.size) - start
    last = np.r_[key[1:] != key[:-1], True]
    n_j = key.size
    tl = grid[panel].copy()
    tr = grid[panel + 1]
    left_c = xc[p, panel].copy()          # continuous part at the left end of the piece
    right_c = xc[p, panel + 1]
    s_left = xi[p, panel] - xc[p, panel]  # jump part in force on the piece
    total = np.zeros(n_j)
    for r in range(int(rank.max()) + 1):
        sel = np.nonzero(rank == r)[0]
        if r > 0:
            prev = sel - 1
            tl[sel] = tau[prev]
            left_c[sel] = left_c_next[prev]
            s_left[sel] = s_left_next[prev]
            total[sel] = total[prev]
        if r == 0:
            left_c_next = np.empty(n_j)
            s_left_next = np.empty(n_j)
        t0, t1, t2 = tl[sel], tau[sel], tr[sel]
        mean = left_c[sel] + (t1 - t0) / (t2 - t0) * (right_c[sel] - left_c[sel])
        if sigma > 0:
            var = sigma**2 * (t1 - t0) * (t2 - t1) / (t2 - t0)
            xt = mean + np.sqrt(np.maximum(var, 0.0)) * rng.standard_normal(sel.size)
        else:
            xt = mean
        a = left_c[sel] + s_left[sel]
        b = xt + s_left[sel]
        total[sel] += np.exp(-a) * (t1 - t0) * _phi1(b - a)
        left_c_next[sel] = xt
        s_left_next[sel] = s_left[sel] + size[sel]
    # final piece from the last jump to the right end of the panel
    fin = np.nonzero(last)[0]
    a = left_c_next[fin] + s_left_next[fin]
    b = right_c[fin] + s_left_next[fin]
    total[fin] += np.exp(-a) * (tr[fin] - tau[fin]) * _phi1(b - a)
    area[p[fin], panel[fin]] = total[fin]


def simulate(model: LevyModel, times, n: int, seed: int, dt: float | None = None,
             reducer=None, threads: int | None = None, stream: int = 0, jumps=None):
    """Run ``n`` paths in chunks and concatenate ``reducer(I_rec)`` per chunk in chunk order.

    ``I_rec`` has shape ``(chunk_size, len(times))``; the default reducer returns it.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    dt = dt or dt_policy(float(times.min()))
    grid, idx = time_grid(times, dt)
    n_chunks = (n + CHUNK - 1) // CHUNK
    sizes = [min(CHUNK, n - k * CHUNK) for k in range(n_chunks)]
    red = reducer or (lambda x: x)

    def run(k):
        rng = chunk_rng(seed, k, stream)
        return red(simulate_chunk(model, grid, idx, sizes[k], rng, jumps))

    workers = worker_count(threads)
    if workers == 1 or n_chunks == 1:
        parts = [run(k) for k in range(n_chunks)]
    else:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(run, range(n_chunks)))
    return np.concatenate(parts, axis=0)


def sample_I(model: LevyModel, t: float, scheme: PathScheme | None = None,
             rng: np.random.Generator | None = None) -> float:
    """One sample of ``I(t)``."""
    if t <= 0:
        raise DomainError("t must be positive")
    scheme = scheme or PathScheme()
    rng = rng or np.random.default_rng()
    grid, idx = time_grid([t], scheme.dt or dt_policy(t))
    return float(simulate_chunk(model, grid, idx, 1, rng)[0, 0])


def _per_horizon(model, ts, n, seed, dt, reducer, threads):
    """Columns ``reducer(I)`` for every horizon in ``ts``.

    Horizons with the same time step share paths; each group of horizons runs on
    its own stream so a coarse step is used wherever the policy allows it.
    """
    steps = np.array([dt or dt_policy(float(t)) for t in ts])
    out = np.empty((n, ts.size))
    for g, step in enumerate(np.unique(steps)):
        cols = np.nonzero(steps == step)[0]
        out[:, cols] = simulate(model, ts[cols], n, seed, float(step), reducer=reducer,
                                threads=threads, stream=g)
    return out


def estimate_moment(model: LevyModel, t, a: float, N: int, seed: int,
                    dt: float | None = None, threads: int | None = None):
    """``E[I(t)^{-a}]``; a list of horizons returns a list."""
    if N < 1000:
        raise DomainError("N must be at least 1000")
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    vals = _per_horizon(model, ts, N, seed, dt, lambda I: I ** (-a), threads)
    out = [_estimate(vals[:, k], seed) for k in range(ts.size)]
    return out[0] if np.ndim(t) == 0 else out


def estimate_truncated(model: LevyModel, t, a: float, x: float, N: int, seed: int,
                       dt: float | None = None, threads: int | None = None):
    """``E[I(t)^{-a}; I(t) <= x]`` on the same paths as :func:`estimate_moment`."""
    if N < 1000:
        raise DomainError("N must be at least 1000")
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    vals = _per_horizon(model, ts, N, seed, dt, lambda I: np.where(I <= x, I ** (-a), 0.0), threads)
    out = [_estimate(vals[:, k], seed) for k in range(ts.size)]
    return out[0] if np.ndim(t) == 0 else out


def path_integral(model: LevyModel, weight, a: float, N: int, seed: int, t_max: float,
                  dt: float = 1e-2, threads: int | None = None, scheme: str = "path_integral"):
    """``int_0^{t_max} w_k(t) I(t)^{-a} dt`` per path, averaged, for the columns of ``weight``.

    ``weight(t)`` maps an array of times to an array of shape ``(len(t), K)``.
    Paths are recorded on a uniform ``dt`` grid.  Writing the integrand as
    ``t^{-a} h(t)`` with ``h = w (t / I)^a`` smooth, ``h`` is interpolated
    linearly between nodes and integrated against ``t^{-a}`` exactly; this
    removes the O(sqrt(dt)) error a plain trapezoid makes at the origin.
    ``h(0) = w(0)`` because ``I(t) ~ t``.
    """
    if N < 1000:
        raise DomainError("N must be at least 1000")
    if not 0 < a < 1:
        raise DomainError("a must lie in (0, 1)")
    nodes = np.arange(int(round(t_max / dt)) + 1) * dt
    x0, x1 = nodes[:-1], nodes[1:]
    m0 = (x1 ** (1 - a) - x0 ** (1 - a)) / (1 - a)
    m1 = (x1 ** (2 - a) - x0 ** (2 - a)) / (2 - a)
    c1 = (m1 - x0 * m0) / dt
    pw = np.zeros(nodes.size)
    pw[:-1] += m0 - c1
    pw[1:] += c1
    wt = np.asarray(weight(nodes), dtype=float).reshape(nodes.size, -1)
    head = pw[0] * wt[0]
    rec = nodes[1:]
    w = (pw[1:] * rec ** a)[:, None] * wt[1:]

    def reducer(I):
        return I ** (-a) @ w + head

    vals = simulate(model, rec, N, seed, dt, reducer=reducer, threads=threads)
    return [_estimate(vals[:, k], seed, scheme) for k in range(w.shape[1])]


def laplace_functional(model: LevyModel, q, a: float, N: int, seed: int, t_max: float = 60.0,
                       dt: float = 1e-2, threads: int | None = None):
    """``int_0^{t_max} e^{-qt} E[I(t)^{-a}] dt``, one :class:`MCEstimate` per ``q``."""
    qs = np.atleast_1d(np.asarray(q, dtype=float))
    out = path_integral(model, lambda t: np.exp(-np.outer(t, qs)), a, N, seed, t_max, dt,
                        threads, "laplace_functional")
    return out[0] if np.ndim(q) == 0 else out


# ---------------------------------------------------------------- stratification
def tail_event_split(model: LevyModel, t: float, a: float, epsilon: float, N: int, seed: int,
                     dt: float | None = None, threads: int | None = None, share_big: float = 0.5,
                     x: float = np.inf):
    """``E[I^{-a}; no jump >= eps t by t]`` and ``E[I^{-a}; some jump >= eps t by t]``.

    Each stratum is simulated under its conditional law; ``share_big`` of the
    samples go to the big-jump stratum.  Returns two :class:`MCEstimate`
    objects whose means add up to ``E[I(t)^{-a}]``.  A finite ``x`` restricts
    to ``I(t) <= x`` on the same paths.
    """
    if not model.pareto_components():
        raise DomainError("the split needs a ParetoPositive component")
    if not 0 < epsilon < 1:
        raise DomainError("epsilon must lie in (0, 1)")
    c = epsilon * t
    big = BigJumpFirst(model, c)
    p_big = float(-np.expm1(-big.big_rate * t))
    n_big = max(2, int(round(share_big * N)))
    n_small = max(2, N - n_big)
    def red(I):
        v = I[:, 0]
        return np.where(v <= x, v ** (-a), 0.0)

    v_small = simulate(model, [t], n_small, seed, dt, reducer=red,
                       threads=threads, stream=1, jumps=SmallJumps(model, c))
    v_big = simulate(model, [t], n_big, seed, dt, reducer=red,
                     threads=threads, stream=2, jumps=big)
    e_small = _estimate(v_small, seed, "stratified")
    e_big = _estimate(v_big, seed, "stratified")
    w_small, w_big = 1.0 - p_big, p_big
    e_small = MCEstimate(w_small * e_small.mean, w_small * e_small.stderr, n_small, seed,
                         "stratified", w_small * e_small.stderr_of_stderr,
                         {"stratum_prob": w_small, "conditional_mean": e_small.mean})
    e_big = MCEstimate(w_big * e_big.mean, w_big * e_big.stderr, n_big, seed, "stratified",
                       w_big * e_big.stderr_of_stderr,
                       {"stratum_prob": w_big, "conditional_mean": e_big.mean})
    return e_small, e_big


def stratified_moment(model: LevyModel, t: float, a: float, N: int, seed: int,
                      epsilon: float = 0.5, dt: float | None = None, threads: int | None = None,
                      x: float = np.inf):
    """``E[I(t)^{-a}; I(t) <= x]`` as the sum of the two strata of :func:`tail_event_split`."""
    s, b = tail_event_split(model, t, a, epsilon, N, seed, dt, threads, x=x)
    se = float(np.hypot(s.stderr, b.stderr))
    sse = float(np.hypot(s.stderr_of_stderr, b.stderr_of_stderr))
    return MCEstimate(s.mean + b.mean, se, N, seed, "stratified", sse,
                      {"small": s.mean, "big": b.mean, "p_big": b.extra["stratum_prob"]})


# ---------------------------------------------------------------- subordinators
def sample_subordinator_functional(phi, rng: np.random.Generator, n: int = 1) -> np.ndarray:
    """``I = int_0^e exp(-sigma_s) ds`` for the killed subordinator with exponent ``phi``.

    ``phi`` must expose ``kill > 0``, a finite ``drift`` and an empty or finite
    ``jump_measure`` (a :class:`GridMeasure` on ``(0, inf)``).
    """
    kill, d = float(phi.kill), float(phi.drift)
    if not kill > 0:
        raise DomainError("needs kill > 0")
    if not np.isfinite(d) or d < 0:
        raise UnsupportedSubordinator("drift of the subordinator is not available")
    jm = phi.jump_measure
    if jm is not None and not np.isfinite(jm.total()):
        raise UnsupportedSubordinator("infinite activity jump measure")
    lam = 0.0 if jm is None else jm.total()
    out = np.zeros(n)
    level = np.zeros(n)
    alive = np.ones(n, dtype=bool)
    while np.any(alive):
        k = int(alive.sum())
        t_kill = rng.exponential(1.0 / kill, k)
        t_jump = rng.exponential(1.0 / lam, k) if lam > 0 else np.full(k, np.inf)
        span = np.minimum(t_kill, t_jump)
        lv = level[alive]
        piece = np.exp(-lv) * (span if d == 0 else -np.expm1(-d * span) / d)
        out[alive] += piece
        lv = lv + d * span
        jumped = t_jump < t_kill
        if lam > 0 and np.any(jumped):
            lv[jumped] += _grid_sample(jm, rng, int(jumped.sum()))
        level[alive] = lv
        idx = np.nonzero(alive)[0]
        alive[idx[~jumped]] = False
    return out


def _grid_sample(jm, rng, n):
    probs = np.concatenate([jm.masses, [m for _, m in jm.atoms]])
    probs = probs / probs.sum()
    k = rng.choice(probs.size, size=n, p=probs)
    out = np.empty(n)
    cell = k < jm.n_cells
    out[cell] = jm.edges[k[cell]] + jm.width * rng.random(int(cell.sum()))
    locs = np.array([x for x, _ in jm.atoms])
    if locs.size:
        out[~cell] = locs[k[~cell] - jm.n_cells]
    return out


@dataclass
class WeightedSample:
    samples: np.ndarray
    weights: np.ndarray
    ess: float

    def mean(self, f=lambda x: x) -> float:
        return float(np.sum(self.weights * f(self.samples)))

    def stderr(self, f=lambda x: x) -> float:
        """Delta-method standard error of the self-normalized weighted mean."""
        v = f(self.samples)
        m = self.mean(f)
        return float(np.sqrt(np.sum(self.weights**2 * (v - m) ** 2)))


def size_biased_resample(samples, exponent: float) -> WeightedSample:
    """Weights ``x_i^exponent / sum_j x_j^exponent`` for the size-biased law."""
    x = np.asarray(samples, dtype=float)
    if np.any(x <= 0):
        raise DomainError("samples must be positive")
    lw = exponent * np.log(x)
    w = np.exp(lw - lw.max())
    w /= w.sum()
    ess = float(1.0 / np.sum(w**2))
    if ess < 0.01 * x.size:
        raise DegenerateWeights(f"effective sample size {ess:.1f} below 1% of {x.size}")
    return WeightedSample(x, w, ess)


def size_biased_moment(phi, a: float, z: float, N: int, seed: int) -> MCEstimate:
    """``E[(B_{-a} I_phi)^z] = E[I^{z-a}] / E[I^{-a}]`` by size-biased reweighting."""
    rng = chunk_rng(seed, 0, stream=7)
    x = sample_subordinator_functional(phi, rng, N)
    ws = size_biased_resample(x, -a)
    f = lambda v: v**z  # noqa: E731
    return MCEstimate(ws.mean(f), ws.stderr(f), N, seed, "size_biased", extra={"ess": ws.ess})
