"""Monte Carlo simulation of self-similar fragmentation cascades.

A fragment of mass m waits an exponential time with rate
``total_rate * m**alpha`` (alpha < 0: small fragments split faster), then
splits according to the normalized dislocation measure.  Children below the
dust cutoff leave the system; their unresolved extinction times are
accounted for by the exact self-similarity relation (a fragment of mass m
drags out extinction by m**|alpha| times an independent copy), reported as
``trunc_error_bound`` using the known mean 1/phi(|alpha|) per unit
|alpha|-power of truncated mass.

Two engines implement the same law:

* a vectorized level-synchronous engine that advances a whole frontier of
  fragments at once across many runs (fragments evolve independently given
  their masses, so no global event queue is needed for per-fragment birth
  and death times);
* a per-node reference engine that gives every node of the fragment tree
  its own counter-derived random stream, so that runs with different dust
  cutoffs share the event tree pathwise (the coupling used to check that a
  coarser cutoff can only lower the extinction estimate).

All randomness is consumed as inverse transforms of generator uniforms in a
documented order, so identical seed and configuration replay bit for bit.

Seed derivation (bit-exact contract): runs are processed in fixed chunks of
``CHUNK_RUNS``; chunk c uses ``PCG64(mix_seed(base_seed, c))`` where
``mix_seed`` is the splitmix64 finalizer applied to
``base + (c+1) * 0x9E3779B97F4A7C15`` (mod 2**64).  Per level the draw
order is: waiting-time uniforms for every frontier row, split uniforms
(atom choice or larger-piece inverse CDF), then tag-routing uniforms for
tag 1 and tag 2 in that order.  Aggregation across chunks is order
independent, so worker-pool scheduling cannot change results.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, NumericalFailure, UnsupportedSampling
from .laplace import PhiEvaluator
from .measures import ATOMIC, BINARY_DENSITY, atom_arrays, split_icdf, total_mass

CHUNK_RUNS = 4096
_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix_seed(base, i):
    """splitmix64 finalizer of base + (i+1)*golden, the worker seed rule."""
    z = (int(base) + (int(i) + 1) * _GOLDEN) & _MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return z


def _generator(seed):
    return np.random.Generator(np.random.PCG64(seed))


def _pow(x, p):
    """x**p with fast paths for the exponents the acceptance work uses."""
    if p == 1.0:
        return x
    if p == -1.0:
        return 1.0 / x
    if p == 0.5:
        return np.sqrt(x)
    if p == -0.5:
        return 1.0 / np.sqrt(x)
    if p == 2.0:
        return x * x
    if p == -2.0:
        return 1.0 / (x * x)
    return x ** p


@dataclass(frozen=True)
class CascadeConfig:
    """Simulation configuration.

    ``cutoff`` is the dust threshold: children below it leave the system
    and enter the truncation ledger.  Binary conservative measures keep
    total mass 1 until the cutoff bites, so the event count per run grows
    like 2/cutoff; the safety cap ``max_events`` turns a runaway
    configuration into a flagged truncated run instead of a hang.
    """

    alpha: float
    cutoff: float = 2.0 ** -30
    checkpoints: tuple = ()
    max_events: int = 10 ** 6
    seed: int = 0
    tags: int = 0
    record_sums: bool = True
    record_largest: bool = True
    snapshot_time: float = None

    def __post_init__(self):
        if not self.alpha < 0.0:
            raise ConfigError("cascade needs a negative self-similarity index")
        if not 0.0 < self.cutoff < 1.0:
            raise ConfigError("dust cutoff must lie in (0, 1)")
        cps = tuple(float(t) for t in self.checkpoints)
        if any(cps[i] > cps[i + 1] for i in range(len(cps) - 1)):
            raise ConfigError("checkpoints must be sorted ascending")
        if self.tags not in (0, 1, 2):
            raise ConfigError("tags must be 0, 1 or 2")
        object.__setattr__(self, "checkpoints", cps)


@dataclass(frozen=True)
class TagRecord:
    """One tagged lineage: mass at each checkpoint, death time, and whether
    death came from routing into split dust rather than the cutoff."""

    mass_at: np.ndarray
    death_time: float
    killed: bool


@dataclass(frozen=True)
class TwoTagRecord:
    tag1: TagRecord
    tag2: TagRecord
    separation_time: float
    shared_splits: int


@dataclass(frozen=True)
class CascadeRun:
    """One simulated trajectory with checkpointed statistics."""

    checkpoints: tuple
    extinction_est: float
    trunc_error_bound: float
    truncated: bool
    first_event: float
    largest: np.ndarray       # F1 at each checkpoint
    sum_masses: np.ndarray    # S1
    sum_squares: np.ndarray   # S2
    tags: tuple = ()


@dataclass
class EnsembleResult:
    """Column-wise results of many independent runs."""

    checkpoints: tuple
    zeta: np.ndarray
    trunc_error_bound: np.ndarray
    truncated: np.ndarray
    first_event: np.ndarray
    largest: np.ndarray = None       # (n, ncp)
    sum_masses: np.ndarray = None
    sum_squares: np.ndarray = None
    tag_mass: np.ndarray = None      # (tags, n, ncp)
    tag_death: np.ndarray = None     # (tags, n)
    tag_killed: np.ndarray = None
    separation_time: np.ndarray = None
    shared_splits: np.ndarray = None
    snapshot_run: np.ndarray = None  # run ids of fragments alive at snapshot_time
    snapshot_mass: np.ndarray = None

    @property
    def n_runs(self):
        return len(self.zeta)


def _segment_max_into(target, idx_sorted, values):
    """target[r] = max(target[r], max of values where idx == r); idx sorted."""
    if idx_sorted.size == 0:
        return
    starts = np.flatnonzero(
        np.concatenate(([True], idx_sorted[1:] != idx_sorted[:-1])))
    seg_max = np.maximum.reduceat(values, starts)
    runs = idx_sorted[starts]
    target[runs] = np.maximum(target[runs], seg_max)


def _simulate_chunk(spec, cfg, n_runs, rng):
    """Level-synchronous cascade over n_runs independent trees.

    The frontier (all currently alive fragments across all runs) is a set
    of flat arrays sorted by run id; every level samples all waiting times,
    records statistics for fragments whose lifetime straddles a checkpoint,
    then splits every fragment at once.  Tagged lineages are tracked as one
    frontier row index per run, so tag bookkeeping costs O(n_runs) per
    level regardless of frontier width.
    """
    alpha = cfg.alpha
    abs_alpha = -alpha
    eps = cfg.cutoff
    cps = np.asarray(cfg.checkpoints, dtype=float)
    ncp = len(cps)
    ntags = cfg.tags
    rate_total = total_mass(spec)
    binary = spec.variant == BINARY_DENSITY
    if not binary and spec.variant != ATOMIC:
        raise UnsupportedSampling(
            f"family {spec.family!r} cannot be simulated (infinite rate)")
    if not binary:
        cum_w, parts_flat, offsets, sizes, _ = atom_arrays(spec)
        single_atom = len(sizes) == 1
        atom_parts = parts_flat[:sizes[0]] if single_atom else None

    zeta = np.zeros(n_runs)
    trunc = np.zeros(n_runs)
    truncated = np.zeros(n_runs, dtype=bool)
    first_event = np.full(n_runs, np.nan)
    n_events = np.zeros(n_runs, dtype=np.int64)
    F1 = np.zeros((n_runs, ncp)) if cfg.record_largest and ncp else None
    S1 = np.zeros((n_runs, ncp)) if cfg.record_sums and ncp else None
    S2 = np.zeros((n_runs, ncp)) if cfg.record_sums and ncp else None
    tag_mass = np.zeros((ntags, n_runs, ncp))
    tag_death = np.full((ntags, n_runs), np.inf)
    tag_killed = np.zeros((ntags, n_runs), dtype=bool)
    t_sep = np.full(n_runs, np.inf)
    shared = np.zeros(n_runs, dtype=np.int64)
    snap_runs, snap_masses = [], []

    run = np.arange(n_runs, dtype=np.int64)
    mass = np.ones(n_runs)
    birth = np.zeros(n_runs)
    # tag_row[k][r]: frontier row carrying tag k of run r, -1 once dead
    tag_row = np.tile(np.arange(n_runs, dtype=np.int64), (ntags, 1))
    level = 0

    while run.size:
        m = run.size
        n_events += np.bincount(run, minlength=n_runs)
        newly_over = (n_events > cfg.max_events) & ~truncated
        if newly_over.any():
            truncated |= newly_over
            keep_rows = ~truncated[run]
            new_idx = np.cumsum(keep_rows) - 1
            for k in range(ntags):
                active = tag_row[k] >= 0
                rows = tag_row[k, active]
                tag_row[k, active] = np.where(keep_rows[rows],
                                              new_idx[rows], -1)
            run, mass, birth = run[keep_rows], mass[keep_rows], birth[keep_rows]
            m = run.size
            if m == 0:
                break

        u = rng.random(m)
        death = birth - np.log1p(-u) / (rate_total * _pow(mass, alpha))
        if level == 0:
            first_event[run] = death
        _segment_max_into(zeta, run, death)

        # fragments alive at checkpoint j satisfy birth <= cps[j] < death;
        # one flattened bincount over (run, checkpoint) keys covers them all
        if ncp and (S1 is not None or F1 is not None):
            jlo = np.searchsorted(cps, birth, side="left")
            jhi = np.searchsorted(cps, death, side="left")
            counts = jhi - jlo
            total = int(counts.sum())
            if total:
                run_rep = np.repeat(run, counts)
                mass_rep = np.repeat(mass, counts)
                starts = np.cumsum(counts) - counts
                within = np.arange(total, dtype=np.int64) \
                    - np.repeat(starts, counts)
                key = run_rep * ncp + np.repeat(jlo, counts) + within
                if S1 is not None:
                    s1_flat = S1.ravel()
                    np.add(s1_flat, np.bincount(
                        key, weights=mass_rep, minlength=n_runs * ncp),
                        out=s1_flat)
                    s2_flat = S2.ravel()
                    np.add(s2_flat, np.bincount(
                        key, weights=mass_rep * mass_rep,
                        minlength=n_runs * ncp), out=s2_flat)
                if F1 is not None:
                    # rows of one run straddle overlapping checkpoint
                    # ranges, so the flattened keys are NOT sorted; use the
                    # unordered scatter-max
                    np.maximum.at(F1.ravel(), key, mass_rep)
        for k in range(ntags):
            runs_t = np.flatnonzero(tag_row[k] >= 0)
            if runs_t.size == 0 or ncp == 0:
                continue
            rows = tag_row[k, runs_t]
            for j in range(ncp):
                ok = (birth[rows] <= cps[j]) & (cps[j] < death[rows])
                if ok.any():
                    tag_mass[k, runs_t[ok], j] = mass[rows[ok]]
        if cfg.snapshot_time is not None:
            t = cfg.snapshot_time
            alive = (birth <= t) & (t < death)
            if alive.any():
                snap_runs.append(run[alive].copy())
                snap_masses.append(mass[alive].copy())

        # children (zero-mass children are possible at density endpoints
        # and fall straight into the dust ledger)
        if binary:
            s1 = np.asarray(split_icdf(spec, rng.random(m)))
            n_child = 2 * m
            child_mass = np.empty(n_child)
            child_mass[0::2] = mass * s1
            child_mass[1::2] = mass * (1.0 - s1)
            child_run = np.repeat(run, 2)
            child_birth = np.repeat(death, 2)
            child_starts = 2 * np.arange(m, dtype=np.int64)
            child_counts = None
        elif single_atom:
            k_parts = len(atom_parts)
            n_child = k_parts * m
            child_frac = np.tile(atom_parts, m)
            child_mass = np.repeat(mass, k_parts) * child_frac
            child_run = np.repeat(run, k_parts)
            child_birth = np.repeat(death, k_parts)
            child_starts = k_parts * np.arange(m, dtype=np.int64)
            child_counts = np.full(m, k_parts, dtype=np.int64)
        else:
            atom_idx = np.searchsorted(cum_w, rng.random(m), side="right")
            atom_idx = np.minimum(atom_idx, len(sizes) - 1)
            child_counts = sizes[atom_idx]
            cum_counts = np.cumsum(child_counts)
            n_child = int(cum_counts[-1])
            child_starts = cum_counts - child_counts
            within = np.arange(n_child, dtype=np.int64) \
                - np.repeat(child_starts, child_counts)
            part_idx = np.repeat(offsets[atom_idx], child_counts) + within
            child_frac = parts_flat[part_idx]
            child_mass = np.repeat(mass, child_counts) * child_frac
            child_run = np.repeat(run, child_counts)
            child_birth = np.repeat(death, child_counts)

        # tag routing: each resident tag independently picks child i with
        # probability equal to its relative mass, the dust residual
        # otherwise (sentinel -1); -2 marks runs without the tag
        chosen = np.full((ntags, n_runs), -2, dtype=np.int64)
        frac_cum = None
        for k in range(ntags):
            runs_t = np.flatnonzero(tag_row[k] >= 0)
            if runs_t.size == 0:
                continue
            rows = tag_row[k, runs_t]
            r = rng.random(rows.size)
            if binary:
                child_idx = child_starts[rows] + (r >= s1[rows])
            else:
                if frac_cum is None:
                    frac_cum = np.cumsum(child_frac)
                seg_first = child_starts[rows]
                base = frac_cum[seg_first] - child_frac[seg_first]
                child_idx = np.searchsorted(frac_cum, base + r, side="right")
                seg_end = child_starts[rows] + child_counts[rows]
                child_idx = np.where(child_idx >= seg_end, -1, child_idx)
            chosen[k, runs_t] = child_idx

        if ntags == 2:
            both_runs = np.flatnonzero(
                (tag_row[0] >= 0) & (tag_row[0] == tag_row[1]))
            if both_runs.size:
                shared[both_runs] += 1
                c0 = chosen[0, both_runs]
                c1 = chosen[1, both_runs]
                sep = (c0 != c1) | ((c0 == -1) & (c1 == -1))
                sep_runs = both_runs[sep]
                t_sep[sep_runs] = death[tag_row[0, sep_runs]]

        keep = child_mass >= eps
        n_keep = int(np.count_nonzero(keep))
        if n_keep != n_child:
            dust = ~keep
            trunc += np.bincount(child_run[dust],
                                 weights=_pow(child_mass[dust], abs_alpha),
                                 minlength=n_runs)
        new_index = np.cumsum(keep) - 1 if ntags else None

        for k in range(ntags):
            runs_t = np.flatnonzero(tag_row[k] >= 0)
            if runs_t.size == 0:
                continue
            c = chosen[k, runs_t]
            routed_dust = c == -1
            survives = np.zeros(runs_t.size, dtype=bool)
            ok = ~routed_dust
            survives[ok] = keep[c[ok]]
            died = ~survives
            if died.any():
                parent_rows = tag_row[k, runs_t[died]]
                tag_death[k, runs_t[died]] = death[parent_rows]
                tag_killed[k, runs_t[died]] = routed_dust[died]
                tag_row[k, runs_t[died]] = -1
            if survives.any():
                tag_row[k, runs_t[survives]] = new_index[c[survives]]

        run = child_run[keep]
        mass = child_mass[keep]
        birth = child_birth[keep]
        level += 1

    inv_phi = 1.0 / PhiEvaluator(spec).phi(abs_alpha)
    out = {
        "zeta": zeta,
        "trunc_error_bound": trunc * inv_phi,
        "truncated": truncated,
        "first_event": first_event,
        "largest": F1,
        "sum_masses": S1,
        "sum_squares": S2,
        "tag_mass": tag_mass if ntags else None,
        "tag_death": tag_death if ntags else None,
        "tag_killed": tag_killed if ntags else None,
        "separation_time": t_sep if ntags == 2 else None,
        "shared_splits": shared if ntags == 2 else None,
        "snapshot_run": (np.concatenate(snap_runs) if snap_runs
                         else np.empty(0, dtype=np.int64)),
        "snapshot_mass": (np.concatenate(snap_masses) if snap_masses
                          else np.empty(0)),
    }
    return out


def run_cascade(spec, cfg, rng=None):
    """Simulate one trajectory; rng defaults to PCG64(cfg.seed)."""
    if rng is None:
        rng = _generator(cfg.seed)
    raw = _simulate_chunk(spec, cfg, 1, rng)
    tags = tuple(
        TagRecord(mass_at=raw["tag_mass"][k, 0].copy(),
                  death_time=float(raw["tag_death"][k, 0]),
                  killed=bool(raw["tag_killed"][k, 0]))
        for k in range(cfg.tags))
    return CascadeRun(
        checkpoints=cfg.checkpoints,
        extinction_est=float(raw["zeta"][0]),
        trunc_error_bound=float(raw["trunc_error_bound"][0]),
        truncated=bool(raw["truncated"][0]),
        first_event=float(raw["first_event"][0]),
        largest=raw["largest"][0] if raw["largest"] is not None else None,
        sum_masses=raw["sum_masses"][0] if raw["sum_masses"] is not None else None,
        sum_squares=raw["sum_squares"][0] if raw["sum_squares"] is not None else None,
        tags=tags)


def run_two_tags(spec, cfg, rng=None):
    """Simulate one trajectory carrying two independently routed tags."""
    cfg = replace(cfg, tags=2)
    if rng is None:
        rng = _generator(cfg.seed)
    raw = _simulate_chunk(spec, cfg, 1, rng)
    records = [
        TagRecord(mass_at=raw["tag_mass"][k, 0].copy(),
                  death_time=float(raw["tag_death"][k, 0]),
                  killed=bool(raw["tag_killed"][k, 0]))
        for k in (0, 1)]
    two = TwoTagRecord(tag1=records[0], tag2=records[1],
                       separation_time=float(raw["separation_time"][0]),
                       shared_splits=int(raw["shared_splits"][0]))
    run = CascadeRun(
        checkpoints=cfg.checkpoints,
        extinction_est=float(raw["zeta"][0]),
        trunc_error_bound=float(raw["trunc_error_bound"][0]),
        truncated=bool(raw["truncated"][0]),
        first_event=float(raw["first_event"][0]),
        largest=raw["largest"][0] if raw["largest"] is not None else None,
        sum_masses=raw["sum_masses"][0] if raw["sum_masses"] is not None else None,
        sum_squares=raw["sum_squares"][0] if raw["sum_squares"] is not None else None,
        tags=tuple(records))
    return run, two


def _chunk_sizes(n_runs):
    sizes = [CHUNK_RUNS] * (n_runs // CHUNK_RUNS)
    if n_runs % CHUNK_RUNS:
        sizes.append(n_runs % CHUNK_RUNS)
    return sizes


def _run_chunk_job(args):
    spec, cfg, n, chunk_index = args
    rng = _generator(mix_seed(cfg.seed, chunk_index))
    return _simulate_chunk(spec, cfg, n, rng)


def default_workers():
    try:
        return max(1, int(os.environ.get("FRAGTAIL_THREADS", "1")))
    except ValueError:
        return 1


def run_ensemble(spec, cfg, n_runs, workers=None):
    """Simulate n_runs independent trajectories.

    Runs are processed in fixed chunks of CHUNK_RUNS; chunk c draws from
    PCG64(mix_seed(cfg.seed, c)), which makes the result independent of the
    worker count and bit-identical across replays.  ``workers`` defaults to
    the FRAGTAIL_THREADS environment variable (1 if unset).
    """
    if n_runs <= 0:
        raise ConfigError("need a positive number of runs")
    if workers is None:
        workers = default_workers()
    sizes = _chunk_sizes(n_runs)
    jobs = [(spec, cfg, n, i) for i, n in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_chunk_job, jobs, chunksize=1))
    else:
        chunks = [_run_chunk_job(job) for job in jobs]
    return _merge_chunks(cfg, chunks, sizes)


def _merge_chunks(cfg, chunks, sizes):
    def cat(key):
        if chunks[0][key] is None:
            return None
        return np.concatenate([c[key] for c in chunks])

    def cat_tags(key):
        if chunks[0][key] is None:
            return None
        return np.concatenate([c[key] for c in chunks], axis=1)

    offsets = np.concatenate(([0], np.cumsum(sizes)[:-1]))
    snap_run = np.concatenate(
        [c["snapshot_run"] + off for c, off in zip(chunks, offsets)])
    return EnsembleResult(
        checkpoints=cfg.checkpoints,
        zeta=cat("zeta"),
        trunc_error_bound=cat("trunc_error_bound"),
        truncated=cat("truncated"),
        first_event=cat("first_event"),
        largest=cat("largest"),
        sum_masses=cat("sum_masses"),
        sum_squares=cat("sum_squares"),
        tag_mass=cat_tags("tag_mass"),
        tag_death=cat_tags("tag_death"),
        tag_killed=cat_tags("tag_killed"),
        separation_time=cat("separation_time"),
        shared_splits=cat("shared_splits"),
        snapshot_run=snap_run,
        snapshot_mass=cat("snapshot_mass"))


# ---------------------------------------------------------------------------
# direct simulation of the tagged lineage


def sample_zeta_tag(spec, alpha, tol, n, rng):
    """Simulate n tagged-lineage extinction times directly.

    The lineage is a multiplicative random walk: wait an exponential with
    rate total_rate * m**alpha, then pick child i of the split with
    probability s_i (size biasing) or die to dust with the residual
    probability.  Stops once the expected remaining time
    m**|alpha| / phi(|alpha|) falls below ``tol``; that remainder is
    returned as the per-sample truncation bound.

    Returns dict with arrays ``value``, ``bound``, ``killed``.
    """
    if not alpha < 0.0:
        raise ConfigError("tagged lineage needs a negative index")
    if spec.variant not in (ATOMIC, BINARY_DENSITY):
        raise UnsupportedSampling(
            f"family {spec.family!r} cannot be sampled")
    abs_alpha = -alpha
    rate_total = total_mass(spec)
    inv_phi = 1.0 / PhiEvaluator(spec).phi(abs_alpha)
    binary = spec.variant == BINARY_DENSITY
    if not binary:
        cum_w, parts_flat, offsets, sizes, part_sums = atom_arrays(spec)
        parts_cum = np.cumsum(parts_flat)

    m = np.ones(n)
    acc = np.zeros(n)
    bound = np.zeros(n)
    killed = np.zeros(n, dtype=bool)
    active = np.arange(n)
    for _ in range(100000):
        if active.size == 0:
            return {"value": acc, "bound": bound, "killed": killed}
        k = active.size
        u = rng.random(k)
        acc[active] += -np.log1p(-u) / (rate_total * _pow(m[active], alpha))
        if binary:
            s1 = np.asarray(split_icdf(spec, rng.random(k)))
            s1 = np.clip(s1, 0.5, 1.0 - 1e-15)
            r = rng.random(k)
            frac = np.where(r < s1, s1, 1.0 - s1)
            died_dust = np.zeros(k, dtype=bool)
        else:
            if len(sizes) == 1:
                atom_idx = np.zeros(k, dtype=np.int64)
            else:
                atom_idx = np.searchsorted(cum_w, rng.random(k), side="right")
                atom_idx = np.minimum(atom_idx, len(sizes) - 1)
            r = rng.random(k)
            first = offsets[atom_idx]
            base = parts_cum[first] - parts_flat[first]
            pos = np.searchsorted(parts_cum, base + r, side="right")
            died_dust = pos >= offsets[atom_idx] + sizes[atom_idx]
            frac = np.where(died_dust, 1.0, parts_flat[np.minimum(
                pos, len(parts_flat) - 1)])
        m[active] = m[active] * frac
        idx_killed = active[died_dust]
        killed[idx_killed] = True
        rem = _pow(m[active], abs_alpha) * inv_phi
        stopped = (rem < tol) & ~died_dust
        bound[active[stopped]] = rem[stopped]
        active = active[~(died_dust | stopped)]
    raise NumericalFailure("tagged lineage failed to reach the stop rule")


def simulate_zeta_tag(spec, alpha, tol, rng):
    """One tagged-lineage extinction sample with its truncation bound."""
    out = sample_zeta_tag(spec, alpha, tol, 1, rng)
    return {"value": float(out["value"][0]),
            "truncated_mean_bound": float(out["bound"][0]),
            "killed": bool(out["killed"][0])}


# ---------------------------------------------------------------------------
# reference engine: per-node random streams, pathwise cutoff coupling


@dataclass(frozen=True)
class NodeRecord:
    mass: float
    birth: float
    death: float
    depth: int


def reference_cascade(spec, alpha, cutoff, seed, max_nodes=2 ** 22):
    """Depth-first cascade where each tree node owns a derived generator.

    Node randomness is keyed by the node's path from the root (child index
    at each split), so two runs with the same seed but different cutoffs
    realize nested subtrees of one and the same infinite tree: lowering the
    cutoff only appends nodes, never changes shared ones.  Returns the list
    of split NodeRecords (one per processed fragment).
    """
    if not alpha < 0.0:
        raise ConfigError("cascade needs a negative self-similarity index")
    rate_total = total_mass(spec)
    binary = spec.variant == BINARY_DENSITY
    if not binary:
        cum_w, parts_flat, offsets, sizes, _ = atom_arrays(spec)
    records = []
    stack = [(1.0, 0.0, mix_seed(seed, 0), 0)]
    while stack:
        mass, birth, node_seed, depth = stack.pop()
        if len(records) >= max_nodes:
            raise NumericalFailure("reference cascade exceeded max_nodes")
        rng = _generator(node_seed)
        wait = -math.log1p(-rng.random()) / (rate_total * mass ** alpha)
        death = birth + wait
        if binary:
            s1 = float(split_icdf(spec, rng.random()))
            s1 = min(max(s1, 0.5), 1.0 - 1e-15)
            parts = (s1, 1.0 - s1)
        else:
            if len(sizes) == 1:
                j = 0
            else:
                j = int(np.searchsorted(cum_w, rng.random(), side="right"))
                j = min(j, len(sizes) - 1)
            parts = tuple(parts_flat[offsets[j]:offsets[j] + sizes[j]])
        records.append(NodeRecord(mass=mass, birth=birth, death=death,
                                  depth=depth))
        for i, frac in enumerate(parts):
            child_mass = mass * frac
            if child_mass >= cutoff:
                stack.append((child_mass, death,
                              mix_seed(node_seed, i + 1), depth + 1))
    return records


def extinction_from_records(records, cutoff):
    """Extinction estimate of the subtree of fragments at or above a coarser
    cutoff; the pathwise coupling check compares this across cutoffs."""
    best = 0.0
    for rec in records:
        if rec.mass >= cutoff and rec.death > best:
            best = rec.death
    return best
