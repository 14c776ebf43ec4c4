"""Monte Carlo trials, empirical distributions, and comparison experiments.

A trial samples a random generating set, runs the distance-map search, and
records the diameter together with its rescaled value X = diam / |G^ab|^(1/k).
Lattice-model trials instead sample a random determinant-one congruence
lattice and record its certified l1 torus diameter.  Batches are resumable:
records stream to JSONL as they complete and a rerun with the same config
picks up after the last finished trial, which the per-trial seed derivation
makes safe.
"""

from __future__ import annotations

import dataclasses
import json
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import EnclosureBudgetError, PreconditionError, SamplingBudgetError
from .groups import GeneratingSet, GroupSpec, UNITRIANGULAR, generates
from .lattice import sample_haar_proxy, torus_diameter_l1
from .metrics import (
    DistanceMap,
    bfs_distance_map,
    diameter,
    quotient_diameter,
    subgroup_diameter,
)

REJECTION_BUDGET = 10_000

__all__ = [
    "TrialConfig",
    "TrialRecord",
    "EmpiricalDistribution",
    "sample_generating_set",
    "run_trials",
    "ks_distance",
    "compare_experiment",
    "CompareReport",
    "filtration_scaling_experiment",
    "parse_config_text",
]


def sample_generating_set(
    spec: GroupSpec,
    k: int,
    mode: str,
    rng: np.random.Generator,
) -> GeneratingSet:
    """Random generating set with k positive generators.

    "iid-generators": k independent uniform elements, redrawn until they
    generate.  "uniform-symmetric-subset": uniform over symmetric subsets
    of size 2k that generate; rejection sampling is exactly uniform because
    every such subset is hit by the same number (2^k k!) of ordered draws.
    """
    if k < 1:
        raise PreconditionError(f"need k >= 1, got {k}")
    if k <= spec.rank:
        warnings.warn(
            f"k={k} does not exceed the rank {spec.rank}; the limit theorems assume k > rank",
            stacklevel=2,
        )
    order = spec.order
    for _ in range(REJECTION_BUDGET):
        draw = [int(x) for x in rng.integers(0, order, size=k)]
        if mode == "iid-generators":
            if generates(spec, draw):
                return GeneratingSet.from_positives(spec, tuple(draw))
        elif mode == "uniform-symmetric-subset":
            gens = GeneratingSet.from_positives(spec, tuple(draw))
            if (
                len(set(draw)) == k
                and len(gens.symmetric) == 2 * k
                and generates(spec, draw)
            ):
                return gens
        else:
            raise PreconditionError(f"unknown sampling mode {mode!r}")
    raise SamplingBudgetError(
        f"no generating set found in {REJECTION_BUDGET} draws (spec {spec.descriptor()}, k={k})"
    )


@dataclass(frozen=True)
class TrialConfig:
    """One Monte Carlo batch: what to sample and how many times."""

    kind: str = "group"  # "group" or "haar-lattice"
    descriptor: str = ""  # group descriptor when kind == "group"
    k: int = 3
    n_trials: int = 100
    mode: str = "iid-generators"
    seed: int = 0
    layers: bool = False
    q: int = 1_000_003  # modulus when kind == "haar-lattice"
    eps: float = 1e-2
    mem_cap_bytes: Optional[int] = None

    def cache_key(self) -> str:
        payload = dataclasses.asdict(self)
        payload.pop("n_trials")
        blob = json.dumps(payload, sort_keys=True)
        import hashlib

        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class TrialRecord:
    """Result of a single trial; value is the rescaled sample X."""

    trial: int
    kind: str
    descriptor: str
    k: int
    mode: str
    seed: int
    diam: Optional[int]
    diam_ab: Optional[int]
    x: float
    x_ab: Optional[float]
    eps: Optional[float]
    layer_diams: Optional[Dict[int, int]] = None
    enclosure: Optional[Tuple[float, float]] = None
    seconds: float = 0.0

    def to_json(self) -> str:
        # wall time stays out of the line so identical seeds give
        # byte-identical files; timings go to a sidecar.
        payload = {
            "trial": self.trial,
            "kind": self.kind,
            "descriptor": self.descriptor,
            "k": self.k,
            "mode": self.mode,
            "seed": self.seed,
            "diam": self.diam,
            "diam_ab": self.diam_ab,
            "x": self.x,
            "x_ab": self.x_ab,
            "eps": self.eps,
            "layer_diams": (
                {str(i): v for i, v in self.layer_diams.items()}
                if self.layer_diams is not None
                else None
            ),
            "enclosure": list(self.enclosure) if self.enclosure else None,
        }
        return json.dumps(payload, sort_keys=True)

    @staticmethod
    def from_json(line: str) -> "TrialRecord":
        d = json.loads(line)
        return TrialRecord(
            trial=d["trial"],
            kind=d["kind"],
            descriptor=d["descriptor"],
            k=d["k"],
            mode=d["mode"],
            seed=d["seed"],
            diam=d["diam"],
            diam_ab=d["diam_ab"],
            x=d["x"],
            x_ab=d["x_ab"],
            eps=d["eps"],
            layer_diams=(
                {int(i): v for i, v in d["layer_diams"].items()}
                if d.get("layer_diams")
                else None
            ),
            enclosure=tuple(d["enclosure"]) if d.get("enclosure") else None,
        )


def _trial_seed(master: int, t: int) -> int:
    ss = np.random.SeedSequence(master, spawn_key=(t,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _run_group_trial(config: TrialConfig, t: int) -> TrialRecord:
    spec = GroupSpec.from_descriptor(config.descriptor)
    seed = _trial_seed(config.seed, t)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(t,)))
    t0 = time.perf_counter()
    gens = sample_generating_set(spec, config.k, config.mode, rng)
    kwargs = {}
    if config.mem_cap_bytes:
        kwargs["mem_cap_bytes"] = config.mem_cap_bytes
    dm = bfs_distance_map(spec, gens, **kwargs)
    d = diameter(dm)
    ab = spec.abelianisation
    abdm = bfs_distance_map(ab, gens.projected())
    d_ab = diameter(abdm)
    rescale = float(ab.order) ** (1.0 / config.k)
    layer_diams = None
    if config.layers:
        layer_diams = {
            i: subgroup_diameter(dm, i) for i in range(1, spec.nil_class + 2)
        }
    seconds = time.perf_counter() - t0
    return TrialRecord(
        trial=t,
        kind="group",
        descriptor=config.descriptor,
        k=config.k,
        mode=config.mode,
        seed=seed,
        diam=d,
        diam_ab=d_ab,
        x=d / rescale,
        x_ab=d_ab / rescale,
        eps=(d - d_ab) / rescale,
        layer_diams=layer_diams,
        seconds=seconds,
    )


def _run_lattice_trial(config: TrialConfig, t: int) -> TrialRecord:
    seed = _trial_seed(config.seed, t)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(t,)))
    t0 = time.perf_counter()
    rl = sample_haar_proxy(config.k, config.q, rng)
    try:
        lo, hi = torus_diameter_l1(rl, eps=config.eps)
    except EnclosureBudgetError as exc:
        # budget errors are recorded, not fatal: the carried enclosure is
        # still valid, just wider than requested, and the record shows it
        lo, hi = exc.lo, exc.hi
    seconds = time.perf_counter() - t0
    return TrialRecord(
        trial=t,
        kind="haar-lattice",
        descriptor=f"haar:k={config.k},q={config.q}",
        k=config.k,
        mode="haar-proxy",
        seed=seed,
        diam=None,
        diam_ab=None,
        x=(lo + hi) / 2.0,
        x_ab=None,
        eps=None,
        enclosure=(lo, hi),
        seconds=seconds,
    )


def run_trials(
    config: TrialConfig,
    out_jsonl: Optional[Path] = None,
    cache_dir: Optional[Path] = None,
) -> List[TrialRecord]:
    """Run (or resume) a batch; trial t depends only on (master seed, t)."""
    records: List[TrialRecord] = []
    cache_path: Optional[Path] = None
    if cache_dir is not None:
        cache_dir = Path(cache_dir)
        cache_dir.mkdir(parents=True, exist_ok=True)
        cache_path = cache_dir / f"trials-{config.cache_key()}.jsonl"
        if cache_path.exists():
            with cache_path.open() as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        records.append(TrialRecord.from_json(line))
            records = records[: config.n_trials]

    runner = _run_group_trial if config.kind == "group" else _run_lattice_trial
    if config.kind not in ("group", "haar-lattice"):
        raise PreconditionError(f"unknown trial kind {config.kind!r}")

    cache_fh = cache_path.open("a") if cache_path is not None else None
    timing_fh = (
        cache_path.with_suffix(".timings.txt").open("a") if cache_path is not None else None
    )
    try:
        for t in range(len(records), config.n_trials):
            rec = runner(config, t)
            records.append(rec)
            if cache_fh is not None:
                cache_fh.write(rec.to_json() + "\n")
                cache_fh.flush()
            if timing_fh is not None:
                timing_fh.write(f"{t}\t{rec.seconds:.3f}\n")
                timing_fh.flush()
    finally:
        if cache_fh is not None:
            cache_fh.close()
        if timing_fh is not None:
            timing_fh.close()

    if out_jsonl is not None:
        out_jsonl = Path(out_jsonl)
        out_jsonl.parent.mkdir(parents=True, exist_ok=True)
        with out_jsonl.open("w") as fh:
            for rec in records:
                fh.write(rec.to_json() + "\n")
        timings = out_jsonl.with_suffix(".timings.txt")
        with timings.open("w") as fh:
            for rec in records:
                fh.write(f"{rec.trial}\t{rec.seconds:.3f}\n")
    return records


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Sorted sample with exact step-function CDF."""

    values: np.ndarray  # sorted ascending, float64

    @staticmethod
    def from_samples(samples: Sequence[float]) -> "EmpiricalDistribution":
        arr = np.sort(np.asarray(list(samples), dtype=np.float64))
        if arr.size == 0:
            raise PreconditionError("empirical distribution needs at least one sample")
        return EmpiricalDistribution(values=arr)

    @property
    def count(self) -> int:
        return int(self.values.size)

    def cdf(self, x: float) -> float:
        return float(np.searchsorted(self.values, x, side="right")) / self.count

    def quantile(self, p: float) -> float:
        if not 0.0 <= p <= 1.0:
            raise PreconditionError("quantile level must be in [0, 1]")
        idx = min(max(int(np.ceil(p * self.count)) - 1, 0), self.count - 1)
        return float(self.values[idx])


def ks_distance(a: EmpiricalDistribution, b: EmpiricalDistribution) -> float:
    """Exact sup distance between the two empirical CDFs.

    The sup over the real line is attained just after a sample point, so
    evaluating both right-continuous CDFs at the merged sample set is exact.
    """
    xs = np.concatenate([a.values, b.values])
    xs = np.unique(xs)
    fa = np.searchsorted(a.values, xs, side="right") / a.count
    fb = np.searchsorted(b.values, xs, side="right") / b.count
    return float(np.abs(fa - fb).max())


QUANTILE_LEVELS = (0.05, 0.25, 0.50, 0.75, 0.95)


@dataclass(frozen=True)
class CompareReport:
    """KS comparison of two rescaled-diameter samples."""

    ks: float
    count_a: int
    count_b: int
    quantiles_a: Dict[float, float]
    quantiles_b: Dict[float, float]
    dist_a: EmpiricalDistribution
    dist_b: EmpiricalDistribution

    def cdf_table(self, side: str) -> List[Tuple[float, float]]:
        dist = self.dist_a if side == "a" else self.dist_b
        n = dist.count
        return [(float(v), (i + 1) / n) for i, v in enumerate(dist.values)]

    def write_cdf_tsv(self, path: Path, side: str) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w") as fh:
            fh.write("value\tcdf\n")
            for v, f in self.cdf_table(side):
                fh.write(f"{v:.10g}\t{f:.10g}\n")


def compare_experiment(
    config_a: TrialConfig,
    config_b: TrialConfig,
    cache_dir: Optional[Path] = None,
) -> CompareReport:
    recs_a = run_trials(config_a, cache_dir=cache_dir)
    recs_b = run_trials(config_b, cache_dir=cache_dir)
    dist_a = EmpiricalDistribution.from_samples([r.x for r in recs_a])
    dist_b = EmpiricalDistribution.from_samples([r.x for r in recs_b])
    return CompareReport(
        ks=ks_distance(dist_a, dist_b),
        count_a=dist_a.count,
        count_b=dist_b.count,
        quantiles_a={p: dist_a.quantile(p) for p in QUANTILE_LEVELS},
        quantiles_b={p: dist_b.quantile(p) for p in QUANTILE_LEVELS},
        dist_a=dist_a,
        dist_b=dist_b,
    )


@dataclass(frozen=True)
class FiltrationScalingRow:
    q: int
    i: int
    mean_diam: float
    max_diam: int
    mean_ratio: float
    max_ratio: float


def filtration_scaling_experiment(
    qs: Sequence[int],
    d: int,
    k: int,
    n_trials: int,
    seed: int = 0,
    cache_dir: Optional[Path] = None,
) -> Tuple[List[FiltrationScalingRow], Dict[int, float]]:
    """Per-layer subgroup diameters across a q grid, with log-log slopes.

    For layer i the diameters are also reported relative to q^((d-1)/(i k)),
    the candidate scaling exponent.  Output is exploratory: the slopes are
    reported, not asserted.
    """
    rows: List[FiltrationScalingRow] = []
    spec0 = GroupSpec.unitriangular(int(qs[0]), d)
    if spec0.family != UNITRIANGULAR:
        raise PreconditionError("filtration scaling needs a unitriangular family")
    c = spec0.nil_class
    means: Dict[int, List[Tuple[float, float]]] = {i: [] for i in range(1, c + 1)}
    for q in qs:
        config = TrialConfig(
            kind="group",
            descriptor=GroupSpec.unitriangular(int(q), d).descriptor(),
            k=k,
            n_trials=n_trials,
            seed=seed,
            layers=True,
        )
        recs = run_trials(config, cache_dir=cache_dir)
        for i in range(1, c + 1):
            diams = [r.layer_diams[i] for r in recs]
            scale = float(q) ** ((d - 1) / (i * k))
            ratios = [v / scale for v in diams]
            rows.append(
                FiltrationScalingRow(
                    q=int(q),
                    i=i,
                    mean_diam=float(np.mean(diams)),
                    max_diam=int(np.max(diams)),
                    mean_ratio=float(np.mean(ratios)),
                    max_ratio=float(np.max(ratios)),
                )
            )
            if np.mean(diams) > 0:
                means[i].append((float(q), float(np.mean(diams))))
    slopes: Dict[int, float] = {}
    for i, pts in means.items():
        if len(pts) >= 2:
            lx = np.log([p[0] for p in pts])
            ly = np.log([p[1] for p in pts])
            slopes[i] = float(np.polyfit(lx, ly, 1)[0])
    return rows, slopes


def parse_config_text(text: str) -> TrialConfig:
    """Flat key=value config lines (# comments allowed) -> TrialConfig."""
    fields: Dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise PreconditionError(f"bad config line {line!r}")
        key, val = line.split("=", 1)
        fields[key.strip()] = val.strip()
    kwargs: Dict[str, object] = {}
    if "kind" in fields:
        kwargs["kind"] = fields["kind"]
    if "spec" in fields:
        kwargs["descriptor"] = fields["spec"]
    for key, conv in (
        ("k", int),
        ("n", int),
        ("seed", int),
        ("q", int),
        ("eps", float),
        ("mem_cap_bytes", int),
    ):
        if key in fields:
            name = "n_trials" if key == "n" else key
            kwargs[name] = conv(fields[key])
    if "mode" in fields:
        kwargs["mode"] = fields["mode"]
    if "layers" in fields:
        kwargs["layers"] = fields["layers"].lower() in ("1", "true", "yes", "on")
    return TrialConfig(**kwargs)
