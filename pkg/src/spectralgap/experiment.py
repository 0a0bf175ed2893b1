"""End-to-end detection experiments: ingest -> spectrum -> adjust/embed ->
score -> metrics, with per-stage timing and deterministic, diffable
report files.

The main report JSON and the per-graph score CSV are byte-deterministic
for a fixed seed; wall-clock timings go to a separate ``*.timings.json``
sidecar so rerunning with the same seed reproduces the report bytes
exactly. ``read_report`` merges the sidecar back in when present.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from spectralgap import metrics
from spectralgap.adjust import AdjustConfig, CombineMode, GapMode, Projection, spectral_gap
from spectralgap.datasets import (GraphCollection, TEST, TRAIN, VAL,
                                  parse_tu_dataset, split_id_ood)
from spectralgap.detect import (DistLabel, Orientation, ScoredSample,
                                choose_tau, lof_scores, ssd_scores)
from spectralgap.eigen import LanczosConfig, lanczos_top_k
from spectralgap.embed import (Activation, EmbedConfig, FeatureInit,
                               MessagePassingEmbedder, Readout, _feature_dim)
from spectralgap.graphs import LaplacianVariant, laplacian
from spectralgap.synth import (EnsembleSpec, ErdosRenyi, RandomRegular,
                               Rewired, SBM, generate)
from spectralgap.util import derive_seed, parallel_map

_SPLIT_SALT, _EIG_SALT, _WEIGHT_SALT = 71, 73, 79

REPORT_FORMAT = "spectralgap-report-v1"


@dataclass
class EvalReport:
    auc: float
    aupr: float
    fpr95: float
    counts: tuple[int, int]  # (num_id, num_ood) in the scored test set
    runtime_ms: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class ScorerConfig:
    kind: str = "ssd"  # ssd | lof | gap_threshold
    k_neighbors: int = 20

    def validate(self) -> None:
        if self.kind not in ("ssd", "lof", "gap_threshold"):
            raise ValueError(f"unknown scorer kind {self.kind!r}")
        if self.kind == "lof" and self.k_neighbors < 1:
            raise ValueError(f"k_neighbors must be >= 1, got {self.k_neighbors}")


@dataclass(frozen=True)
class DataSource:
    """Either a TU dataset on disk or a synthetic ensemble spec."""

    tu_dir: str | None = None
    tu_name: str | None = None
    ensemble: EnsembleSpec | None = None

    def validate(self) -> None:
        has_tu = self.tu_dir is not None and self.tu_name is not None
        if has_tu == (self.ensemble is not None):
            raise ValueError("data source needs either tu_dir+tu_name or an ensemble spec")

    def load(self) -> GraphCollection:
        self.validate()
        if self.ensemble is not None:
            return generate(self.ensemble)
        return parse_tu_dataset(self.tu_dir, self.tu_name)


@dataclass(frozen=True)
class ExperimentConfig:
    id_source: DataSource
    ood_source: DataSource
    name: str = "experiment"
    variant: LaplacianVariant = LaplacianVariant.UNNORMALIZED
    lanczos: LanczosConfig = LanczosConfig()
    adjust: AdjustConfig = AdjustConfig()
    embed: EmbedConfig = EmbedConfig()
    scorer: ScorerConfig = ScorerConfig()
    master_seed: int = 0
    threads: int = 1


# --------------------------------------------------------------------------
# config (de)serialization; every field has a documented default
# --------------------------------------------------------------------------

def ensemble_to_dict(spec: EnsembleSpec) -> dict:
    m = spec.model
    if isinstance(m, ErdosRenyi):
        model = {"model": "er", "n": m.n, "p": m.p}
    elif isinstance(m, SBM):
        model = {"model": "sbm", "block_sizes": list(m.block_sizes),
                 "p_in": m.p_in, "p_out": m.p_out}
    elif isinstance(m, RandomRegular):
        model = {"model": "regular", "n": m.n, "d": m.d}
    elif isinstance(m, Rewired):
        model = {"model": "rewired", "base": ensemble_to_dict(m.base),
                 "rewire_fraction": m.rewire_fraction}
    else:
        raise ValueError(f"unknown model {m!r}")
    model["count"] = spec.count
    model["seed"] = spec.seed
    return model


def ensemble_from_dict(data: dict, default_seed: int = 0) -> EnsembleSpec:
    kind = data.get("model", "er")
    if kind == "er":
        model = ErdosRenyi(int(data["n"]), float(data["p"]))
    elif kind == "sbm":
        model = SBM(tuple(int(b) for b in data["block_sizes"]),
                    float(data["p_in"]), float(data["p_out"]))
    elif kind == "regular":
        model = RandomRegular(int(data["n"]), int(data["d"]))
    elif kind == "rewired":
        model = Rewired(ensemble_from_dict(data["base"], default_seed),
                        float(data["rewire_fraction"]))
    else:
        raise ValueError(f"unknown ensemble model {kind!r}")
    seed = data.get("seed")
    return EnsembleSpec(model, int(data.get("count", 0)),
                        default_seed if seed is None else int(seed))


def _source_to_dict(source: DataSource) -> dict:
    if source.ensemble is not None:
        return ensemble_to_dict(source.ensemble)
    return {"tu_dir": source.tu_dir, "tu_name": source.tu_name}


def _source_from_dict(data: dict, default_seed: int) -> DataSource:
    if "tu_dir" in data or "tu_name" in data:
        return DataSource(tu_dir=data.get("tu_dir"), tu_name=data.get("tu_name"))
    return DataSource(ensemble=ensemble_from_dict(data, default_seed))


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return {
        "name": cfg.name,
        "id_source": _source_to_dict(cfg.id_source),
        "ood_source": _source_to_dict(cfg.ood_source),
        "variant": cfg.variant.value,
        "lanczos": {"k": cfg.lanczos.k, "tol": cfg.lanczos.tol,
                    "max_iter": cfg.lanczos.max_iter, "seed": cfg.lanczos.seed,
                    "full_reorth": cfg.lanczos.full_reorth},
        "adjust": {"gap_mode": cfg.adjust.gap_mode.value,
                   "combine_mode": cfg.adjust.combine_mode.value,
                   "num_eigenpairs": cfg.adjust.num_eigenpairs,
                   "projection": cfg.adjust.projection.value,
                   "projection_seed": cfg.adjust.projection_seed},
        "embed": {"num_layers": cfg.embed.num_layers,
                  "hidden_dim": cfg.embed.hidden_dim,
                  "weight_seed": cfg.embed.weight_seed,
                  "activation": cfg.embed.activation.value,
                  "readout": cfg.embed.readout.value,
                  "adjust_position": cfg.embed.adjust_position,
                  "feature_init": cfg.embed.feature_init.value,
                  "max_degree": cfg.embed.max_degree},
        "scorer": {"kind": cfg.scorer.kind, "k_neighbors": cfg.scorer.k_neighbors},
        "master_seed": cfg.master_seed,
        "threads": cfg.threads,
    }


def config_from_dict(data: dict) -> ExperimentConfig:
    master = int(data.get("master_seed", 0))
    lz = data.get("lanczos", {})
    adj = data.get("adjust", {})
    emb = data.get("embed", {})
    sc = data.get("scorer", {})
    position = emb.get("adjust_position")
    if isinstance(position, str) and position != "output":
        position = int(position)
    return ExperimentConfig(
        name=data.get("name", "experiment"),
        id_source=_source_from_dict(data["id_source"], derive_seed(master, 101)),
        ood_source=_source_from_dict(data["ood_source"], derive_seed(master, 202)),
        variant=LaplacianVariant(data.get("variant", "unnormalized")),
        lanczos=LanczosConfig(
            k=int(lz.get("k", 2)),
            tol=float(lz.get("tol", 1e-8)),
            max_iter=None if lz.get("max_iter") is None else int(lz["max_iter"]),
            seed=int(lz.get("seed", 0)),
            full_reorth=bool(lz.get("full_reorth", True)),
        ),
        adjust=AdjustConfig(
            gap_mode=GapMode(adj.get("gap_mode", "scaled_subtraction")),
            combine_mode=CombineMode(adj.get("combine_mode", "subtraction")),
            num_eigenpairs=int(adj.get("num_eigenpairs", 2)),
            projection=Projection(adj.get("projection", "eigenvector")),
            projection_seed=int(adj.get("projection_seed", 0)),
        ),
        embed=EmbedConfig(
            num_layers=int(emb.get("num_layers", 3)),
            hidden_dim=int(emb.get("hidden_dim", 32)),
            weight_seed=int(emb.get("weight_seed", 0)),
            activation=Activation(emb.get("activation", "relu")),
            readout=Readout(emb.get("readout", "mean")),
            adjust_position=position,
            feature_init=FeatureInit(emb.get("feature_init", "degree_scalar")),
            max_degree=int(emb.get("max_degree", 10)),
        ),
        scorer=ScorerConfig(kind=sc.get("kind", "ssd"),
                            k_neighbors=int(sc.get("k_neighbors", 20))),
        master_seed=master,
        threads=int(data.get("threads", 1)),
    )


def load_config(path) -> ExperimentConfig:
    return config_from_dict(json.loads(Path(path).read_text()))


# --------------------------------------------------------------------------
# pipeline
# --------------------------------------------------------------------------

class _StageClock:
    def __init__(self):
        self.times: dict[str, float] = {}

    def run(self, stage: str, fn):
        start = time.perf_counter()
        result = fn()
        self.times[stage] = (time.perf_counter() - start) * 1e3
        return result


def run_experiment(cfg: ExperimentConfig):
    """Execute the full pipeline; returns (EvalReport, scored samples).

    Deterministic given the config (including master_seed); any stage
    failure is re-raised with the stage name attached.
    """
    cfg.scorer.validate()
    clock = _StageClock()

    def staged(stage, fn):
        try:
            return clock.run(stage, fn)
        except Exception as exc:
            raise RuntimeError(f"experiment stage {stage!r} failed: {exc}") from exc

    id_coll = staged("data", cfg.id_source.load)
    ood_coll = staged("data_ood", cfg.ood_source.load)
    working = staged("split", lambda: split_id_ood(
        id_coll, ood_coll, derive_seed(cfg.master_seed, _SPLIT_SALT)))

    needs_spectra = (cfg.embed.adjust_position is not None
                     or cfg.scorer.kind == "gap_threshold")

    def solve_all():
        if not needs_spectra:
            return [None] * len(working)

        def solve(item):
            index, graph = item
            lz = replace(cfg.lanczos,
                         seed=derive_seed(cfg.master_seed, _EIG_SALT, index))
            return lanczos_top_k(laplacian(graph, cfg.variant), lz)

        return parallel_map(solve, enumerate(working.graphs), cfg.threads)

    spectra = staged("spectrum", solve_all)

    test_idx = working.indices_where(split=TEST)
    test_labels = [working.dist_label[i] for i in test_idx]

    if cfg.scorer.kind == "gap_threshold":
        def gap_scores():
            gaps = {i: spectral_gap(spectra[i])
                    for i in range(len(working)) if spectra[i] is not None}
            val_id = [gaps[i] for i in working.indices_where(split=VAL, dist=DistLabel.ID)]
            val_ood = [gaps[i] for i in working.indices_where(split=VAL, dist=DistLabel.OOD)]
            tau, orientation, _ = choose_tau(val_id, val_ood)
            sign = -1.0 if orientation is Orientation.GAP_HIGH_MEANS_ID else 1.0
            return [sign * gaps[i] for i in test_idx]

        scores = staged("score", gap_scores)
        clock.times["embed"] = 0.0
    else:
        weight_cfg = replace(
            cfg.embed, weight_seed=derive_seed(cfg.master_seed, _WEIGHT_SALT,
                                               cfg.embed.weight_seed))

        def embed_all():
            in_dim = _feature_dim(weight_cfg, working.graphs[0])
            adjust_cfg = cfg.adjust if weight_cfg.adjust_position is not None else None
            embedder = MessagePassingEmbedder(weight_cfg, in_dim, adjust_cfg)

            def one(item):
                index, graph = item
                return embedder.embed(graph, spectra[index], graph_id=index).vector

            return parallel_map(one, enumerate(working.graphs), cfg.threads)

        vectors = staged("embed", embed_all)

        def run_scorer():
            train = [vectors[i] for i in working.indices_where(split=TRAIN)]
            test = [vectors[i] for i in test_idx]
            if cfg.scorer.kind == "ssd":
                return list(ssd_scores(train, test))
            return list(lof_scores(train, test, cfg.scorer.k_neighbors))

        scores = staged("score", run_scorer)

    samples = [ScoredSample(float(s), label, graph_id=f"g{index}")
               for s, label, index in zip(scores, test_labels, test_idx)]

    def compute_metrics():
        return (metrics.auc(samples), metrics.aupr(samples),
                metrics.fpr_at_95tpr(samples))

    auc_value, aupr_value, fpr_value = staged("metrics", compute_metrics)
    num_ood = sum(1 for s in samples if s.true_label is DistLabel.OOD)
    report = EvalReport(
        auc=float(auc_value),
        aupr=float(aupr_value),
        fpr95=float(fpr_value),
        counts=(len(samples) - num_ood, num_ood),
        runtime_ms=dict(clock.times),
    )
    return report, samples


# --------------------------------------------------------------------------
# report files
# --------------------------------------------------------------------------

def _timings_path(path: Path) -> Path:
    return path.with_name(path.stem + ".timings.json")


def scores_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".scores.csv")


def write_report(report: EvalReport, path, samples=None, config: dict | None = None) -> None:
    """Write the deterministic report JSON (+ score CSV) and the volatile
    timing sidecar."""
    path = Path(path)
    payload = {
        "format": REPORT_FORMAT,
        "config": config,
        "counts": {"num_id": report.counts[0], "num_ood": report.counts[1]},
        "metrics": {"auc": report.auc, "aupr": report.aupr, "fpr95": report.fpr95},
    }
    path.write_text(json.dumps(payload, indent=2) + "\n")
    _timings_path(path).write_text(
        json.dumps({"runtime_ms": report.runtime_ms}, indent=2) + "\n")
    if samples is not None:
        rows = ["graph_id,label,score"]
        rows += [f"{s.graph_id},{s.true_label.value},{repr(s.score)}" for s in samples]
        scores_path(path).write_text("\n".join(rows) + "\n")


def read_report(path):
    """Reconstruct an EvalReport (timings merged from the sidecar if present)."""
    path = Path(path)
    payload = json.loads(path.read_text())
    if payload.get("format") != REPORT_FORMAT:
        raise ValueError(f"{path.name}: not a {REPORT_FORMAT} file")
    runtime = {}
    sidecar = _timings_path(path)
    if sidecar.exists():
        runtime = json.loads(sidecar.read_text())["runtime_ms"]
    return EvalReport(
        auc=payload["metrics"]["auc"],
        aupr=payload["metrics"]["aupr"],
        fpr95=payload["metrics"]["fpr95"],
        counts=(payload["counts"]["num_id"], payload["counts"]["num_ood"]),
        runtime_ms=runtime,
    )
