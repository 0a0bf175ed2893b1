"""Spectral-gap analysis of graph Laplacians and post-hoc OOD detection.

Core pieces: a sparse Lanczos eigensolver for the top of the spectrum
(compiled CSR kernel with a pure-numpy fallback), the gap-scaled feature
adjustment operator with its ablation variants, detection scoring
(Mahalanobis, LOF, gap threshold), evaluation metrics, random-graph
ensembles for distributional experiments, and a CLI tying it together.
"""

from spectralgap.adjust import (AdjustConfig, CombineMode, GapMode, Projection,
                                adjust_features, spectral_gap, spectral_gap_ratio)
from spectralgap.datasets import (EmbeddingTable, GraphCollection,
                                  export_embeddings, import_embeddings,
                                  parse_tu_dataset, split_id_ood,
                                  write_tu_dataset)
from spectralgap.detect import (DistLabel, GapDetectorConfig, Orientation,
                                ScoredSample, choose_tau, gap_detect,
                                lof_scores, ssd_scores)
from spectralgap.eigen import (LanczosConfig, SpectralSummary, dense_eig,
                               lanczos_top_k)
from spectralgap.embed import (Activation, EmbedConfig, FeatureInit,
                               GraphEmbedding, MessagePassingEmbedder, Readout,
                               embed, init_node_features)
from spectralgap.experiment import (DataSource, EvalReport, ExperimentConfig,
                                    ScorerConfig, read_report, run_experiment,
                                    write_report)
from spectralgap.graphs import (Graph, GraphConstructionError, LaplacianVariant,
                                SparseSymMatrix, build_graph, laplacian, spmv)
from spectralgap.metrics import auc, aupr, fpr_at_95tpr, make_samples
from spectralgap.synth import (D1Check, EnsembleSpec, ErdosRenyi,
                               GainReport, GapDistributionReport, RandomRegular,
                               Rewired, SBM, check_d1, gap_distribution,
                               generate, separation_gain_experiment)

__version__ = "0.1.0"
