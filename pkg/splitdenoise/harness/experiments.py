"""
Harness scenarios. Each returns report rows and is a pure function of its
configuration: every random draw comes from an `RngState` keyed by
(seed, η index, purpose), and methods compared in one cell share their
noise, denoiser-training and classifier streams.
"""

# pylint: disable=too-many-arguments, too-many-locals

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from time import perf_counter
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.rng import RngState
from ..core.tensor import Array
from ..denoiser.model import DenoiserWeights
from ..denoiser.registry import (
    load_registry,
    partition_by_correlation,
    save_registry,
    select_denoiser,
    train_registry,
)
from ..denoiser.training import (
    TrainingBatch,
    collect_pairs,
    denoise_pairs,
    finetune_denoiser,
    row_cosines,
    train_denoiser,
)
from ..evaluation.attacks import attribute_inference, inversion_attack
from ..evaluation.classifier import accuracy, predict_scores, roc_auc, train_classifier
from ..evaluation.entropy import mi_estimate
from ..evaluation.geometry import geometry_metrics
from ..exceptions import DimensionError
from ..model.encoder import (
    EncoderWeights,
    encode_batch,
    encode_sequences,
    finetune_encoder,
    pad_sequences,
)
from ..model.vocab import VocabEmbeddingTable, embed_tokens
from ..privacy.baselines import text2text_privatize, tok_emb_priv_baseline
from ..privacy.mechanism import (
    ClipBound,
    clip_privatized,
    effective_noise,
    privatization_correlation,
    privatize,
    sample_noise_matrix,
)
from ..protocol.client import Session, client_request
from ..protocol.accounting import payload_accounting
from ..protocol.server import FrameServer
from ..protocol.transport import InProcessTransport
from ..schemas.evaluation import ClassifierConfig
from ..schemas.experiment import ExperimentConfig, Method
from ..schemas.privacy import PrivacyParams
from ..schemas.report import ReportRow
from .corpus import SyntheticCorpus, build_vocabulary, draw_corpus
from .reports import make_rows
from .similarity import corpus_similarity

log = logging.getLogger(__name__)

CHUNK = 256

# per-cell streams are keyed (eta index, purpose), corpus streams (purpose,)
NOISE, DENOISER, CLASSIFIER, ATTACK = 0, 1, 2, 3
PUBLIC_CORPUS, TASK_CORPUS, FRESH_CORPUS, SHIFTED_CORPUS, COMPARE_CORPUS, ENCODER_UPDATE = range(6)


@dataclass(frozen=True)
class Workspace:
    """The model and corpora one seed of a scenario works on."""

    config: ExperimentConfig
    seed: int
    table: VocabEmbeddingTable
    encoder: EncoderWeights
    signal: Array
    public: SyntheticCorpus
    task: SyntheticCorpus

    def stream(self, eta_index: int, purpose: int) -> RngState:
        return RngState(self.seed, (eta_index, purpose))

    def session(self) -> Optional[Session]:
        """An in-process session, or None when the wire is bypassed."""

        if not self.config.wire_rounding:
            return None
        return Session(InProcessTransport(FrameServer(self.encoder)))


def prepare(config: ExperimentConfig, seed: int) -> Workspace:
    table, encoder, signal = build_vocabulary(config)
    return Workspace(
        config=config,
        seed=seed,
        table=table,
        encoder=encoder,
        signal=signal,
        public=draw_corpus(config, signal, RngState(seed, (PUBLIC_CORPUS,))),
        task=draw_corpus(config, signal, RngState(seed, (TASK_CORPUS,))),
    )


def classifier_config(config: ExperimentConfig, seed: int) -> ClassifierConfig:
    return ClassifierConfig(
        epochs=config.classifier_epochs,
        learning_rate=config.classifier_learning_rate,
        batch_size=config.classifier_batch_size,
        seed=seed,
    )


def pair_features(a: Array, b: Array) -> Array:
    """Concatenated sentence embeddings of the two sides of a pair task."""

    left, right = np.atleast_2d(a), np.atleast_2d(b)
    if left.shape != right.shape:
        raise DimensionError(f"pair sides {left.shape} and {right.shape} differ")
    return np.concatenate([left, right], axis=1)


def eval_downstream(
    train_features: Array,
    train_labels: Array,
    test_features: Array,
    test_labels: Array,
    config: ClassifierConfig,
    rng: RngState,
) -> Dict[str, float]:
    """Train the downstream classifier and score it on held-out items."""

    if np.asarray(train_features).shape[1] != np.asarray(test_features).shape[1]:
        raise DimensionError("train and test embeddings differ in width")
    classifier = train_classifier(train_features, train_labels, config, rng)
    scores = predict_scores(classifier, test_features)
    return {"acc": accuracy(test_labels, scores), "auc": roc_auc(test_labels, scores)}


def fidelity(features: Array, clean: Array) -> Dict[str, float]:
    """Element-mean squared error and mean cosine against the clean embeddings."""

    return {
        "mse": float(np.mean((features - clean) ** 2)),
        "cos": float(np.mean(row_cosines(features, clean))),
    }


def server_embeddings(
    matrices: Sequence[Array], encoder: EncoderWeights, session: Optional[Session]
) -> Array:
    """
    Sentence embeddings the server returns for each token matrix: over the
    wire when a session is given, by direct batched encoding otherwise.
    """

    if session is not None:
        return np.stack([client_request(matrix, session).vector for matrix in matrices])
    outputs: List[Array] = []
    for start in range(0, len(matrices), CHUNK):
        batch, mask = pad_sequences(list(matrices[start : start + CHUNK]))
        outputs.append(encode_batch(batch, encoder, mask))
    return np.concatenate(outputs)


def privatized_views(
    ws: Workspace, corpus: SyntheticCorpus, params: PrivacyParams, rng: RngState
) -> Tuple[List[Array], List[Array]]:
    """Privatized token matrices and their effective noise, in corpus order."""

    bound = ClipBound.from_vocabulary(ws.table) if params.clip_enabled else None
    x_tildes: List[Array] = []
    noises: List[Array] = []
    for ids in corpus.sequences:
        x = embed_tokens(ids, ws.table)
        m = privatize(x, params.eta, rng)
        if bound is not None:
            m = clip_privatized(m, bound)
        x_tildes.append(m)
        noises.append(effective_noise(m, x))
    return x_tildes, noises


def denoised_embeddings(
    weights: DenoiserWeights, e_n: Array, x_tildes: List[Array], noises: List[Array]
) -> Array:
    x_batch, mask = pad_sequences(x_tildes)
    z_batch, _ = pad_sequences(noises)
    return denoise_pairs(weights, TrainingBatch(e_n, x_batch, z_batch, np.zeros_like(e_n), mask))


def train_cell_denoiser(
    ws: Workspace,
    eta: float,
    eta_index: int,
    clip: bool,
    encoder: Optional[EncoderWeights] = None,
    **overrides: object,
) -> DenoiserWeights:
    """A denoiser for one sweep cell, trained on the public corpus at (η, η)."""

    pairs = collect_pairs(
        ws.public.sequences,
        ws.table,
        encoder or ws.encoder,
        (eta, eta),
        ws.stream(eta_index, DENOISER),
        samples_per_sequence=ws.config.samples_per_sequence,
        clip=clip,
        round_noisy=ws.config.wire_rounding,
    )
    weights, _ = train_denoiser(pairs, ws.config.denoiser_config(seed=ws.seed, **overrides))
    return weights


def task_pairs(
    ws: Workspace, eta: float, eta_index: int, clip: bool, encoder: Optional[EncoderWeights] = None
) -> TrainingBatch:
    """Validation items from the task corpus, drawn from the cell's noise stream."""

    return collect_pairs(
        ws.task.sequences,
        ws.table,
        encoder or ws.encoder,
        (eta, eta),
        ws.stream(eta_index, NOISE),
        clip=clip,
        round_noisy=ws.config.wire_rounding,
    )


def downstream_rows(
    ws: Workspace,
    method: str,
    eta: float,
    eta_index: int,
    features: Array,
    clean: Array,
) -> List[ReportRow]:
    """acc, auc, mse and cos of one method's features in one cell."""

    config = ws.config
    train, test = ws.task.split(config.test_fraction)
    cut = len(train)
    metrics = eval_downstream(
        features[:cut],
        train.labels,
        features[cut:],
        test.labels,
        classifier_config(config, ws.seed),
        ws.stream(eta_index, CLASSIFIER),
    )
    metrics.update(fidelity(features, clean))
    return make_rows(config.scenario, method, eta, ws.seed, metrics)


def method_features(
    ws: Workspace, method: Method, eta: float, eta_index: int, clean: Array
) -> Array:
    """Task-corpus features for one method; every method replays the same noise stream."""

    config = ws.config
    noise = ws.stream(eta_index, NOISE)
    matrices = [embed_tokens(ids, ws.table) for ids in ws.task.sequences]

    if method == Method.NO_NOISE:
        return clean
    if method == Method.TOK_EMB_PRIV:
        sent = [tok_emb_priv_baseline(x, eta, noise) for x in matrices]
        return server_embeddings(sent, ws.encoder, ws.session())
    if method == Method.TEXT2TEXT:
        sent = [
            embed_tokens(text2text_privatize(x, ws.table, eta, noise), ws.table) for x in matrices
        ]
        return server_embeddings(sent, ws.encoder, ws.session())

    x_tildes, noises = privatized_views(ws, ws.task, config.privacy_params(eta), noise)
    e_n = server_embeddings(x_tildes, ws.encoder, ws.session())
    weights = train_cell_denoiser(ws, eta, eta_index, config.clip)
    return denoised_embeddings(weights, e_n, x_tildes, noises)


def has_control(config: ExperimentConfig) -> bool:
    return Method.NO_NOISE in config.methods and any(math.isinf(eta) for eta in config.etas)


def eta_sweep(config: ExperimentConfig) -> List[ReportRow]:
    """
    Downstream utility and embedding fidelity for every (seed, η, method)
    cell. Each seed also reports the clean-embedding control at η = inf
    under `no_noise`, whether or not the configured grid names it.
    """

    rows: List[ReportRow] = []
    for seed in config.seeds:
        ws = prepare(config, seed)
        clean = encode_sequences(ws.task.sequences, ws.table, ws.encoder)
        for eta_index, eta in enumerate(config.etas):
            for method in config.methods:
                features = method_features(ws, method, eta, eta_index, clean)
                rows.extend(downstream_rows(ws, method.value, eta, eta_index, features, clean))
            log.info("Sweep cell seed %s, eta %s done", seed, eta)
        if not has_control(config):
            control_index = len(config.etas)
            rows.extend(
                downstream_rows(ws, Method.NO_NOISE.value, math.inf, control_index, clean, clean)
            )
    return rows


def _denoiser_rows(
    ws: Workspace,
    method: str,
    eta: float,
    eta_index: int,
    weights: Optional[DenoiserWeights],
    pairs: TrainingBatch,
) -> List[ReportRow]:
    features = pairs.e_n if weights is None else denoise_pairs(weights, pairs)
    return downstream_rows(ws, method, eta, eta_index, features, pairs.e_c)


def ablation_server_denoise(config: ExperimentConfig) -> List[ReportRow]:
    """
    The client denoiser against a capacity-matched server-side variant that
    never sees the noise, and against no denoising at all.
    """

    rows: List[ReportRow] = []
    for seed in config.seeds:
        ws = prepare(config, seed)
        for eta_index, eta in enumerate(config.etas):
            pairs = task_pairs(ws, eta, eta_index, config.clip)
            client = train_cell_denoiser(ws, eta, eta_index, config.clip)
            server = train_cell_denoiser(ws, eta, eta_index, config.clip, include_noise=False)
            rows.extend(_denoiser_rows(ws, "server_denoise", eta, eta_index, server, pairs))
            rows.extend(_denoiser_rows(ws, Method.SND.value, eta, eta_index, client, pairs))
            rows.extend(_denoiser_rows(ws, "no_denoise", eta, eta_index, None, pairs))
    return rows


def ablation_clipping(config: ExperimentConfig) -> List[ReportRow]:
    """The full pipeline with and without norm clipping of privatized tokens."""

    rows: List[ReportRow] = []
    for seed in config.seeds:
        ws = prepare(config, seed)
        for eta_index, eta in enumerate(config.etas):
            for clip, method in ((True, "snd_clip"), (False, "snd_noclip")):
                pairs = task_pairs(ws, eta, eta_index, clip)
                weights = train_cell_denoiser(ws, eta, eta_index, clip)
                rows.extend(_denoiser_rows(ws, method, eta, eta_index, weights, pairs))
    return rows


def model_update_drill(config: ExperimentConfig) -> List[ReportRow]:
    """
    Update the server encoder on shifted data and measure how the client's
    denoiser copes before and after a short finetune on fresh data.
    """

    rows: List[ReportRow] = []
    for seed in config.seeds:
        ws = prepare(config, seed)
        shifted = draw_corpus(
            config, ws.signal, RngState(seed, (SHIFTED_CORPUS,)), exponent=config.zipf_exponent / 2
        )
        updated = finetune_encoder(
            ws.encoder,
            ws.table,
            shifted.sequences,
            config.drift,
            config.encoder_update_steps,
            config.encoder_update_learning_rate,
            RngState(seed, (ENCODER_UPDATE,)),
        )
        fresh_size = max(1, int(round(len(ws.public) * config.finetune_fraction)))
        fresh = draw_corpus(config, ws.signal, RngState(seed, (FRESH_CORPUS,)), size=fresh_size)

        for eta_index, eta in enumerate(config.etas):
            weights = train_cell_denoiser(ws, eta, eta_index, config.clip)
            before = task_pairs(ws, eta, eta_index, config.clip)
            after = task_pairs(ws, eta, eta_index, config.clip, encoder=updated)
            fresh_pairs = collect_pairs(
                fresh.sequences,
                ws.table,
                updated,
                (eta, eta),
                ws.stream(eta_index, DENOISER).spawn(FRESH_CORPUS),
                samples_per_sequence=config.samples_per_sequence,
                clip=config.clip,
                round_noisy=config.wire_rounding,
            )
            finetuned, _ = finetune_denoiser(weights, fresh_pairs, epochs=config.finetune_epochs)

            for method, model, pairs in (
                ("before_update", weights, before),
                ("after_update", weights, after),
                ("after_finetune", finetuned, after),
                ("no_update_control", weights, task_pairs(ws, eta, eta_index, config.clip)),
            ):
                values = fidelity(denoise_pairs(model, pairs), pairs.e_c)
                rows.extend(make_rows(config.scenario, method, eta, seed, values))
    return rows


def mi_experiment(config: ExperimentConfig) -> List[ReportRow]:
    """
    Mutual information between privatized token representations and their
    noise, over `config.samples` uniformly drawn vocabulary rows.
    """

    rows: List[ReportRow] = []
    table, _, _ = build_vocabulary(config)
    for seed in config.seeds:
        for eta_index, eta in enumerate(config.etas):
            rng = RngState(seed, (eta_index, NOISE))
            ids = rng.generator.integers(0, table.vocab_size, size=config.samples)
            z = sample_noise_matrix(config.samples, table.dim, eta, rng).z
            estimate = mi_estimate(table.embeddings[ids] + z, z, config.k)
            rows.extend(make_rows(config.scenario, "privatize", eta, seed, estimate.as_metrics()))
    return rows


def geometry_experiment(config: ExperimentConfig) -> List[ReportRow]:
    """Vocabulary spacing, noise length and clean/privatized correlation per η."""

    rows: List[ReportRow] = []
    table, _, _ = build_vocabulary(config)
    count = min(config.samples, table.vocab_size)
    for seed in config.seeds:
        for eta_index, eta in enumerate(config.etas):
            noise = RngState(seed, (eta_index, NOISE))
            report = geometry_metrics(table, eta, config.k, noise, count)
            metrics = report.as_metrics()
            metrics["corr"] = privatization_correlation(
                table, eta, RngState(seed, (eta_index, ATTACK)), count
            )
            rows.extend(make_rows(config.scenario, "geometry", eta, seed, metrics))
    return rows


def inversion_experiment(config: ExperimentConfig) -> List[ReportRow]:
    """Nearest-neighbor token recovery from the representations the server receives."""

    rows: List[ReportRow] = []
    for seed in config.seeds:
        ws = prepare(config, seed)
        ids = np.concatenate([np.asarray(seq) for seq in ws.task.sequences])[: config.samples]
        x = embed_tokens(ids, ws.table)
        for eta_index, eta in enumerate(config.etas):
            params = config.privacy_params(eta)
            x_tilde = privatize(x, params.eta, ws.stream(eta_index, NOISE))
            if params.clip_enabled:
                x_tilde = clip_privatized(x_tilde, ClipBound.from_vocabulary(ws.table))
            report = inversion_attack(x_tilde, ws.table, ids, eta=eta, seed=seed)
            rows.extend(make_rows(config.scenario, "inversion", eta, seed, report.as_metrics()))
    return rows


def attribute_experiment(config: ExperimentConfig) -> List[ReportRow]:
    """Inference of the hidden label from mean-pooled privatized token representations."""

    rows: List[ReportRow] = []
    for seed in config.seeds:
        ws = prepare(config, seed)
        train, test = ws.task.split(config.test_fraction)
        for eta_index, eta in enumerate(config.etas):
            noise = ws.stream(eta_index, NOISE)
            x_tildes, _ = privatized_views(ws, ws.task, config.privacy_params(eta), noise)
            pooled = np.stack([m.mean(axis=0) for m in x_tildes])
            report = attribute_inference(
                pooled[: len(train)],
                train.labels,
                pooled[len(train) :],
                test.labels,
                classifier_config(config, seed),
                ws.stream(eta_index, CLASSIFIER),
                eta=eta,
                seed=seed,
            )
            rows.extend(make_rows(config.scenario, "attribute", eta, seed, report.as_metrics()))
    return rows


def similarity_experiment(config: ExperimentConfig) -> List[ReportRow]:
    """Spearman's rho between the task corpus and a corpus with another Zipf exponent."""

    rows: List[ReportRow] = []
    _, _, signal = build_vocabulary(config)
    for seed in config.seeds:
        task = draw_corpus(config, signal, RngState(seed, (TASK_CORPUS,)))
        other = draw_corpus(
            config, signal, RngState(seed, (COMPARE_CORPUS,)), exponent=config.compare_exponent
        )
        rho = corpus_similarity(task.sequences, other.sequences)
        rows.extend(make_rows(config.scenario, "corpus", math.inf, seed, {"rho": rho}))
    return rows


def train_denoiser_experiment(config: ExperimentConfig) -> List[ReportRow]:
    """
    Partition `config.etas` by privatization correlation, train one denoiser
    per partition, save the registry, and report each η's validation quality
    under the denoiser the registry selects for it.
    """

    seed = config.seeds[0]
    ws = prepare(config, seed)
    partitions = partition_by_correlation(
        ws.table,
        config.etas,
        ws.stream(0, ATTACK),
        config.denoiser_config().partition_thresholds,
    )
    registry = train_registry(
        ws.public.sequences,
        ws.table,
        ws.encoder,
        partitions,
        config.denoiser_config(seed=seed),
        ws.stream(0, DENOISER),
        samples_per_sequence=config.samples_per_sequence,
        clip=config.clip,
    )
    save_registry(config.registry, registry)

    rows: List[ReportRow] = []
    for eta_index, eta in enumerate(config.etas):
        pairs = task_pairs(ws, eta, eta_index, config.clip)
        weights = select_denoiser(eta, registry)
        values = fidelity(denoise_pairs(weights, pairs), pairs.e_c)
        rows.extend(make_rows(config.scenario, Method.SND.value, eta, seed, values))
    return rows


def infer_experiment(config: ExperimentConfig, session: Session) -> List[ReportRow]:
    """
    Run the client pipeline against a server over `session` with the saved
    denoiser registry: privatize, clip, request e_n, denoise. Reports fidelity
    to the locally computed clean embeddings and the per-request traffic and
    latency.
    """

    registry = load_registry(Path(config.registry))
    rows: List[ReportRow] = []
    for seed in config.seeds:
        ws = prepare(config, seed)
        sequences = ws.task.sequences[: config.samples]
        clean = encode_sequences(sequences, ws.table, ws.encoder)
        subset = SyntheticCorpus(sequences, ws.task.labels[: len(sequences)])
        for eta_index, eta in enumerate(config.etas):
            weights = select_denoiser(eta, registry)
            noise = ws.stream(eta_index, NOISE)
            x_tildes, noises = privatized_views(ws, subset, config.privacy_params(eta), noise)

            start = perf_counter()
            e_n = np.stack([client_request(m, session).vector for m in x_tildes])
            denoised = denoised_embeddings(weights, e_n, x_tildes, noises)
            elapsed = (perf_counter() - start) * 1000 / len(sequences)

            metrics = fidelity(denoised, clean)
            metrics.update(payload_accounting(config.seq_len, clean.shape[1]).as_metrics())
            metrics["wall_ms"] = elapsed
            rows.extend(make_rows(config.scenario, Method.SND.value, eta, seed, metrics))
    return rows

