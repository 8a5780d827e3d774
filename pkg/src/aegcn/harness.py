"""Training loop, evaluation, multi-seed aggregation and gradient checking."""

import copy
import csv
import dataclasses
import io
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import HeteroGraph, HomoGraph, load_graph
from .errors import ArgumentError, ConfigError, NumericalError
from .metrics import accuracy, macro_f1
from .models import (
    Variant,
    hetero_backward,
    hetero_forward,
    hetero_predict,
    homo_backward,
    homo_forward,
    homo_predict,
    init_hetero_params,
    init_homo_params,
    prepare_hetero,
    prepare_homo,
)
from .models.hetero import HeteroProblem
from .nn import finite_diff_check
from .optim import AdamState, default_no_decay, adam_step, make_stream
from .synthetic import toy_hetero, toy_homo

log = logging.getLogger(__name__)

HOMO_DEFAULTS = dict(d1=18, lr=0.01, dropout=0.5, weight_decay=5e-4, epochs=200)
HETERO_DEFAULTS = dict(d0=128, d1=64, channels=2, lr=0.005, weight_decay=0.001, gamma=1.0, dropout=0.0)
HOMO_GAMMA = {"pubmed": 0.001}
HOMO_GAMMA_DEFAULT = 10.0
HETERO_EPOCHS = {"acm": 40, "imdb": 20}
HETERO_EPOCHS_DEFAULT = 40

# fields that may differ between runs that are aggregated together
_RUN_SPECIFIC = ("seed", "seeds", "out", "parallel")


@dataclass
class TrainConfig:
    """Training configuration. ``None`` fields take the published defaults for
    the model kind (and, for gamma/epochs, the dataset name) in :func:`resolve_config`."""

    dataset: str = None
    model: str = None
    variant: str = "x"
    gamma: float = None
    lr: float = None
    weight_decay: float = None
    dropout: float = None
    epochs: int = None
    d1: int = None
    d0: int = None
    channels: int = None
    decoder_layers: int = 1
    seed: int = 0
    seeds: list = None
    eval: str = "final"
    full_bce: bool = False
    normalized_target: bool = True
    block_rows: int = 256
    decoder: str = "auto"
    decoder_weight_decay: bool = True
    out: str = None
    parallel: int = 1

    @classmethod
    def from_dict(cls, raw):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(raw) - names)
        if unknown:
            raise ConfigError(f"unknown configuration field(s): {', '.join(unknown)}")
        return cls(**raw)

    def to_dict(self):
        return dataclasses.asdict(self)


def resolve_config(config, graph):
    """Fill defaults and validate against ``graph``."""
    cfg = copy.deepcopy(config)
    kind = "hetero" if isinstance(graph, HeteroGraph) else "homo"
    if cfg.model is None:
        cfg.model = kind
    if cfg.model not in ("homo", "hetero"):
        raise ConfigError(f"model must be 'homo' or 'hetero', got {cfg.model!r}")
    if cfg.model != kind:
        raise ConfigError(f"model '{cfg.model}' does not match the {kind} dataset '{graph.name}'")
    name = graph.name.lower()
    if kind == "homo":
        defaults = dict(HOMO_DEFAULTS, gamma=HOMO_GAMMA.get(name, HOMO_GAMMA_DEFAULT))
    else:
        defaults = dict(HETERO_DEFAULTS, epochs=HETERO_EPOCHS.get(name, HETERO_EPOCHS_DEFAULT))
    for key, value in defaults.items():
        if getattr(cfg, key) is None:
            setattr(cfg, key, value)
    try:
        cfg.variant = Variant.parse(cfg.variant).value
    except ValueError:
        raise ConfigError(f"unknown variant {cfg.variant!r} (expected x, h, a or s)") from None
    checks = [
        (cfg.gamma >= 0, "gamma must be >= 0"),
        (cfg.lr > 0, "lr must be > 0"),
        (cfg.weight_decay >= 0, "weight_decay must be >= 0"),
        (0 <= cfg.dropout < 1, "dropout must lie in [0, 1)"),
        (int(cfg.epochs) >= 0, "epochs must be >= 0"),
        (cfg.decoder_layers in (1, 2), "decoder_layers must be 1 or 2"),
        (cfg.eval in ("final", "best_val"), "eval must be 'final' or 'best_val'"),
        (cfg.d1 >= 1, "d1 must be >= 1"),
        (cfg.block_rows >= 1, "block_rows must be >= 1"),
        (cfg.decoder in ("auto", "sampled", "blocked"), "decoder must be auto, sampled or blocked"),
        (not (cfg.full_bce and cfg.decoder == "sampled"), "the sampled decoder only supports the one-sided loss"),
    ]
    if kind == "hetero":
        checks += [
            (cfg.channels >= 1, "channels must be >= 1"),
            (cfg.d0 % cfg.channels == 0, f"d0 = {cfg.d0} must be divisible by channels = {cfg.channels}"),
            (cfg.dropout == 0, "the heterogeneous model does not use dropout"),
        ]
    for ok, message in checks:
        if not ok:
            raise ConfigError(message)
    cfg.epochs = int(cfg.epochs)
    return cfg


@dataclass
class RunLog:
    config: dict
    records: list
    final: dict
    duration_s: float = field(default=0.0, compare=False)
    params: dict = field(default=None, compare=False, repr=False)

    def to_dict(self, with_timing=True):
        out = {"config": self.config, "records": self.records, "final": self.final}
        if with_timing:
            out["duration_s"] = self.duration_s
        return out

    def to_json(self, with_timing=True):
        return json.dumps(self.to_dict(with_timing), indent=2, sort_keys=True)

    def records_csv(self):
        buf = io.StringIO()
        if self.records:
            writer = csv.DictWriter(buf, fieldnames=list(self.records[0]), lineterminator="\n")
            writer.writeheader()
            for rec in self.records:
                writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in rec.items()})
        return buf.getvalue()

    @classmethod
    def from_dict(cls, raw):
        return cls(raw["config"], raw["records"], raw["final"], raw.get("duration_s", 0.0))


class Trainer:
    """Binds a resolved config to a prepared problem."""

    def __init__(self, config, graph):
        self.config = config
        self.graph = graph
        if config.model == "homo":
            self.problem = prepare_homo(graph)
        else:
            self.problem = prepare_hetero(graph, config.variant, config.normalized_target)

    @property
    def decoder_method(self):
        return None if self.config.decoder == "auto" else self.config.decoder

    def init_params(self, rng):
        c, g = self.config, self.graph
        if c.model == "homo":
            return init_homo_params(g.n, g.d, g.n_classes, c.d1, rng, c.decoder_layers)
        return init_hetero_params(g, c.variant, c.d0, c.d1, c.channels, rng, c.decoder_layers)

    def forward(self, params, rng=None, training=True, mask=None):
        c = self.config
        if c.model == "homo":
            return homo_forward(
                self.problem, params, c.gamma, training, rng, c.dropout, c.full_bce, c.block_rows, mask=mask,
                decoder_method=self.decoder_method,
            )
        return hetero_forward(
            self.problem, params, c.gamma, training, c.full_bce, c.block_rows, mask=mask,
            decoder_method=self.decoder_method,
        )

    def backward(self, params, result):
        if self.config.model == "homo":
            return homo_backward(self.problem, params, result)
        return hetero_backward(self.problem, params, result)

    def predict(self, params):
        if self.config.model == "homo":
            return homo_predict(self.problem, params)
        return hetero_predict(self.problem, params)


def evaluate(problem, params, mask):
    """Accuracy and Macro-F1 of the argmax predictions on ``mask``."""
    mask = np.asarray(mask, dtype=np.int64)
    if mask.size == 0:
        raise ArgumentError("evaluation mask is empty")
    probs = hetero_predict(problem, params) if isinstance(problem, HeteroProblem) else homo_predict(problem, params)
    return score(problem.graph.labels, probs, mask)


def score(labels, probs, mask):
    pred = np.argmax(probs[mask], axis=1)
    truth = labels[mask]
    return accuracy(truth, pred), macro_f1(truth, pred, probs.shape[1])


def _split_scores(graph, probs):
    out = {}
    for split in ("train", "val", "test"):
        mask = getattr(graph, split)
        if mask.size:
            acc, f1 = score(graph.labels, probs, mask)
            out[split] = {"accuracy": acc, "macro_f1": f1}
    return out


DECODER_PARAMS = ("Wa", "Wa1", "Wa2")


def _decay_mask(decay_decoder):
    """Names excluded from weight decay: biases, plus the decoder if disabled."""
    if decay_decoder:
        return default_no_decay
    return lambda name: default_no_decay(name) or name in DECODER_PARAMS


def run_train(config, graph=None):
    """Train one model for ``config.seed`` and return its :class:`RunLog`.

    Each epoch performs one full-batch Adam step; the epoch record holds the
    losses of that step and the train/val metrics of the updated parameters.
    """
    if graph is None:
        if config.dataset is None:
            raise ConfigError("no dataset given")
        graph = load_graph(config.dataset)
    cfg = resolve_config(config, graph)
    trainer = Trainer(cfg, graph)
    rng = make_stream(cfg.seed)
    params = trainer.init_params(rng)
    state = AdamState()
    select_key = "accuracy" if cfg.model == "homo" else "macro_f1"
    best = (-math.inf, 0, params)
    records = []
    no_decay = _decay_mask(cfg.decoder_weight_decay)
    started = time.perf_counter()
    for epoch in range(1, cfg.epochs + 1):
        result = trainer.forward(params, rng, training=True)
        losses = (result.class_loss, result.recon_loss, result.total_loss)
        if not all(math.isfinite(v) for v in losses):
            raise NumericalError(
                f"non-finite loss at epoch {epoch}",
                {"epoch": epoch, "last_good_epoch": epoch - 1, "last_good": records[-1] if records else None},
            )
        grads = trainer.backward(params, result)
        try:
            params, state = adam_step(params, grads, state, cfg.lr, cfg.weight_decay, no_decay)
        except NumericalError as exc:
            exc.diagnostics.update(epoch=epoch, last_good_epoch=epoch - 1)
            raise
        scores = _split_scores(graph, trainer.predict(params))
        rec = {
            "epoch": epoch,
            "class_loss": result.class_loss,
            "recon_loss": result.recon_loss,
            "total_loss": result.total_loss,
        }
        for split in ("train", "val"):
            for metric in ("accuracy", "macro_f1"):
                rec[f"{split}_{'acc' if metric == 'accuracy' else metric}"] = scores.get(split, {}).get(metric)
        records.append(rec)
        if cfg.eval == "best_val" and "val" in scores and scores["val"][select_key] > best[0]:
            best = (scores["val"][select_key], epoch, params)
        log.debug("epoch %d total %.5f train_acc %.4f", epoch, result.total_loss, rec["train_acc"] or 0)
    if cfg.eval == "best_val" and records and best[0] > -math.inf:
        chosen_epoch, params = best[1], best[2]
    else:
        chosen_epoch = cfg.epochs
    final = {"selection": cfg.eval, "epoch": chosen_epoch, **_split_scores(graph, trainer.predict(params))}
    duration = time.perf_counter() - started
    return RunLog(cfg.to_dict(), records, final, duration, params)


def _train_one(args):
    config, graph = args
    return run_train(config, graph)


def run_seeds(config, graph=None, parallel=1):
    """One :func:`run_train` per seed in ``config.seeds`` (or just ``config.seed``)."""
    if graph is None:
        graph = load_graph(config.dataset)
    seeds = list(config.seeds) if config.seeds else [config.seed]
    jobs = [(dataclasses.replace(config, seed=int(s), seeds=None), graph) for s in seeds]
    if parallel > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(_train_one, jobs))
    return [_train_one(job) for job in jobs]


def _comparable(config):
    return {k: v for k, v in config.items() if k not in _RUN_SPECIFIC}


def aggregate(run_logs):
    """Mean and sample standard deviation of the final test metrics."""
    logs = list(run_logs)
    if not logs:
        raise ArgumentError("nothing to aggregate")
    reference = _comparable(logs[0].config)
    for other in logs[1:]:
        if _comparable(other.config) != reference:
            diff = sorted(k for k in set(reference) | set(other.config) if reference.get(k) != other.config.get(k))
            raise ArgumentError(f"runs come from different configurations (differ in: {', '.join(diff)})")
    summary = {"n_runs": len(logs), "seeds": [lg.config.get("seed") for lg in logs], "config": reference}
    for metric in ("accuracy", "macro_f1"):
        values = np.array([lg.final["test"][metric] for lg in logs], dtype=np.float64)
        summary[f"test_{metric}_mean"] = float(values.mean())
        summary[f"test_{metric}_std"] = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return summary


def format_summary(summary):
    lines = [
        f"runs: {summary['n_runs']}",
        f"{'metric':<16}{'mean':>10}{'std':>10}",
    ]
    for metric in ("accuracy", "macro_f1"):
        mean = 100 * summary[f"test_{metric}_mean"]
        std = 100 * summary[f"test_{metric}_std"]
        lines.append(f"{'test ' + metric:<16}{mean:>10.2f}{std:>10.2f}")
    return "\n".join(lines)


def write_run(run_log, out_dir):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"run_seed{run_log.config['seed']}"
    (out_dir / f"{stem}.json").write_text(run_log.to_json() + "\n", encoding="utf-8")
    (out_dir / f"{stem}.csv").write_text(run_log.records_csv(), encoding="utf-8")
    if run_log.params is not None:
        np.savez(out_dir / f"{stem}.npz", config=json.dumps(run_log.config), **run_log.params)
    return out_dir / f"{stem}.json"


def load_params(path):
    with np.load(path) as data:
        config = json.loads(str(data["config"]))
        params = {k: data[k] for k in data.files if k != "config"}
    return config, params


# -- gradient checking --------------------------------------------------------

GRADCHECK_CASES = [("homo", None, 1), ("homo", None, 2)] + [("hetero", v.value, 1) for v in Variant]


def _gradcheck_case(model, variant, decoder_layers, step, gamma=1.5):
    rng = make_stream(7)
    if model == "homo":
        graph = toy_homo()
        problem = prepare_homo(graph)
        params = init_homo_params(graph.n, graph.d, graph.n_classes, 4, rng, decoder_layers)

        def loss(p):
            return homo_forward(problem, p, gamma, training=False)

        def grad(p, res):
            return homo_backward(problem, p, res)

    else:
        graph = toy_hetero()
        problem = prepare_hetero(graph, variant)
        params = init_hetero_params(graph, variant, 4, 3, 2, rng, decoder_layers)

        def loss(p):
            return hetero_forward(problem, p, gamma)

        def grad(p, res):
            return hetero_backward(problem, p, res)

    analytic = grad(params, loss(params))
    return params, analytic, loss


def gradcheck(cases=None, step=1e-5, threshold=1e-4, corrupt=None):
    """Finite-difference check of every parameter on toy graphs.

    ``cases`` is a list of ``(model, variant, decoder_layers)``; ``corrupt``
    maps a parameter name to a factor applied to its analytic gradient (a hook
    for testing that the checker notices wrong gradients).
    """
    report = []
    for model, variant, layers in cases or GRADCHECK_CASES:
        params, analytic, loss = _gradcheck_case(model, variant, layers, step)
        errors = {}
        for name in params:
            g = analytic[name]
            if corrupt and name in corrupt:
                g = g * corrupt[name]

            def f(P, name=name):
                trial = dict(params)
                trial[name] = P
                return loss(trial).total_loss

            errors[name] = finite_diff_check(f, params[name], g, step)
        label = model if variant is None else f"{model}/{variant}"
        report.append(
            {
                "case": f"{label}/decoder{layers}",
                "errors": errors,
                "passed": all(e <= threshold for e in errors.values()),
            }
        )
    return report


def format_gradcheck(report, threshold=1e-4):
    lines = []
    for case in report:
        lines.append(f"{case['case']}: {'PASS' if case['passed'] else 'FAIL'}")
        for name, err in case["errors"].items():
            flag = "" if err <= threshold else "  <-- exceeds threshold"
            lines.append(f"    {name:<16} {err:.3e}{flag}")
    return "\n".join(lines)
