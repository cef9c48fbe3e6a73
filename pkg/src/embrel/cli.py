"""Command-line front end.

Subcommands::

    embrel eval-sim    --embeddings NAME=PATH ... --gold NAME=PATH:KIND ... --out DIR
    embrel eval-rel    --embeddings NAME=PATH ... --pairs PATH --out DIR
    embrel curve       --embeddings NAME=PATH ... --pairs PATH --fractions 0.1,...,1.0 --out DIR
    embrel dataset-agg ANNOTATIONS [--pairs TEXTS] --out DIR

Every option may also come from a JSON file given with ``--config``;
command-line flags win. Exit status: 0 when every artifact was written,
1 when a cell failed, 2 on configuration or input-file errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import re
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .classify import DEFAULT_FOLDS, DEFAULT_NEIGHBORS, DEFAULT_SEED
from .compose import Strategy
from .dataset import (
    aggregate_pairs,
    agreement_stats,
    load_annotations,
    load_pair_texts,
    load_pairs,
    majority_label,
    pair_stats,
    write_pairs,
)
from .embeddings import load_embeddings
from .exceptions import EmbrelError
from .pipeline import evaluate_relatedness, relatedness_curve, tokenize_pairs, vectorize_pairs
from .simeval import KINDS, evaluate_similarity, format_reports_table, format_table, load_judgments, write_reports_csv
from .textproc import load_lemmas

logger = logging.getLogger("embrel")

SEED_ENV = "EMBREL_SEED"
DEFAULT_FRACTIONS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)


class ConfigError(Exception):
    """Bad option values or missing input files; maps to exit status 2."""


@dataclass
class RunConfig:
    embeddings: dict[str, Path] = field(default_factory=dict)
    gold: dict[str, tuple[Path, str]] = field(default_factory=dict)
    pairs: Path | None = None
    annotations: Path | None = None
    strategies: tuple[Strategy, ...] = tuple(Strategy)
    neighbors_k: int = DEFAULT_NEIGHBORS
    folds: int = DEFAULT_FOLDS
    seed: int = DEFAULT_SEED
    fractions: tuple[float, ...] = DEFAULT_FRACTIONS
    out: Path = Path(".")
    lemmas: Path | None = None
    keep_going: bool = False
    swap_concat_order: bool = False
    pca_per_fold: bool = False
    jobs: int = 1


# ---------------------------------------------------------------- parsing

def _parse_named(items, what: str) -> dict[str, str]:
    out = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep or not name or not value:
            raise ConfigError(f"--{what} expects NAME=VALUE, got {item!r}")
        if name in out:
            raise ConfigError(f"--{what}: duplicate name {name!r}")
        out[name] = value
    return out


def _parse_gold_spec(spec: str) -> tuple[str, str]:
    path, sep, kind = spec.rpartition(":")
    if not sep or kind not in KINDS:
        raise ConfigError(f"--gold expects NAME=PATH:KIND with KIND in {KINDS}, got {spec!r}")
    return path, kind


def _parse_strategies(value) -> tuple[Strategy, ...]:
    items = value if isinstance(value, list) else str(value).split(",")
    items = [s.strip().lower() for s in items if s.strip()]
    if items == ["all"]:
        return tuple(Strategy)
    try:
        return tuple(dict.fromkeys(Strategy(s) for s in items))
    except ValueError:
        raise ConfigError(f"unknown strategy in {value!r}; choose from sum, con, con_pca, all") from None


def _parse_fractions(value) -> tuple[float, ...]:
    items = value if isinstance(value, list) else str(value).split(",")
    try:
        fr = tuple(float(x) for x in items)
    except ValueError:
        raise ConfigError(f"--fractions must be comma-separated numbers, got {value!r}") from None
    if not fr or any(not 0 < f <= 1 for f in fr) or any(b <= a for a, b in zip(fr, fr[1:])):
        raise ConfigError("--fractions must be strictly increasing values in (0, 1]")
    return fr


def _load_config_file(path: str) -> tuple[dict, Path]:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return data, Path(path).resolve().parent


def build_config(args: argparse.Namespace, env: dict | None = None) -> RunConfig:
    """Merge flags, the optional config file and defaults (in that priority).

    The seed falls back to ``$EMBREL_SEED`` before the built-in default.
    Relative paths in the config file are taken relative to that file.
    """
    env = os.environ if env is None else env
    file_cfg, base = ({}, Path.cwd())
    if getattr(args, "config", None):
        file_cfg, base = _load_config_file(args.config)

    def pick(name):
        flag = getattr(args, name, None)
        if flag not in (None, [], False):
            return flag, Path.cwd()
        if name in file_cfg:
            return file_cfg[name], base
        return None, Path.cwd()

    def as_path(value, root):
        p = Path(value)
        return p if p.is_absolute() else root / p

    cfg = RunConfig()

    value, root = pick("embeddings")
    if value is not None:
        named = value if isinstance(value, dict) else _parse_named(value, "embeddings")
        cfg.embeddings = {k: as_path(v, root) for k, v in named.items()}

    value, root = pick("gold")
    if value is not None:
        if isinstance(value, dict):
            specs = {}
            for k, v in value.items():
                if isinstance(v, dict):
                    specs[k] = (v.get("path", ""), v.get("kind", ""))
                else:
                    specs[k] = _parse_gold_spec(v)
        else:
            specs = {k: _parse_gold_spec(v) for k, v in _parse_named(value, "gold").items()}
        for k, (p, kind) in specs.items():
            if kind not in KINDS:
                raise ConfigError(f"gold {k!r}: kind must be one of {KINDS}")
            cfg.gold[k] = (as_path(p, root), kind)

    for name in ("pairs", "annotations", "lemmas"):
        value, root = pick(name)
        if value is not None:
            setattr(cfg, name, as_path(value, root))

    value, root = pick("out")
    if value is not None:
        cfg.out = as_path(value, root)

    value, _ = pick("strategy")
    if value is not None:
        cfg.strategies = _parse_strategies(value)
    value, _ = pick("fractions")
    if value is not None:
        cfg.fractions = _parse_fractions(value)

    for name, attr in (("k", "neighbors_k"), ("folds", "folds"), ("jobs", "jobs")):
        value, _ = pick(name)
        if value is not None:
            try:
                setattr(cfg, attr, int(value))
            except (TypeError, ValueError):
                raise ConfigError(f"--{name} must be an integer, got {value!r}") from None
    if cfg.neighbors_k < 1:
        raise ConfigError("--k must be positive")
    if cfg.folds < 2:
        raise ConfigError("--folds must be at least 2")
    if cfg.jobs < 1:
        raise ConfigError("--jobs must be positive")

    value, _ = pick("seed")
    if value is None and env.get(SEED_ENV):
        value = env[SEED_ENV]
    if value is not None:
        try:
            cfg.seed = int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"seed must be an integer, got {value!r}") from None

    for name in ("keep_going", "swap_concat_order", "pca_per_fold"):
        value, _ = pick(name)
        if value is not None:
            setattr(cfg, name, bool(value))
    return cfg


def _require_file(path: Path | None, what: str) -> Path:
    if path is None:
        raise ConfigError(f"missing required option: {what}")
    if not path.is_file():
        raise ConfigError(f"{what} file not found: {path}")
    return path


# ---------------------------------------------------------------- output

def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", name)


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _map_cells(fn, cells, jobs: int):
    """Run ``fn`` on each cell; returns ``(cell, result | exception)`` in input order."""
    def safe(cell):
        try:
            return cell, fn(cell)
        except EmbrelError as exc:
            return cell, exc

    if jobs == 1:
        return [safe(c) for c in cells]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(safe, cells))


def _load_tables(cfg: RunConfig) -> dict:
    if not cfg.embeddings:
        raise ConfigError("missing required option: --embeddings NAME=PATH")
    for name, path in cfg.embeddings.items():
        _require_file(path, f"embeddings {name!r}")
    tables = {}
    for name, path in cfg.embeddings.items():
        try:
            tables[name] = load_embeddings(path, name=name)
        except EmbrelError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        except UnicodeDecodeError as exc:
            raise ConfigError(f"{path}: not UTF-8 text ({exc})") from None
        logger.info("loaded %s: %d vectors, dim %d", name, len(tables[name]), tables[name].dim)
    return tables


def _report_failures(failures, cfg: RunConfig) -> int:
    for label, exc in failures:
        logger.error("%s failed: %s", label, exc)
    if failures and not cfg.keep_going:
        return 1
    return 0


# ---------------------------------------------------------------- commands

def cmd_eval_sim(cfg: RunConfig) -> int:
    if not cfg.gold:
        raise ConfigError("missing required option: --gold NAME=PATH:KIND")
    for name, (path, _) in cfg.gold.items():
        _require_file(path, f"gold {name!r}")
    tables = _load_tables(cfg)
    golds = {}
    for name, (path, kind) in cfg.gold.items():
        try:
            golds[name] = load_judgments(path, kind, name=name)
        except EmbrelError as exc:
            raise ConfigError(f"{path}: {exc}") from None

    cells = [(m, g) for m in tables for g in golds]
    results = _map_cells(lambda c: evaluate_similarity(tables[c[0]], golds[c[1]]), cells, cfg.jobs)
    reports = [r for _, r in results if not isinstance(r, Exception)]
    failures = [(f"{m}/{g}", r) for (m, g), r in results if isinstance(r, Exception)]
    status = _report_failures(failures, cfg)
    if status:
        return status

    buf = io.StringIO()
    write_reports_csv(reports, buf)
    write_atomic(cfg.out / "similarity.csv", buf.getvalue())
    write_atomic(cfg.out / "similarity.txt", format_reports_table(reports))
    return 0


def _relatedness_inputs(cfg: RunConfig):
    _require_file(cfg.pairs, "--pairs")
    if cfg.lemmas is not None:
        _require_file(cfg.lemmas, "--lemmas")
    tables = _load_tables(cfg)
    try:
        records = load_pairs(cfg.pairs)
    except EmbrelError as exc:
        raise ConfigError(f"{cfg.pairs}: {exc}") from None
    lemmas = load_lemmas(cfg.lemmas)
    tokens = tokenize_pairs(records, lemmas)
    vectors = {name: vectorize_pairs(tokens, t) for name, t in tables.items()}
    return vectors


def cmd_eval_rel(cfg: RunConfig) -> int:
    vectors = _relatedness_inputs(cfg)
    cells = [(m, s) for m in vectors for s in cfg.strategies]

    def run(cell):
        m, s = cell
        return evaluate_relatedness(
            vectors[m], s, model=m, neighbors_k=cfg.neighbors_k, folds=cfg.folds, seed=cfg.seed,
            swap_order=cfg.swap_concat_order, pca_per_fold=cfg.pca_per_fold,
        )

    results = _map_cells(run, cells, cfg.jobs)
    failures = [(f"{m}/{s.value}", r) for (m, s), r in results if isinstance(r, Exception)]
    status = _report_failures(failures, cfg)
    if status:
        return status
    done = [r for _, r in results if not isinstance(r, Exception)]

    for r in done:
        rows = [(i, repr(f)) for i, f in enumerate(r.cv.fold_f1)]
        write_atomic(cfg.out / f"cv_{_slug(r.model)}_{r.strategy.value}.csv", _csv_text(("fold", "f1"), rows))
    grid = [
        (r.model, r.strategy.value, r.dim, r.cv.n_folds, repr(r.cv.mean_f1), repr(r.cv.std_f1), r.n_all_oov_posts)
        for r in done
    ]
    write_atomic(
        cfg.out / "relatedness.csv",
        _csv_text(("model", "strategy", "dim", "folds", "mean_f1", "std_f1", "all_oov_posts"), grid),
    )
    table = format_table(
        ["model", "strategy", "dim", "mean_f1", "std_f1"],
        [[r.model, r.strategy.value, str(r.dim), f"{r.cv.mean_f1:.3f}", f"{r.cv.std_f1:.3f}"] for r in done],
    )
    header = f"# k={cfg.neighbors_k} folds={cfg.folds} seed={cfg.seed} pca_per_fold={cfg.pca_per_fold}\n"
    write_atomic(cfg.out / "relatedness.txt", header + table)
    return 0


def cmd_curve(cfg: RunConfig) -> int:
    vectors = _relatedness_inputs(cfg)
    cells = [(m, s) for m in vectors for s in cfg.strategies]

    def run(cell):
        m, s = cell
        return relatedness_curve(
            vectors[m], s, cfg.fractions, neighbors_k=cfg.neighbors_k, folds=cfg.folds, seed=cfg.seed,
            swap_order=cfg.swap_concat_order, pca_per_fold=cfg.pca_per_fold,
        )

    results = _map_cells(run, cells, cfg.jobs)
    failures = [(f"{m}/{s.value}", r) for (m, s), r in results if isinstance(r, Exception)]
    status = _report_failures(failures, cfg)
    if status:
        return status
    for (m, s), curve in results:
        if isinstance(curve, Exception):
            continue
        rows = [(repr(p.fraction), repr(p.mean_f1), repr(p.std_f1)) for p in curve.points]
        write_atomic(cfg.out / f"curve_{_slug(m)}_{s.value}.csv", _csv_text(("fraction", "mean_f1", "std_f1"), rows))
    return 0


def cmd_dataset_agg(cfg: RunConfig) -> int:
    path = _require_file(cfg.annotations, "annotations")
    try:
        annotations = load_annotations(path)
        labels = majority_label(annotations)
        stats = agreement_stats(annotations)
    except (EmbrelError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None

    write_atomic(cfg.out / "labels.csv", _csv_text(("pair_id", "is_related"), labels.items()))
    if cfg.pairs is not None:
        texts_path = _require_file(cfg.pairs, "--pairs")
        try:
            records = aggregate_pairs(labels, load_pair_texts(texts_path))
        except (EmbrelError, KeyError, ValueError) as exc:
            raise ConfigError(f"{texts_path}: {exc}") from None
        buf = io.StringIO()
        write_pairs(records, buf)
        write_atomic(cfg.out / "pairs.csv", buf.getvalue())
        ps = pair_stats(records)
        logger.info("%d pairs, %.1f%% related", ps.n_records, 100 * ps.related_fraction)

    n_related = sum(labels.values())
    report = format_table(
        ["pairs", "annotators", "unanimity", "pairwise_agreement", "related"],
        [[str(stats.n_pairs), str(stats.n_annotators), f"{stats.unanimity:.4f}",
          f"{stats.pairwise_agreement:.4f}", f"{n_related}/{len(labels)}"]],
    )
    write_atomic(cfg.out / "agreement.txt", report)
    return 0


COMMANDS = {
    "eval-sim": cmd_eval_sim,
    "eval-rel": cmd_eval_rel,
    "curve": cmd_curve,
    "dataset-agg": cmd_dataset_agg,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embrel", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with option values (flags win)")
    common.add_argument("--out", help="output directory (default: current directory)")
    common.add_argument("--keep-going", action="store_true", default=None,
                        help="write what succeeded even if some cells fail")
    common.add_argument("--jobs", type=int, help="evaluate independent cells in parallel")
    common.add_argument("-v", "--verbose", action="count", default=0)

    models = argparse.ArgumentParser(add_help=False)
    models.add_argument("--embeddings", action="append", metavar="NAME=PATH",
                        help="word2vec/GloVe text file; repeatable")

    rel = argparse.ArgumentParser(add_help=False)
    rel.add_argument("--pairs", metavar="PATH", help="post,op_post,is_related CSV")
    rel.add_argument("--strategy", help="comma list of sum,con,con_pca or 'all' (default: all)")
    rel.add_argument("--k", type=int, help=f"neighbours (default {DEFAULT_NEIGHBORS})")
    rel.add_argument("--folds", type=int, help=f"CV folds (default {DEFAULT_FOLDS})")
    rel.add_argument("--seed", type=int, help=f"fold seed (default ${SEED_ENV} or {DEFAULT_SEED})")
    rel.add_argument("--lemmas", metavar="PATH", help="surface<TAB>lemma TSV")
    rel.add_argument("--swap-concat-order", action="store_true", default=None,
                     help="concatenate opening post first")
    rel.add_argument("--pca-per-fold", action="store_true", default=None,
                     help="fit con_pca inside each training fold")

    p = sub.add_parser("eval-sim", parents=[common, models], help="word-similarity evaluation")
    p.add_argument("--gold", action="append", metavar="NAME=PATH:KIND",
                   help="word1,word2,sim CSV with KIND graded|binary; repeatable")

    sub.add_parser("eval-rel", parents=[common, models, rel], help="cross-validated relatedness F1")

    p = sub.add_parser("curve", parents=[common, models, rel], help="learning curves")
    p.add_argument("--fractions", help="comma list of training fractions in (0, 1]")

    p = sub.add_parser("dataset-agg", parents=[common], help="majority-vote labels from annotations")
    p.add_argument("annotations", nargs="?", help="pair_id,annotator_id,label CSV")
    p.add_argument("--pairs", metavar="PATH", help="pair_id,post,op_post CSV to attach texts")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = build_config(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"embrel: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
