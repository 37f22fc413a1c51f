"""Command-line interface: simulate, counterexample, check-rank, train.

Every subcommand writes its primary outputs plus a manifest.json holding
the fully resolved configuration, the master seed, the artifact version
and the kernel backend, so a run is reproducible from the manifest alone.
Outputs contain no timestamps; rerunning with identical flags and seed
produces byte-identical files.

Exit codes: 0 success, 1 domain failure (bound violation, divergence,
witness not found, empty corpus), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .bounds import BoundReport, bound_report
from .corpus import DEFAULT_VOCAB_CAP, POLICIES, ingest
from .dists import (
    Alphabet,
    ConditionalTable,
    JointDist,
    make_conditional,
    sample_conditional,
    sample_prior,
)
from .errors import (
    DivergenceDetected,
    EmptyCorpus,
    FilterStarvation,
    NotFound,
    SeqboundError,
)
from .serialize import (
    alphabet_to_json,
    counterexample_to_json,
    dumps,
    prior_from_json,
    prior_to_json,
)
from .simulate import (
    Counterexample,
    SimConfig,
    find_rank_counterexample,
    find_structure_counterexample,
    replay_instance,
    run_bound_simulation,
)
from .train import TrainConfig, generate_dataset, save_dataset, train

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


def _write_manifest(out_dir: Path, subcommand: str, config: dict,
                    master_seed: int, outputs: list[str]) -> None:
    doc = {
        "subcommand": subcommand,
        "artifact_version": __version__,
        "kernel_backend": BACKEND,
        "master_seed": master_seed,
        "config": config,
        "outputs": outputs,
    }
    _write(out_dir / "manifest.json", dumps(doc))


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    try:
        alphabet = Alphabet(args.x_size, args.c_size, args.seq_len)
        config = SimConfig(
            alphabet=alphabet,
            samples=args.samples,
            sigma_min_floor=args.sigma_min_floor,
            pinv_l1_cap=args.pinv_l1_cap,
            master_seed=args.seed,
            interpolation_fraction=args.interpolation_fraction,
        )
    except (SeqboundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out = _out_dir(args)
    rows = [BoundReport.CSV_HEADER]
    violations = []
    try:
        for rec in run_bound_simulation(config):
            rows.append(
                rec.report.csv_row(
                    rec.draw_index, alphabet.x_size, alphabet.c_size,
                    alphabet.seq_len,
                )
            )
            if not rec.report.chain_ok:
                violations.append(rec)
    except FilterStarvation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE

    _write(out / "bounds.csv", "\n".join(rows) + "\n")
    outputs = ["bounds.csv"]

    for rec in violations:
        prior_probs, true_cond, model_cond, _ = replay_instance(
            config, rec.draw_index
        )
        rep = rec.report
        doc = {
            "draw_index": rec.draw_index,
            "alphabet": alphabet_to_json(alphabet),
            "prior": {"variant": "dense", "probs": prior_probs.tolist()},
            "true_cond": true_cond.tolist(),
            "model_cond": model_cond.tolist(),
            "report": {
                "decision_gap": rep.decision_gap,
                "position_l1_gap": rep.position_l1_gap,
                "l1_marginal": rep.l1_marginal,
                "l1_bound": rep.l1_bound,
                "kl": "inf" if rep.kl == float("inf") else rep.kl,
            },
        }
        name = f"violation_{rec.draw_index}.json"
        _write(out / name, dumps(doc))
        outputs.append(name)

    _write_manifest(
        out,
        "simulate",
        {
            "x_size": alphabet.x_size,
            "c_size": alphabet.c_size,
            "seq_len": alphabet.seq_len,
            "samples": config.samples,
            "sigma_min_floor": config.sigma_min_floor,
            "pinv_l1_cap": config.pinv_l1_cap,
            "interpolation_fraction": config.interpolation_fraction,
            "violations": len(violations),
        },
        config.master_seed,
        outputs,
    )
    print(
        f"accepted {config.samples} instances, {len(violations)} chain "
        f"violations, backend={BACKEND}"
    )
    return EXIT_FAILURE if violations else EXIT_OK


def cmd_counterexample(args) -> int:
    try:
        alphabet = Alphabet(args.x_size, args.c_size, args.seq_len)
    except SeqboundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    finder = {
        "rank": find_rank_counterexample,
        "structure": find_structure_counterexample,
    }[args.condition]
    out = _out_dir(args)
    try:
        cex: Counterexample = finder(alphabet, args.seed, max_tries=args.max_tries)
    except (NotFound, SeqboundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    _write(out / "counterexample.json", dumps(counterexample_to_json(cex)))
    _write_manifest(
        out,
        "counterexample",
        {
            "condition": args.condition,
            "x_size": alphabet.x_size,
            "c_size": alphabet.c_size,
            "seq_len": alphabet.seq_len,
            "max_tries": args.max_tries,
        },
        args.seed,
        ["counterexample.json"],
    )
    print(
        f"{args.condition} witness: l1_marginal={cex.l1_marginal:.3e} "
        f"decision_gap={cex.decision_gap:.4f}"
    )
    return EXIT_OK


def cmd_check_rank(args) -> int:
    out = _out_dir(args)
    try:
        stats = ingest(
            args.corpus, args.seq_len, policy=args.policy, vocab_cap=args.vocab_cap
        )
    except (EmptyCorpus, SeqboundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    _write(out / "corpus_report.json", dumps(stats.to_report()))
    _write_manifest(
        out,
        "check-rank",
        {
            "corpus": str(args.corpus),
            "seq_len": args.seq_len,
            "policy": args.policy,
            "vocab_cap": args.vocab_cap,
        },
        0,
        ["corpus_report.json"],
    )
    print(
        f"vocab={len(stats.vocab)} rank={stats.lm_matrix.rank} "
        f"sigma_min={stats.lm_matrix.sigma_min:.6e}"
    )
    return EXIT_OK


def _build_ground_truth(alphabet: Alphabet, doc: dict) -> JointDist:
    prior_doc = dict(doc["prior"])
    if "variant" in prior_doc and any(
        k in prior_doc for k in ("probs", "tables", "init")
    ):
        prior = prior_from_json(alphabet, prior_doc)
    else:
        prior = sample_prior(
            alphabet,
            prior_doc["variant"],
            prior_doc["seed"],
            concentration=prior_doc.get("concentration", 1.0),
        )
    cond_doc = doc["cond"]
    if isinstance(cond_doc, list):
        cond = make_conditional(alphabet, np.asarray(cond_doc, dtype=np.float64))
    else:
        cond = sample_conditional(
            alphabet, cond_doc["seed"],
            concentration=cond_doc.get("concentration", 1.0),
        )
    return JointDist.from_structured(prior, cond)


def cmd_train(args) -> int:
    try:
        doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        alphabet = Alphabet(**doc["alphabet"])
        truth = _build_ground_truth(alphabet, doc["ground_truth"])
        ds_doc = doc["dataset"]
        tr_doc = doc["train"]
        dataset = generate_dataset(truth, int(ds_doc["s_count"]), ds_doc["seed"])
        config = TrainConfig(
            lm=truth.prior,
            dataset=dataset,
            step_size=float(tr_doc["step_size"]),
            max_iters=int(tr_doc.get("max_iters", 5000)),
            smoothing_epsilon=float(tr_doc.get("smoothing_epsilon", 1e-12)),
            seed=int(tr_doc.get("init_seed", 0)),
            eval_reference=truth,
        )
    except (KeyError, ValueError, TypeError, OSError, SeqboundError) as exc:
        print(f"error: bad train config: {exc!r}", file=sys.stderr)
        return EXIT_USAGE

    out = _out_dir(args)
    try:
        params, traj = train(config, config.seed)
    except DivergenceDetected as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE

    model = JointDist.from_structured(
        truth.prior, ConditionalTable(alphabet, params.conditional())
    )
    final = bound_report(truth, model)
    save_dataset(out / "dataset.txt", dataset)
    _write(out / "trajectory.csv", traj.to_csv())
    _write(
        out / "model.json",
        dumps(
            {
                "alphabet": alphabet_to_json(alphabet),
                "logits": params.logits.tolist(),
                "cond": params.conditional().tolist(),
            }
        ),
    )
    _write(
        out / "bound_report.csv",
        BoundReport.CSV_HEADER
        + "\n"
        + final.csv_row(
            config.seed, alphabet.x_size, alphabet.c_size, alphabet.seq_len
        )
        + "\n",
    )
    _write_manifest(
        out,
        "train",
        {
            "config_file": str(args.config),
            "resolved": {
                "alphabet": alphabet_to_json(alphabet),
                "prior": prior_to_json(truth.prior),
                "s_count": int(ds_doc["s_count"]),
                "dataset_seed": ds_doc["seed"],
                "step_size": config.step_size,
                "max_iters": config.max_iters,
                "smoothing_epsilon": config.smoothing_epsilon,
                "init_seed": config.seed,
            },
        },
        config.seed,
        ["dataset.txt", "trajectory.csv", "model.json", "bound_report.csv"],
    )
    print(
        f"iterations={traj.final.iteration} loss={traj.final.loss:.6f} "
        f"decision_gap={traj.final.decision_gap}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seqbound",
        description=(
            "Decision-gap bounds for unsupervised sequence classification: "
            "Monte-Carlo bound verification, necessity counterexamples, "
            "corpus conditioning reports, and cross-entropy training."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Monte-Carlo verification of the bound chain")
    p.add_argument("--x-size", type=int, default=4)
    p.add_argument("--c-size", type=int, default=3)
    p.add_argument("--seq-len", type=int, default=3)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--sigma-min-floor", type=float, default=0.01)
    p.add_argument("--pinv-l1-cap", type=float, default=2.0)
    p.add_argument("--interpolation-fraction", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("counterexample", help="search for a necessity witness")
    p.add_argument("--condition", choices=("rank", "structure"), required=True)
    p.add_argument("--x-size", type=int, default=4)
    p.add_argument("--c-size", type=int, default=3)
    p.add_argument("--seq-len", type=int, default=3)
    p.add_argument("--max-tries", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("check-rank", help="corpus conditioning report")
    p.add_argument("--corpus", required=True)
    p.add_argument("--seq-len", type=int, required=True)
    p.add_argument("--policy", choices=POLICIES, default="truncate")
    p.add_argument("--vocab-cap", type=int, default=DEFAULT_VOCAB_CAP)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_check_rank)

    p = sub.add_parser("train", help="train on synthetic data from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
