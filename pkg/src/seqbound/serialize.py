"""JSON exchange format for distribution instances.

An instance document carries an alphabet, a label prior, and conditional
tables, with probabilities as plain decimal floats:

    {"alphabet": {"x_size": 4, "c_size": 3, "seq_len": 3, "enum_cap": ...},
     "prior": {"variant": "dense", "probs": [...]}
              | {"variant": "position_unigram", "tables": [[...], ...]}
              | {"variant": "bigram", "init": [...], "trans": [[...], ...]},
     "cond": [[...], ...]}                       # structured joint

Joints with position-dependent conditionals store "cond_by_position"
(a list of N tables) instead of "cond". Counterexample documents bundle
both sides plus a certificate block.
"""

from __future__ import annotations

import json

import numpy as np

from .dists import (
    Alphabet,
    BigramPrior,
    DensePrior,
    JointDist,
    LabelPrior,
    PositionUnigramPrior,
    make_conditional,
)
from .errors import ShapeMismatch


def alphabet_to_json(a: Alphabet) -> dict:
    return {
        "x_size": a.x_size,
        "c_size": a.c_size,
        "seq_len": a.seq_len,
        "enum_cap": a.enum_cap,
    }


def alphabet_from_json(doc: dict) -> Alphabet:
    return Alphabet(
        x_size=int(doc["x_size"]),
        c_size=int(doc["c_size"]),
        seq_len=int(doc["seq_len"]),
        enum_cap=int(doc.get("enum_cap", 1_000_000)),
    )


def prior_to_json(prior: LabelPrior) -> dict:
    if isinstance(prior, DensePrior):
        return {"variant": "dense", "probs": prior.probs.tolist()}
    if isinstance(prior, PositionUnigramPrior):
        return {"variant": "position_unigram", "tables": prior.tables.tolist()}
    if isinstance(prior, BigramPrior):
        return {
            "variant": "bigram",
            "init": prior.init.tolist(),
            "trans": prior.trans.tolist(),
        }
    raise ShapeMismatch(f"unknown prior type {type(prior).__name__}")


def prior_from_json(alphabet: Alphabet, doc: dict) -> LabelPrior:
    variant = doc["variant"]
    if variant == "dense":
        return DensePrior(alphabet, np.asarray(doc["probs"], dtype=np.float64))
    if variant == "position_unigram":
        return PositionUnigramPrior(
            alphabet, np.asarray(doc["tables"], dtype=np.float64)
        )
    if variant == "bigram":
        return BigramPrior(
            alphabet,
            np.asarray(doc["init"], dtype=np.float64),
            np.asarray(doc["trans"], dtype=np.float64),
        )
    raise ShapeMismatch(f"unknown prior variant {variant!r}")


def joint_to_json(dist: JointDist) -> dict:
    doc = {
        "alphabet": alphabet_to_json(dist.alphabet),
        "prior": prior_to_json(dist.prior),
    }
    if dist.structured:
        doc["cond"] = dist.conds[0].tolist()
    else:
        doc["cond_by_position"] = dist.conds.tolist()
    return doc


def joint_from_json(doc: dict) -> JointDist:
    alphabet = alphabet_from_json(doc["alphabet"])
    prior = prior_from_json(alphabet, doc["prior"])
    if "cond" in doc:
        cond = make_conditional(
            alphabet, np.asarray(doc["cond"], dtype=np.float64)
        )
        return JointDist.from_structured(prior, cond)
    conds = np.asarray(doc["cond_by_position"], dtype=np.float64)
    return JointDist.from_position_conds(prior, conds)


def counterexample_to_json(cex) -> dict:
    doc = {
        "alphabet": alphabet_to_json(cex.true_dist.alphabet),
        "prior": prior_to_json(cex.true_dist.prior),
    }
    if cex.true_dist.structured:
        doc["true_cond"] = cex.true_dist.conds[0].tolist()
    else:
        doc["true_cond_by_position"] = cex.true_dist.conds.tolist()
    doc["model_cond"] = cex.model_dist.conds[0].tolist()
    doc["certificate"] = {
        "l1_marginal": cex.l1_marginal,
        "decision_gap": cex.decision_gap,
        "violated_condition": cex.violated_condition,
        "sigma_min": cex.sigma_min,
    }
    return doc


def counterexample_dists_from_json(doc: dict) -> tuple[JointDist, JointDist]:
    """Rebuild the (true, model) pair from a counterexample document."""
    alphabet = alphabet_from_json(doc["alphabet"])
    prior = prior_from_json(alphabet, doc["prior"])
    if "true_cond" in doc:
        true_dist = JointDist.from_structured(
            prior, make_conditional(alphabet, np.asarray(doc["true_cond"]))
        )
    else:
        true_dist = JointDist.from_position_conds(
            prior, np.asarray(doc["true_cond_by_position"], dtype=np.float64)
        )
    model_dist = JointDist.from_structured(
        prior, make_conditional(alphabet, np.asarray(doc["model_cond"]))
    )
    return true_dist, model_dist


def dumps(doc: dict) -> str:
    """Stable JSON text: fixed key order as constructed, indented."""
    return json.dumps(doc, indent=2) + "\n"
