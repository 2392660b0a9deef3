from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from errors import DataError
from features.standardize import Standardizer
from svm.multiclass import SvmModel
from svm.smo import BinarySvmModel, SvmHyper

SCHEMA_VERSION = 1


def model_to_dict(model: SvmModel) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "hyper": {"C": model.hyper.C, "gamma": model.hyper.gamma},
        "classes": list(model.classes),
        "class_names": list(model.class_names),
        "standardizer": model.standardizer.to_dict(),
        "pairs": [
            {
                "pair": [a, b],
                "bias": binary.bias,
                "C": binary.hyper.C,
                "gamma": binary.hyper.gamma,
                "dual_coef": binary.dual_coef.tolist(),
                "support_vectors": binary.support_vectors.tolist(),
            }
            for (a, b), binary in sorted(model.pair_models.items())
        ],
    }


def model_from_dict(data: dict) -> SvmModel:
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise DataError(f"unsupported SVM model schema version {version}")
    dimension = len(data["standardizer"]["mean"])
    pair_models = {}
    for item in data["pairs"]:
        vectors = np.asarray(item["support_vectors"], dtype=np.float64).reshape(-1, dimension)
        pair_models[(int(item["pair"][0]), int(item["pair"][1]))] = BinarySvmModel(
            support_vectors=vectors,
            dual_coef=np.asarray(item["dual_coef"], dtype=np.float64),
            bias=float(item["bias"]),
            hyper=SvmHyper(C=float(item["C"]), gamma=float(item["gamma"])),
        )
    return SvmModel(
        classes=tuple(int(c) for c in data["classes"]),
        pair_models=pair_models,
        standardizer=Standardizer.from_dict(data["standardizer"]),
        hyper=SvmHyper(**data["hyper"]),
        class_names=tuple(data.get("class_names", [])),
    )


def save_svm_model(model: SvmModel, destination: Path | str) -> None:
    # json writes shortest round-trip float reprs, so reload is bit-exact.
    Path(destination).write_text(json.dumps(model_to_dict(model), indent=1), encoding="utf-8")


def load_svm_model(source: Path | str) -> SvmModel:
    return model_from_dict(json.loads(Path(source).read_text(encoding="utf-8")))
