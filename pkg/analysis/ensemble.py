from __future__ import annotations

import numpy as np

from errors import DataError, ShapeMismatchError
from hsdc.cube import Datacube
from tensornet.network import Network
from training.loop import predict_batch


def average_probabilities(outputs: list[np.ndarray]) -> np.ndarray:
    """Running mean of probability matrices; identical members give back the member exactly."""
    if not outputs:
        raise DataError("an ensemble needs at least one member")
    mean = np.array(outputs[0], dtype=np.float64)
    for count, probs in enumerate(outputs[1:], start=2):
        probs = np.asarray(probs, dtype=np.float64)
        if probs.shape != mean.shape:
            raise ShapeMismatchError(
                f"ensemble member output {probs.shape} does not match {mean.shape}"
            )
        mean += (probs - mean) / count
    return mean


def ensemble_predict(models: list[Network], cubes: list[Datacube]) -> np.ndarray:
    if not models:
        raise DataError("an ensemble needs at least one member")
    classes = {net.arch.num_classes for net in models if net.arch is not None}
    if len(classes) > 1:
        raise ShapeMismatchError(f"ensemble members disagree on class count: {sorted(classes)}")
    return average_probabilities([predict_batch(net, cubes) for net in models])
