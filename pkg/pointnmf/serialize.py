"""
Model files: a versioned JSON envelope describing K, the normalization and every
component. Arrays are stored as row-major flat lists of 64-bit floats, layer by layer.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

import numpy as np
from box import Box, BoxError

from .errors import ModelFileError, ValidationError
from .factorize.innmf import InnmfModel
from .inr import Component, EncodingConfig, InrFunction, TableFunction
from .points import NormalizationInfo

FORMAT = "pointnmf-model"
VERSION = 1


def _component_to_box(component: Component) -> dict:
    if isinstance(component, InrFunction):
        return {
            "kind": "inr",
            "frequencies": list(component.encoding.frequencies),
            "layer_sizes": component.layer_sizes,
            "omega0": list(component.omegas),
            "weights": [float(v) for w in component.weights for v in w.ravel()],
            "biases": [float(v) for b in component.biases for v in b],
        }
    elif isinstance(component, TableFunction):
        return {
            "kind": "table",
            "coords": component.coords.tolist(),
            "table": component.raw.tolist(),
            "softplus": component.softplus,
        }
    raise ModelFileError(f"can not serialize component of type {type(component).__name__}")


def _component_from_box(data: Box) -> Component:
    if data.kind == "inr":
        sizes = [int(s) for s in data.layer_sizes]
        weights_flat = np.array(data.weights, dtype=np.float64)
        biases_flat = np.array(data.biases, dtype=np.float64)
        expected_w = sum(a * b for a, b in zip(sizes, sizes[1:]))
        expected_b = sum(sizes[1:])
        if len(weights_flat) != expected_w or len(biases_flat) != expected_b:
            raise ModelFileError(f"parameter count does not match layer sizes {sizes}")
        weights, biases = [], []
        wi = bi = 0
        for fan_in, fan_out in zip(sizes, sizes[1:]):
            weights.append(weights_flat[wi : wi + fan_in * fan_out].reshape(fan_out, fan_in))
            biases.append(biases_flat[bi : bi + fan_out].copy())
            wi += fan_in * fan_out
            bi += fan_out
        return InrFunction(EncodingConfig(tuple(data.frequencies)), weights, biases, tuple(data.omega0))
    elif data.kind == "table":
        return TableFunction(np.array(data["coords"]), np.array(data["table"]), bool(data["softplus"]))
    raise ModelFileError(f'unknown component kind "{data.kind}"')


def save_model(model: InnmfModel, path: Union[str, Path]):
    envelope = Box(
        format=FORMAT,
        version=VERSION,
        K=model.K,
        activation=model.activation_kind.display,
        normalization={
            "t_span": list(model.norm.t_span),
            "f_scale": model.norm.f_scale,
            "m_scale": model.norm.m_scale,
        },
        spectral=[_component_to_box(w) for w in model.spectral],
        activations=[_component_to_box(h) for h in model.activations],
    )
    try:
        envelope.to_json(filename=Path(path), indent=1)
    except OSError as e:
        raise ModelFileError(f'can not write model file "{path}": {e.strerror}') from None


def load_model(path: Union[str, Path]) -> InnmfModel:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f'model file "{path}" does not exist')
    try:
        data = Box.from_json(filename=path)
    except (BoxError, ValueError, json.JSONDecodeError) as e:
        raise ModelFileError(f'model file "{path}" is not a valid model: {e}') from None
    if data.get("format") != FORMAT:
        raise ModelFileError(f'"{path}" is not a {FORMAT} file')
    if data.get("version") != VERSION:
        raise ModelFileError(f'model file version {data.get("version")} is not supported (expected {VERSION})')
    try:
        norm = NormalizationInfo(
            t_span=tuple(data.normalization.t_span),
            f_scale=data.normalization.f_scale,
            m_scale=data.normalization.m_scale,
        )
        spectral = [_component_from_box(c) for c in data.spectral]
        activations = [_component_from_box(c) for c in data.activations]
        if len(spectral) != data.K or len(activations) != data.K:
            raise ModelFileError(f"model declares K={data.K} but holds {len(spectral)}/{len(activations)} components")
        return InnmfModel(spectral, activations, norm)
    except (BoxError, KeyError, AttributeError, TypeError, ValidationError) as e:
        raise ModelFileError(f'model file "{path}" is malformed: {e}') from None
