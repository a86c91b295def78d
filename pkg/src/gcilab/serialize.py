from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Union

import numpy as np

from .convex_sets import (
    Ball,
    Body,
    Box,
    Ellipsoid,
    Intersection,
    LinearImage,
    MinkowskiSum,
    Polytope,
    Product,
    TranslatedBody,
)
from .errors import DomainError
from .models import AnglePair, MatrixQuintuple


def _rows(a: np.ndarray) -> list:
    return np.asarray(a, dtype=float).tolist()


def body_to_dict(body: Body) -> Dict[str, Any]:
    d: Dict[str, Any] = {"dimension": body.dimension}
    if isinstance(body, Ball):
        d.update(shape="ball", radius=body.radius)
    elif isinstance(body, Box):
        d.update(shape="box", halfwidths=_rows(body.halfwidths))
    elif isinstance(body, Ellipsoid):
        d.update(shape="ellipsoid", q_matrix=_rows(body.q))
    elif isinstance(body, Polytope):
        d.update(
            shape="polytope",
            halfspaces=[{"normal": a.tolist(), "offset": c} for a, c in body.halfspaces],
        )
    elif isinstance(body, LinearImage):
        d.update(shape="linear_image", transform=_rows(body.transform), base=body_to_dict(body.base))
    elif isinstance(body, TranslatedBody):
        d.update(shape="translated", offset=_rows(body.offset), base=body_to_dict(body.base))
    elif isinstance(body, (Intersection, Product, MinkowskiSum)):
        shape = {Intersection: "intersection", Product: "product", MinkowskiSum: "minkowski_sum"}
        d.update(
            shape=shape[type(body)],
            left=body_to_dict(body.left),
            right=body_to_dict(body.right),
        )
    else:
        raise DomainError(f"cannot serialize body of type {type(body).__name__}")
    return d


def body_from_dict(d: Dict[str, Any]) -> Body:
    if not isinstance(d, dict) or "shape" not in d:
        raise DomainError(f"body record must be an object with a 'shape' field, got {d!r}")
    shape = d["shape"]

    if shape == "ball":
        body: Body = Ball(float(d["radius"]), int(d["dimension"]))
    elif shape == "box":
        body = Box(np.asarray(d["halfwidths"], dtype=float))
    elif shape == "ellipsoid":
        body = Ellipsoid(np.asarray(d["q_matrix"], dtype=float))
    elif shape == "polytope":
        body = Polytope.from_halfspaces([(h["normal"], h["offset"]) for h in d["halfspaces"]])
    elif shape == "linear_image":
        body = LinearImage(np.asarray(d["transform"], dtype=float), body_from_dict(d["base"]))
    elif shape == "translated":
        body = TranslatedBody(body_from_dict(d["base"]), np.asarray(d["offset"], dtype=float))
    elif shape == "intersection":
        body = Intersection(body_from_dict(d["left"]), body_from_dict(d["right"]))
    elif shape == "product":
        body = Product(body_from_dict(d["left"]), body_from_dict(d["right"]))
    elif shape == "minkowski_sum":
        body = MinkowskiSum(body_from_dict(d["left"]), body_from_dict(d["right"]))
    else:
        raise DomainError(f"unknown shape {shape!r}")

    if "dimension" in d and int(d["dimension"]) != body.dimension:
        raise DomainError(
            f"record declares dimension {d['dimension']} but its {shape} has dimension {body.dimension}"
        )
    return body


def dump_body(body: Body, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(body_to_dict(body), indent=2), encoding="utf-8")


def load_body(path: Union[str, Path]) -> Body:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DomainError(f"malformed body file {path}: {e}") from e
    return body_from_dict(data)


def quintuple_from_dict(d: Dict[str, Any]) -> MatrixQuintuple:
    return MatrixQuintuple(*(np.asarray(d[k], dtype=float) for k in ("m", "p", "r", "s", "t")))


def angle_pair_from_dict(d: Dict[str, Any]) -> AnglePair:
    basis = d.get("shared_eigenbasis")
    return AnglePair(
        np.asarray(d["alpha"], dtype=float),
        np.asarray(d["beta"], dtype=float),
        None if basis is None else np.asarray(basis, dtype=float),
    )
