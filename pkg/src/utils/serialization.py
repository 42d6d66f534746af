"""
JSON helpers: exact rationals as "p/q" strings, reals as shortest round-trip decimals,
numpy data as plain lists.
"""

import dataclasses
import json
import math
from enum import Enum
from fractions import Fraction
from typing import Any

import numpy as np
from pydantic import BaseModel


def parse_number(value: Any) -> float | Fraction:
    """``"3/8"`` becomes an exact Fraction; JSON numbers stay floats."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    return float(value)


def is_exact(values) -> bool:
    return all(isinstance(v, (Fraction, int)) and not isinstance(v, bool) for v in values)


def format_fraction(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


def _float(value: float) -> float | str:
    if math.isfinite(value):
        return value
    return "inf" if value > 0 else ("-inf" if value < 0 else "nan")


def to_jsonable(obj: Any) -> Any:
    if hasattr(obj, "to_jsonable") and not isinstance(obj, type):
        return to_jsonable(obj.to_jsonable())
    if isinstance(obj, BaseModel):
        return to_jsonable(obj.model_dump())
    if isinstance(obj, Fraction):
        return format_fraction(obj)
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if dataclasses.is_dataclass(obj):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    return obj


def dumps(obj: Any, indent: int | None = 2) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=indent)
