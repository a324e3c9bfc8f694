"""JSON serialization with explicit float formatting.

All reports print floats with 17 significant digits (lossless for IEEE
doubles) and carry separate 4-significant-figure display strings, so
machine output is exact and human output matches the usual table
precision.
"""

from __future__ import annotations

import json
import math
from typing import Any


def format_float(x: float, sig: int = 17) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return f"{x:.{sig}g}"


def sig_figs(x: float, sig: int = 4) -> str:
    """Round to `sig` significant figures, keeping trailing zeros."""
    if math.isnan(x) or math.isinf(x):
        return format_float(x)
    return f"{x:#.{sig}g}"


def dumps(obj: Any, indent: int | None = None) -> str:
    """Like json.dumps but renders every float with 17 significant digits."""
    out: list[str] = []
    _write(obj, out, indent, 0)
    return "".join(out)


def _write(obj: Any, out: list[str], indent: int | None, depth: int) -> None:
    nl, pad, pad_in = "", "", ""
    if indent is not None:
        nl = "\n"
        pad = " " * (indent * depth)
        pad_in = " " * (indent * (depth + 1))
    if obj is None or isinstance(obj, (bool, int, str)):
        # bool before int: True is an int but must print as JSON true
        out.append(json.dumps(obj))
    elif isinstance(obj, float):
        out.append(format_float(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{" + nl)
        for i, (key, val) in enumerate(obj.items()):
            out.append(pad_in + json.dumps(str(key)) + (": " if indent else ":"))
            _write(val, out, indent, depth + 1)
            if i < len(obj) - 1:
                out.append("," + nl)
        out.append(nl + pad + "}")
    elif isinstance(obj, (list, tuple)):
        if not len(obj):
            out.append("[]")
            return
        out.append("[" + nl)
        for i, val in enumerate(obj):
            out.append(pad_in)
            _write(val, out, indent, depth + 1)
            if i < len(obj) - 1:
                out.append("," + nl)
        out.append(nl + pad + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
