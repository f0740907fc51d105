"""Flat key = value text records for exchanging sequences between tools.

Example::

    order = 2
    axes = xzxzxz
    alphas = 0.0784648345914, 0.125, 0.171535165409, 0.25, 0.171535165409, 0.125, 0.0784648345914
    parity = y
"""

from __future__ import annotations

from pathlib import Path

from .types import DDSequence, PulseAxis, normalized

FIELDS = ("order", "axes", "alphas", "parity")


class SequenceFormatError(ValueError):
    pass


def dumps(seq: DDSequence, order: int) -> str:
    alphas = ", ".join(f"{a:.12g}" for a in seq.intervals)
    return (f"order = {order}\naxes = {seq.axes_string}\nalphas = {alphas}\n"
            f"parity = {seq.parity_axis.value}\n")


def loads(text: str, source: str = "<string>") -> tuple[DDSequence, int]:
    """Parse a record; returns the sequence and its stated order."""
    values: dict[str, tuple[int, str]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SequenceFormatError(f"{source}:{lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in FIELDS:
            raise SequenceFormatError(f"{source}:{lineno}: unknown field {key!r}")
        if key in values:
            raise SequenceFormatError(f"{source}:{lineno}: duplicate field {key!r}")
        values[key] = (lineno, val)
    missing = [f for f in FIELDS if f not in values]
    if missing:
        raise SequenceFormatError(f"{source}: missing field(s) {', '.join(missing)}")
    lineno, raw_order = values["order"]
    try:
        order = int(raw_order)
    except ValueError:
        raise SequenceFormatError(f"{source}:{lineno}: order must be an integer") from None
    lineno, raw_axes = values["axes"]
    axes = "" if raw_axes in ("", "-") else raw_axes
    lineno_a, raw_alphas = values["alphas"]
    try:
        alphas = [float(v) for v in raw_alphas.replace(",", " ").split()]
    except ValueError:
        raise SequenceFormatError(f"{source}:{lineno_a}: alphas must be decimals") from None
    lineno_p, raw_par = values["parity"]
    try:
        seq = DDSequence(axes, normalized(alphas), PulseAxis.parse(raw_par))
    except ValueError as exc:
        raise SequenceFormatError(f"{source}:{lineno_p}: {exc}") from None
    return seq, order


def write_sequence(path, seq: DDSequence, order: int) -> None:
    Path(path).write_text(dumps(seq, order))


def read_sequence(path) -> tuple[DDSequence, int]:
    p = Path(path)
    return loads(p.read_text(), str(p))
