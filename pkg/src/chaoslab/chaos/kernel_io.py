"""Flat-text snapshots of chaos functionals.

One coefficient per line::

    order, multi-index, k-index, coefficient

The multi-index is space separated and zero based (empty for the mean,
which is written as order 0). Header lines start with ``#`` and carry
``m``, ``p`` and the K weights. Coefficients are written with ``repr`` so a
dump/load cycle is exact.
"""

from __future__ import annotations

import logging
import os
import tempfile
from pathlib import Path

import numpy as np

from chaoslab.chaos.functional import ChaosFunctional
from chaoslab.core.tensors import HilbertSpec, SymmetricKernel, multi_indices, row_of
from chaoslab.utils.error_handling import KernelFormatError

logger = logging.getLogger(__name__)

HEADER = "# chaoslab kernel snapshot v1"


def format_functional(F: ChaosFunctional, skip_zeros: bool = True) -> str:
    spec = F.spec
    lines = [
        HEADER,
        f"# m={spec.m}",
        f"# p={spec.p}",
        "# k_weights=" + " ".join(repr(float(w)) for w in spec.k_weights),
        f"# max_order={F.max_order}",
        "# order, multi-index, k-index, coefficient",
    ]
    for i, value in enumerate(F.mean):
        if value != 0.0 or not skip_zeros:
            lines.append(f"0, , {i}, {float(value)!r}")
    for kernel in F.kernels:
        idx = multi_indices(spec.m, kernel.order)
        rows, cols = np.nonzero(kernel.coeffs) if skip_zeros else np.indices(kernel.coeffs.shape).reshape(2, -1)
        for row, col in zip(rows, cols):
            alpha = " ".join(str(int(a)) for a in idx[row])
            lines.append(f"{kernel.order}, {alpha}, {int(col)}, {float(kernel.coeffs[row, col])!r}")
    return "\n".join(lines) + "\n"


def dump_functional(F: ChaosFunctional, path: str | Path) -> Path:
    """Write a snapshot atomically (temp file in the target directory, then rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    content = format_functional(F)
    with tempfile.NamedTemporaryFile("w", encoding="utf-8", newline="\n", dir=path.parent, delete=False) as tmp:
        tmp.write(content)
        temp_name = tmp.name
    os.replace(temp_name, path)
    logger.debug("wrote kernel snapshot %s", path)
    return path


def parse_functional(text: str, source: str = "<string>") -> ChaosFunctional:
    header = {}
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, value = body.split("=", 1)
                header[key.strip()] = value.strip()
            continue
        parts = [part.strip() for part in line.split(",")]
        if len(parts) != 4:
            raise KernelFormatError("expected four comma-separated fields", source, lineno)
        try:
            order = int(parts[0])
            alpha = tuple(int(a) for a in parts[1].split()) if parts[1] else ()
            k_index = int(parts[2])
            value = float(parts[3])
        except ValueError as exc:
            raise KernelFormatError(f"unparseable field: {exc}", source, lineno) from exc
        if len(alpha) != order:
            raise KernelFormatError("multi-index length does not match order", source, lineno)
        entries.append((lineno, order, alpha, k_index, value))

    try:
        m, p = int(header["m"]), int(header["p"])
        weights = np.array([float(w) for w in header["k_weights"].split()])
        max_order = int(header.get("max_order", max((e[1] for e in entries), default=0)))
    except (KeyError, ValueError) as exc:
        raise KernelFormatError(f"missing or invalid header field: {exc}", source) from exc
    spec = HilbertSpec(m, p, weights)

    mean = np.zeros(p)
    coeffs = {n: np.zeros((multi_indices(m, n).shape[0], p)) for n in range(1, max_order + 1)}
    for lineno, order, alpha, k_index, value in entries:
        if not 0 <= k_index < p or any(not 0 <= a < m for a in alpha) or order > max_order:
            raise KernelFormatError("index out of range", source, lineno)
        if order == 0:
            mean[k_index] = value
        else:
            coeffs[order][int(row_of(m, np.array(alpha, dtype=np.intp))), k_index] = value
    kernels = tuple(SymmetricKernel(spec, n, coeffs[n]) for n in range(1, max_order + 1))
    return ChaosFunctional(spec, mean, kernels)


def load_functional(path: str | Path) -> ChaosFunctional:
    path = Path(path)
    return parse_functional(path.read_text(encoding="utf-8"), str(path))
