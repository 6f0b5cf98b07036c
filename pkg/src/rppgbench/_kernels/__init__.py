"""Hot-loop kernels with a compiled core and a numpy fallback.

The compiled extension is used when it was built at install time. Set
``RPPGBENCH_PURE_PYTHON=1`` to force the fallback.
"""
import os

import numpy as np
from types import ModuleType

from . import _pykernels

_FUNCS = ("box_means", "box_mean_frame", "pos_overlap_add", "chrom_overlap_add")


def _load_compiled():
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels


_compiled = None if os.environ.get("RPPGBENCH_PURE_PYTHON") else _load_compiled()


def available_backends():
    names = ["python"]
    if _load_compiled() is not None:
        names.insert(0, "cython")
    return names


def get_backend(name: str) -> ModuleType:
    if name == "python":
        return _pykernels
    if name == "cython":
        mod = _load_compiled()
        if mod is None:
            raise ImportError("compiled kernels are not built")
        return _contiguous(mod)
    raise ValueError(f"unknown kernel backend {name!r}")



def _contiguous(mod: ModuleType) -> ModuleType:
    """Wrap a backend so callers may pass any array layout."""
    if mod is _pykernels:
        return mod
    ns = ModuleType(mod.__name__)
    ns.box_means = lambda frames, boxes: mod.box_means(
        np.ascontiguousarray(frames, dtype=np.uint8), np.ascontiguousarray(boxes, dtype=np.intp))
    ns.box_mean_frame = lambda frame, box: mod.box_mean_frame(np.ascontiguousarray(frame, dtype=np.uint8), box)
    ns.pos_overlap_add = lambda rgb, L: mod.pos_overlap_add(np.ascontiguousarray(rgb, dtype=np.float64), L)
    ns.chrom_overlap_add = lambda rgb, L: mod.chrom_overlap_add(np.ascontiguousarray(rgb, dtype=np.float64), L)
    return ns


_active = _contiguous(_compiled) if _compiled is not None else _pykernels
BACKEND = "cython" if _compiled is not None else "python"

box_means = _active.box_means
box_mean_frame = _active.box_mean_frame
pos_overlap_add = _active.pos_overlap_add
chrom_overlap_add = _active.chrom_overlap_add
hann_periodic = _pykernels.hann_periodic

__all__ = ["BACKEND", "available_backends", "get_backend", *_FUNCS, "hann_periodic"]
