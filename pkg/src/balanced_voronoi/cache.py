"""On-disk cache for dual-weight grids and coefficient tables, keyed by content hash."""
from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np

from .hankel import DualWeight, GammaData, dual_weight
from .whittaker import FourierTable

CACHE_VERSION = 1
ENV_VAR = "VERIFY_CACHE_DIR"
PREFIXES = ("dual-", "table-")


def resolve_dir(path: str | os.PathLike | None = None) -> Path:
    if path is None:
        path = os.environ.get(ENV_VAR) or Path.home() / ".cache" / "balanced_voronoi"
    d = Path(path)
    d.mkdir(parents=True, exist_ok=True)
    if not os.access(d, os.W_OK):
        raise PermissionError(f"cache directory {d} is not writable")
    return d


def dual_key(w, g: GammaData, **kw) -> str:
    blob = json.dumps({"w": w.key(), "g": g.key(), "kw": {k: repr(v) for k, v in sorted(kw.items())},
                       "v": CACHE_VERSION}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:20]


def _save_dual(dw: DualWeight, path: Path) -> None:
    t, phi0, phi1 = dw._phi
    meta = {"sigma": dw.sigma, "T": dw.T, "dt": dw.dt, "N": dw.N, "certified": list(dw.certified),
            "decay": {str(k): v for k, v in dw.decay.items()}, "interp_error": dw.interp_error,
            "meta": dw.meta}
    with open(path, "wb") as fh:
        np.savez(fh, log_y=dw.log_y, values_pos=dw.values_pos, values_neg=dw.values_neg,
                 t=t, phi0=phi0, phi1=phi1, meta=np.array(json.dumps(meta)))


def _load_dual(path: Path) -> DualWeight:
    with np.load(path) as z:
        meta = json.loads(str(z["meta"]))
        return DualWeight(log_y=z["log_y"], values_pos=z["values_pos"], values_neg=z["values_neg"],
                          sigma=meta["sigma"], T=meta["T"], dt=meta["dt"], N=meta["N"],
                          certified=tuple(meta["certified"]),
                          decay={int(k): v for k, v in meta["decay"].items()},
                          interp_error=meta["interp_error"], meta=meta["meta"],
                          _phi=(z["t"], z["phi0"], z["phi1"]))


def cached_dual_weight(w, g: GammaData, cache_dir: str | os.PathLike | None = None,
                       **kw) -> tuple[DualWeight, bool]:
    """(dual weight, cache hit); the directory defaults to $VERIFY_CACHE_DIR, then ~/.cache."""
    d = resolve_dir(cache_dir)
    path = d / f"dual-{dual_key(w, g, **kw)}.npz"
    if path.exists():
        return _load_dual(path), True
    dw = dual_weight(w, g, **kw)
    tmp = path.with_suffix(".tmp")
    _save_dual(dw, tmp)
    tmp.replace(path)
    return dw, False


def cached_tau_table(nmax: int, cache_dir: str | os.PathLike | None = None) -> tuple[FourierTable, bool]:
    d = resolve_dir(cache_dir)
    path = d / f"table-tau-{nmax}-v{CACHE_VERSION}.csv"
    if path.exists():
        return FourierTable.load(path), True
    table = FourierTable.tau(nmax)
    table.save(path)
    return table, False


def inspect(cache_dir: str | os.PathLike | None = None) -> list[dict]:
    d = resolve_dir(cache_dir)
    out = []
    for p in sorted(d.iterdir()):
        if p.is_file() and p.name.startswith(PREFIXES):
            out.append({"name": p.name, "hash": hashlib.sha256(p.read_bytes()).hexdigest()[:16],
                        "bytes": p.stat().st_size})
    return out


def clear(cache_dir: str | os.PathLike | None = None) -> int:
    d = resolve_dir(cache_dir)
    n = 0
    for p in d.iterdir():
        if p.is_file() and p.name.startswith(PREFIXES):
            p.unlink()
            n += 1
    return n
