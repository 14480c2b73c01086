"""Checkpoint container: magic, JSON header, raw little-endian tensor bytes.

torch.save is avoided on purpose; its container embeds details that are not
guaranteed stable across versions. Here two identical training runs produce
byte-identical files, which the run manifest (sha256 per file) makes easy to
check.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path
from typing import Dict, Mapping, Tuple

import numpy as np
import torch
import torch.nn as nn

MAGIC = b"SVTCKPT1"
FORMAT_NAME = "svt-ckpt-v1"

_DTYPE_TO_STR = {
    torch.float32: "<f4",
    torch.float64: "<f8",
    torch.int64: "<i8",
    torch.int32: "<i4",
    torch.uint8: "|u1",
    torch.bool: "|b1",
}
_STR_TO_NP = {v: np.dtype(v) for v in _DTYPE_TO_STR.values()}


def _json_bytes(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def save_checkpoint(
    path: Path,
    stage: str,
    modules: Mapping[str, nn.Module],
    config: dict,
    meta: dict | None = None,
) -> None:
    """Write one stage checkpoint; tensor names are '<module>.<param>'."""
    entries = {}
    payload = bytearray()
    for mod_name, module in modules.items():
        state = module.state_dict()
        for key in sorted(state):
            t = state[key].detach().cpu().contiguous()
            if t.dtype not in _DTYPE_TO_STR:
                raise ValueError(f"unsupported tensor dtype {t.dtype} for {mod_name}.{key}")
            dtype = _DTYPE_TO_STR[t.dtype]
            raw = t.numpy().astype(_STR_TO_NP[dtype], copy=False).tobytes()
            entries[f"{mod_name}.{key}"] = {
                "dtype": dtype,
                "shape": list(t.shape),
                "offset": len(payload),
                "nbytes": len(raw),
            }
            payload.extend(raw)
    header = {
        "format": FORMAT_NAME,
        "stage": stage,
        "config": config,
        "meta": meta or {},
        "tensors": entries,
    }
    header_bytes = _json_bytes(header)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(bytes(payload))


def load_checkpoint(path: Path) -> Tuple[dict, Dict[str, torch.Tensor]]:
    """Read a checkpoint back as (header, {tensor name: tensor})."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    blob = path.read_bytes()
    if blob[: len(MAGIC)] != MAGIC:
        raise ValueError(f"{path} is not a checkpoint file (bad magic)")
    (header_len,) = struct.unpack_from("<I", blob, len(MAGIC))
    header_start = len(MAGIC) + 4
    header = json.loads(blob[header_start : header_start + header_len].decode("utf-8"))
    if header.get("format") != FORMAT_NAME:
        raise ValueError(f"unsupported checkpoint format {header.get('format')!r}")
    payload = blob[header_start + header_len :]
    tensors = {}
    for name, info in header["tensors"].items():
        raw = payload[info["offset"] : info["offset"] + info["nbytes"]]
        arr = np.frombuffer(raw, dtype=_STR_TO_NP[info["dtype"]]).reshape(info["shape"]).copy()
        tensors[name] = torch.from_numpy(arr)
    return header, tensors


def load_module_state(
    tensors: Mapping[str, torch.Tensor], module: nn.Module, prefix: str
) -> None:
    """Restore one module's parameters from a loaded tensor map."""
    want = {k[len(prefix) + 1 :]: v for k, v in tensors.items() if k.startswith(prefix + ".")}
    missing = set(module.state_dict()) - set(want)
    if missing:
        raise ValueError(f"checkpoint is missing tensors for {prefix}: {sorted(missing)[:4]}")
    converted = {}
    for key, ref in module.state_dict().items():
        converted[key] = want[key].to(ref.dtype).reshape(ref.shape)
    module.load_state_dict(converted)


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(ckpt_dir: Path, config_hash: str = "", seed: int = 0) -> Path:
    """Hash every checkpoint and csv in the directory into manifest.json.

    The manifest carries the config hash, the seed, and the code version so a
    run is identifiable from its artifacts alone; no timestamps, so repeated
    identical runs write identical bytes.
    """
    from ._version import version_string

    ckpt_dir = Path(ckpt_dir)
    files = {}
    for p in sorted(ckpt_dir.iterdir()):
        if p.name == "manifest.json" or p.is_dir():
            continue
        files[p.name] = sha256_file(p)
    manifest_path = ckpt_dir / "manifest.json"
    manifest_path.write_bytes(
        _json_bytes(
            {
                "format": "svt-manifest-v1",
                "config_hash": config_hash,
                "seed": seed,
                "version": version_string(),
                "files": files,
            }
        )
    )
    return manifest_path


def manifest_hash(ckpt_dir: Path) -> str:
    """Digest of the run manifest; embedded in service responses."""
    path = Path(ckpt_dir) / "manifest.json"
    if not path.exists():
        return ""
    return sha256_file(path)[:16]
