"""Chain, link and manifest files, canonical JSON and CSV emission."""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .chain import Chain, GeneratorMatrix, StochasticKernel, infer_chain
from .config import DEFAULT_TOL, ToleranceConfig
from .errors import InvalidChain, ValidationError
from .orbit import IntertwiningLink


def _plain(obj):
    """Convert numpy containers and scalars into JSON-ready Python objects."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            if np.allclose(obj.imag, 0.0):
                return _plain(obj.real.tolist())
            return {"real": _plain(obj.real.tolist()), "imag": _plain(obj.imag.tolist())}
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, complex):
        return {"real": obj.real, "imag": obj.imag} if obj.imag else obj.real
    if hasattr(obj, "to_dict"):
        return _plain(obj.to_dict())
    return obj


def canonical_json(obj) -> str:
    """Sorted keys and shortest round-trip float text; equal inputs give equal bytes."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def content_hash(*texts: str) -> str:
    h = hashlib.sha256()
    for t in texts:
        h.update(t.encode())
    return h.hexdigest()[:16]


# ----------------------------------------------------------------------------
# chains and links
# ----------------------------------------------------------------------------


def chain_to_dict(chain: Chain) -> dict:
    d = {"kind": chain.kind, "matrix": chain.matrix}
    if chain.pi is not None:
        d["pi"] = chain.pi
    if chain.labels is not None:
        d["labels"] = list(chain.labels)
    if isinstance(chain, GeneratorMatrix) and not chain.markovian:
        d["markovian"] = False
    return _plain(d)


def chain_from_dict(d: dict, tol: ToleranceConfig = DEFAULT_TOL) -> Chain:
    if "matrix" not in d:
        raise InvalidChain("chain file needs a 'matrix' entry")
    kind = d.get("kind")
    pi, labels = d.get("pi"), d.get("labels")
    if kind == "kernel":
        return StochasticKernel(d["matrix"], pi, labels, tol=tol)
    if kind == "generator":
        return GeneratorMatrix(d["matrix"], pi, labels, markovian=bool(d.get("markovian", True)), tol=tol)
    if kind is None:
        return infer_chain(d["matrix"], pi, labels, tol)
    raise InvalidChain(f"unknown chain kind {kind!r}")


def load_chain(path: str | os.PathLike, tol: ToleranceConfig = DEFAULT_TOL) -> Chain:
    """Read a chain from JSON, or from CSV when the suffix is ``.csv``."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return chain_from_csv(path.read_text(), tol)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InvalidChain(f"{path}: {exc}") from exc
    return chain_from_dict(data, tol)


def save_chain(chain: Chain, path: str | os.PathLike) -> None:
    Path(path).write_text(canonical_json(chain_to_dict(chain)))


def chain_from_csv(text: str, tol: ToleranceConfig = DEFAULT_TOL) -> Chain:
    rows = [r for r in csv.reader(_io.StringIO(text)) if r and any(c.strip() for c in r)]
    try:
        M = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise InvalidChain(f"non-numeric CSV entry: {exc}") from exc
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidChain("CSV grid must be square")
    return infer_chain(M, tol=tol)


def chain_to_csv(chain: Chain) -> str:
    return rows_to_csv([{f"c{j}": v for j, v in enumerate(row)} for row in chain.matrix.tolist()], header=False)


def link_to_dict(link: IntertwiningLink) -> dict:
    return _plain({"matrix": link.matrix, "domain_pi": link.domain_pi, "codomain_pi": link.codomain_pi})


def link_from_dict(d: dict, tol: ToleranceConfig = DEFAULT_TOL) -> IntertwiningLink:
    try:
        return IntertwiningLink(d["matrix"], d["domain_pi"], d["codomain_pi"], tol)
    except KeyError as exc:
        raise ValidationError(f"link file is missing {exc}") from exc


def load_link(path: str | os.PathLike, tol: ToleranceConfig = DEFAULT_TOL) -> IntertwiningLink:
    return link_from_dict(json.loads(Path(path).read_text()), tol)


def load_vector(path: str | os.PathLike) -> np.ndarray:
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = data.get("f", data.get("values"))
    return np.asarray(data, dtype=float)


# ----------------------------------------------------------------------------
# family manifests
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class FamilyManifest:
    """``members`` is either a list of chain paths or a rule ``{name, sizes, params}``."""

    members: tuple
    mode: str = "discrete"
    rule: dict | None = None
    base: Path | None = None

    @classmethod
    def from_dict(cls, d: dict, base: Path | None = None) -> "FamilyManifest":
        mode = d.get("mode", "discrete")
        if mode not in ("discrete", "continuous"):
            raise ValidationError(f"unknown mode {mode!r}")
        members = d.get("members")
        if isinstance(members, dict):
            rule = members
        else:
            rule = d.get("rule")
        if rule is not None:
            if "name" not in rule or not rule.get("sizes"):
                raise ValidationError("rule needs 'name' and a non-empty 'sizes' list")
            return cls(tuple(rule["sizes"]), mode, dict(rule), base)
        if not members:
            raise ValidationError("manifest has no members")
        return cls(tuple(members), mode, None, base)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "FamilyManifest":
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text()), path.parent)

    def kernels(self, tol: ToleranceConfig = DEFAULT_TOL) -> list[Chain]:
        from .families import KERNEL_RULES, MEMBER_RULES

        if self.rule is None:
            return [load_chain(self._resolve(p), tol) for p in self.members]
        name, params = self.rule["name"], self.rule.get("params", {})
        if name in KERNEL_RULES:
            return [KERNEL_RULES[name](int(n), **params) for n in self.members]
        if name in MEMBER_RULES:
            return [MEMBER_RULES[name](int(n), **params).L for n in self.members]
        raise ValidationError(f"unknown family rule {name!r}")

    def cutoff_members(self, tol: ToleranceConfig = DEFAULT_TOL) -> list:
        """Members for the L2 tools: rule members keep their links, files become plain members."""
        from .families import MEMBER_RULES
        from .l2cutoff import Member

        if self.rule is not None and self.rule["name"] in MEMBER_RULES:
            params = self.rule.get("params", {})
            return [MEMBER_RULES[self.rule["name"]](int(n), **params) for n in self.members]
        out = []
        for i, c in enumerate(self.kernels(tol)):
            if isinstance(c, StochasticKernel):
                c = GeneratorMatrix(c.matrix - np.eye(c.size), c.pi)
            out.append(Member(c.with_stationary(), label=str(self.members[i])))
        return out

    def _resolve(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() or self.base is None else self.base / p


# ----------------------------------------------------------------------------
# CSV
# ----------------------------------------------------------------------------


def rows_to_csv(rows: list[dict], header: bool = True) -> str:
    if not rows:
        return ""
    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
    if header:
        w.writeheader()
    for r in rows:
        w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in r.items()})
    return buf.getvalue()
