"""Built-in corpus of named equations and their expected properties."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .expr import EVOLUTIONARY_VARS, HESSIAN_VARS, Expr, parse
from .integrability import (
    Verdict,
    change_variables,
    evolutionary_to_implicit,
    test_integrability,
    test_integrability_implicit,
)


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    kind: str
    expr: str
    integrable: bool | None = None
    L: tuple | None = None
    box: Mapping[str, tuple] = field(default_factory=dict)
    symmetry_expr: str | None = None
    symmetry_dim: int | None = None
    source: str = ""

    def __post_init__(self):
        if self.kind not in ("evolutionary", "implicit"):
            raise ValueError(f"{self.name}: kind must be 'evolutionary' or 'implicit'")

    def equation(self) -> Expr:
        """The equation as analysed: ``f`` for evolutionary entries, else ``F``."""
        if self.kind == "evolutionary":
            return parse(self.expr, EVOLUTIONARY_VARS)
        F = parse(self.expr, HESSIAN_VARS)
        return change_variables(F, self.L) if self.L is not None else F

    def implicit(self) -> Expr:
        e = self.equation()
        return evolutionary_to_implicit(e) if self.kind == "evolutionary" else e

    def symmetry_form(self) -> Expr | None:
        return None if self.symmetry_expr is None else parse(self.symmetry_expr, HESSIAN_VARS)

    def verdict(self, n_points: int = 5, seed=None, n_triples: int = 100, **kw) -> Verdict:
        box = {k: tuple(v) for k, v in self.box.items()}
        if self.kind == "evolutionary":
            return test_integrability(self.equation(), n_points, seed, n_triples=n_triples, box=box, **kw)
        return test_integrability_implicit(self.equation(), n_points, seed, n_triples=n_triples,
                                           box=box, **kw)


def default_path() -> Path:
    return Path(str(resources.files("hirota") / "data" / "corpus.toml"))


def load_corpus(path: str | Path | None = None) -> dict[str, CorpusEntry]:
    path = Path(path) if path is not None else default_path()
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    out = {}
    for raw in data.get("entry", []):
        raw = dict(raw)
        if "L" in raw:
            L = np.asarray(raw["L"], dtype=float)
            if L.shape != (3, 3):
                raise ValueError(f"{raw.get('name')}: L must be 3x3")
            raw["L"] = tuple(map(tuple, L.tolist()))
        raw["box"] = {k: tuple(v) for k, v in raw.get("box", {}).items()}
        entry = CorpusEntry(**raw)
        if entry.name in out:
            raise ValueError(f"duplicate corpus entry {entry.name!r}")
        out[entry.name] = entry
    return out
