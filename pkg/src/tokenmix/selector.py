"""Threshold token pruning applied ahead of a mixer."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .mixers import as_seq

__all__ = ["SelectorConfig", "token_scores", "select", "parse_selector"]


@dataclass(frozen=True)
class SelectorConfig:
    """Keep tokens whose score is >= ``tau``.

    ``scorer="l2_norm"`` scores a token by the L2 norm of its row;
    ``scorer="projection"`` by ``|row . psi|`` with a seeded Gaussian ``psi``
    (or an explicit one).
    """

    tau: float
    scorer: str = "l2_norm"
    seed: int = 0
    psi: np.ndarray | None = None

    def __post_init__(self):
        if math.isnan(self.tau):
            raise ParameterError("selector threshold must not be NaN")
        if self.scorer not in ("l2_norm", "projection"):
            raise ParameterError(f"unknown scorer {self.scorer!r}")


def token_scores(x: np.ndarray, cfg: SelectorConfig) -> np.ndarray:
    if cfg.scorer == "l2_norm":
        return np.linalg.norm(x, axis=1)
    psi = cfg.psi
    if psi is None:
        psi = np.random.default_rng(cfg.seed).standard_normal(x.shape[1])
    return np.abs(x @ np.reshape(psi, -1))


def select(x, cfg: SelectorConfig) -> tuple[np.ndarray, np.ndarray]:
    """Return the kept rows and their original indices, in order.

    If no token reaches ``tau`` the single highest-scoring token is kept.
    """
    x = as_seq(x)
    scores = token_scores(x, cfg)
    kept = np.flatnonzero(scores >= cfg.tau)
    if kept.size == 0:
        kept = np.array([int(np.argmax(scores))])
    return x[kept], kept


def parse_selector(text: str) -> SelectorConfig:
    """Parse ``"tau=1.5,scorer=l2_norm"`` (``seed=`` optional)."""
    fields = {}
    for part in text.split(","):
        if not part.strip():
            continue
        key, sep, value = part.partition("=")
        if not sep:
            raise ParameterError(f"bad selector field {part!r}; expected key=value")
        fields[key.strip()] = value.strip()
    unknown = set(fields) - {"tau", "scorer", "seed"}
    if unknown:
        raise ParameterError(f"unknown selector fields: {sorted(unknown)}")
    if "tau" not in fields:
        raise ParameterError("selector needs tau=<value>")
    return SelectorConfig(
        tau=float(fields["tau"]),
        scorer=fields.get("scorer", "l2_norm"),
        seed=int(fields.get("seed", 0)),
    )
