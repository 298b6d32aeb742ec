"""Query-commit probing environment.

The environment owns the realized edge bits of one trial. An algorithm asks
about a pair of currently unmatched vertices; if the edge is there the pair
is committed on the spot and can never be undone.
"""

from __future__ import annotations

import csv
import enum
from typing import Iterable, NamedTuple, TextIO

import numpy as np

from .graph import BipartiteInstance, InstanceError, Matching, Realization
from .seeding import trial_rng


class Outcome(enum.Enum):
    MATCHED = "matched"
    EDGE_ABSENT = "absent"


class ProbeError(RuntimeError):
    pass


class ProbeOfMatchedVertex(ProbeError):
    pass


class DuplicateProbe(ProbeError):
    pass


class ProbeRecord(NamedTuple):
    u: int
    v: int
    outcome: Outcome


class ProbeEnv:
    def __init__(self, instance: BipartiteInstance, realization: Realization, seed=None):
        if tuple(realization.shape) != instance.shape:
            raise InstanceError("realization shape does not match instance")
        self.instance = instance
        self.realization = realization
        # one draw per trial, even for correlated laws
        self._bits = realization.sample(trial_rng(seed, "bits") if seed is not None else np.random.default_rng())
        self._bits.setflags(write=False)
        self.left_mate = np.full(instance.n_left, -1, dtype=np.int64)
        self.right_mate = np.full(instance.n_right, -1, dtype=np.int64)
        self._probed = np.zeros(instance.shape, dtype=bool)
        self.log: list[ProbeRecord] = []

    @property
    def bits(self) -> np.ndarray:
        """Realized edge bits. Reserved for analysis code; algorithms must not read it."""
        return self._bits

    def is_free(self, u: int, v: int) -> bool:
        return self.left_mate[u] < 0 and self.right_mate[v] < 0

    def probe(self, u: int, v: int) -> Outcome:
        if self.left_mate[u] >= 0:
            raise ProbeOfMatchedVertex(f"left vertex {u} is already matched to {self.left_mate[u]}")
        if self.right_mate[v] >= 0:
            raise ProbeOfMatchedVertex(f"right vertex {v} is already matched to {self.right_mate[v]}")
        if self._probed[u, v]:
            raise DuplicateProbe(f"pair ({u},{v}) was already probed")
        self._probed[u, v] = True
        if self._bits[u, v]:
            self.left_mate[u] = v
            self.right_mate[v] = u
            outcome = Outcome.MATCHED
        else:
            outcome = Outcome.EDGE_ABSENT
        self.log.append(ProbeRecord(u, v, outcome))
        return outcome

    def final_matching(self) -> Matching:
        return Matching.from_mates(self.instance, self.left_mate)


def new_env(instance: BipartiteInstance, realization: Realization, seed=None) -> ProbeEnv:
    return ProbeEnv(instance, realization, seed)


def final_matching(env: ProbeEnv) -> Matching:
    return env.final_matching()


LOG_COLUMNS = ("trial", "step", "u", "v", "outcome")


def write_probe_log(out: TextIO, logs: Iterable[tuple[int, list[ProbeRecord]]]) -> None:
    """CSV rows (trial, step, u, v, outcome) for a sequence of (trial, log) pairs."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(LOG_COLUMNS)
    for trial, log in logs:
        for step, rec in enumerate(log):
            writer.writerow((trial, step, rec.u, rec.v, rec.outcome.value))
