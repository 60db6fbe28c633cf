"""Sampling of (x, e, z) instances under the two signal models.

All randomness flows through an explicit ``numpy.random.Generator`` backed by
PCG64, so an instance is a pure function of its inputs and seed.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dictionary import Dictionary, format_complex, parse_complex
from .guarantees import Program, Scenario

MODEL2_MAGNITUDE_FLOOR = 0.1


def make_rng(*seed) -> np.random.Generator:
    """PCG64 generator seeded from one or more non-negative integers."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(seed))))


def sample_support(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform k-subset of range(n), sorted, by a partial Fisher-Yates shuffle."""
    if not 0 <= k <= n:
        raise ValueError(f"cannot draw {k} indices out of {n}")
    pool = np.arange(n)
    for i in range(k):
        j = int(rng.integers(i, n))
        pool[i], pool[j] = pool[j], pool[i]
    return np.sort(pool[:k])


def sample_nonzeros_model1(support, n: int, rng: np.random.Generator) -> np.ndarray:
    """Standard complex Gaussian entries (E|v|^2 = 1) on the support, zero elsewhere."""
    support = np.asarray(support, dtype=int)
    v = np.zeros(n, dtype=np.complex128)
    k = support.size
    v[support] = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / math.sqrt(2.0)
    return v


def sample_nonzeros_model2(support, n: int, rng: np.random.Generator) -> np.ndarray:
    """Entries (|g| + 0.1) exp(i theta) with theta uniform on [0, 2 pi)."""
    support = np.asarray(support, dtype=int)
    v = np.zeros(n, dtype=np.complex128)
    k = support.size
    mag = np.abs(rng.standard_normal(k)) + MODEL2_MAGNITUDE_FLOOR
    theta = rng.uniform(0.0, 2.0 * np.pi, k)
    v[support] = mag * np.exp(1j * theta)
    return v


@dataclass(frozen=True, eq=False)
class Instance:
    z: np.ndarray
    x_true: np.ndarray
    e_true: np.ndarray
    support_x: np.ndarray
    support_e: np.ndarray
    scenario: Scenario
    seed: int

    @property
    def nx(self) -> int:
        return int(self.support_x.size)

    @property
    def ne(self) -> int:
        return int(self.support_e.size)


def make_instance(da: Dictionary, db: Dictionary, scenario: Scenario, nx: int, ne: int,
                  seed: int, support_x=None, support_e=None) -> Instance:
    """Draw an instance z = A x + B e.

    Random supports are sampled uniformly. An arbitrary support is taken from
    ``support_x``/``support_e`` when given and defaults to the leading indices
    ``range(k)`` otherwise. Nonzeros of a vector whose support is unknown to the
    recovery program follow the uniform-phase model; the others are Gaussian.
    """
    if da.m != db.m:
        raise ValueError(f"row-count mismatch: {da.m} vs {db.m}")
    if not 0 <= nx <= da.n:
        raise ValueError(f"nx={nx} outside [0, {da.n}]")
    if not 0 <= ne <= db.n:
        raise ValueError(f"ne={ne} outside [0, {db.n}]")
    rng = make_rng(seed)

    def pick(random, given, n, k):
        if given is not None:
            s = np.sort(np.asarray(given, dtype=int))
            if s.size != k or len(set(s.tolist())) != k or (k and (s[0] < 0 or s[-1] >= n)):
                raise ValueError(f"support {given!r} is not a valid {k}-subset of range({n})")
            return s
        return sample_support(n, k, rng) if random else np.arange(k)

    sx = pick(scenario.x_random, support_x, da.n, nx)
    se = pick(scenario.e_random, support_e, db.n, ne)
    x = (sample_nonzeros_model1 if scenario.x_known else sample_nonzeros_model2)(sx, da.n, rng)
    e = (sample_nonzeros_model1 if scenario.e_known else sample_nonzeros_model2)(se, db.n, rng)
    z = da.entries[:, sx] @ x[sx] + db.entries[:, se] @ e[se]
    for arr in (z, x, e, sx, se):
        arr.setflags(write=False)
    return Instance(z, x, e, sx, se, scenario, int(seed))


def scenario_to_dict(s: Scenario) -> dict:
    return {"x_known": s.x_known, "e_known": s.e_known, "x_random": s.x_random,
            "e_random": s.e_random, "program": s.program.value}


def scenario_from_dict(d: dict) -> Scenario:
    return Scenario(d["x_known"], d["e_known"], d["x_random"], d["e_random"], Program(d["program"]))


def save_instance(inst: Instance, path, dictionaries: dict | None = None) -> None:
    """Write ``path`` (JSON metadata) and ``path`` with suffix .csv (vectors)."""
    path = Path(path)
    meta = {
        "seed": inst.seed,
        "scenario": scenario_to_dict(inst.scenario),
        "support_x": inst.support_x.tolist(),
        "support_e": inst.support_e.tolist(),
        "m": int(inst.z.size),
        "n_a": int(inst.x_true.size),
        "n_b": int(inst.e_true.size),
    }
    if dictionaries:
        meta["dictionaries"] = dictionaries
    path.write_text(json.dumps(meta, indent=2))
    with path.with_suffix(".csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["vector", "index", "value"])
        for name, vec in (("z", inst.z), ("x", inst.x_true), ("e", inst.e_true)):
            for i, v in enumerate(vec):
                writer.writerow([name, i, format_complex(v)])


def load_instance(path) -> tuple[Instance, dict]:
    path = Path(path)
    meta = json.loads(path.read_text())
    vecs = {"z": np.zeros(meta["m"], complex), "x": np.zeros(meta["n_a"], complex),
            "e": np.zeros(meta["n_b"], complex)}
    with path.with_suffix(".csv").open(newline="") as fh:
        for row in csv.DictReader(fh):
            vecs[row["vector"]][int(row["index"])] = parse_complex(row["value"])
    inst = Instance(vecs["z"], vecs["x"], vecs["e"], np.array(meta["support_x"], dtype=int),
                    np.array(meta["support_e"], dtype=int), scenario_from_dict(meta["scenario"]),
                    meta["seed"])
    return inst, meta
