"""Curve data behind the threshold figures.

Each preset yields ``(name, header, rows)`` triples, one per curve. Beta is
log(m) for the pseudo-inverse and l0 programs and log(3m) for l1, so every
curve carries the same guaranteed success probability 1 - 1/m.
"""

from __future__ import annotations

import math

import numpy as np

from . import guarantees as g
from .dictionary import two_onb_profile, unitary_pair_profile
from .montecarlo import NeRule, scaling_table, threshold_curve

P = g.Program
CURVE_HEADER = ["ne", "max_nx"]
SCALING_HEADER = ["m", "max_nx", "ne"]


def _sc(x_known, e_known, x_random, e_random, program):
    return g.Scenario(x_known, e_known, x_random, e_random, program)


CASE_1B = _sc(True, True, True, False, P.PSEUDOINVERSE)
CASE_1C = _sc(True, True, True, True, P.PSEUDOINVERSE)


def preset_beta(program: g.Program, m: float) -> float:
    return math.log(3 * m) if program is P.L1 else math.log(m)


def ne_grid(n_b: int, points: int = 40) -> list[int]:
    grid = np.unique(np.floor(np.logspace(0, math.log10(n_b), points)).astype(np.int64))
    return [0] + [int(v) for v in grid]


def _curves(tag, profile, curves, points):
    m = profile.m
    for label, scenario in curves:
        rows = threshold_curve(scenario, profile, ne_grid(profile.n_b, points),
                               preset_beta(scenario.program, m))
        yield f"{tag}__{label}__m1e{round(math.log10(m))}", CURVE_HEADER, rows


def _family(profile_fn, ms, curves):
    def build(tag, points):
        for m in ms:
            yield from _curves(tag, profile_fn(m), curves, points)
    return build


_E_KNOWN = [
    ("2b-l0", _sc(False, True, True, False, P.L0)),
    ("2b-l1", _sc(False, True, True, False, P.L1)),
    ("2d-l0", _sc(False, True, True, True, P.L0)),
    ("2d-l1", _sc(False, True, True, True, P.L1)),
]
_NONE_KNOWN = [
    ("3b-l1", _sc(False, False, True, False, P.L1)),
    ("3c-l1", _sc(False, False, True, True, P.L1)),
]
_KNOWLEDGE = [
    ("1c-pinv", CASE_1C),
    ("2d-l0", _sc(False, True, True, True, P.L0)),
    ("3c-l0", _sc(False, False, True, True, P.L0)),
]


def _knowledge_etf(tag, points):
    yield from _curves(tag, two_onb_profile(1e8), _KNOWLEDGE, points)
    swapped = two_onb_profile(1e8).swapped()
    for name, header, rows in _curves(tag, swapped, _KNOWLEDGE[:2], points):
        yield name.replace("__m1e", "__swapped__m1e"), header, rows


def _scaling(tag, points):
    ms = [round(10 ** (k / 2)) for k in range(8, 25)]
    for rule in (NeRule.const(), NeRule.sqrt_m(), NeRule.m_over()):
        yield f"{tag}__{rule.label}", SCALING_HEADER, scaling_table(ms, rule)


PRESETS = {
    "fig-unitary-a": _family(unitary_pair_profile, [1e4, 1e8], [("1b", CASE_1B), ("1c", CASE_1C)]),
    "fig-unitary-b": _family(unitary_pair_profile, [1e8], _E_KNOWN),
    "fig-unitary-c": _family(unitary_pair_profile, [1e8], _NONE_KNOWN),
    "fig-3onb-a": _family(two_onb_profile, [1e8], [("1b", CASE_1B), ("1c", CASE_1C)]),
    "fig-3onb-b": _family(two_onb_profile, [1e8], _E_KNOWN),
    "fig-3onb-c": _family(two_onb_profile, [1e8], _NONE_KNOWN),
    "fig-knowledge": _family(unitary_pair_profile, [1e6, 1e8], _KNOWLEDGE),
    "fig-knowledge-etf": _knowledge_etf,
    "fig-scaling": _scaling,
}


def build_preset(name: str, points: int = 40):
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; valid presets: {', '.join(PRESETS)}")
    return list(PRESETS[name](name, points))
