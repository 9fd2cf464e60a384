"""Benchmark symbolic control problems SCP1-SCP4.

All four use a planar single integrator (``dt = 1``), ``T = 20`` and start at
``x0``. The rectangles below are stand-in geometry chosen for this package
inside the workspace ``[0, 10]^2``; each is ``(x_lo, x_hi, y_lo, y_hi)``.

Specifications:

* SCP1, SCP2: ``G[0,20](avoid all obstacles) & G[0,20](|u| <= 1) & F[0,20] Tar1``
* SCP3: as above with ``F[0,6] Tar1 & F[6,12] Tar2 & F[14,20] Tar3``
* SCP4: SCP3 with the third window ``[12,20]``
"""

from __future__ import annotations

from types import MappingProxyType

from .dynamics import single_integrator_2d
from .formula import PredicateTable
from .parser import parse
from .synthesis import SynthesisProblem

HORIZON = 20
WORKSPACE = (0.0, 10.0, 0.0, 10.0)
CONTROL_LIMIT = 1.0

_MULTI = {
    "x0": (1.0, 1.0),
    "targets": {
        "Tar1": (3.0, 5.0, 1.0, 3.0),
        "Tar2": (6.0, 8.0, 5.0, 7.0),
        "Tar3": (2.0, 4.0, 7.0, 9.0),
    },
    "obstacles": {
        "Obs1": (5.0, 6.5, 3.0, 4.5),
        "Obs2": (4.0, 5.5, 6.5, 9.0),
    },
}

FIXTURES = MappingProxyType(
    {
        1: {
            "x0": (1.0, 1.0),
            "targets": {"Tar1": (7.0, 9.0, 7.0, 9.0)},
            "obstacles": {"Obs1": (3.0, 6.0, 3.5, 6.5)},
            "windows": {"Tar1": (0, 20)},
        },
        2: {
            "x0": (1.0, 1.0),
            "targets": {"Tar1": (7.0, 9.0, 7.0, 9.0)},
            # Two walls leaving a 1.4-wide gap around y = 5.
            "obstacles": {"Obs1": (4.0, 6.0, 0.0, 4.3), "Obs2": (4.0, 6.0, 5.7, 10.0)},
            "windows": {"Tar1": (0, 20)},
        },
        3: {**_MULTI, "windows": {"Tar1": (0, 6), "Tar2": (6, 12), "Tar3": (14, 20)}},
        4: {**_MULTI, "windows": {"Tar1": (0, 6), "Tar2": (6, 12), "Tar3": (12, 20)}},
    }
)


def _rect(r):
    x_lo, x_hi, y_lo, y_hi = r
    return [x_lo, y_lo], [x_hi, y_hi]


def scp_formula_text(scp_id: int) -> str:
    fx = FIXTURES[scp_id]
    avoid = " & ".join(f"!{name}" for name in fx["obstacles"])
    reach = " & ".join(f"F[{a},{b}] {name}" for name, (a, b) in fx["windows"].items())
    return f"G[0,{HORIZON}]({avoid}) & G[0,{HORIZON}] Ulim & {reach}"


def build_scp(scp_id: int, noise: float = 0.0, control_penalty: float = 0.01) -> SynthesisProblem:
    """Fixture problem ``scp_id``; ``noise`` adds ``[-noise, noise]`` to every predicate."""
    if scp_id not in FIXTURES:
        raise ValueError(f"unknown SCP id {scp_id}; expected one of {sorted(FIXTURES)}")
    fx = FIXTURES[scp_id]
    system = single_integrator_2d(1.0)
    nb = (-noise, noise)
    table = PredicateTable(q=system.q)
    # Composite layout (y, x, u): outputs on channels 0-1, controls on 4-5.
    for name, r in {**fx["targets"], **fx["obstacles"]}.items():
        lo, hi = _rect(r)
        table.box(name, [0, 1], lo, hi, nb)
    table.box("Ulim", [4, 5], [-CONTROL_LIMIT] * 2, [CONTROL_LIMIT] * 2, nb)
    f = parse(scp_formula_text(scp_id), table)
    return SynthesisProblem(system, fx["x0"], HORIZON, f, control_penalty, name=f"SCP{scp_id}")
