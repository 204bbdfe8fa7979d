"""Shared reference values.

Every number below was computed before the implementation with mpmath at 40
significant digits (hypergeometric functions, adaptive quadrature, numerical
differentiation) and frozen here.
"""
import math

import pytest

DELTA = 0.5

# 1F1(-1/2; 1/2; 0.1)
HYP1F1_HALF_01 = 0.898299395374839927
# C_1(1, 1) = 1 + pi/4
C1_ONE_ONE = 1.0 + math.pi / 4.0

COVERAGE_ORACLE = {
    # (theta, K, M, kappa, kind): value
    (10.0, 1, 1, 1.0, "union"): 0.2000496102805414836,
    (1.0, 2, 1, 1.0, "union"): 0.66702384822058342982,
    (1.0, 3, 1, 1.0, "union"): 0.72702700127405610083,
    (1.0, 1, 2, 1.0, "joint"): 0.41184511947353732939,
    (1.0, 1, 2, 1.0, "union"): 0.70835318754957742243,
    (1.0, 2, 2, 1.0, "joint"): 0.53486206750370448943,
    (1.0, 2, 2, 1.0, "union"): 0.79918562893746237022,
}

B_K_ORACLE = {
    # (K, kappa): b_K at delta = 1/2
    (2, 1.0): 1.04415056388253305459,
    (3, 1.0): 1.35507281673561871945,
    (2, 2.0): 1.74452194856985978146,
}

A_M_ORACLE = {1: 1.0, 2: 7.0 / 3.0, 3: 8.2, 4: 38.4095238095238095,
              5: 224.873015873015873, 6: 1579.84329004329004}

# Estimated effective load by shadowing (dB) and K
KAPPA_TABLE = {
    0: {1: 1.0101, 2: 1.7166, 3: 2.3640, 4: 2.9889, 5: 3.6018},
    6: {1: 1.0022, 2: 1.6385, 3: 2.1904, 4: 2.7145, 5: 3.2206},
    10: {1: 1.0008, 2: 1.6129, 3: 2.1096, 4: 2.5730, 5: 3.0152},
}


@pytest.fixture
def delta():
    return DELTA


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion."""
    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        request.config.stash[_ACCEPTANCE].append((number, line))
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
