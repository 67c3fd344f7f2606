"""Grid construction, differentiation order, and sampled-function safety."""

import numpy as np
import pytest

from hardyball.grids import (ExtrapolationError, GridError, RadialFunction,
                             RadialGrid, log_derivative_matrix_apply)


def test_geometric_grid_endpoints_and_monotonicity():
    g = RadialGrid.geometric(1e-6, 0.5, 200)
    assert g.nodes[0] == 1e-6
    assert g.nodes[-1] == 0.5
    assert np.all(np.diff(g.nodes) > 0)
    assert len(g) == 200


@pytest.mark.parametrize("r0,R", [(0.0, 0.5), (0.5, 0.5), (0.1, 1.0)])
def test_geometric_grid_rejects_bad_bounds(r0, R):
    with pytest.raises(GridError):
        RadialGrid.geometric(r0, R, 50)


def test_grid_rejects_decreasing_nodes():
    with pytest.raises(GridError):
        RadialGrid(np.linspace(0.5, 0.1, 20), 0.1, 0.5)


def test_log_derivative_is_fourth_order():
    # differentiate sin on shrinking uniform grids; the error of the
    # 4th-order stencils must drop ~16x per halving
    errs = []
    for num in (101, 201, 401):
        t = np.linspace(0.0, 2.0, num)
        d = log_derivative_matrix_apply(t, np.sin(t))
        errs.append(np.max(np.abs(d - np.cos(t))))
    assert errs[0] / errs[1] > 12.0
    assert errs[1] / errs[2] > 12.0


def test_log_derivative_requires_uniform_grid():
    t = np.array([0.0, 0.1, 0.25, 0.5, 0.6, 0.7, 0.9, 1.0])
    with pytest.raises(GridError):
        log_derivative_matrix_apply(t, t)


def test_radial_function_derivative_chain_rule():
    g = RadialGrid.geometric(1e-3, 0.5, 400)
    u = RadialFunction(g, g.nodes ** 2)
    dv = u.derivative_values()
    assert np.max(np.abs(dv - 2.0 * g.nodes) / (2.0 * g.nodes)) < 1e-6


def test_radial_function_rejects_bad_values():
    g = RadialGrid.geometric(1e-3, 0.5, 50)
    with pytest.raises(GridError):
        RadialFunction(g, np.ones(49))
    with pytest.raises(GridError):
        RadialFunction(g, np.full(50, np.nan))


def test_call_outside_support_guarded():
    g = RadialGrid.geometric(1e-3, 0.5, 100)
    u = RadialFunction(g, np.ones(100))
    with pytest.raises(ExtrapolationError):
        u(np.array([1e-4]))
    # compactly supported samples extend by zero
    vals = np.exp(-((g.log_nodes - np.log(0.03)) / 0.3) ** 2)
    vals[vals < 1e-14] = 0.0
    bump = RadialFunction(g, vals)
    out = bump(np.array([1e-4, 0.9]), atol=1e-12)
    assert np.all(out == 0.0)


def test_node_count_counts_strict_sign_changes():
    g = RadialGrid.geometric(1e-3, 0.5, 50)
    vals = np.sin(np.linspace(0.0, 3.0 * np.pi, 50))
    assert RadialFunction(g, vals).node_count() == 2
    assert RadialFunction(g, np.ones(50)).node_count() == 0
