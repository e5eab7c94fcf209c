import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sensodim.bootstrap import (
    BootstrapParams,
    BootstrapTrace,
    Strategy,
    bootstrap_step,
    gamma_coefficients,
    initial_offsets,
    run_bootstrap,
    spread_metric,
)
from sensodim.estimators import estimate_dim_linear
from sensodim.sim import SystemSpec, build_system


@pytest.fixture(scope="module")
def system():
    return build_system(SystemSpec(seed=31))


def test_gamma_examples():
    e = np.e
    g = gamma_coefficients([e**2, 1.0, e**-18], clamp=10)
    assert g == pytest.approx([1.0, 3.0, 10.0])


def test_gamma_equal_spectrum_is_unity():
    assert np.all(gamma_coefficients([2.0, 2.0, 2.0]) == 1.0)


def test_gamma_zero_singular_value_gets_clamp():
    assert gamma_coefficients([1.0, 0.0], clamp=7)[1] == 7


@settings(max_examples=100)
@given(st.lists(st.floats(1e-300, 1e300), min_size=1, max_size=30), st.floats(1, 50))
def test_gamma_bounds(values, clamp):
    s = np.sort(values)[::-1]
    g = gamma_coefficients(s, clamp)
    assert g[0] == 1.0
    assert np.all((g >= 1) & (g <= clamp))
    assert np.all(np.diff(g) >= 0)


def test_spread_metric():
    assert spread_metric([8.0, 4.0, 2.0, 1e-9]) == (4.0, 3)


def test_step_conserves_amplitude(system):
    C = initial_offsets(system, "agent", 1e-6, 200, seed=1)
    for _ in range(3):
        C_new, rec = bootstrap_step(system, "agent", C)
        assert abs(np.max(np.abs(C_new)) - rec.cmax) <= 1e-12 * rec.cmax
        assert rec.cmax == pytest.approx(1e-6, rel=1e-12)
        C = C_new


def test_step_needs_more_moves_than_dof(system):
    C = initial_offsets(system, "both", 1e-6, 15, seed=2)
    with pytest.raises(ValueError, match="insufficient exploration"):
        bootstrap_step(system, "both", C)


def test_step_record_contents(system):
    C = initial_offsets(system, "env", 1e-6, 100, seed=3)
    _, rec = bootstrap_step(system, "env", C)
    assert rec.n_significant == 6
    assert rec.gamma[0] == 1.0
    assert rec.spread >= 1.0
    assert not rec.ill_conditioned


def test_spread_decreases_over_iterations(system):
    first, last = [], []
    for seed in range(20):
        res = run_bootstrap(system, "agent", BootstrapParams(), n=200, seed=seed)
        first.append(res.trace.spreads[0])
        last.append(res.trace.spreads[-1])
    assert np.median(last) < np.median(first)


@pytest.mark.parametrize("mode,expected", [("agent", 9), ("env", 6), ("both", 12)])
def test_linear_dimension_preserved(system, mode, expected):
    res = run_bootstrap(system, mode, BootstrapParams(), n=300, seed=4)
    assert estimate_dim_linear(res.variations).value == expected
    assert all(r.n_significant == expected for r in res.trace.records)


@pytest.mark.parametrize("strategy", list(Strategy))
def test_final_amplitude_is_target(system, strategy):
    params = BootstrapParams(iterations=3, strategy=strategy, target_amplitude=0.5)
    res = run_bootstrap(system, "both", params, n=100, seed=5)
    assert np.max(np.abs(res.offsets)) == pytest.approx(0.5, rel=1e-12)
    assert np.max(np.abs(res.configs - system.c0)) == pytest.approx(0.5, rel=1e-9)
    assert len(res.trace) == 3


def test_strategies_agree_at_infinitesimal_amplitude(system):
    inf = run_bootstrap(system, "agent", BootstrapParams(iterations=4), n=150, seed=6)
    fin = run_bootstrap(system, "agent", BootstrapParams(iterations=4, strategy="finite"), n=150, seed=6)
    assert np.allclose(inf.trace.spreads, fin.trace.spreads, rtol=1e-6)
    assert np.allclose(inf.offsets, fin.offsets, rtol=1e-6, atol=1e-12)


def test_params_validation():
    with pytest.raises(ValueError):
        BootstrapParams(iterations=0)
    with pytest.raises(ValueError):
        BootstrapParams(clamp=0.5)
    with pytest.raises(ValueError):
        BootstrapParams(target_amplitude=0)


def test_trace_csv(system, tmp_path):
    res = run_bootstrap(system, "env", BootstrapParams(iterations=2), n=50, seed=7)
    res.trace.to_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0].split(",") == ["iteration", *[f"sigma_{j}" for j in range(1, 7)], "spread", "cmax"]
    assert len(lines) == 3
    assert BootstrapTrace().spreads.size == 0
