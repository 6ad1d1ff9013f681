import json
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from pmarray.errors import ConfigurationError, DomainError, MonteCarloError
from pmarray.montecarlo import (
    OUTPUTS,
    BasePerturbations,
    RemanenceSpec,
    Source,
    VariabilityConfig,
    build_base,
    draw_generator,
    mc_stability,
    output_stats,
    run_mc,
    stability_rows,
    write_mc_raw,
    write_mc_result,
    write_stability,
)
from pmarray.montecarlo import _Runner
from pmarray.sampling import SampleGrid, metrics
from pmarray.solver import simulate_map, solve
from pmarray.utils import read_table

from . import base, grid
from ..models import halbach_ring

ALL = VariabilityConfig(
    sources=frozenset(Source),
    remanence={"N52-cube": RemanenceSpec(1.421, 0.0082)},
    draws=12,
    seed=3,
)


def test_no_variability_reproduces_base(base: BasePerturbations, grid: SampleGrid):
    """Asserts that with every source disabled each draw equals the deterministic result."""
    rotated = base.rotated()
    expected = metrics(simulate_map(rotated, solve(rotated, base.mode), grid))

    result = run_mc(base, VariabilityConfig(draws=4), grid=grid)
    for row in result.raw:
        assert tuple(row) == (expected.mean_Bx, expected.DIS1, expected.DIS2)
    assert result.outputs["DIS1"].std == 0.0
    assert result.outputs["DIS1"].mean == pytest.approx(expected.DIS1)


def test_results_do_not_depend_on_workers(base: BasePerturbations, grid: SampleGrid):
    """Checks that threading and draw prefixes leave the per-draw outputs unchanged."""
    serial = run_mc(base, ALL, grid=grid)
    threaded = run_mc(base, ALL, grid=grid, workers=3)
    np.testing.assert_array_equal(serial.raw, threaded.raw)

    shorter = run_mc(base, replace(ALL, draws=5), grid=grid)
    np.testing.assert_array_equal(shorter.raw, serial.raw[:5])

    reseeded = run_mc(base, replace(ALL, seed=4), grid=grid)
    assert not np.array_equal(reseeded.raw, serial.raw)


def test_draw_streams_are_reproducible():
    """Asserts each draw has its own repeatable stream."""
    a = draw_generator(42, 7).standard_normal(5)
    b = draw_generator(42, 7).standard_normal(5)
    c = draw_generator(42, 8).standard_normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_sampled_inputs_respect_their_supports(base: BasePerturbations, grid: SampleGrid):
    """Checks the drawn rotations, displacements and scales stay within their distributions."""
    runner = _Runner(base, ALL, grid, keep_maps=False, workers=None)
    reference = base.array
    low, high = ALL.orientation_bounds

    for draw in range(20):
        remanence, scale, array = runner.sample(draw_generator(ALL.seed, draw))
        assert np.all(np.abs(remanence - 1.421) < 8 * 0.0082)
        assert np.all(scale == scale[0])

        turned = np.degrees(
            np.arccos(np.clip(np.einsum("pi,pi->p", array.axes, reference.axes), -1, 1))
        )
        active = base.report.sign != 0
        assert np.all(turned[active] >= low - 1e-6)
        assert np.all(turned[active] <= high + 1e-6)

        offset = array.centers - reference.centers
        assert np.all(np.abs(offset) <= np.sqrt(2) * ALL.position_bound + 1e-15)


def test_per_material_scales(base: BasePerturbations, grid: SampleGrid):
    """Asserts per-material characterization draws one scale per material."""
    config = VariabilityConfig(
        sources=frozenset({Source.CHARACTERIZATION}), per_material=True, draws=1
    )
    runner = _Runner(base, config, grid, keep_maps=False, workers=None)
    _, scale, array = runner.sample(draw_generator(0, 0))
    assert array is runner.rotated
    assert len(set(scale.tolist())) == 1
    assert scale[0] != 1.0


def test_missing_remanence_distribution(base: BasePerturbations, grid: SampleGrid):
    """Checks that remanence variability needs a distribution for every material in use."""
    config = VariabilityConfig(sources=frozenset({Source.REMANENCE}), draws=1)
    with pytest.raises(ConfigurationError):
        run_mc(base, config, grid=grid)


def test_failed_draws_abort_the_run(base: BasePerturbations, grid: SampleGrid):
    """Asserts a run where draws rotate past the sanity bound raises MonteCarloError."""
    steep = replace(base, angle=4.5)
    config = VariabilityConfig(sources=frozenset({Source.ORIENTATION}), additive=True, draws=3)
    with pytest.raises(MonteCarloError) as info:
        run_mc(steep, config, grid=grid)
    assert [i for i, _ in info.value.failures] == [0, 1, 2]
    assert all("DomainError" in message for _, message in info.value.failures)


def test_output_stats():
    """Checks the summary statistics and that failed draws are ignored."""
    stats = output_stats([1.0, 2.0, np.nan, 3.0, 4.0])
    assert stats.mean == 2.5
    assert stats.std == pytest.approx(np.std([1, 2, 3, 4], ddof=1))
    assert stats.half_width == 2 * stats.std
    assert stats.interval == (2.5 - stats.half_width, 2.5 + stats.half_width)
    assert stats.q025 <= stats.mean <= stats.q975

    with pytest.raises(DomainError):
        output_stats([np.nan])


def test_stability(tmp_path: Path, base: BasePerturbations, grid: SampleGrid):
    """Checks the prefix stability table against separate runs."""
    rows = mc_stability(base, ALL, [4, 12], grid=grid)
    assert [r.draws for r in rows] == [4, 12]
    assert all(v == 0.0 for v in rows[-1].deviation.values())

    small = run_mc(base, replace(ALL, draws=4), grid=grid)
    for name in OUTPUTS:
        assert rows[0].means[name] == pytest.approx(small.outputs[name].mean, rel=1e-12)

    with pytest.raises(DomainError):
        stability_rows(small, [4, 2])
    with pytest.raises(DomainError):
        stability_rows(small, [4, 8])

    path = tmp_path / "stability.txt"
    write_stability(rows, path)
    assert read_table(path).rows.shape == (2, 7)


def test_result_files(tmp_path: Path, base: BasePerturbations, grid: SampleGrid):
    """Asserts the result document and raw table record the seed and every draw."""
    result = run_mc(base, ALL, grid=grid, keep_maps=True)
    assert result.maps is not None and len(result.maps) == ALL.draws

    write_mc_result(result, tmp_path / "mc_result.json")
    document = json.loads((tmp_path / "mc_result.json").read_text())
    assert document["schema"] == "pmarray.mc_result"
    assert document["seed"] == 3
    assert document["algorithm"] == "Philox"
    assert set(document["outputs"]) == set(OUTPUTS)

    write_mc_raw(result, tmp_path / "mc_raw.txt")
    table = read_table(tmp_path / "mc_raw.txt")
    assert table.metadata is not None and table.metadata["failed"] == []
    np.testing.assert_array_equal(table.rows[:, 1:], result.raw)


def test_remanence_draws_at_measurement_temperature(grid: SampleGrid):
    """Asserts drawn remanences are used as given at a non-reference temperature."""
    warm = build_base(halbach_ring(count=12).at_temperature(23.7), mode="linear")
    config = VariabilityConfig(
        sources=frozenset({Source.REMANENCE}),
        remanence={"N52-cube": RemanenceSpec(1.421, 0.0)},
        draws=2,
    )
    runner = _Runner(warm, config, grid, keep_maps=False, workers=None)
    remanence, scale, _ = runner.sample(draw_generator(config.seed, 0))
    np.testing.assert_allclose(remanence, 1.421, rtol=1e-12)
    assert np.all(scale == 1.0)

    result = run_mc(warm, config, grid=grid)
    assert result.outputs["DIS1"].std == pytest.approx(0.0, abs=1e-9)


def test_narrower_inputs_shrink_output_spread(base: BasePerturbations, grid: SampleGrid):
    """Checks that halving every input spread narrows the output spreads."""
    wide = replace(ALL, draws=40)
    narrow = replace(
        wide,
        remanence={"N52-cube": RemanenceSpec(1.421, 0.0041)},
        characterization_std=wide.characterization_std / 2,
        orientation_bounds=(0.94, 1.46),
        position_bound=wide.position_bound / 2,
    )
    a = run_mc(base, wide, grid=grid)
    b = run_mc(base, narrow, grid=grid)
    for name in OUTPUTS:
        assert b.outputs[name].std < a.outputs[name].std
