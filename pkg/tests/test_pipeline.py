import numpy as np
import pytest

from slicesense import (
    DetectorOptions,
    KpiMatrix,
    SimConfig,
    Variant,
    detect,
    exact_fraction,
    max_combine,
    pearson_matrix,
    simulate,
    spearman_matrix,
)
from slicesense.graph import build_interference_graph, maximal_cliques

from conftest import DISJOINT6


class TestVariant:
    def test_cli_names(self):
        assert Variant.from_cli("fa") is Variant.SRCC
        assert Variant.from_cli("fa-max") is Variant.MAX_PCC_SRCC
        assert Variant.from_cli("pcc") is Variant.PCC
        with pytest.raises(ValueError):
            Variant.from_cli("nope")


class TestDetectorOptions:
    def test_theta_validated(self):
        with pytest.raises(ValueError):
            DetectorOptions(theta=0.0)
        with pytest.raises(ValueError):
            DetectorOptions(theta=1.2)


class TestDetect:
    def test_recovers_disjoint_planted_layout(self, disjoint_run):
        out, _ = disjoint_run
        report = detect(out.measurements)
        rows = {tuple(r) for r in report.estimate.tolist()}
        assert rows == {(1, 1, 1, 0, 0, 0), (0, 0, 0, 1, 1, 1)}
        assert exact_fraction(out.truth, report.estimate) == 1.0

    def test_deterministic(self, disjoint_run):
        out, _ = disjoint_run
        a = detect(out.measurements, DetectorOptions(record_intermediates=True))
        b = detect(out.measurements, DetectorOptions(record_intermediates=True))
        assert np.array_equal(a.estimate, b.estimate)
        assert a.warnings == b.warnings
        assert np.array_equal(
            a.intermediates.correlation.entries, b.intermediates.correlation.entries
        )

    def test_rows_sorted_lexicographically(self):
        cfg = SimConfig(
            n_slices=20, n_resources=6, n_periods=700, weight_shared=0.4,
            noise_variance=0.04, seed=8, assignment_density=0.3,
        )
        out = simulate(cfg)
        report = detect(out.measurements)
        rows = [tuple(r) for r in report.estimate.tolist()]
        assert rows == sorted(rows)
        assert len(set(rows)) == len(rows)
        assert all(sum(r) >= 2 for r in rows)

    def test_variant_recorded_and_used(self, disjoint_run):
        out, _ = disjoint_run
        report = detect(
            out.measurements,
            DetectorOptions(variant=Variant.MAX_PCC_SRCC, record_intermediates=True),
        )
        assert report.variant is Variant.MAX_PCC_SRCC
        expected = max_combine(
            pearson_matrix(out.measurements), spearman_matrix(out.measurements)
        )
        assert np.allclose(report.intermediates.correlation.entries, expected.entries)

    def test_every_row_lies_in_a_clique(self):
        cfg = SimConfig(
            n_slices=15, n_resources=4, n_periods=500, weight_shared=0.3,
            noise_variance=0.1, seed=77,
        )
        out = simulate(cfg)
        report = detect(out.measurements, DetectorOptions(record_intermediates=True))
        cliques = [frozenset(c) for c in report.intermediates.cliques]
        for row in report.estimate:
            members = frozenset(np.nonzero(row)[0].tolist())
            assert any(members <= c for c in cliques)

    def test_intermediates_are_the_ones_used(self, disjoint_run):
        out, _ = disjoint_run
        report = detect(out.measurements, DetectorOptions(record_intermediates=True))
        graph = build_interference_graph(report.intermediates.correlation)
        assert np.array_equal(graph.adjacency, report.intermediates.graph.adjacency)
        assert set(maximal_cliques(graph)) == set(report.intermediates.cliques)

    def test_constant_measurements_yield_empty_estimate(self):
        m = KpiMatrix(np.zeros((50, 5)))
        report = detect(m)
        assert report.estimate.shape == (0, 5)
        assert report.warnings  # constant columns + degenerate split

    def test_no_intermediates_by_default(self, disjoint_run):
        out, _ = disjoint_run
        assert detect(out.measurements).intermediates is None

    def test_pure_own_load_completes_with_valid_output(self):
        # w_S = 0: no shared signal exists; the clustering stage still
        # splits the null coefficient blob, so the estimate is garbage by
        # construction but must be structurally valid and deterministic
        cfg = SimConfig(
            n_slices=12, n_resources=4, n_periods=400, weight_shared=0.0,
            noise_variance=0.1, seed=5,
        )
        out = simulate(cfg)
        a = detect(out.measurements)
        b = detect(out.measurements)
        assert np.array_equal(a.estimate, b.estimate)
        rows = [tuple(r) for r in a.estimate.tolist()]
        assert len(set(rows)) == len(rows)
        assert all(sum(r) >= 2 for r in rows)
