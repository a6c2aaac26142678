"""Throughput quadrature, baselines, Eb/N0 mapping, Monte Carlo, sweeps."""

import math

import numpy as np
import pytest

from regnoma.ensembles import EnsembleSpec, EntryMode, GenerationError
from regnoma.spectra import DensityParams
from regnoma.throughput import (LN2, Curve, MCResult, SweepSpec, SweepVariable,
                                cover_wyner_bound, db_to_linear,
                                dense_rs_throughput, ebno_from_snr,
                                finite_n_throughput_mc, linear_to_db,
                                regular_throughput, snr_for_ebno, sweep)

P_DEFAULT = DensityParams(beta=1.5, d=2.0)


def mc_spec(n=10, k=15, d=2, seed=0):
    return EnsembleSpec(n_resources=n, n_users=k, col_degree=d,
                        entry_mode=EntryMode.RADEMACHER, seed=seed)


class TestRegularThroughput:
    def test_vanishes_with_snr(self):
        assert regular_throughput(0.0, P_DEFAULT) == 0.0
        assert regular_throughput(1e-12, P_DEFAULT) < 1e-10

    def test_small_snr_slope_is_half_load_over_ln2(self):
        snr = 1e-6
        slope = snr * P_DEFAULT.beta / (2.0 * LN2)
        assert abs(regular_throughput(snr, P_DEFAULT) / slope - 1.0) < 1e-3

    def test_beats_dense_reference_at_matched_operating_point(self):
        snr = snr_for_ebno(db_to_linear(10.0), 1.5, 2.0)
        assert regular_throughput(snr, P_DEFAULT) > dense_rs_throughput(snr, 1.5)

    def test_strictly_increasing_in_snr(self):
        vals = [regular_throughput(s, P_DEFAULT)
                for s in (0.1, 0.5, 1.0, 5.0, 20.0, 100.0)]
        assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_increasing_in_load(self):
        vals = [regular_throughput(10.0, DensityParams(beta=b, d=2.0))
                for b in (1.0, 1.5, 2.0, 3.0)]
        assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_rejects_negative_snr(self):
        with pytest.raises(ValueError):
            regular_throughput(-1.0, P_DEFAULT)


class TestDenseRsThroughput:
    def test_vanishes_with_snr(self):
        assert dense_rs_throughput(0.0, 1.5) == 0.0

    def test_small_snr_slope(self):
        snr = 1e-6
        slope = snr * 1.5 / (2.0 * LN2)
        assert abs(dense_rs_throughput(snr, 1.5) / slope - 1.0) < 1e-3

    def test_large_degree_regular_curve_converges_to_it(self):
        diff = abs(regular_throughput(10.0, DensityParams(beta=1.5, d=1000.0))
                   - dense_rs_throughput(10.0, 1.5))
        assert diff < 1e-3

    def test_unit_load_edge_singularity_integrable(self):
        # beta = 1 puts an inverse-square-root edge at the origin
        assert 0.0 < dense_rs_throughput(10.0, 1.0) < cover_wyner_bound(10.0, 1.0)


class TestCoverWynerBound:
    def test_zero_at_zero_snr(self):
        assert cover_wyner_bound(0.0, 1.5) == 0.0

    def test_unit_load_closed_value(self):
        assert abs(cover_wyner_bound(3.0, 1.0) - 1.0) < 1e-12

    def test_dominates_both_curves(self):
        for beta in (1.0, 1.5, 2.0, 3.0):
            for snr in (0.5, 5.0, 50.0):
                cw = cover_wyner_bound(snr, beta)
                assert cw >= regular_throughput(snr, DensityParams(beta=beta, d=2.0))
                assert cw >= dense_rs_throughput(snr, beta)


class TestEbnoMapping:
    def test_direct_substitution(self):
        assert ebno_from_snr(1.0, 1.0, 0.5) == 1.0

    def test_linearity_in_snr(self):
        assert ebno_from_snr(3.0, 1.5, 0.7) == 3.0 * ebno_from_snr(1.0, 1.5, 0.7)

    def test_rejects_nonpositive_throughput(self):
        with pytest.raises(ValueError):
            ebno_from_snr(1.0, 1.5, 0.0)

    def test_round_trip_through_inverse(self):
        target = db_to_linear(10.0)
        snr = snr_for_ebno(target, 1.5, 2.0)
        back = ebno_from_snr(snr, 1.5, regular_throughput(snr, P_DEFAULT))
        assert abs(back / target - 1.0) < 1e-6

    def test_sweep_abscissa_reconstruction(self):
        # recomputing Eb/N0 from (snr, C) reproduces each grid point
        for ebno_db in (2.0, 6.0, 10.0):
            target = db_to_linear(ebno_db)
            snr = snr_for_ebno(target, 1.5, 2.0)
            c = regular_throughput(snr, P_DEFAULT)
            assert abs(linear_to_db(ebno_from_snr(snr, 1.5, c)) - ebno_db) < 1e-5

    def test_map_is_monotone_on_grid(self):
        snrs = np.logspace(-3, 3, 25)
        vals = [ebno_from_snr(s, 1.5, regular_throughput(s, P_DEFAULT))
                for s in snrs]
        assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_inverse_rejects_unreachable_targets(self):
        with pytest.raises(ValueError):
            snr_for_ebno(0.5 * LN2, 1.5, 2.0)

    def test_inverse_locates_ten_db_point_in_unit_decade(self):
        snr = snr_for_ebno(db_to_linear(10.0), 1.5, 2.0)
        assert 1.0 < snr < 100.0
        assert abs(snr - 36.257) < 0.01

    def test_dense_selector(self):
        snr = snr_for_ebno(db_to_linear(10.0), 1.5, "dense")
        back = ebno_from_snr(snr, 1.5, dense_rs_throughput(snr, 1.5))
        assert abs(back / db_to_linear(10.0) - 1.0) < 1e-6

    def test_unknown_selector(self):
        with pytest.raises(ValueError):
            snr_for_ebno(db_to_linear(10.0), 1.5, "nonsense")


class TestDbHelpers:
    def test_round_trip(self):
        assert db_to_linear(10.0) == 10.0
        assert abs(linear_to_db(db_to_linear(7.3)) - 7.3) < 1e-12

    def test_rejects_nonpositive_ratio(self):
        with pytest.raises(ValueError):
            linear_to_db(0.0)


class TestFiniteNThroughputMC:
    def test_zero_snr_is_exactly_zero(self):
        res = finite_n_throughput_mc(mc_spec(), 0.0, 10)
        assert res.mean == 0.0

    def test_log_det_equals_triangular_factorization(self):
        from regnoma.ensembles import generate_regular
        m = generate_regular(mc_spec(n=50, k=75, seed=2), realization=0)
        snr = 10.0
        eigs = np.linalg.eigvalsh(m.gram())
        via_eigs = float(np.sum(np.log1p(snr * eigs)) / (2.0 * 50 * LN2))
        chol = np.linalg.cholesky(np.eye(50) + snr * m.gram())
        via_chol = float(np.sum(np.log(np.diag(chol))) / (50 * LN2))
        assert abs(via_eigs - via_chol) < 1e-8

    def test_matches_asymptotic_curve_at_moderate_size(self):
        spec = mc_spec(n=200, k=300, seed=1)
        res = finite_n_throughput_mc(spec, 10.0, 100)
        asymptotic = regular_throughput(10.0, P_DEFAULT)
        assert abs(res.mean - asymptotic) < 3.0 * res.stderr + 0.01

    def test_thread_count_does_not_change_results(self):
        spec = mc_spec(seed=5)
        a = finite_n_throughput_mc(spec, 10.0, 64, threads=1)
        b = finite_n_throughput_mc(spec, 10.0, 64, threads=4)
        assert a == b

    def test_irregular_ensemble_runs(self):
        res = finite_n_throughput_mc(mc_spec(n=50, k=75, seed=3), 10.0, 30,
                                     irregular=True)
        assert res.n_trials == 30 and res.n_failed == 0
        assert 0.5 < res.mean < 3.0

    def test_counts_failed_trials(self, monkeypatch):
        from regnoma import throughput as tp
        from regnoma.ensembles import generate_regular as real_generate

        def flaky(spec, realization=0):
            if realization % 2 == 0:
                raise GenerationError("forced")
            return real_generate(spec, realization=realization)

        monkeypatch.setattr(tp, "generate_regular", flaky)
        res = finite_n_throughput_mc(mc_spec(), 10.0, 10)
        assert res.n_failed == 5 and res.n_trials == 5

    def test_requires_at_least_one_trial(self):
        with pytest.raises(ValueError):
            finite_n_throughput_mc(mc_spec(), 10.0, 0)


class TestSweepSpec:
    def test_load_sweep_requires_integer_load_degree_product(self):
        with pytest.raises(ValueError):
            SweepSpec(variable=SweepVariable.LOAD, values=(1.2,), d=2.0,
                      ebno_db=10.0)

    def test_ebno_sweep_rejects_fixed_operating_point(self):
        with pytest.raises(ValueError):
            SweepSpec(variable=SweepVariable.EBNO, values=(10.0,),
                      beta=1.5, d=2.0, snr_db=10.0)

    def test_exactly_one_operating_point_required(self):
        with pytest.raises(ValueError):
            SweepSpec(variable=SweepVariable.LOAD, values=(1.5,), d=2.0)
        with pytest.raises(ValueError):
            SweepSpec(variable=SweepVariable.LOAD, values=(1.5,), d=2.0,
                      snr_db=10.0, ebno_db=10.0)

    def test_duplicate_curves_rejected(self):
        with pytest.raises(ValueError):
            SweepSpec(variable=SweepVariable.EBNO, values=(10.0,),
                      beta=1.5, d=2.0,
                      curves=(Curve.REGULAR, Curve.REGULAR))

    def test_mc_curves_need_sampling_parameters(self):
        with pytest.raises(ValueError):
            SweepSpec(variable=SweepVariable.EBNO, values=(10.0,),
                      beta=1.5, d=2.0, curves=(Curve.REGULAR_MC,))

    def test_range_constructor_filters_inadmissible_loads(self):
        spec = SweepSpec.from_range(SweepVariable.LOAD, 1.0, 3.0, 9,
                                    d=2.0, ebno_db=10.0)
        assert spec.values == (1.0, 1.5, 2.0, 2.5, 3.0)

    def test_range_constructor_rejects_empty_admissible_set(self):
        with pytest.raises(ValueError):
            SweepSpec.from_range(SweepVariable.LOAD, 1.1, 1.3, 3,
                                 d=2.0, ebno_db=10.0)


class TestSweep:
    def test_load_sweep_ordering(self):
        spec = SweepSpec(variable=SweepVariable.LOAD,
                         values=(1.0, 1.5, 2.0, 2.5, 3.0),
                         d=2.0, ebno_db=10.0)
        rows = sweep(spec)
        assert len(rows) == 5
        for row in rows:
            assert not row["failed"]
            assert row["cover_wyner"] >= row["regular"] > row["dense_rs"]
            assert row["regular_mc"] is None

    def test_sparsity_sweep_decreases_toward_dense(self):
        spec = SweepSpec(variable=SweepVariable.SPARSITY,
                         values=(2.0, 4.0, 10.0, 40.0),
                         beta=1.5, ebno_db=10.0)
        rows = sweep(spec)
        regs = [row["regular"] for row in rows]
        assert all(a > b for a, b in zip(regs, regs[1:]))
        assert all(r > row["dense_rs"] for r, row in zip(regs, rows))

    def test_ebno_sweep_monotone(self):
        spec = SweepSpec(variable=SweepVariable.EBNO,
                         values=(0.0, 4.0, 8.0, 12.0),
                         beta=1.5, d=2.0)
        rows = sweep(spec)
        for key in ("regular", "dense_rs", "cover_wyner"):
            vals = [row[key] for row in rows]
            assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_mc_curves_carry_errors(self):
        spec = SweepSpec(variable=SweepVariable.EBNO, values=(10.0,),
                         beta=1.5, d=2.0,
                         curves=(Curve.REGULAR, Curve.REGULAR_MC,
                                 Curve.IRREGULAR_MC),
                         mc_n=10, mc_trials=200, seed=1)
        row = sweep(spec)[0]
        assert row["regular_mc_stderr"] > 0.0
        assert row["irregular_mc_stderr"] > 0.0
        assert abs(row["regular_mc"] - row["regular"]) < 0.1

    def test_failed_point_is_marked_and_batch_continues(self, monkeypatch):
        from regnoma import throughput as tp

        def always_fails(spec, realization=0):
            raise GenerationError("forced")

        monkeypatch.setattr(tp, "generate_regular", always_fails)
        spec = SweepSpec(variable=SweepVariable.EBNO, values=(8.0, 10.0),
                         beta=1.5, d=2.0,
                         curves=(Curve.REGULAR_MC,), mc_n=10, mc_trials=5)
        rows = sweep(spec)
        assert [row["failed"] for row in rows] == [True, True]
        assert all(row["regular_mc"] is None for row in rows)

    def test_mc_rejects_fractional_degree(self):
        spec = SweepSpec(variable=SweepVariable.SPARSITY, values=(2.5,),
                         beta=2.0, snr_db=10.0,
                         curves=(Curve.REGULAR_MC,), mc_n=10, mc_trials=5)
        with pytest.raises(ValueError):
            sweep(spec)
