import numpy as np
import pytest
from scipy.stats import norm

from neurorx.estimators import ClassicalReceiver, PerfectCSIReceiver
from neurorx.harness import (
    SWEEP_COLUMNS,
    SweepConfig,
    SweepRow,
    format_sweep_csv,
    format_timing,
    plot_columns,
    read_sweep_csv,
    run_sweep,
    run_timing,
)
from neurorx.phy import LinkConfig

AWGN = LinkConfig(channel="awgn", n_rx=1)


def small_sweep(**kw):
    base = dict(ebn0_db=(0.0, 4.0), max_frames=40, target_block_errors=10, frames_per_chunk=10, record_wallclock=False)
    base.update(kw)
    return SweepConfig(**base)


class TestSweepRow:
    def test_ratios(self):
        row = SweepRow.from_counts(1.0, 1000, 25, 10, 3, 0.5)
        assert row.ber == 25 / 1000 and row.bler == 3 / 10

    def test_columns_follow_fields(self):
        assert SWEEP_COLUMNS == ("ebn0_db", "bits_sent", "bit_errors", "ber", "blocks_sent", "block_errors",
                                 "bler", "seconds")


class TestSweep:
    def test_row_invariants_and_stopping(self):
        sweep = small_sweep(ebn0_db=(-2.0, 2.0, 6.0))
        for row in run_sweep(sweep, LinkConfig()):
            assert row.ber == row.bit_errors / row.bits_sent
            assert row.bler == row.block_errors / row.blocks_sent
            assert row.block_errors >= sweep.target_block_errors or row.blocks_sent == sweep.max_frames
            assert row.bits_sent == row.blocks_sent * 912

    def test_early_stop_at_low_snr(self):
        row = run_sweep(small_sweep(ebn0_db=(-2.0,)), LinkConfig())[0]
        assert row.block_errors >= 10 and row.blocks_sent < 40

    def test_rows_in_order(self):
        rows = run_sweep(small_sweep(ebn0_db=(4.0, -1.0)), LinkConfig())
        assert [r.ebn0_db for r in rows] == [4.0, -1.0]

    def test_noiseless_point_error_free(self):
        row = run_sweep(small_sweep(ebn0_db=(30.0,)), LinkConfig())[0]
        assert row.bit_errors == 0 and row.block_errors == 0 and row.blocks_sent == 40

    def test_uncoded_awgn_oracle_at_4db(self):
        sweep = small_sweep(ebn0_db=(4.0,), coded=False, receiver="perfect-csi", max_frames=600,
                            frames_per_chunk=200, target_block_errors=10**9)
        row = run_sweep(sweep, AWGN)[0]
        theory = norm.sf(np.sqrt(2 * 10 ** 0.4))
        assert theory == pytest.approx(1.25e-2, rel=0.01)
        assert row.bits_sent >= 10**6
        assert row.ber == pytest.approx(theory, rel=0.05)

    def test_byte_identical_reruns(self):
        sweep = small_sweep()
        assert format_sweep_csv(run_sweep(sweep, LinkConfig())) == format_sweep_csv(run_sweep(sweep, LinkConfig()))

    def test_workers_match_single(self):
        rows1 = run_sweep(small_sweep(), LinkConfig())
        rows2 = run_sweep(small_sweep(workers=2), LinkConfig())
        assert rows1 == rows2

    def test_perfect_csi_dominates(self):
        sweep = small_sweep(ebn0_db=(0.0, 2.0, 4.0), coded=False, max_frames=20)
        ls = run_sweep(sweep, LinkConfig(), ClassicalReceiver(LinkConfig()).fit())
        pc = run_sweep(sweep, LinkConfig(), PerfectCSIReceiver(LinkConfig()).fit())
        for a, b in zip(ls, pc):
            assert b.ber <= a.ber

    def test_writes_output(self, tmp_path):
        path = tmp_path / "s.csv"
        rows = run_sweep(small_sweep(output=str(path)), LinkConfig())
        assert read_sweep_csv(path) == rows

    def test_missing_checkpoint(self, tmp_path):
        with pytest.raises(ValueError):
            run_sweep(small_sweep(receiver="dat"), LinkConfig())
        with pytest.raises(ValueError):
            run_sweep(small_sweep(receiver="dat", checkpoint=str(tmp_path / "none.ckpt")), LinkConfig())

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SweepConfig(ebn0_db=())
        with pytest.raises(ValueError):
            SweepConfig(workers=0)


class TestCsv:
    def test_round_trip(self, tmp_path):
        rows = [SweepRow.from_counts(0.1, 100, 3, 2, 1, 0.25)]
        path = tmp_path / "r.csv"
        path.write_text(format_sweep_csv(rows))
        assert read_sweep_csv(path) == rows
        assert path.read_text().splitlines()[0] == ",".join(SWEEP_COLUMNS)

    def test_plot_columns(self):
        rows = [SweepRow.from_counts(1.0, 100, 3, 2, 1, 0.0)]
        assert plot_columns(rows, ("ebn0_db", "ber")) == "# ebn0_db ber\n1.0 0.03\n"
        with pytest.raises(ValueError):
            plot_columns(rows, ("nope",))


class TestTiming:
    def test_rows_for_every_receiver(self):
        rx = {"classical": ClassicalReceiver(LinkConfig()).fit(), "perfect-csi": PerfectCSIReceiver(LinkConfig()).fit()}
        rows = run_timing(rx, LinkConfig(), warmup=2, runs=5)
        assert [r.receiver for r in rows] == ["classical", "perfect-csi"]
        assert all(r.mean_ms > 0 and r.runs == 5 for r in rows)
        assert format_timing(rows).splitlines()[0] == "receiver,mean_ms,std_ms,runs"

    def test_rejects_zero_runs(self):
        with pytest.raises(ValueError):
            run_timing({}, LinkConfig(), runs=0)
