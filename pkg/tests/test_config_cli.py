import numpy as np
import pytest

from neurorx.cli import main
from neurorx.config import ConfigError, HarnessConfig, format_config, parse_config, read_config_values
from neurorx.harness import read_sweep_csv
from neurorx.ldpc import from_alist
from neurorx.link import link_code
from neurorx.phy import LinkConfig

TOY_FLAGS = ["--n-sym", "4", "--n-sc", "6", "--pilot-symbols", "1"]


class TestConfig:
    def test_empty_file_defaults(self, tmp_path):
        (tmp_path / "c.cfg").write_text("")
        cfg = parse_config(tmp_path / "c.cfg")
        assert cfg == HarnessConfig()
        assert (cfg.link.n_sc, cfg.link.n_sym, cfg.link.pilot_symbols, cfg.link.code_rate) == (76, 14, (2, 11), 0.5)
        assert (cfg.train.batch_size, cfg.sweep.target_block_errors, cfg.sweep.max_frames) == (128, 1000, 3200)

    def test_value_round_trip(self, tmp_path):
        (tmp_path / "c.cfg").write_text("# comment\nn_sc = 76\n\nebn0_db = -1, 0.5\nmask_pilots = no\n")
        cfg = parse_config(tmp_path / "c.cfg")
        assert cfg.link.n_sc == 76 and cfg.sweep.ebn0_db == (-1.0, 0.5) and not cfg.train.mask_pilots

    def test_format_round_trip(self, tmp_path):
        cfg = parse_config(overrides={"n_sc": "12", "ebn0_db": "1,2", "model": "rdnla", "rdnla_stages": "prb,dnla"})
        (tmp_path / "c.cfg").write_text(format_config(cfg))
        assert parse_config(tmp_path / "c.cfg") == cfg

    @pytest.mark.parametrize("text,key", [
        ("code_rate = 1.5", "code_rate"), ("n_sc = many", "n_sc"), ("bogus = 1", "bogus"),
        ("receiver = magic", "receiver"), ("workers = 0", "workers"), ("dat_heads = 3", "dat"),
    ])
    def test_errors_name_the_key(self, tmp_path, text, key):
        (tmp_path / "c.cfg").write_text(text + "\n")
        with pytest.raises(ConfigError, match=key):
            parse_config(tmp_path / "c.cfg")

    def test_duplicate_key(self, tmp_path):
        (tmp_path / "c.cfg").write_text("n_sc = 4\nn_sc = 5\n")
        with pytest.raises(ConfigError):
            read_config_values(tmp_path / "c.cfg")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config(tmp_path / "none.cfg")

    def test_overrides_beat_file(self, tmp_path):
        (tmp_path / "c.cfg").write_text("n_sc = 12\n")
        assert parse_config(tmp_path / "c.cfg", {"n_sc": "24"}).link.n_sc == 24


class TestCli:
    def test_simulate_csv(self, tmp_path):
        out = tmp_path / "s.csv"
        code = main(["simulate", "--quiet", "--ebn0-db", "0,30", "--max-frames", "20", "--frames-per-chunk", "10",
                     "--record-wallclock", "false", "--output", str(out)])
        assert code == 0
        rows = read_sweep_csv(out)
        assert [r.ebn0_db for r in rows] == [0.0, 30.0] and rows[1].bit_errors == 0

    def test_simulate_byte_identical(self, tmp_path):
        args = ["simulate", "--quiet", "--ebn0-db", "2", "--max-frames", "20", "--frames-per-chunk", "10",
                "--record-wallclock", "false", "--output"]
        main(args + [str(tmp_path / "a.csv")])
        main(args + [str(tmp_path / "b.csv")])
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_train_evaluate_timing(self, tmp_path, capsys):
        ckpt, metrics = tmp_path / "m.ckpt", tmp_path / "m.csv"
        model_flags = ["--dat-width", "8", "--dat-heads", "2", "--dat-ffn-hidden", "8"]
        assert main(["train", "--quiet", *TOY_FLAGS, *model_flags, "--iterations", "3", "--batch-size", "2",
                     "--metrics", str(metrics), "--out", str(ckpt)]) == 0
        assert len(metrics.read_text().splitlines()) == 4
        assert main(["train", "--quiet", *TOY_FLAGS, *model_flags, "--iterations", "5", "--batch-size", "2",
                     "--metrics", str(metrics), "--out", str(ckpt), "--resume"]) == 0
        assert len(metrics.read_text().splitlines()) == 6
        assert main(["evaluate", *TOY_FLAGS, "--checkpoint", str(ckpt), "--ebn0-db", "4", "--max-frames", "4",
                     "--frames-per-chunk", "2", "--heldout-frames", "2", "--coded", "false"]) == 0
        capsys.readouterr()
        assert main(["timing", *TOY_FLAGS, "--receivers", "classical,dat", "--weights", f"dat={ckpt}",
                     "--warmup", "1", "--runs", "3"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "receiver,mean_ms,std_ms,runs" and len(lines) == 3

    def test_export_alist(self, tmp_path):
        out = tmp_path / "h.alist"
        assert main(["export-alist", "--out", str(out)]) == 0
        np.testing.assert_array_equal(from_alist(out.read_text()), link_code(LinkConfig()).H)

    def test_plot_data(self, tmp_path, capsys):
        csv = tmp_path / "s.csv"
        main(["simulate", "--quiet", "--ebn0-db", "30", "--max-frames", "2", "--frames-per-chunk", "2",
              "--output", str(csv)])
        capsys.readouterr()
        assert main(["plot-data", str(csv), "--columns", "ebn0_db,bler"]) == 0
        assert capsys.readouterr().out == "# ebn0_db bler\n30.0 0.0\n"

    @pytest.mark.parametrize("argv", [
        ["simulate", "--code-rate", "1.5"],
        ["simulate", "--config", "/nonexistent.cfg"],
        ["simulate", "--receiver", "dat"],
        ["evaluate"],
        ["train"],
        ["evaluate", "--checkpoint", "/nonexistent.ckpt"],
        ["plot-data", "/nonexistent.csv"],
    ])
    def test_contract_errors_exit_nonzero(self, argv, capsys):
        assert main(argv) == 2
        assert "error" in capsys.readouterr().err

    def test_evaluate_incompatible_checkpoint(self, tmp_path, capsys):
        ckpt = tmp_path / "m.ckpt"
        main(["train", "--quiet", *TOY_FLAGS, "--dat-width", "8", "--dat-heads", "2", "--iterations", "1",
              "--batch-size", "1", "--out", str(ckpt)])
        assert main(["evaluate", "--checkpoint", str(ckpt)]) == 2
        assert "does not match link" in capsys.readouterr().err
