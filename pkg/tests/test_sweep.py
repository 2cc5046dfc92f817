import csv
import io
import subprocess
import sys
from pathlib import Path

import pytest

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from underlay_ber.channel import DEFAULT_RELAYS, EstimatorConfig, Point
from underlay_ber.cli import main
from underlay_ber.sweep import (
    CSV_HEADER,
    ConfigError,
    Row,
    format_csv,
    gnuplot_script,
    load_config,
    parse_config,
    run_sweep,
    write_csv,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

SMALL = """
seed = 5
[grid]
mu_db = [0, 10]
modulations = [2, 4]
hop_counts = [2]
l_p = ["perfect", 2]
[mc]
block_length = 20
min_bit_errors = 50
max_blocks = 5000
chunk_blocks = 500
"""

# relay far from everyone and a feeble pilot: the estimator error exceeds the link gain
WEAK = """
[topology]
relays = [[5.0, 5.0]]
[grid]
mu_db = [0]
hop_counts = [2]
pilot_power = 1e-6
[mc]
max_blocks = 100
"""


def write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestParse:
    def test_defaults(self):
        cfg = parse_config({"grid": {"mu_db": [0]}})
        assert cfg.alpha == 3.0
        assert cfg.relays == DEFAULT_RELAYS
        assert cfg.topology(2).chain == (Point(0, 0), Point(0.6, 0.2), Point(1, 0))
        assert cfg.topology(2).primary == Point(0.7, 0.5)
        assert cfg.seed == 0 and cfg.modulations == (2,)

    def test_mu_grid_required_and_nonempty(self):
        with pytest.raises(ConfigError, match="mu_db: required"):
            parse_config({})
        with pytest.raises(ConfigError, match="must not be empty"):
            parse_config({"grid": {"mu_db": []}})

    def test_all_problems_listed(self):
        with pytest.raises(ConfigError) as info:
            parse_config({
                "bogus": 1,
                "alpha": -1,
                "grid": {"mu_db": [0], "modulations": [3], "l_p": [0], "extra": True},
                "mc": {"block_length": 0},
            })
        text = "\n".join(info.value.problems)
        for needle in ("'bogus'", "alpha", "modulations", "l_p", "'extra'", "block_length"):
            assert needle in text
        assert len(info.value.problems) == 6

    def test_relay_paths(self):
        cfg = parse_config({"grid": {"mu_db": [0], "hop_counts": [2], "relay_paths": {"2": [1]}}})
        assert cfg.topology(2).chain[1] == Point(0.8, 0.3)
        with pytest.raises(ConfigError, match="indices"):
            parse_config({"grid": {"mu_db": [0], "relay_paths": {"2": [7]}}})

    def test_too_many_hops(self):
        with pytest.raises(ConfigError, match="need 3 relays"):
            parse_config({"grid": {"mu_db": [0], "hop_counts": [4]}})

    def test_coincident_nodes(self):
        with pytest.raises(ConfigError, match="topology for 2 hops"):
            parse_config({"topology": {"relays": [[0.0, 0.0]]}, "grid": {"mu_db": [0]}})

    def test_estimator(self):
        cfg = parse_config({"grid": {"mu_db": [0], "l_p": ["perfect", 3], "pilot_power": 2.0}})
        assert cfg.estimator("perfect") == EstimatorConfig.perfect_csi()
        assert cfg.estimator(3) == EstimatorConfig(l_p=3, pilot_power=2.0)

    def test_grid_order(self):
        cfg = parse_config({"grid": {"mu_db": [0, 5], "modulations": [2, 4], "hop_counts": [2, 3]}})
        assert cfg.grid()[:3] == [(0.0, 2, 2, 1), (5.0, 2, 2, 1), (0.0, 4, 2, 1)]
        assert len(cfg.grid()) == 8

    def test_toml_syntax_error_has_location(self, tmp_path):
        p = write(tmp_path, "seed = 1\n[grid\nmu_db = [0]\n")
        with pytest.raises(ConfigError, match="line 2"):
            load_config(p)

    @pytest.mark.parametrize("name", ["fig_ber_vs_mu.toml", "fig_ber_vs_pilots.toml"])
    def test_shipped_configs_parse(self, name):
        assert load_config(CONFIGS / name).grid()


class TestCsv:
    def test_header_only(self):
        assert format_csv([]) == CSV_HEADER + "\n"

    def test_header_exact(self):
        assert CSV_HEADER.split(",") == [
            "mu_db", "M", "n_hops", "L_p", "ber_analytic", "ber_sim", "sim_stderr",
            "bits", "errors", "intf_exceedance", "status",
        ]

    def test_round_trip(self, tmp_path):
        rows = [
            Row(10.0, 4, 2, "perfect", 0.1234567890123456789, None, None, None, None, None, "ok"),
            Row(0.0, 2, 3, 2, 1e-300, 0.3, 0.001, 1000, 300, 0.51, "budget_exhausted"),
        ]
        p = tmp_path / "out.csv"
        write_csv(rows, p)
        recs = list(csv.DictReader(io.StringIO(p.read_text())))
        assert float(recs[0]["ber_analytic"]) == rows[0].ber_analytic
        assert recs[0]["ber_sim"] == ""
        assert recs[0]["L_p"] == "perfect"
        assert float(recs[1]["ber_analytic"]) == 1e-300
        assert int(recs[1]["bits"]) == 1000
        assert recs[1]["status"] == "budget_exhausted"

    def test_sweep_rows(self):
        cfg = parse_config(tomllib.loads(SMALL))
        rows = run_sweep(cfg)
        assert len(rows) == 8
        assert all(r.status in ("ok", "budget_exhausted") for r in rows)
        assert all(0 <= r.ber_analytic <= 0.5 and r.ber_sim is not None for r in rows)
        perfect = [r for r in rows if r.l_p == "perfect"]
        assert all(r.intf_exceedance == 0.0 for r in perfect)
        assert run_sweep(cfg, workers=4) == rows

    def test_modes(self):
        cfg = parse_config({"grid": {"mu_db": [0]}, "mc": {"max_blocks": 200}})
        a = run_sweep(cfg, simulate=False)[0]
        assert a.ber_sim is None and a.bits is None and a.ber_analytic is not None
        s = run_sweep(cfg, analytic=False)[0]
        assert s.ber_analytic is None and s.ber_sim is not None

    def test_gnuplot(self):
        rows = [Row(0.0, 2, 2, 1), Row(5.0, 2, 2, 1), Row(0.0, 4, 2, "perfect")]
        script = gnuplot_script(rows, "x.csv")
        assert script.count("with lines") == 2 and script.count("with points") == 2
        assert "set logscale y" in script


class TestCli:
    def test_success_and_determinism(self, tmp_path):
        cfg = write(tmp_path, SMALL)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["run", "--config", str(cfg), "--output", str(a)]) == 0
        assert main(["run", "--config", str(cfg), "--output", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        assert a.read_text().splitlines()[0] == CSV_HEADER
        assert len(a.read_text().splitlines()) == 9

    def test_seed_override(self, tmp_path):
        cfg = write(tmp_path, SMALL)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["run", "--config", str(cfg), "--output", str(a), "--sim-only"])
        main(["run", "--config", str(cfg), "--output", str(b), "--sim-only", "--seed", "6"])
        assert a.read_bytes() != b.read_bytes()
        assert main(["run", "--config", str(cfg), "--output", str(b), "--seed", str(2**64)]) == 1

    def test_analytic_only(self, tmp_path):
        cfg = write(tmp_path, SMALL)
        out = tmp_path / "a.csv"
        assert main(["run", "--config", str(cfg), "--output", str(out), "--analytic-only"]) == 0
        recs = list(csv.DictReader(out.open()))
        assert all(r["ber_sim"] == "" and r["ber_analytic"] for r in recs)

    def test_mutually_exclusive(self, tmp_path):
        with pytest.raises(SystemExit):
            main(["run", "--config", "x", "--analytic-only", "--sim-only"])

    def test_config_error(self, tmp_path, capsys):
        cfg = write(tmp_path, "[grid]\nmu_db = []\nmodulations = [3]\n")
        assert main(["run", "--config", str(cfg), "--output", str(tmp_path / "o.csv")]) == 1
        err = capsys.readouterr().err
        assert "mu_db" in err and "modulations" in err

    def test_missing_config_is_io_error(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "nope.toml")]) == 3

    def test_unwritable_output(self, tmp_path):
        cfg = write(tmp_path, SMALL)
        assert main(["run", "--config", str(cfg), "--analytic-only",
                     "--output", str(tmp_path / "no" / "dir" / "o.csv")]) == 3

    def test_numeric_failure(self, tmp_path):
        cfg = write(tmp_path, WEAK)
        out = tmp_path / "o.csv"
        assert main(["run", "--config", str(cfg), "--output", str(out)]) == 2
        recs = list(csv.DictReader(out.open()))
        assert recs[0]["status"].startswith("error")

    def test_gnuplot_file(self, tmp_path):
        cfg = write(tmp_path, SMALL)
        gp = tmp_path / "plot.gp"
        out = tmp_path / "o.csv"
        assert main(["run", "--config", str(cfg), "--output", str(out), "--analytic-only",
                     "--gnuplot", str(gp)]) == 0
        assert str(out) in gp.read_text()

    def test_module_entry_point(self, tmp_path):
        cfg = write(tmp_path, SMALL)
        out = tmp_path / "o.csv"
        r = subprocess.run([sys.executable, "-m", "underlay_ber", "run", "--config", str(cfg),
                            "--output", str(out), "--analytic-only"], capture_output=True)
        assert r.returncode == 0 and out.exists()
