import json
import math
import subprocess
import sys
import time

import pytest

from powervol.cli import EXIT_NO_SOLUTION, EXIT_OK, EXIT_USAGE, main
from powervol.iv_closed_form import implied_vol_closed_form
from powervol.iv_reference import implied_vol_iterative
from powervol.mc_study import StudyConfig, emit_table, run_study
from powervol.pricing import MarketState, PowerOptionSpec, price_power_call

PRICE_ARGS = ["--alpha", "1", "--spot", "1", "--strike", "1", "--rate", "0", "--tau", "1", "--sigma", "0.15"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestPrice:
    def test_at_the_money(self, capsys):
        code, out, _ = run(capsys, "price", "--kind", "type1", *PRICE_ARGS)
        assert code == EXIT_OK
        assert out.splitlines()[0] == "price  0.0597853"
        assert float(out.split()[1]) == pytest.approx(math.erf(0.075 / math.sqrt(2)), abs=5e-7)

    def test_unit_strike_kinds(self, capsys):
        args = ["--alpha", "2", "--spot", "1.1", "--strike", "1", "--rate", "0.01", "--tau", "0.7", "--sigma", "0.2"]
        _, one, _ = run(capsys, "price", "--kind", "type1", *args)
        _, two, _ = run(capsys, "price", "--kind", "type2", *args)
        assert one == two

    def test_missing_sigma(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["price", *PRICE_ARGS[:-2]])
        assert exc.value.code == EXIT_USAGE
        assert "--sigma" in capsys.readouterr().err

    @pytest.mark.parametrize("flag,value", [("--spot", "-1"), ("--alpha", "0"), ("--kind", "type3"), ("--tau", "x")])
    def test_invalid_flag_is_named(self, capsys, flag, value):
        argv = ["price", *PRICE_ARGS]
        if flag in argv:
            argv[argv.index(flag) + 1] = value
        else:
            argv += [flag, value]
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == EXIT_USAGE
        assert flag in capsys.readouterr().err

    def test_json_matches_library(self, capsys):
        args = ["--kind", "type2", "--alpha", "1.6", "--spot", "1.05", "--strike", "0.9", "--rate", "0.001"]
        _, out, _ = run(capsys, "price", *args, "--tau", "0.5", "--sigma", "0.3", "--json")
        payload = json.loads(out)
        expected = price_power_call(MarketState(1.05, 0.001, 0.5, 0.3), PowerOptionSpec(1.6, 0.9, "type2"))
        assert (payload["price"], payload["d1"], payload["d2"]) == (expected.price, expected.d1, expected.d2)
        assert payload["kind"] == "type2" and payload["sigma"] == 0.3


class TestIv:
    BASE = ["--alpha", "2", "--spot", "1", "--strike", "0.9", "--rate", "0.001", "--tau", "1"]

    def test_round_trip_of_price_output(self, capsys):
        _, out, _ = run(capsys, "price", *self.BASE, "--sigma", "0.15", "--json")
        price = json.loads(out)["price"]
        code, out, _ = run(capsys, "iv", *self.BASE, "--price", repr(price), "--check-iterative", "--json")
        report = json.loads(out)
        assert code == EXIT_OK
        assert report["status"] == "Solved" and report["branch"] == "PlusRoot"
        assert report["sigma"] == pytest.approx(0.15, abs=0.0083)
        assert report["iterative_sigma"] == pytest.approx(0.15, abs=1e-8)
        assert report["gap"] == report["sigma"] - report["iterative_sigma"]

    def test_matches_library(self, capsys):
        _, out, _ = run(capsys, "iv", *self.BASE, "--price", "0.2", "--check-iterative", "--json")
        report = json.loads(out)
        market, spec = MarketState(1.0, 0.001, 1.0), PowerOptionSpec(2.0, 0.9)
        outcome = implied_vol_closed_form(market, spec, 0.2)
        assert report["sigma"] == outcome.sigma
        assert report["discriminant"] == outcome.discriminant
        assert report["iterative_sigma"] == implied_vol_iterative(market, spec, 0.2)

    def test_text_output(self, capsys):
        code, out, _ = run(capsys, "iv", *self.BASE, "--price", "0.2")
        assert code == EXIT_OK
        fields = dict(line.split(None, 1) for line in out.splitlines())
        assert fields["status"] == "Solved" and fields["branch"] == "PlusRoot"
        assert len(fields["sigma"].replace(".", "").lstrip("0")) <= 6

    def test_inadmissible_quote(self, capsys):
        args = ["--alpha", "1", "--spot", "1", "--strike", "0.9", "--rate", "0.001", "--tau", "1"]
        code, _, err = run(capsys, "iv", *args, "--price", "0.05")
        assert code == EXIT_NO_SOLUTION
        assert "NegativeDiscriminant" in err or "WrongSignCondition" in err

    def test_vanilla_alias(self, capsys):
        args = ["--spot", "1.02", "--strike", "0.97", "--rate", "0.01", "--tau", "0.4", "--price", "0.07"]
        direct = run(capsys, "iv", "--alpha", "1", *args)
        alias = run(capsys, "iv", "--corrado-miller", *args)
        assert direct == alias
        assert direct[0] == EXIT_OK

    def test_alias_rejects_other_alpha(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["iv", "--corrado-miller", "--alpha", "2", *self.BASE[2:], "--price", "0.1"])
        assert exc.value.code == EXIT_USAGE

    def test_alpha_required(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["iv", *self.BASE[2:], "--price", "0.1"])
        assert exc.value.code == EXIT_USAGE
        assert "--alpha" in capsys.readouterr().err


class TestSimulate:
    def test_byte_identical_files(self, capsys, tmp_path):
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (first, second):
            assert run(capsys, "simulate", "--seed", "0", "--out", str(path))[0] == EXIT_OK
        assert first.read_bytes() == second.read_bytes()
        assert first.read_bytes() == emit_table(run_study(StudyConfig(seed=0)))

    def test_parallel_matches_serial(self, capsys):
        _, serial, _ = run(capsys, "simulate", "--seed", "3", "--reps", "4")
        _, parallel, _ = run(capsys, "simulate", "--seed", "3", "--reps", "4", "--workers", "3")
        assert serial == parallel

    def test_one_cell(self, capsys):
        code, out, err = run(capsys, "simulate", "--seed", "0", "--kinds", "type1", "--strikes", "1.0", "--alphas", "1.0")
        assert code == EXIT_OK
        lines = out.splitlines()
        assert len(lines) == 2
        _, strike, alpha, dnr, mean, std = lines[1].split(",")
        assert (float(strike), float(alpha)) == (1.0, 1.0)
        assert 0 < float(dnr) < 1 and 0.12 < float(mean) < 0.16 and 0 < float(std) < 0.03
        assert "mean_sigma" in err

    def test_json_round_trip(self, capsys):
        _, out, _ = run(capsys, "simulate", "--seed", "1", "--reps", "2", "--steps", "20", "--json")
        rows = json.loads(out)
        config = StudyConfig(seed=1, num_reps=2, num_steps=20)
        assert rows == json.loads(emit_table(run_study(config), "json"))
        assert len(rows) == 54

    def test_config_file_and_override(self, capsys, tmp_path):
        cfg = tmp_path / "study.cfg"
        cfg.write_text("seed = 5\nreps = 2\nsteps = 10\nalphas = 1.0\nstrikes = 1.0\n")
        _, from_file, _ = run(capsys, "simulate", "--config", str(cfg))
        _, overridden, _ = run(capsys, "simulate", "--config", str(cfg), "--reps", "3")
        assert from_file != overridden
        expected = emit_table(run_study(StudyConfig(seed=5, num_reps=3, num_steps=10, alphas=(1.0,), strikes=(1.0,))))
        assert overridden.encode() == expected

    def test_invalid_config(self, capsys, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("reps = many\n")
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--config", str(cfg)])
        assert exc.value.code == EXIT_USAGE

    def test_unseeded_run_reports_seed(self, capsys):
        code, _, err = run(capsys, "simulate", "--reps", "1", "--steps", "5")
        assert code == EXIT_OK
        assert "using seed" in err

    def test_smoke_run_under_one_second(self):
        start = time.perf_counter()
        proc = subprocess.run(
            [sys.executable, "-m", "powervol", "simulate", "--seed", "0", "--reps", "1", "--steps", "10"],
            capture_output=True,
            check=True,
        )
        elapsed = time.perf_counter() - start
        assert len(proc.stdout.decode().splitlines()) == 55
        assert elapsed < 1.0
