import csv
import io
import math

import numpy as np
import pytest

from qfcs import __version__
from qfcs.cli import main
from qfcs.config import ConfigError, ExperimentConfig, load_config, parse_config
from qfcs.experiments import (
    FILTERED,
    run_cumulant_experiment,
    run_distribution_experiment,
    run_filter_experiment,
)

SMALL = "[model]\nL = 8\n[estimation]\ngrid_sizes = 3, 5\n"


def read_rows(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    rows = list(csv.reader(io.StringIO("\n".join(body))))
    return rows[0], rows[1:]


# -- config ------------------------------------------------------------------


def test_empty_config_is_default():
    assert parse_config("") == ExperimentConfig()
    assert ExperimentConfig().grid_list == tuple(range(1, 14))


def test_config_values():
    cfg = parse_config(
        "[model]\nL = 8  # smaller\n[estimation]\nmode = shots\nshots = 200\n"
        "grid_sizes = 1, 3..5\nparity_aware = no\n[cumulants]\nh_values = 0.1, 0.01\nprecision_bits = 128\n"
    )
    assert cfg.L == 8 and cfg.mode == "shots" and cfg.shots == 200
    assert cfg.grid_sizes == (1, 3, 4, 5) and cfg.parity_aware is False
    assert cfg.h_values == (0.1, 0.01) and cfg.extended_bits == 128
    assert ExperimentConfig().extended_bits is None


def test_config_round_trip():
    cfg = parse_config(SMALL + "[filter]\ntargets = 6, 8\ncenter = 2\n")
    assert parse_config(cfg.to_text()) == cfg
    assert parse_config(ExperimentConfig().to_text()) == ExperimentConfig()


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("[model]\nL = 7\n", "even"),
        ("[model]\nsize = 8\n", "unknown key"),
        ("[plots]\nx = 1\n", "unknown section"),
        ("[model]\nL = eight\n", "bad value"),
        ("[estimation]\nmode = sampled\n", "mode"),
        ("[model\nL = 8\n", "syntax"),
        ("L = 8\n", "syntax"),
        ("[cumulants]\nh_values = 0.1, -0.1\n", "positive"),
        ("[cumulants]\nprecision_bits = 24\n", "53"),
    ],
)
def test_config_errors(text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(text)


def test_load_config(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(SMALL)
    assert load_config(path).L == 8


# -- CLI -----------------------------------------------------------------------


def test_cli_writes_deterministic_csv(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[model]\nL = 8\n[estimation]\ngrid_sizes = 3, 5\nmode = shots\nshots = 100\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["distribution", "--config", str(cfg), "--seed", "7", "--out", str(a)]) == 0
    assert main(["distribution", "--config", str(cfg), "--seed", "7", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.csv"
    main(["distribution", "--config", str(cfg), "--seed", "8", "--out", str(c)])
    assert c.read_bytes() != a.read_bytes()
    text = a.read_text()
    assert text.startswith(f"# qfcs {__version__} distribution\n# seed = 7\n")
    assert "# config: shots = 100" in text


def test_cli_stdout(capsys):
    assert main(["distribution", "--mode", "exact"] + ["--config", "/dev/null"]) == 0
    header, rows = read_rows(capsys.readouterr().out)
    assert header == ["k", "n", "P_fcs", "P_ed", "abs_error"]


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[model]\nL = 7\n")
    assert main(["distribution", "--config", str(bad)]) == 1
    assert main(["distribution", "--config", str(tmp_path / "missing.ini")]) == 1
    kill = tmp_path / "kill.ini"
    kill.write_text("[model]\nL = 4\n[filter]\ntargets = 0, 2, 4\n")
    assert main(["filter", "--config", str(kill)]) == 2
    assert "error" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["bogus"])


def test_cli_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out


# -- experiment outputs -------------------------------------------------------


def test_distribution_full_grid_reference_setting():
    cfg = ExperimentConfig(grid_sizes=(13, 5), parity_aware=False)
    _, rows = read_rows(run_distribution_experiment(cfg))
    full = [r for r in rows if r[0] == "13" and len(r) == 5]
    assert len(full) == 13
    assert max(float(r[4]) for r in full) < 1e-10
    summary = {r[0]: float(r[1]) for r in rows if len(r) == 2}
    assert summary["13"] < 1e-10

    # k=5 aliasing: error at n is the folded weight sum_{j != 0} (-1)^j P(n + 5j)
    err5 = {int(r[1]): float(r[4]) for r in rows if r[0] == "5" and len(r) == 5}
    exact = {int(r[1]): float(r[3]) for r in rows if r[0] == "5" and len(r) == 5}
    for n, err in err5.items():
        folded = sum((-1) ** j * exact.get(n + 5 * j, 0.0) for j in range(-3, 4) if j)
        assert abs(err - abs(folded)) < 1e-12
    assert err5[0] == pytest.approx(exact[10]) and err5[12] == pytest.approx(exact[2])
    assert err5[10] == pytest.approx(exact[0]) and err5[6] < 1e-12


def test_distribution_parity_grid_rows():
    _, rows = read_rows(run_distribution_experiment(parse_config(SMALL)))
    ns = sorted({int(r[1]) for r in rows if r[0] == "5" and len(r) == 5})
    assert ns == [0, 2, 4, 6, 8]
    assert max(float(r[4]) for r in rows if r[0] == "5" and len(r) == 5) < 1e-10


def test_filter_output_marks_removed_sectors():
    text = run_filter_experiment(parse_config(SMALL))
    assert "# analytic P_f = " in text
    _, rows = read_rows(text)
    detail = [r for r in rows if len(r) == 5]
    marked = {int(r[1]) for r in detail if r[2] == FILTERED}
    assert marked == {6, 8}
    assert all(r[4] == FILTERED for r in detail if r[2] == FILTERED)
    summary = [r for r in rows if len(r) == 4]
    assert len(summary) == 2
    k3 = [r for r in detail if r[0] == "3" and r[2] != FILTERED]
    assert max(float(r[4]) for r in k3) < 1e-8
    assert all(0 < float(r[2]) <= 1 and r[3] == "0" for r in summary)


def test_cumulant_output_slopes():
    cfg = ExperimentConfig(L=8, h_values=tuple(np.geomspace(1e-3, 1e-1, 5)), rounds=(0, 1), precision_bits=128)
    _, rows = read_rows(run_cumulant_experiment(cfg))
    assert len(rows) == 2 * 5 * 3
    for order in ("1", "2", "3"):
        for rounds, target in (("0", 2), ("1", 4)):
            sel = [r for r in rows if r[0] == order and r[2] == rounds]
            hs = np.array([float(r[1]) for r in sel])
            errs = np.array([float(r[5]) for r in sel])
            slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
            assert abs(slope - target) < 0.3, (order, rounds, slope)


def test_charfunc_dump_matches_exact(capsys):
    assert main(["charfunc", "--config", "/dev/null"]) == 0
    header, rows = read_rows(capsys.readouterr().out)
    assert header[:3] == ["k", "i", "theta"]
    assert len(rows) == sum(range(1, 14))
    for r in rows:
        assert math.isclose(float(r[3]), float(r[5]), abs_tol=1e-12)
        assert math.isclose(float(r[4]), float(r[6]), abs_tol=1e-12)
