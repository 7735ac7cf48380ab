import os
import subprocess
import sys
import textwrap

import pytest

from convroots.cli.config import ConfigError, RunConfig
from convroots.cli.main import main

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib


def write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text), encoding="utf-8")
    return str(p)


def manifest(out):
    with open(os.path.join(out, "manifest.toml"), "rb") as fh:
        return tomllib.load(fh)


GEO_OS = """
    [distribution]
    family = "geometric"
    params = {q = 0.5}

    [grid]
    step = 1.0
    N = 400

    [classes]
    list = ["OS", "L(0.6931471805599453)"]
"""


def test_diag_geometric(tmp_path):
    out = str(tmp_path / "out")
    assert main(["diag", "--config", write(tmp_path, GEO_OS), "--out", out]) == 0
    m = manifest(out)
    assert m["reports"]["OS"]["status"] == "consistent-nonmember"
    assert m["reports"]["L_gamma_0.6931471805599453"]["status"] == "consistent-member"
    # the full resolved config is embedded, defaults included
    assert m["config"]["classes"]["band"] == 0.02
    assert m["thresholds"]["floor"] == 1e-280
    csv = os.path.join(out, m["reports"]["OS"]["series_files"][0])
    with open(csv, "rb") as fh:
        head = fh.read(200)
    assert head.startswith(b"x,value,window_sup,window_inf,flag\n") and b"\r" not in head


def test_reruns_are_byte_identical(tmp_path):
    cfg = write(tmp_path, GEO_OS)
    outs = [str(tmp_path / f"o{i}") for i in (1, 2)]
    for o, threads in zip(outs, ("1", "2")):
        assert main(["diag", "--config", cfg, "--out", o, "--threads", threads]) == 0
    files = sorted(f for f in os.listdir(outs[0]) if f != "run_meta.toml")
    assert files == sorted(f for f in os.listdir(outs[1]) if f != "run_meta.toml")
    for f in files:
        with open(os.path.join(outs[0], f), "rb") as a, open(os.path.join(outs[1], f), "rb") as b:
            assert a.read() == b.read(), f
    meta = tomllib.load(open(os.path.join(outs[1], "run_meta.toml"), "rb"))
    assert meta["threads"] == 2 and "timestamp_utc" in meta


def test_empty_class_list(tmp_path):
    out = str(tmp_path / "out")
    cfg = write(tmp_path, """
        [classes]
        list = []
    """)
    assert main(["diag", "--config", cfg, "--out", out]) == 0
    assert manifest(out)["reports"] == {}


def test_unknown_key_reports_line(tmp_path, capsys):
    cfg = write(tmp_path, """
        [grid]
        step = 1.0
        bogus = 3
    """)
    assert main(["diag", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "grid.bogus" in err and f"{cfg}:4:" in err


def test_bad_family_names_field(tmp_path, capsys):
    cfg = write(tmp_path, """
        [distribution]
        family = "cauchy"
    """)
    assert main(["diag", "--config", cfg]) == 2
    err = capsys.readouterr().err
    assert "distribution.family" in err and "cauchy" in err


def test_unknown_section_and_type_errors():
    with pytest.raises(ConfigError) as e:
        RunConfig.loads("[nope]\nx = 1\n")
    assert e.value.line == 1
    with pytest.raises(ConfigError) as e:
        RunConfig.loads("[grid]\n\nN = \"many\"\n")
    assert e.value.line == 3 and "integer" in str(e.value)
    with pytest.raises(ConfigError):
        RunConfig.loads("[grid\nN = 3\n")


def test_config_round_trip():
    cfg = RunConfig.loads(textwrap.dedent(GEO_OS))
    again = RunConfig.loads(cfg.dumps())
    assert again == cfg
    assert RunConfig.loads("") == RunConfig()


def test_conditions_tables(tmp_path):
    out = str(tmp_path / "out")
    cfg = write(tmp_path, """
        [distribution]
        family = "explicit"
        masses = [0.5, 0.5]

        [conditions]
        epsilons = [0.5, 0.1, 0.01]
    """)
    assert main(["conditions", "--config", cfg, "--out", out]) == 0
    m = manifest(out)
    assert m["liminf"]["passed"] is True
    rows = open(os.path.join(out, m["n0"]["table"])).read().splitlines()[1:]
    n0s = [int(r.split(",")[2]) for r in rows]
    assert n0s == sorted(n0s)
    bridge = open(os.path.join(out, m["bridge"]["table"])).read()
    assert "FAIL" not in bridge


def test_conditions_truncation_rows(tmp_path):
    out = str(tmp_path / "out")
    cfg = write(tmp_path, """
        [distribution]
        family = "explicit"
        masses = [0.5, 0.5]

        [conditions]
        liminf = false
        bridge = false
        pmf = {kind = "poisson", mu = 1.0, K = 3}
    """)
    assert main(["conditions", "--config", cfg, "--out", out]) == 0
    table = open(os.path.join(out, manifest(out)["n0"]["table"])).read()
    assert "inconclusive-by-truncation" in table


def test_kesten_feasible_and_infeasible(tmp_path):
    out = str(tmp_path / "k1")
    cfg = write(tmp_path, """
        [distribution]
        family = "explicit"
        masses = [0.5, 0.5]
    """)
    assert main(["kesten", "--config", cfg, "--out", out]) == 0
    cert = manifest(out)["certificate"]
    assert cert["verified"] is True and cert["max_violation"] >= 0
    out2 = str(tmp_path / "k2")
    cfg2 = write(tmp_path, """
        [distribution]
        family = "pareto"
        params = {alpha = 2.0}

        [grid]
        step = 0.25
        N = 1024

        [kesten]
        G = {family = "exponential", params = {lam = 1.0}}
        k_max = 3
    """, "k2.toml")
    assert main(["kesten", "--config", cfg2, "--out", out2]) == 0
    cert = manifest(out2)["certificate"]
    assert cert["feasible"] is False and "A1" in cert["infeasibility"]


def test_kesten_bad_M_exits_nonzero(tmp_path, capsys):
    cfg = write(tmp_path, """
        [distribution]
        family = "explicit"
        masses = [0.5, 0.5]

        [kesten]
        M_choice = 1e-3
    """)
    assert main(["kesten", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "a < M < 1 + a" in capsys.readouterr().err


def test_repro_example61(tmp_path):
    out = str(tmp_path / "ex")
    assert main(["repro-example61", "--out", out]) == 0
    m = manifest(out)
    status = {(c["name"], c["detail"].get("t")): c["status"] for c in m["checks"]}
    assert status[("plateau", 1.0)] == "PASS"
    assert status[("L_verdict", None)] == "PASS"
    assert status[("peak", 2.0)] == "PASS"
    assert m["params"]["alpha"] == 1.6 and m["params"]["gamma"] == 1.0
    peak_csv = [f for c in m["checks"] if c["name"] == "peak" for f in c["series_files"]]
    assert all(os.path.exists(os.path.join(out, f)) for f in peak_csv)


def test_levy_pipeline(tmp_path):
    out = str(tmp_path / "lv")
    cfg = write(tmp_path, """
        [distribution]
        family = "levy"
        levy_kind = "pareto"
        levy_params = {alpha = 2.0, mu = 1.0}
        h1 = {family = "exponential", params = {lam = 5.0}}

        [grid]
        step = 0.25
        N = 1024
    """)
    assert main(["levy", "--config", cfg, "--out", out]) == 0
    eq = manifest(out)["equivalence"]
    assert eq["status"] == "PASS"
    assert all(0.5 <= v <= 2.0 for v in eq["window_sups"] + eq["window_infs"])


def test_levy_point_h1_gives_unit_ratio(tmp_path):
    out = str(tmp_path / "lv")
    cfg = write(tmp_path, """
        [distribution]
        family = "levy"
        h1 = {family = "point", params = {c = 0.0}}

        [grid]
        step = 0.5
        N = 256
    """)
    assert main(["levy", "--config", cfg, "--out", out]) == 0
    eq = manifest(out)["equivalence"]
    assert eq["lower"] == eq["upper"] == 1.0


def test_levy_table_spectrum(tmp_path):
    table = tmp_path / "nu.csv"
    table.write_text("x,nu_tail\n0.5,3.0\n1.0,2.0\n10.0,0.2\n100.0,0.02\n", encoding="utf-8")
    out = str(tmp_path / "lv")
    cfg = write(tmp_path, f"""
        [distribution]
        family = "levy"
        levy_kind = "table"
        levy_table = "{table}"

        [grid]
        step = 0.5
        N = 150
    """)
    assert main(["levy", "--config", cfg, "--out", out]) == 0
    assert manifest(out)["mu"] == 2.0


def test_levy_zero_mass_rejected(tmp_path, capsys):
    cfg = write(tmp_path, """
        [distribution]
        family = "levy"
        levy_params = {alpha = 2.0, mu = 0.0}
    """)
    assert main(["levy", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "mu = 0" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    out = str(tmp_path / "o")
    r = subprocess.run([sys.executable, "-m", "convroots", "diag", "--config",
                        write(tmp_path, GEO_OS), "--out", out],
                       capture_output=True, text=True, timeout=120)
    assert r.returncode == 0, r.stderr
    assert os.path.exists(os.path.join(out, "manifest.toml"))
