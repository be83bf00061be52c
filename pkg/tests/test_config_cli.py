import pytest

from nlwave.cli import EXIT_ACCEPT, EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main, run
from nlwave.config import (
    REFERENCE_CONFIG,
    apply_overrides,
    config_hash,
    load_config,
    parse_config,
    render_config,
)
from nlwave.errors import ConfigError

COARSE = ["grid.nx=9", "grid.ny=9", "grid.T=1", "probes.lam=4", "identity.probe_lam=2"]


def test_reference_config_parses():
    cfg, text = load_config()
    assert cfg["grid"]["nx"] == 33 and cfg["expand"]["eps"] == (0.08, 0.04, 0.02, 0.01)
    assert config_hash(text) == config_hash(load_config(REFERENCE_CONFIG)[1])


def test_misspelled_key_suggests_the_right_one(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("[expand]\nepzilon = 0.1, 0.05\n")
    with pytest.raises(ConfigError, match="did you mean 'eps'"):
        load_config(p)
    assert main([ "expand", str(p), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_unknown_section_and_bad_values(tmp_path):
    with pytest.raises(ConfigError, match="section"):
        parse_config("[gird]\nnx = 3\n")
    with pytest.raises(ConfigError, match="cannot parse"):
        load_config(overrides=["grid.nx=abc"])
    with pytest.raises(ConfigError, match="too large"):
        load_config(overrides=["probes.lam=40"])


def test_overrides():
    cfg, _ = load_config(overrides=["grid.nx=25", "courant=0.4"])
    assert cfg["grid"]["nx"] == 25 and cfg["grid"]["courant"] == 0.4
    with pytest.raises(ConfigError, match="ambiguous"):
        load_config(overrides=["eps=0.1"])
    with pytest.raises(ConfigError):
        load_config(overrides=["grid.nx"])


def test_render_round_trip_and_hash():
    raw = apply_overrides(parse_config(REFERENCE_CONFIG.read_text()), ["expand.eps=0.08,0.04 , 0.02"])
    text = render_config(raw)
    assert render_config(parse_config(text)) == text
    assert config_hash(text) != config_hash(render_config(parse_config(REFERENCE_CONFIG.read_text())))


def test_lightray_outputs_are_byte_identical(tmp_path):
    dirs = []
    for k in range(2):
        status, out = run("lightray", overrides=COARSE, out_root=tmp_path / str(k))
        assert status in (EXIT_OK,)
        dirs.append(out)
    for name in ("raydata.csv", "fourier_slice.csv", "acceptance.csv", "config.resolved.ini"):
        assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()


def test_report_flags_failed_acceptance(tmp_path, capsys):
    status, out = run("report", overrides=COARSE + ["report.checks=lightray"], out_root=tmp_path)
    assert status == EXIT_ACCEPT
    assert "FAIL" in capsys.readouterr().out
    assert (out / "lightray" / "lightray_report.csv").is_file()


def test_numerical_failure_exit(tmp_path):
    with pytest.warns(RuntimeWarning, match="diameter"):
        status, _ = run("recover", overrides=COARSE + ["recover.lams=2", "recover.ht=0.2"], out_root=tmp_path)
    assert status == EXIT_NUMERIC


def test_unknown_report_check(tmp_path):
    status, _ = run("report", overrides=COARSE + ["report.checks=nope"], out_root=tmp_path)
    assert status == EXIT_CONFIG
