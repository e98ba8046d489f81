#!/usr/bin/env python3
"""
Complete workflow test for the spin dynamics simulator
Tests config parsing, the CLI and the written artifacts end-to-end
"""

import sys
import json
import time
from pathlib import Path

import numpy as np
import pytest

# Add app to path
sys.path.insert(0, str(Path(__file__).parent))

from app.cli import main, parse_config
from domain.exceptions import ConfigError
from domain.schema import ExperimentConfig, parse_angle
from infra.csv.csv_adapter import CsvReader, CsvWriter

CONFIGS = Path(__file__).parent / "configs"
ARTIFACTS = ["initial_state.csv", "final_state.csv", "fid.csv", "spectrum.csv", "report.txt"]


def write_config(directory: Path, data: dict) -> Path:
    path = directory / "experiment.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def simulate(config: Path, out_dir: Path) -> Path:
    assert main(["-q", "simulate", str(config), "--out", str(out_dir)]) == 0
    return out_dir


def test_validate_shipped_configs(capsys):
    """Every shipped config passes validation"""
    print("\n✅ Testing config validation...")
    for path in sorted(CONFIGS.glob("*.json")):
        assert main(["-q", "validate", str(path)]) == 0, f"{path.name} should be valid"
        assert f"{path}: valid" in capsys.readouterr().out
    print("  ✅ Config validation: PASSED")


def test_transitions_command(capsys):
    """Transitions of a single proton in 1 T"""
    assert main(["-q", "transitions", str(CONFIGS / "minimal_spin_half.json")]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "freq_MHz,upper,lower"
    frequency, upper, lower = lines[1].split(",")
    assert float(frequency) == pytest.approx(42.577)
    assert (upper, lower) == ("1", "0")


def test_simulate_writes_artifacts(tmp_path):
    """A full run writes states, FID, spectrum and report"""
    print("\n📄 Testing simulate...")
    out = simulate(CONFIGS / "kclo3_sigma_plus.json", tmp_path / "run")
    for name in ARTIFACTS:
        assert (out / name).exists(), f"missing {name}"

    final = CsvReader().read_matrix(out / "final_state.csv")
    np.testing.assert_allclose(np.real(np.diag(final)), [0.5, 0.0, 0.5, 0.0], atol=1e-2)
    fid = CsvReader().read_csv_file(out / "fid.csv")
    assert list(fid.columns) == ["time_us", "re", "im"]
    assert len(fid) >= 16
    report = (out / "report.txt").read_text(encoding="utf-8")
    assert "sigma+ pi pulse" in report
    print(f"  ✅ Generated: {out}")


@pytest.mark.parametrize("config", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_config_is_deterministic_and_fast(config, tmp_path):
    """Two runs of a shipped config give byte-identical CSV files, each in under a minute"""
    start = time.perf_counter()
    first = simulate(config, tmp_path / "first")
    elapsed = time.perf_counter() - start
    print(f"  ⏱️ {config.stem}: {elapsed:.1f} s")
    assert elapsed < 60.0, f"{config.stem} took {elapsed:.1f} s"

    second = simulate(config, tmp_path / "second")
    for path in sorted(first.glob("*.csv")):
        assert path.read_bytes() == (second / path.name).read_bytes(), f"{config.stem}: {path.name} differs"


def test_no_pulses_keeps_the_state(tmp_path):
    """Without a sequence the final state is the initial one"""
    out = simulate(CONFIGS / "minimal_spin_half.json", tmp_path / "minimal")
    assert (out / "final_state.csv").read_bytes() == (out / "initial_state.csv").read_bytes()
    assert not (out / "fid.csv").exists()

    rho = CsvReader().read_matrix(out / "initial_state.csv")
    assert rho[0, 0].real > rho[1, 1].real
    assert np.trace(rho).real == pytest.approx(1.0)


def test_invalid_eta_is_reported(tmp_path, capsys):
    """eta outside [0, 1] fails validation with its location"""
    data = json.loads((CONFIGS / "cnot_nqr.json").read_text(encoding="utf-8"))
    data["system"]["spins"][0]["quadrupole"]["eta"] = 1.3
    path = write_config(tmp_path, data)

    with pytest.raises(ConfigError) as excinfo:
        parse_config(path)
    assert "system.spins[0].quadrupole.eta = 1.3 outside [0, 1]" in str(excinfo.value)

    assert main(["-q", "validate", str(path)]) == 1
    assert "eta" in capsys.readouterr().err


@pytest.mark.parametrize("angle", ["pi/0", "inf", "nan", float("inf")])
def test_invalid_angle_is_a_schema_error(angle, tmp_path, capsys):
    """Angles that divide by zero or are not finite are refused with their location"""
    with pytest.raises(ValueError):
        parse_angle(angle)

    data = json.loads((CONFIGS / "kclo3_pi_half.json").read_text(encoding="utf-8"))
    data["sequence"][0]["phase"] = angle
    path = write_config(tmp_path, data)
    with pytest.raises(ConfigError, match="schema error") as excinfo:
        parse_config(path)
    assert any("phase" in r.message for r in excinfo.value.results)

    assert main(["-q", "validate", str(path)]) == 1
    assert "phase" in capsys.readouterr().err


def test_unexpected_failure_returns_exit_code(tmp_path, capsys, monkeypatch):
    """Failures outside the simulator's own errors still end with exit code 1"""
    def broken_run(config, out_dir):
        raise np.linalg.LinAlgError("eigenvalues did not converge")

    monkeypatch.setattr("app.cli.run_experiment", broken_run)
    assert main(["-q", "simulate", str(CONFIGS / "minimal_spin_half.json"), "--out", str(tmp_path)]) == 1
    assert "LinAlgError: eigenvalues did not converge" in capsys.readouterr().err


def test_unknown_key_is_a_schema_error(tmp_path):
    """Extra keys are refused by the schema"""
    data = json.loads((CONFIGS / "minimal_spin_half.json").read_text(encoding="utf-8"))
    data["bogus"] = 1
    with pytest.raises(ConfigError, match="schema error") as excinfo:
        parse_config(write_config(tmp_path, data))
    assert any("bogus" in r.message for r in excinfo.value.results)


def test_missing_config_file(tmp_path):
    """A missing file is a ConfigError and exit code 1"""
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "absent.json")
    assert main(["-q", "validate", str(tmp_path / "absent.json")]) == 1


def test_config_round_trip():
    """Dumping and re-validating a parsed config gives the same config"""
    config = parse_config(CONFIGS / "kclo3_pi_half.json")
    dumped = config.model_dump()
    assert ExperimentConfig.model_validate(dumped).model_dump() == dumped
    assert config.sequence[0].angle == pytest.approx(np.pi / 2)


def test_initial_state_from_matrix_file(tmp_path):
    """matrix_file initial states are read relative to the config"""
    rho = np.array([[0.7, 0.1 - 0.2j], [0.1 + 0.2j, 0.3]])
    CsvWriter().write_matrix(rho, tmp_path / "rho.csv")
    path = write_config(tmp_path, {
        "name": "from_matrix",
        "system": {
            "spins": [{"I": "1/2", "gyro_ratio_over_2pi": 42.577}],
            "zeeman": {"field": 1.0},
            "initial_state": {"matrix_file": "rho.csv"},
        },
    })
    out = simulate(path, tmp_path / "out")
    np.testing.assert_allclose(CsvReader().read_matrix(out / "initial_state.csv"), rho, atol=1e-12)


def test_kclo3_line_in_spectrum(tmp_path):
    """A pi/2 pulse on KClO3 gives a line at 28.1 MHz"""
    out = simulate(CONFIGS / "kclo3_pi_half.json", tmp_path / "pi_half")
    spectrum = CsvReader().read_spectrum(out / "spectrum.csv")
    magnitude = spectrum.magnitude
    peak = abs(spectrum.frequencies[int(np.argmax(magnitude))])
    assert peak == pytest.approx(28.1, abs=2e-3)


def test_spin_one_x_pulse_line_in_spectrum(tmp_path):
    """An x-polarized pulse on the asymmetric spin-1 system gives its line at 0.9 MHz"""
    out = simulate(CONFIGS / "spin1_asym_x.json", tmp_path / "spin1")
    spectrum = CsvReader().read_spectrum(out / "spectrum.csv")
    peak = abs(spectrum.frequencies[int(np.argmax(spectrum.magnitude))])
    assert peak == pytest.approx(0.9, abs=2e-3)


def test_cnot_nqr_config(tmp_path):
    """The NQR CNOT config maps |10> to |11>"""
    out = simulate(CONFIGS / "cnot_nqr.json", tmp_path / "cnot_nqr")
    final = CsvReader().read_matrix(out / "final_state.csv")
    assert final[2, 2].real <= 0.01
    assert final[3, 3].real >= 0.99


def test_cnot_nmr_config(tmp_path):
    """The NMR CNOT config maps |10> to |11>"""
    print("\n🧮 Testing NMR CNOT...")
    out = simulate(CONFIGS / "cnot_nmr.json", tmp_path / "cnot")
    final = CsvReader().read_matrix(out / "final_state.csv")
    print(f"  Population of |11>: {final[3, 3].real:.4f}")
    assert final[3, 3].real >= 0.95
    print("  ✅ NMR CNOT: PASSED")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
