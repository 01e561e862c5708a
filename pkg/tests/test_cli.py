import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from photonloss.cli import (
    EXIT_CHECK_FAILED,
    EXIT_INVALID,
    EXIT_OK,
    EXIT_RUNTIME,
    SWEEP_HEADER,
    Scenario,
    main,
)
from photonloss.errors import ScenarioError

PCS_SCENARIO = {
    "layout": {"info_dims": [3], "anc_dims": [80]},
    "coding": {"scheme": "PCS", "gamma": [[1]], "strength": 0.4},
    "input_state": "random 7",
    "event": {"kind": "AncillaLoss"},
    "shots": 500,
    "outputs": ["report", "distribution"],
}


def write(tmp_path, scenario, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(scenario))
    return str(path)


def run(tmp_path, command, scenario, *extra):
    out = tmp_path / "out"
    code = main([command, "--scenario", write(tmp_path, scenario), "--out", str(out), *extra])
    return code, out


class TestScenario:
    def test_round_trip(self):
        s = Scenario.from_dict(PCS_SCENARIO)
        assert Scenario.from_dict(json.loads(json.dumps(s.to_dict()))) == s

    @given(
        st.sampled_from(["ECS", "PCS"]),
        st.lists(st.integers(2, 4), min_size=1, max_size=2),
        st.one_of(st.none(), st.sampled_from(["InfoLoss", "AncillaLoss"])),
        st.integers(0, 1000),
    )
    @settings(max_examples=40, deadline=None)
    def test_round_trip_property(self, scheme, info, event, shots):
        d = {
            "layout": {"info_dims": info, "anc_dims": [20]},
            "coding": {"scheme": scheme, "gamma": [[1]] * len(info), "strength": 0.2},
            "input_state": [0] * len(info),
            "event": None if event is None else {"kind": event},
            "shots": shots,
        }
        s = Scenario.from_dict(d)
        assert Scenario.from_dict(s.to_dict()) == s

    @pytest.mark.parametrize(
        "patch, field",
        [
            ({"colour": 1}, "colour"),
            ({"layout": {"info_dims": [2], "extra": 1}}, "layout.extra"),
            ({"coding": {"scheme": "PCS", "gamma": [[0.5]], "strength": 0.1}}, "coding.gamma"),
            ({"coding": {"scheme": "PCS", "gamma": [[1], [1]], "strength": 0.1}}, "coding.gamma"),
            ({"coding": {"scheme": "QCS", "gamma": [[1]]}}, "coding.scheme"),
            ({"input_state": "fancy 3"}, "input_state"),
            ({"shots": -1}, "shots"),
            ({"outputs": ["plot"]}, "outputs"),
            ({"event": {"kind": "InfoLoss", "weights": [2.0]}}, "event"),
            ({"sweep": {"values": []}}, "sweep.values"),
            ({"synth": {"kind": "teleport"}}, "synth.kind"),
            ({"synth": {"kind": "cubic_dress", "truncation": "big"}}, "synth.truncation"),
        ],
    )
    def test_validation_names_field(self, patch, field):
        with pytest.raises(ScenarioError) as err:
            Scenario.from_dict({**PCS_SCENARIO, **patch})
        assert err.value.field == field


class TestRoundtrip:
    def test_pcs_report(self, tmp_path):
        code, out = run(tmp_path, "roundtrip", PCS_SCENARIO, "--check")
        assert code == EXIT_OK
        rep = json.loads((out / "report.json").read_text())
        assert {"fidelity", "p_zero_counts", "truncation_tail"} <= set(rep)
        assert rep["fidelity"] == pytest.approx(1.0, abs=1e-10)
        assert rep["p_zero_counts"] == pytest.approx(1.0, abs=1e-10)

    def test_malformed_gamma(self, tmp_path, capsys):
        bad = {**PCS_SCENARIO, "coding": {"scheme": "PCS", "gamma": [[1, 1]], "strength": 0.4}}
        code, _ = run(tmp_path, "roundtrip", bad)
        assert code == EXIT_INVALID
        assert "coding.gamma" in capsys.readouterr().err

    def test_missing_file(self, tmp_path, capsys):
        code = main(["roundtrip", "--scenario", str(tmp_path / "nope.json")])
        assert code == EXIT_INVALID
        assert "scenario" in capsys.readouterr().err

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "s.json"
        path.write_text("{not json")
        assert main(["roundtrip", "--scenario", str(path), "--out", str(tmp_path)]) == EXIT_INVALID

    def test_check_flags_truncation_tail(self, tmp_path, capsys):
        tight = {**PCS_SCENARIO, "layout": {"info_dims": [3], "anc_dims": [12]}}
        code, _ = run(tmp_path, "roundtrip", tight, "--check")
        assert code == EXIT_CHECK_FAILED
        assert "tail" in capsys.readouterr().err


class TestLossSim:
    def test_pcs_ancilla_loss(self, tmp_path):
        code, out = run(tmp_path, "loss-sim", PCS_SCENARIO, "--check")
        assert code == EXIT_OK
        rep = json.loads((out / "report.json").read_text())
        assert rep["classification"] == {"tag": "AncillaLoss", "mode": 0}
        assert rep["recovery_applied"]
        assert rep["fidelity"] == pytest.approx(1.0, abs=1e-10)
        assert (out / "distribution.csv").exists()

    def test_ecs_localised_info_loss(self, tmp_path):
        scen = {
            "layout": {"info_dims": [2, 2], "anc_dims": [30, 30]},
            "coding": {"scheme": "ECS", "gamma": [[0.3, 0.0], [0.0, 0.3]]},
            "input_state": [1, 1],
            "event": {"kind": "InfoLoss", "weights": [[0, 0], [1, 0]]},
        }
        code, out = run(tmp_path, "loss-sim", scen)
        assert code == EXIT_OK
        with open(out / "distribution.csv") as fh:
            rows = list(csv.DictReader(fh))
        mass_elsewhere = sum(float(r["probability"]) for r in rows if r["m_1"] != "0")
        odd_mass = sum(float(r["probability"]) for r in rows if int(r["m_2"]) % 2)
        assert mass_elsewhere < 1e-20
        assert odd_mass < 1e-20

    def test_vacuum_loss_is_impossible(self, tmp_path, capsys):
        scen = {**PCS_SCENARIO, "input_state": [0], "event": {"kind": "InfoLoss"}}
        code, _ = run(tmp_path, "loss-sim", scen)
        assert code == EXIT_RUNTIME
        assert "impossible event" in capsys.readouterr().err


SWEEP = {
    "layout": {"info_dims": [2], "anc_dims": [80]},
    "coding": {"scheme": "ECS", "gamma": [[1.0]]},
    "input_state": [1],
    "event": {"kind": "InfoLoss"},
    "sweep": {"values": [0.1, 0.2, 0.3, 0.4, 0.5]},
}


class TestSweep:
    def test_decreasing(self, tmp_path):
        code, out = run(tmp_path, "sweep", SWEEP, "--check")
        assert code == EXIT_OK
        with open(out / "sweep.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == SWEEP_HEADER
        p0 = [float(r[1]) for r in rows[1:]]
        assert all(a > b for a, b in zip(p0, p0[1:]))
        for r in rows[1:]:
            assert float(r[1]) == pytest.approx(1 / np.cosh(2 * float(r[0])), abs=1e-10)

    def test_zero_grid(self, tmp_path):
        code, out = run(tmp_path, "sweep", {**SWEEP, "sweep": {"values": [0]}})
        assert code == EXIT_OK
        rows = list(csv.reader(open(out / "sweep.csv")))
        assert float(rows[1][1]) == pytest.approx(1.0)

    def test_pcs_strength(self, tmp_path):
        scen = {**SWEEP, "coding": {"scheme": "PCS", "gamma": [[1]], "strength": 0.0}, "sweep": {"values": [0.1, 0.2]}}
        code, out = run(tmp_path, "sweep", scen)
        assert code == EXIT_OK
        rows = list(csv.reader(open(out / "sweep.csv")))
        assert float(rows[2][1]) == pytest.approx(1 / np.cosh(0.8), abs=1e-10)


class TestSynth:
    def test_mediated(self, tmp_path):
        scen = {"layout": {"info_dims": [2], "anc_dims": [60]}, "input_state": "random 1",
                "synth": {"kind": "mediated_pcs", "strength": 0.4}}
        code, out = run(tmp_path, "synth", scen, "--check")
        assert code == EXIT_OK
        cert = json.loads((out / "certificate.json").read_text())
        assert cert["qubit_purity"] >= 1 - 1e-9

    def test_identity_reduction(self, tmp_path):
        code, out = run(tmp_path, "synth", {"synth": {"kind": "gaussian_reduction", "target": "identity",
                                                        "truncation": 20, "n_starts": 2}})
        assert code == EXIT_OK
        assert json.loads((out / "certificate.json").read_text())["residual"] == 0.0

    def test_conjugation_suite(self, tmp_path):
        code, out = run(tmp_path, "synth", {"synth": {"kind": "conjugation_suite", "truncation": 40}}, "--check")
        assert code == EXIT_OK
        cert = json.loads((out / "certificate.json").read_text())
        assert len(cert["pairs"]) == 4
        assert all(p["residual"] <= 1e-8 for p in cert["pairs"])

    def test_requires_synth_block(self, tmp_path, capsys):
        code, _ = run(tmp_path, "synth", PCS_SCENARIO)
        assert code == EXIT_INVALID
        assert "synth" in capsys.readouterr().err


class TestSample:
    def test_byte_identical(self, tmp_path):
        path = write(tmp_path, {**PCS_SCENARIO, "event": {"kind": "InfoLoss"}})
        outs = []
        for k in range(2):
            out = tmp_path / f"o{k}"
            assert main(["sample", "--scenario", path, "--out", str(out), "--seed", "4", "--shots", "300"]) == EXIT_OK
            outs.append((out / "samples.csv").read_bytes())
        assert outs[0] == outs[1]
        assert outs[0].count(b"\n") == 301

    def test_needs_shots(self, tmp_path):
        code, _ = run(tmp_path, "sample", {**PCS_SCENARIO, "shots": 0})
        assert code == EXIT_INVALID

    def test_negative_seed(self, tmp_path):
        code, _ = run(tmp_path, "sample", PCS_SCENARIO, "--seed", "-1")
        assert code == EXIT_INVALID
