"""Command-line scenario runner.

A scenario is a JSON object::

    {
      "layout": {"info_dims": [3], "anc_dims": [80]},
      "coding": {"scheme": "PCS", "gamma": [[1]], "strength": 0.4},
      "input_state": "random 7",
      "event": {"kind": "AncillaLoss"},
      "shots": 10000,
      "outputs": ["report", "distribution"]
    }

``input_state`` is an occupation list (``[1, 0]``), a full amplitude list of
``[re, im]`` pairs, ``"code_word k"`` or ``"random s"``.  ``sweep`` and
``synth`` blocks configure the corresponding subcommands.  Unknown keys are
rejected and every validation error names the offending field.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import PhotonLossError, ScenarioError, ZeroNormError
from .fock import (
    ModeLayout,
    StateVector,
    basis_state,
    make_layout,
    random_state,
    unitarity_defect,
)
from .gates import ECS, PCS, CodingSpec, coding_unitary
from .measurement import (
    OUTCOME_TAGS,
    count_distribution,
    count_probabilities,
    empirical_distribution,
    mean_counts,
    no_click_report,
    sample_counts,
    total_variation,
    write_distribution_csv,
    write_samples_csv,
)
from .protocol import (
    INFO_LOSS_EVENT,
    NO_EVENT,
    LossEvent,
    code_words,
    run_protocol,
    transmit,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_CHECK_FAILED = 3
EXIT_RUNTIME = 4

OUTPUT_KINDS = ("report", "distribution", "samples", "certificate")
SYNTH_KINDS = ("mediated_pcs", "cubic_dress", "gaussian_reduction", "conjugation_suite")
SCENARIO_KEYS = ("layout", "coding", "input_state", "event", "shots", "outputs", "sweep", "synth")
SWEEP_HEADER = ["gamma", "p0_exact", "p0_paper_form", "p0_sech_form", "mean_count"] + [
    f"rate_{tag}" for tag in OUTCOME_TAGS
]
CHECK_TOL = 1e-10
TAIL_TOL = 1e-10
MEDIATED_ANC_DIM = 80


class CheckFailed(PhotonLossError):
    pass


def _reject_unknown(d: Mapping, allowed: Sequence[str], where: str) -> None:
    if not isinstance(d, Mapping):
        raise ScenarioError(where, "expected a JSON object")
    for key in d:
        if key not in allowed:
            raise ScenarioError(f"{where}.{key}" if where else key, "unknown field")


def _wrap(field_name: str, fn, *args):
    try:
        return fn(*args)
    except ScenarioError:
        raise
    except (ValueError, TypeError, KeyError, PhotonLossError) as exc:
        raise ScenarioError(field_name, str(exc)) from exc


@dataclass(frozen=True)
class SweepSpec:
    values: tuple[float, ...]

    @classmethod
    def from_dict(cls, d: Mapping) -> "SweepSpec":
        _reject_unknown(d, ("values",), "sweep")
        vals = d.get("values")
        if not isinstance(vals, list) or not vals or not all(isinstance(v, (int, float)) for v in vals):
            raise ScenarioError("sweep.values", "expected a non-empty list of numbers")
        return cls(tuple(float(v) for v in vals))

    def to_dict(self) -> dict:
        return {"values": list(self.values)}


SYNTH_DEFAULTS = {
    "truncation": 80,
    "lambda1": 0.05,
    "mu1": 0.05,
    "gamma": 0.3,
    "strength": 0.4,
    "qubit_init": 1,
    "free_cubic": False,
    "n_starts": 12,
    "target": "ecs",
}


@dataclass(frozen=True)
class SynthSpec:
    kind: str
    params: tuple[tuple[str, Any], ...] = ()

    @classmethod
    def from_dict(cls, d: Mapping) -> "SynthSpec":
        _reject_unknown(d, ("kind",) + tuple(SYNTH_DEFAULTS), "synth")
        kind = d.get("kind")
        if kind not in SYNTH_KINDS:
            raise ScenarioError("synth.kind", f"expected one of {SYNTH_KINDS}")
        for key, default in SYNTH_DEFAULTS.items():
            if key not in d:
                continue
            v = d[key]
            if isinstance(default, bool):
                ok = isinstance(v, bool)
            elif isinstance(default, str):
                ok = v in ("ecs", "identity")
            elif isinstance(default, int):
                ok = isinstance(v, int) and not isinstance(v, bool)
            else:
                ok = isinstance(v, (int, float)) and not isinstance(v, bool)
            if not ok:
                raise ScenarioError(f"synth.{key}", f"invalid value {v!r}")
        params = tuple(sorted((k, d[k]) for k in d if k != "kind"))
        return cls(kind, params)

    def get(self, key: str):
        return dict(self.params).get(key, SYNTH_DEFAULTS[key])

    def to_dict(self) -> dict:
        return {"kind": self.kind, **dict(self.params)}


def _parse_layout(d) -> ModeLayout:
    _reject_unknown(d, ("info_dims", "anc_dims"), "layout")
    if "info_dims" not in d:
        raise ScenarioError("layout.info_dims", "missing")
    return _wrap("layout", make_layout, d["info_dims"], d.get("anc_dims", []))


def _parse_coding(d) -> CodingSpec:
    _reject_unknown(d, ("scheme", "gamma", "strength", "direction"), "coding")
    for key in ("scheme", "gamma"):
        if key not in d:
            raise ScenarioError(f"coding.{key}", "missing")
    if d["scheme"] not in (ECS, PCS):
        raise ScenarioError("coding.scheme", f"expected {ECS} or {PCS}")
    return _wrap("coding.gamma", CodingSpec.from_dict, d)


def _parse_event(d) -> LossEvent:
    if d is None:
        return LossEvent(NO_EVENT)
    _reject_unknown(d, ("kind", "weights"), "event")
    return _wrap("event", LossEvent.from_dict, d)


def _check_input_spec(spec) -> None:
    if isinstance(spec, str):
        parts = spec.split()
        if len(parts) == 2 and parts[0] in ("code_word", "random") and parts[1].isdigit():
            return
        raise ScenarioError("input_state", f"unknown preset {spec!r}")
    if isinstance(spec, list) and spec:
        if all(isinstance(x, int) and not isinstance(x, bool) for x in spec):
            return
        if all(isinstance(x, list) and len(x) == 2 and all(isinstance(y, (int, float)) for y in x) for x in spec):
            return
    raise ScenarioError("input_state", "expected occupations, [re, im] amplitudes, 'code_word k' or 'random s'")


@dataclass(frozen=True)
class Scenario:
    layout: ModeLayout | None = None
    coding: CodingSpec | None = None
    input_state: Any = None
    event: LossEvent = field(default_factory=LossEvent)
    shots: int = 0
    outputs: tuple[str, ...] = ("report",)
    sweep: SweepSpec | None = None
    synth: SynthSpec | None = None

    @classmethod
    def from_dict(cls, d: Mapping) -> "Scenario":
        _reject_unknown(d, SCENARIO_KEYS, "")
        layout = _parse_layout(d["layout"]) if "layout" in d else None
        coding = _parse_coding(d["coding"]) if "coding" in d else None
        if layout is not None and coding is not None:
            if (layout.n_info, layout.n_anc) != coding.gamma.shape:
                raise ScenarioError(
                    "coding.gamma",
                    f"shape {coding.gamma.shape} does not match layout ({layout.n_info} info, {layout.n_anc} ancilla)",
                )
        inp = d.get("input_state")
        if inp is not None:
            _check_input_spec(inp)
        shots = d.get("shots", 0)
        if not isinstance(shots, int) or isinstance(shots, bool) or shots < 0:
            raise ScenarioError("shots", "expected a non-negative integer")
        outputs = d.get("outputs", ["report"])
        if not isinstance(outputs, list) or any(o not in OUTPUT_KINDS for o in outputs):
            raise ScenarioError("outputs", f"expected a list drawn from {OUTPUT_KINDS}")
        return cls(
            layout=layout,
            coding=coding,
            input_state=inp,
            event=_parse_event(d.get("event")),
            shots=shots,
            outputs=tuple(outputs),
            sweep=SweepSpec.from_dict(d["sweep"]) if "sweep" in d else None,
            synth=SynthSpec.from_dict(d["synth"]) if "synth" in d else None,
        )

    def to_dict(self) -> dict:
        d: dict = {"shots": self.shots, "outputs": list(self.outputs)}
        if self.layout is not None:
            d["layout"] = {"info_dims": list(self.layout.info_dims), "anc_dims": list(self.layout.anc_dims)}
        if self.coding is not None:
            d["coding"] = self.coding.to_dict()
        if self.input_state is not None:
            d["input_state"] = self.input_state
        d["event"] = None if self.event.kind == NO_EVENT else self.event.to_dict()
        if self.sweep is not None:
            d["sweep"] = self.sweep.to_dict()
        if self.synth is not None:
            d["synth"] = self.synth.to_dict()
        return d

    def require(self, *names: str) -> None:
        for name in names:
            if getattr(self, name) is None:
                raise ScenarioError(name, "required by this command")


def load_scenario(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError("scenario", f"cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("scenario", f"invalid JSON: {exc}") from exc
    return Scenario.from_dict(data)


def build_input(scenario: Scenario) -> StateVector:
    scenario.require("layout", "input_state")
    info = scenario.layout.info_layout()
    spec = scenario.input_state
    if isinstance(spec, str):
        kind, arg = spec.split()
        if kind == "random":
            return random_state(info, np.random.default_rng(int(arg)))
        words = code_words(info.n_info, info.info_dims[0])
        k = int(arg)
        if not 0 <= k < len(words) or len(set(info.info_dims)) != 1:
            raise ScenarioError("input_state", f"code word {k} does not exist for this layout")
        return words[k]
    if all(isinstance(x, int) for x in spec):
        return _wrap("input_state", basis_state, info, spec)
    amps = np.array([complex(re, im) for re, im in spec])
    if amps.size != info.total_dim:
        raise ScenarioError("input_state", f"expected {info.total_dim} amplitudes, got {amps.size}")
    nrm = np.linalg.norm(amps)
    if abs(nrm - 1) > 1e-9:
        raise ScenarioError("input_state", "amplitudes must be normalised")
    return StateVector(info, amps)


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _fmt(x) -> str:
    return repr(float(x))


def _check(cond: bool, message: str) -> None:
    if not cond:
        raise CheckFailed(message)


def _protocol_checks(scenario: Scenario, report) -> None:
    _check(report.state.is_normalized(CHECK_TOL), "decoded state is not normalised")
    _check(report.info_state.is_normalized(CHECK_TOL), "conditional info state is not normalised")
    total = float(count_probabilities(report.state).sum())
    _check(abs(total - 1) <= CHECK_TOL, f"count distribution sums to {total}")
    _check(report.truncation_tail <= TAIL_TOL, f"ancilla tail mass {report.truncation_tail:.3e} exceeds {TAIL_TOL}")
    u = coding_unitary(report.state.layout, scenario.coding, check_truncation=False)
    defect = unitarity_defect(u)
    _check(defect <= CHECK_TOL, f"coding unitary defect {defect:.3e}")


def _anc_dims(scenario: Scenario):
    return scenario.layout.anc_dims or None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _run_and_emit(scenario: Scenario, out: Path, seed, check: bool, event: LossEvent) -> None:
    scenario.require("layout", "coding", "input_state")
    psi = build_input(scenario)
    report = run_protocol(psi, scenario.coding, event, anc_dims=_anc_dims(scenario), seed=seed)
    if check:
        _protocol_checks(scenario, report)
    if "report" in scenario.outputs:
        _write_json(out / "report.json", report.to_dict())
    if "distribution" in scenario.outputs:
        with open(out / "distribution.csv", "w", newline="") as fh:
            write_distribution_csv(count_distribution(report.state), fh)
    if "samples" in scenario.outputs and scenario.shots:
        samples = sample_counts(report.state, 0 if seed is None else seed, scenario.shots)
        with open(out / "samples.csv", "w", newline="") as fh:
            write_samples_csv(samples, fh)


def cmd_roundtrip(scenario: Scenario, out: Path, seed=None, check: bool = False) -> None:
    _run_and_emit(scenario, out, seed, check, LossEvent(NO_EVENT))


def cmd_loss_sim(scenario: Scenario, out: Path, seed=None, check: bool = False) -> None:
    if "distribution" not in scenario.outputs:
        scenario = Scenario(**{**scenario.__dict__, "outputs": scenario.outputs + ("distribution",)})
    _run_and_emit(scenario, out, seed, check, scenario.event)


def _coding_at(coding: CodingSpec, value: float) -> CodingSpec:
    if coding.scheme == ECS:
        return CodingSpec(ECS, coding.gamma * value, 0.0, coding.direction)
    return CodingSpec(PCS, coding.gamma, value, coding.direction)


def sweep_rows(scenario: Scenario) -> list[list[str]]:
    """One row per grid value; ECS scales the coupling matrix, PCS sets the strength."""
    scenario.require("layout", "coding", "input_state", "sweep")
    psi = build_input(scenario)
    event = scenario.event
    if event.kind == NO_EVENT:
        event = LossEvent(INFO_LOSS_EVENT)
    rows = []
    for value in scenario.sweep.values:
        coding = _coding_at(scenario.coding, value)
        report = run_protocol(psi, coding, event, anc_dims=_anc_dims(scenario))
        if event.kind == INFO_LOSS_EVENT:
            forms = no_click_report(coding, event, psi, _anc_dims(scenario))
            printed, sech = _fmt(forms.printed_form), _fmt(forms.sech_form)
        else:
            printed = sech = ""
        row = [_fmt(value), _fmt(report.p_zero_counts), printed, sech, _fmt(mean_counts(report.state).sum())]
        row += [_fmt(report.outcome_probabilities.get(tag, 0.0)) for tag in OUTCOME_TAGS]
        rows.append(row)
    return rows


def cmd_sweep(scenario: Scenario, out: Path, seed=None, check: bool = False) -> None:
    rows = sweep_rows(scenario)
    if check:
        for row in rows:
            rates = sum(float(x) for x in row[5:])
            _check(abs(rates - 1) <= CHECK_TOL, f"outcome rates at gamma={row[0]} sum to {rates}")
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        w.writerows(rows)


def run_synth(scenario: Scenario, seed: int = 0) -> dict:
    from . import synthesis as syn

    scenario.require("synth")
    spec = scenario.synth
    if spec.kind == "mediated_pcs":
        scenario.require("layout", "input_state")
        anc = scenario.layout.anc_dims[0] if scenario.layout.n_anc else MEDIATED_ANC_DIM
        mspec = _wrap("synth", syn.MediatedProtocolSpec, spec.get("strength"), 1.0, 1.0, spec.get("qubit_init"),
                      tuple([1] * scenario.layout.n_info))
        _, cert = syn.mediated_pcs(mspec, build_input(scenario), anc)
        return cert.to_dict()
    trunc = spec.get("truncation")
    if spec.kind == "cubic_dress":
        return syn.certify_cubic_dress(trunc, spec.get("lambda1"), spec.get("mu1")).to_dict()
    if spec.kind == "gaussian_reduction":
        dressed = syn.dressed_forms(spec.get("lambda1"), spec.get("mu1"))
        target = dressed if spec.get("target") == "identity" else syn.ecs_target_forms(spec.get("gamma"))
        cert = syn.gaussian_reduction_solve(
            target, dressed, free_cubic=spec.get("free_cubic"), n_starts=spec.get("n_starts"),
            seed=seed, truncation=trunc, target_tag=spec.get("target"),
        )
        return cert.to_dict()
    rows = syn.conjugation_suite(trunc, spec.get("lambda1"), spec.get("mu1"))
    return {
        "target_tag": "conjugation_suite",
        "parameters": {"lambda1": spec.get("lambda1"), "mu1": spec.get("mu1")},
        "residual": max(r["residual"] for r in rows),
        "window": rows[0]["window"],
        "truncation": trunc,
        "pairs": rows,
    }


SYNTH_CHECK_TOL = {"mediated_pcs": 1e-9, "cubic_dress": 1e-6, "conjugation_suite": 1e-8}


def cmd_synth(scenario: Scenario, out: Path, seed=None, check: bool = False) -> None:
    cert = run_synth(scenario, 0 if seed is None else seed)
    if check:
        kind = scenario.synth.kind
        if kind == "mediated_pcs":
            _check(cert["purity_ok"], f"mediator purity {cert['qubit_purity']} below threshold")
            _check(cert["field_fidelity"] >= 1 - SYNTH_CHECK_TOL[kind], f"field fidelity {cert['field_fidelity']}")
        elif kind in SYNTH_CHECK_TOL:
            _check(cert["residual"] <= SYNTH_CHECK_TOL[kind], f"{kind} residual {cert['residual']:.3e}")
    _write_json(out / "certificate.json", cert)


def cmd_sample(scenario: Scenario, out: Path, seed=None, check: bool = False, shots: int | None = None) -> None:
    scenario.require("layout", "coding", "input_state")
    n = shots if shots is not None else scenario.shots
    if n <= 0:
        raise ScenarioError("shots", "sampling needs a positive shot count")
    seed = 0 if seed is None else seed
    psi = build_input(scenario)
    _, decoded, _ = transmit(psi, scenario.coding, scenario.event, _anc_dims(scenario))
    samples = sample_counts(decoded, seed, n)
    exact = count_probabilities(decoded)
    emp = empirical_distribution(samples, exact.shape)
    tv = total_variation(exact, emp)
    if check:
        _check(abs(exact.sum() - 1) <= CHECK_TOL, "count distribution is not normalised")
    with open(out / "samples.csv", "w", newline="") as fh:
        write_samples_csv(samples, fh)
    _write_json(out / "sample_summary.json", {"shots": n, "seed": seed, "total_variation": tv})


COMMANDS = {
    "roundtrip": cmd_roundtrip,
    "loss-sim": cmd_loss_sim,
    "sweep": cmd_sweep,
    "synth": cmd_synth,
    "sample": cmd_sample,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="photonloss", description="Heralded single-photon-loss protocol simulator")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--scenario", required=True, help="scenario JSON file")
        s.add_argument("--out", default=".", help="output directory (created if missing)")
        s.add_argument("--seed", type=int, default=None, help="RNG seed (non-negative)")
        s.add_argument("--check", action="store_true", help="re-run invariant checks and fail on violation")
        if name == "sample":
            s.add_argument("--shots", type=int, default=None, help="number of shots (overrides the scenario)")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be non-negative", file=sys.stderr)
        return EXIT_INVALID
    try:
        scenario = load_scenario(args.scenario)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        kwargs = {"shots": args.shots} if args.command == "sample" else {}
        COMMANDS[args.command](scenario, out, seed=args.seed, check=args.check, **kwargs)
    except ScenarioError as exc:
        print(f"error: invalid scenario field {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except ZeroNormError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (PhotonLossError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
