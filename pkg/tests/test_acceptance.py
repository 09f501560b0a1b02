"""Acceptance gates: one test per shipping criterion.

Every test checks a user-visible guarantee end to end, pins its numeric
tolerance explicitly, and enforces a wall-clock budget. Each prints a
single ``ACCEPT <id> PASS`` line on success so a log scrape shows one
line per criterion.
"""

import dataclasses
import json
import random
import time
from pathlib import Path

import pytest

from conftest import FIXTURES
from reference import (
    brute_force_align,
    fleiss_kappa_reference,
    from_definition_metrics,
    jaccard_reference,
)

from intentgap.adjudication import lcs_align
from intentgap.derivation import HypernymTable, derive_all
from intentgap.metrics import (
    compute_block,
    load_reliability_fixture,
    reliability_report,
)
from intentgap.oracle import OraclePurpose, OracleRequest, ScriptedOracle
from intentgap.packets import load_packet
from intentgap.runner import RunConfig, adjudicate_run, replay_run, run_suite
from intentgap.sandbox.client import DeviceClient, DeviceRefusal
from intentgap.sandbox.mockdevice import DeviceServer, MockApp, MockDevice
from intentgap.sandbox.proxy import CaptureProxy, MockCapture
from intentgap.sandbox.trace import BlobStore, TraceWriter, action_records, read_trace
from intentgap.simulator import (
    NO_PREFERENCE,
    REFUSAL,
    Session,
    UserSimulator,
    reveal_text,
)
from intentgap.taskmodel import Clarity, classify_clarity, load_suite

GOLDEN = Path(__file__).resolve().parent / "golden"

TOL = 1e-12

CLARITIES = (Clarity.DETAILED, Clarity.STANDARD, Clarity.INCOMPLETE,
             Clarity.AMBIGUOUS)


def _done(cid: str, started: float, budget_s: float) -> None:
    elapsed = time.monotonic() - started
    assert elapsed < budget_s, f"{cid} took {elapsed:.2f}s, budget {budget_s}s"
    print(f"ACCEPT {cid} PASS ({elapsed:.2f}s < {budget_s:.0f}s)")


# -- 1. aggregate metrics agree with their definitions ------------------------


def _verdict(task, clarity, vout, vstep, red, steps, term, turns, violations,
             gain, eligible):
    return {
        "task_id": task, "clarity": clarity,
        "outcome_vector": list(vout), "step_vector": list(vstep),
        "redundant_steps": list(red), "executed_steps": steps,
        "termination": term, "turn_count": turns,
        "violation_count": violations,
        "gain_score": gain, "gain_eligible": eligible,
    }


def test_c1_metric_block_matches_definitions():
    t0 = time.monotonic()
    verdicts = [
        # The twelve cover: perfect runs, total failures, single-requirement
        # intents, zero executed steps (ARR-excluded), zero turns
        # (DCR-excluded), gain-ineligible episodes, every termination label,
        # and fully redundant trajectories.
        _verdict("a", "Detailed", [1, 1, 1], [1, 1, 1, 1], [], 4, "Normal", 0, 0, 1.0, False),
        _verdict("a", "Standard", [1, 0, 1], [1, 0, 1, 1], [2], 5, "Normal", 1, 0, 1.0, False),
        _verdict("a", "Incomplete", [0, 0, 0], [0, 0, 0, 0], [0, 1], 2, "Early", 3, 1, 0.5, True),
        _verdict("a", "Ambiguous", [1, 1, 0], [1, 1, 0, 1], [], 6, "Delayed", 4, 4, 1.0, True),
        _verdict("b", "Detailed", [1], [1], [], 1, "Normal", 0, 0, 1.0, False),
        _verdict("b", "Standard", [0], [1, 1], [], 0, "Early", 0, 0, 0.0, False),
        _verdict("b", "Incomplete", [1], [0], [0], 1, "Delayed", 2, 2, 0.0, True),
        _verdict("b", "Ambiguous", [1], [1, 0, 1], [0, 1, 2], 3, "Normal", 1, 1, 1.0 / 3, True),
        _verdict("c", "Detailed", [1, 1, 1, 1, 1], [1] * 9, [], 9, "Normal", 0, 0, 1.0, False),
        _verdict("c", "Standard", [1, 1, 1, 1, 0], [1, 1, 1, 0, 1, 1, 1, 1, 1], [8], 12, "Delayed", 0, 0, 1.0, False),
        _verdict("c", "Incomplete", [0, 1, 1, 1, 1], [1] * 9, [], 10, "Normal", 5, 0, 0.75, True),
        _verdict("c", "Ambiguous", [0, 1, 0, 1, 0], [0, 1, 1, 1, 0, 0, 1, 1, 1], [1, 4], 8, "Early", 6, 2, 0.2, True),
    ]
    assert len(verdicts) == 12

    block = compute_block(verdicts)
    expected = from_definition_metrics(verdicts)
    assert set(block) == set(expected)
    for name, metric in block.items():
        want_value, want_count = expected[name]
        assert metric.count == want_count, name
        if want_value is None:
            assert metric.value is None, name
        else:
            assert metric.value == pytest.approx(want_value, abs=TOL), name
    _done("C1-metric-definitions", t0, 1.0)


# -- 2. step alignment is an exact longest-match with fixed tie-breaks --------


def test_c2_alignment_matches_exhaustive_search():
    t0 = time.monotonic()
    rng = random.Random(74250)
    trials = 0
    for _ in range(1500):
        m = rng.randint(1, 8)
        T = rng.randint(1, 8)
        density = rng.choice([0.15, 0.3, 0.5, 0.8])
        matrix = [[rng.random() < density for _ in range(T)] for _ in range(m)]
        got = lcs_align(matrix)
        want_size, want_keys, want_steps = brute_force_align(matrix)
        assert got[0] == want_size, matrix
        assert list(got[1]) == want_keys, matrix
        assert list(got[2]) == want_steps, matrix
        trials += 1
    assert trials >= 1000

    # Tie-break witnesses. Two equally long alignments must resolve to the
    # earliest key-index set, then the earliest step indices.
    key_tie = [
        [True, False],   # key 0 matches step 0
        [True, False],   # key 1 matches step 0 as well
        [False, True],   # key 2 matches step 1
    ]
    assert lcs_align(key_tie) == (2, [0, 2], [0, 1])
    step_tie = [
        [True, True, False],
        [False, False, True],
    ]
    assert lcs_align(step_tie) == (2, [0, 1], [0, 2])
    _done("C2-alignment-exhaustive", t0, 30.0)


# -- 3. derived instructions classify back to their own clarity level ---------


def test_c3_derivation_classification_round_trip():
    t0 = time.monotonic()
    suite = load_suite(FIXTURES / "suite")
    hypernyms = HypernymTable.load(FIXTURES / "suite" / "hypernyms.json")
    assert len(suite.tasks) == 6

    for task in suite.tasks:
        all_ids = task.intent.ids()
        anchors = task.intent.anchor_ids()
        instructions = task.instructions
        assert set(instructions) == set(CLARITIES), task.task_id

        for clarity, instr in instructions.items():
            assert classify_clarity(instr, task.intent) == clarity, (
                task.task_id, clarity)
            assert instr.includes_path is (clarity == Clarity.DETAILED)

        # Coverage shrinks monotonically as clarity degrades.
        assert instructions[Clarity.DETAILED].covered_ids == frozenset(all_ids)
        assert instructions[Clarity.STANDARD].covered_ids == frozenset(all_ids)
        incomplete = instructions[Clarity.INCOMPLETE].covered_ids
        assert anchors <= incomplete < frozenset(all_ids)
        assert instructions[Clarity.AMBIGUOUS].covered_ids == frozenset()

        # The stored texts are exactly what derivation produces; nothing was
        # hand-edited after generation.
        bare = dataclasses.replace(task, instructions={})
        assert derive_all(bare, hypernyms) == instructions, task.task_id
    _done("C3-derive-classify", t0, 1.0)


# -- 4. simulator reveal policy over the 50-question corpus -------------------


def load_corpus():
    entries = json.loads(
        (FIXTURES / "corpus" / "inquiries.json").read_text(encoding="utf-8"))
    script = json.loads(
        (FIXTURES / "corpus" / "oracle_script.json").read_text(encoding="utf-8"))
    return entries, script


def test_c4_simulator_protocol_over_corpus():
    t0 = time.monotonic()
    entries, script = load_corpus()
    assert len(entries) == 50
    kinds = {"ps": 0, "lowlevel": 0, "other": 0}
    for e in entries:
        if e["classification"] is None:
            kinds["lowlevel"] += 1
        elif e["classification"] == "ParameterSeeking":
            kinds["ps"] += 1
        else:
            kinds["other"] += 1
    assert kinds == {"ps": 35, "lowlevel": 10, "other": 5}

    suite = load_suite(FIXTURES / "suite")
    task = suite.task("mcd_filet_meal")
    values = {r.id: r.value for r in task.intent.requirements}
    oracle = ScriptedOracle.load(FIXTURES / "corpus" / "oracle_script.json")

    # UI-mechanics questions are refused by the pre-filter alone: the script
    # holds no entry for them, so consulting the oracle would fail loudly.
    for e in entries:
        digest = OracleRequest(
            OraclePurpose.INQUIRY_CLASSIFY, {"question": e["question"]}).digest()
        assert (digest in script) == (e["classification"] is not None)

    checked = 0
    for clarity in CLARITIES:
        instruction = task.instruction(clarity)
        for e in entries:
            sim = UserSimulator(task, instruction, oracle)
            turn = sim.respond(e["question"])
            expect = e["expect"][clarity.value]
            if expect == "refusal":
                assert turn.response == REFUSAL
                revealed = set()
            elif expect == "no_preference":
                assert turn.response == NO_PREFERENCE
                revealed = set()
            else:
                ids = expect["reveal"]
                reqs = [task.intent.by_id(i) for i in ids]
                assert turn.response == reveal_text(reqs)
                assert list(turn.asked_ids) == ids
                gap = task.intent.ids() - instruction.covered_ids
                assert set(turn.resolved_ids) == set(ids) & gap
                revealed = set(ids)
            # Ground-truth values never leak beyond the sanctioned reveal.
            lowered = turn.response.lower()
            for rid, value in values.items():
                if rid not in revealed:
                    assert value.lower() not in lowered, (
                        clarity, e["question"], rid)
            checked += 1
    assert checked == 200
    _done("C4-simulator-protocol", t0, 5.0)


# -- 5. capture proxy is transparent, complete, and budget-enforcing ----------


def _drive(client: DeviceClient) -> list:
    out = [client.devices(), client.screendoc()]
    out.append(client.tap(25, 45))     # Latte -> customize
    out.append(client.tap(25, 145))    # Large
    out.append(client.screencap())
    out.append(client.text("extra hot"))
    out.append(client.keyevent(4))
    out.append(client.swipe(10, 400, 10, 100))
    out.append(client.tap(25, 195))    # Checkout
    out.append(client.shell("pm list packages"))
    return out


def test_c5_proxy_transparency_and_budget(tmp_path):
    t0 = time.monotonic()
    app = MockApp.load(FIXTURES / "suite" / "apps" / "beanbar.json")

    direct_dev = MockDevice(app)
    with DeviceServer(direct_dev) as direct:
        direct_out = _drive(DeviceClient(direct.address))
        direct_receipts = list(direct.receipts)

    proxied_dev = MockDevice(app)
    blobs = BlobStore(tmp_path / "blobs")
    trace = TraceWriter(tmp_path / "trace.jsonl")
    with DeviceServer(proxied_dev) as backend:
        with CaptureProxy(backend.address, MockCapture(proxied_dev, blobs),
                          trace, blobs) as proxy:
            proxied_out = _drive(DeviceClient(proxy.address))
        proxied_receipts = list(backend.receipts)

    # Byte identity on both sides of the wire: what the backend received and
    # what the agent saw are unchanged by interposition.
    assert proxied_receipts == direct_receipts
    assert proxied_out == direct_out
    assert direct_dev.flags == proxied_dev.flags

    # Completeness: every forwarded input action carries pre and post
    # snapshots whose frames are resident in the blob store.
    records = read_trace(tmp_path / "trace.jsonl")
    actions = action_records(records)
    assert [a["kind"] for a in actions] == [
        "tap", "tap", "text", "keyevent", "swipe", "tap"]
    for a in actions:
        for side in ("pre", "post"):
            assert a[side]["doc"]["page"]
            assert blobs.get(a[side]["png"]).startswith(b"\x89PNG")
    caps = [r for r in records if r["type"] == "screencap"]
    assert len(caps) == 1 and blobs.get(caps[0]["png"]) == proxied_out[4]
    assert [r["command"] for r in records if r["type"] == "passthrough"] == [
        "pm list packages"]

    # Budget: action 26 is refused before any bytes reach the backend.
    suite = load_suite(FIXTURES / "suite")
    session = Session("budget", suite.task("coffee_latte"), Clarity.STANDARD,
                      ScriptedOracle({}))
    session.serve_instruction()
    dev2 = MockDevice(app)
    blobs2 = BlobStore(tmp_path / "blobs2")
    trace2 = TraceWriter(tmp_path / "trace2.jsonl")
    with DeviceServer(dev2) as backend2:
        with CaptureProxy(backend2.address, MockCapture(dev2, blobs2),
                          trace2, blobs2, step_budget=25,
                          session=session) as proxy2:
            client = DeviceClient(proxy2.address)
            client.screendoc()
            for _ in range(25):
                client.tap(300, 500)  # dead zone: no transition, but an input
            with pytest.raises(DeviceRefusal):
                client.tap(25, 45)
            with pytest.raises(DeviceRefusal):
                client.text("late")
            assert client.screendoc()["page"] == "Coffee Menu"
        receipts2 = list(backend2.receipts)

    assert proxy2.steps_taken == 25
    # 25 allowed inputs + 2 screendocs; the refused actions produced zero
    # backend traffic and did not alter device state.
    assert len(receipts2) == 27
    assert dev2.screen_id == "menu"
    assert dev2.flags["paid"] is False
    refused = [r for r in read_trace(tmp_path / "trace2.jsonl")
               if r["type"] == "refused"]
    assert len(refused) == 1 and refused[0]["reason"] == "BUDGET_EXHAUSTED"
    assert session.finish_reason == "BUDGET_EXHAUSTED"
    _done("C5-proxy-transparency", t0, 30.0)


# -- 6. the bundled evaluation reproduces the golden report byte for byte -----


def _golden_run(tmp_path: Path, name: str) -> Path:
    cfg = json.loads((FIXTURES / "run_golden.json").read_text(encoding="utf-8"))
    cfg["output_dir"] = str(tmp_path / name)
    run_dir = run_suite(RunConfig.from_dict(cfg, base=FIXTURES))
    adjudicate_run(run_dir)
    return run_dir


def test_c6_golden_run_reproducibility(tmp_path):
    t0 = time.monotonic()
    first = _golden_run(tmp_path, "one")
    packets = sorted(p.name for p in (first / "packets").iterdir())
    assert len(packets) == 24
    for packet_dir in (first / "packets").iterdir():
        assert load_packet(packet_dir).finish_reason == "AGENT_DONE"

    got_json = (first / "report.json").read_bytes()
    got_text = (first / "report.txt").read_bytes()
    assert got_json == (GOLDEN / "report.json").read_bytes()
    assert got_text == (GOLDEN / "report.txt").read_bytes()

    # Offline replay of the sealed evidence reproduces every verdict.
    assert replay_run(first) == []

    # A second capture is byte-identical: no timestamps, no ordering drift.
    second = _golden_run(tmp_path, "two")
    assert (second / "report.json").read_bytes() == got_json
    assert ((second / "verdicts" / "v1" / "verdicts.json").read_bytes()
            == (first / "verdicts" / "v1" / "verdicts.json").read_bytes())
    _done("C6-golden-reproducibility", t0, 120.0)


# -- 7. agreement statistics match their reference formulas -------------------


def test_c7_reliability_statistics(tmp_path):
    t0 = time.monotonic()
    from intentgap.metrics import fleiss_kappa, jaccard

    rng = random.Random(90125)
    for _ in range(300):
        rows = rng.randint(2, 12)
        raters = rng.randint(2, 5)
        cats = rng.randint(2, 4)
        table = []
        for _ in range(rows):
            counts = [0] * cats
            for _ in range(raters):
                counts[rng.randrange(cats)] += 1
            table.append(counts)
        want = fleiss_kappa_reference(table)
        if want is None:
            continue  # degenerate marginals are rejected separately
        assert fleiss_kappa(table) == pytest.approx(want, abs=TOL)

        n = rng.randint(1, 16)
        a = [rng.randint(0, 1) for _ in range(n)]
        b = [rng.randint(0, 1) for _ in range(n)]
        assert jaccard(a, b) == pytest.approx(jaccard_reference(a, b), abs=TOL)

    fixture = load_reliability_fixture(FIXTURES / "annotations" / "ratings.json")
    report = reliability_report(fixture)

    # Recompute the pooled tables straight from the fixture document.
    rows = {"outcome": [], "step": []}
    system = {"outcome": [], "step": []}
    consensus = {"outcome": [], "step": []}
    fill_total = fill_agree = 0
    for packet in fixture["packets"]:
        for family in ("outcome", "step"):
            doc = packet[family]
            for pos in range(len(doc["system"])):
                labels = [rated[pos] for rated in doc["raters"]]
                rows[family].append([len(labels) - sum(labels), sum(labels)])
                system[family].append(doc["system"][pos])
                consensus[family].append(1 if sum(labels) * 2 > len(labels) else 0)
        fills = packet.get("fills")
        if fills:
            for slot in fills["gap"]:
                labels = [1 if slot in rated else 0 for rated in fills["raters"]]
                majority = 1 if sum(labels) * 2 > len(labels) else 0
                fill_total += 1
                fill_agree += int((slot in fills["system"]) == bool(majority))

    for family in ("outcome", "step"):
        assert report["kappa"][family] == pytest.approx(
            fleiss_kappa_reference(rows[family]), abs=TOL)
        assert report["jaccard"][family] == pytest.approx(
            jaccard_reference(system[family], consensus[family]), abs=TOL)
        assert 0.0 < report["kappa"][family] < 1.0
    assert report["kappa"]["overall"] == pytest.approx(
        fleiss_kappa_reference(rows["outcome"] + rows["step"]), abs=TOL)

    assert report["counts"] == {
        "outcome": 17, "step": 32, "overall": 49, "fills": 12}
    assert report["jaccard"]["outcome"] == pytest.approx(1.0, abs=TOL)
    assert report["jaccard"]["step"] == pytest.approx(29 / 30, abs=TOL)
    assert report["fill_agreement"] == pytest.approx(
        fill_agree / fill_total, abs=TOL)
    assert report["fill_agreement"] == pytest.approx(11 / 12, abs=TOL)
    _done("C7-reliability-statistics", t0, 5.0)


# -- 8. asking questions is what closes the gap on under-specified tasks ------


def _ablation_run(tmp_path: Path, name: str, asking: bool) -> dict:
    cfg = RunConfig.from_dict({
        "suite": str(FIXTURES / "suite"),
        "output_dir": str(tmp_path / name),
        "run_id": "ablate",
        "clarity_filter": ["Incomplete"],
        "agent": {"kind": "plan", "asking": asking},
    })
    run_dir = run_suite(cfg)
    return adjudicate_run(run_dir)


def test_c8_clarification_ablation(tmp_path):
    t0 = time.monotonic()
    asking = _ablation_run(tmp_path, "ask", asking=True)
    silent = _ablation_run(tmp_path, "noask", asking=False)

    ask_row = asking["by_clarity"]["Incomplete"]
    silent_row = silent["by_clarity"]["Incomplete"]

    # With clarification every under-specified task succeeds outright.
    assert ask_row["TSR"] == {"value": 1.0, "count": 6}
    assert ask_row["RCR"] == {"value": 1.0, "count": 6}
    assert ask_row["IGR"] == {"value": 1.0, "count": 6}

    # Without it no task fully succeeds and coverage drops to the defaults.
    assert silent_row["TSR"] == {"value": 0.0, "count": 6}
    assert silent_row["IGR"] == {"value": 0.0, "count": 6}
    want_rcr = (1 / 3 + 1 / 2 + 1 / 2 + 1 / 5 + 1 / 2 + 1 / 3) / 6
    assert silent_row["RCR"]["value"] == pytest.approx(want_rcr, abs=TOL)
    assert silent_row["RCR"]["value"] < ask_row["RCR"]["value"]
    # No questions were asked, so dialogue quality has no denominator.
    assert silent_row["DCR"] == {"value": None, "count": 0}
    _done("C8-clarification-ablation", t0, 60.0)
