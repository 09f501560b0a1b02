"""HTTP endpoints: routing, payloads, structured errors."""

import pytest
import requests

from conftest import burger_task

from intentgap.httpapi import InteractionServer, SessionRegistry
from intentgap.oracle import HeuristicOracle
from intentgap.simulator import REFUSAL, Session
from intentgap.taskmodel import Clarity


@pytest.fixture()
def server():
    registry = SessionRegistry()
    registry.add(Session("inc1", burger_task(), Clarity.INCOMPLETE, HeuristicOracle()))
    registry.add(Session("std1", burger_task(), Clarity.STANDARD, HeuristicOracle()))
    with InteractionServer(registry) as srv:
        yield srv


def test_instruction_endpoint(server):
    r = requests.get(f"{server.address}/session/inc1/instruction")
    assert r.status_code == 200
    assert r.headers["Content-Type"].startswith("application/json")
    doc = r.json()
    assert doc["session"] == "inc1"
    assert doc["clarity"] == "Incomplete"
    assert doc["state"] == "InstructionServed"
    assert "Filet-O-Fish Meal" in doc["instruction"]
    # Idempotent: a second read returns the same text.
    again = requests.get(f"{server.address}/session/inc1/instruction").json()
    assert again["instruction"] == doc["instruction"]


def test_ask_and_finish_flow(server):
    base = f"{server.address}/session/inc1"
    requests.get(f"{base}/instruction")
    r = requests.post(f"{base}/ask", json={"question": "Which beverage would you like?"})
    assert r.status_code == 200
    assert r.json()["response"] == "I want Medium Coke Zero for the beverage."

    r = requests.post(f"{base}/finish", json={"reason": "AGENT_DONE"})
    assert r.status_code == 200
    assert r.json()["state"] == "Finished"

    r = requests.post(f"{base}/ask", json={"question": "And the ice?"})
    assert r.status_code == 409
    assert r.json()["code"] == "SESSION_CLOSED"


def test_clear_level_refuses_over_http(server):
    base = f"{server.address}/session/std1"
    requests.get(f"{base}/instruction")
    r = requests.post(f"{base}/ask", json={"question": "Which beverage would you like?"})
    assert r.json()["response"] == REFUSAL


def test_ask_before_instruction_is_conflict(server):
    r = requests.post(
        f"{server.address}/session/std1/ask", json={"question": "hello?"})
    assert r.status_code == 409
    assert r.json()["code"] == "INSTRUCTION_NOT_SERVED"


def test_unknown_session_and_route(server):
    r = requests.get(f"{server.address}/session/nope/instruction")
    assert r.status_code == 404
    assert r.json()["code"] == "UNKNOWN_SESSION"

    r = requests.get(f"{server.address}/session/inc1/bogus")
    assert r.status_code == 404
    assert r.json()["code"] == "NOT_FOUND"

    r = requests.get(f"{server.address}/totally/else")
    assert r.status_code == 404


def test_method_and_body_validation(server):
    base = f"{server.address}/session/inc1"
    r = requests.post(f"{base}/instruction")
    assert r.status_code == 405
    assert r.json()["code"] == "METHOD_NOT_ALLOWED"

    requests.get(f"{base}/instruction")
    r = requests.post(
        f"{base}/ask", data=b"not json",
        headers={"Content-Type": "application/json"})
    assert r.status_code == 400
    assert r.json()["code"] == "BAD_REQUEST"

    r = requests.post(f"{base}/ask", json={"q": "missing key"})
    assert r.status_code == 400

    r = requests.post(f"{base}/ask", json=["list body"])
    assert r.status_code == 400


def test_finish_default_reason(server):
    base = f"{server.address}/session/std1"
    requests.get(f"{base}/instruction")
    r = requests.post(f"{base}/finish", json={})
    assert r.status_code == 200
    assert r.json()["state"] == "Finished"


def test_utf8_round_trip(server):
    base = f"{server.address}/session/inc1"
    requests.get(f"{base}/instruction")
    r = requests.post(f"{base}/ask", json={"question": "¿Qué bebida? 🍹"})
    assert r.status_code == 200
    assert r.json()["response"]  # served without encoding errors
