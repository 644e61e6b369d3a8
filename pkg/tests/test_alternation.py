"""Alternation guard: exhaustive truth table over episode-log prefixes.

The documented rule:
  - search  allowed  iff the log holds no search without a later execute
  - execute allowed  iff the log holds a search, or discovery is not required
  - final   allowed  iff the log holds at least one execute
"""

import itertools

import pytest

from dualplane.errors import AlternationViolation
from dualplane.fabric import EpisodeLog, alternation_guard
from dualplane.types import AgentRole


def expected_allow(prefix: tuple[str, ...], nxt: str, require_discovery: bool) -> bool:
    # independent statement of the rule, evaluated directly on the prefix
    if nxt == "search":
        pending = False
        for event in prefix:
            if event == "search":
                pending = True
            elif event == "execute":
                pending = False
        return not pending
    if nxt == "execute":
        return ("search" in prefix) or not require_discovery
    if nxt == "final":
        return "execute" in prefix
    raise AssertionError(nxt)


def run_guard(prefix, nxt, require_discovery):
    log = EpisodeLog(role=AgentRole.RESEARCH_WORKER,
                     require_discovery=require_discovery)
    for event in prefix:
        log.record(event)
    try:
        alternation_guard(log, nxt)
        return True
    except AlternationViolation:
        return False


def test_full_truth_table_up_to_length_six():
    checked = 0
    for length in range(0, 7):
        for prefix in itertools.product(("search", "execute"), repeat=length):
            for nxt in ("search", "execute", "final"):
                for require_discovery in (True, False):
                    assert run_guard(prefix, nxt, require_discovery) == \
                        expected_allow(prefix, nxt, require_discovery), \
                        (prefix, nxt, require_discovery)
                    checked += 1
    assert checked == (2 ** 7 - 1) * 6


def test_canonical_alternating_pattern_is_allowed():
    log = EpisodeLog(role=AgentRole.RESEARCH_WORKER, require_discovery=True)
    for step in ("search", "execute", "search", "execute"):
        alternation_guard(log, step)
        log.record(step)
    alternation_guard(log, "final")   # permitted any time after >= 1 execute


def test_consecutive_searches_rejected():
    log = EpisodeLog(role=AgentRole.RESEARCH_WORKER, require_discovery=True)
    alternation_guard(log, "search")
    log.record("search")
    with pytest.raises(AlternationViolation):
        alternation_guard(log, "search")


def test_execute_requires_discovery_when_configured():
    log = EpisodeLog(role=AgentRole.RESEARCH_WORKER, require_discovery=True)
    with pytest.raises(AlternationViolation):
        alternation_guard(log, "execute")
    relaxed = EpisodeLog(role=AgentRole.RESEARCH_WORKER, require_discovery=False)
    alternation_guard(relaxed, "execute")
