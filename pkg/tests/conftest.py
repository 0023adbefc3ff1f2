import pytest

from selfheal.adversary import AdversaryState, corrupt_nodes, make_strategy
from selfheal.crypto_sim import dkg_setup
from selfheal.protocol import Protocol, ProtocolParams
from selfheal.quorum_graph import build_butterfly

ACCEPTANCE_LINES: list[str] = []


def make_protocol(n=1024, t=0, seed=1, strategy="always-corrupt", variant=1, force=False, balanced=True):
    bad = corrupt_nodes(n, t, seed)
    graph = build_butterfly(n, seed, bad=sorted(bad) if balanced else None)
    adv = AdversaryState(bad, make_strategy(strategy), n)
    params = ProtocolParams.for_graph(graph, variant, force)
    return Protocol(graph, dkg_setup(graph, seed), adv, params, seed=seed)


@pytest.fixture(scope="session")
def graph_1024():
    return build_butterfly(1024, 3)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
