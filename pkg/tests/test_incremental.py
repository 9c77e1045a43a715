import json

import pytest

from odsim import (
    ConstraintLedger, NeedsFullResimulation, incremental_run, oracle_run,
    re_finalize, run_simulation, validate_constraints,
)

from conftest import depth_grid, parse_elaborate


def _full_equals(a, b):
    return (a.status == b.status and a.total_cycles == b.total_cycles
            and a.outputs == b.outputs and tuple(a.blocked) == tuple(b.blocked))


def test_refinalize_unbounded_depth_drops_capacity_stall(corpus_elaborated):
    prior = run_simulation(corpus_elaborated["stream_pair"])
    assert prior.total_cycles == 5
    graph, access, outcome = re_finalize(prior.graph_dump(), {"link": 10**6})
    assert outcome.total_cycles == 4
    assert outcome.capacity_edges == 0


def test_refinalize_same_depths_is_identity(corpus_elaborated):
    prior = run_simulation(corpus_elaborated["congestion_router"])
    dump = prior.graph_dump()
    graph, access, outcome = re_finalize(dump, dict(prior.depths))
    assert outcome.total_cycles == prior.total_cycles
    for node in dump["nodes"]:
        assert graph.node_cycle(node["id"]) == node["cycle"]


def test_two_writes_under_depth_two_have_no_capacity_edges(corpus_elaborated):
    prior = run_simulation(corpus_elaborated["stream_pair"])
    _, _, outcome = re_finalize(prior.graph_dump(), {"link": 2})
    assert outcome.capacity_edges == 0
    assert outcome.total_cycles == 4


def test_validate_constraints_accepts_widened_depths(corpus_elaborated):
    prior = run_simulation(corpus_elaborated["congestion_router"])
    new_depths = dict(prior.depths)
    new_depths["q2"] = 100
    graph, access, outcome = re_finalize(prior.graph_dump(), new_depths)
    assert not outcome.deadlocked
    violated = validate_constraints(prior.ledger(), graph, access, new_depths)
    assert violated == []


def test_validate_constraints_flags_flipped_outcomes(corpus_elaborated):
    prior = run_simulation(corpus_elaborated["congestion_router"])
    new_depths = dict(prior.depths)
    new_depths["q1"] = 100  # previously-failed full checks would now pass
    graph, access, outcome = re_finalize(prior.graph_dump(), new_depths)
    violated = validate_constraints(prior.ledger(), graph, access, new_depths)
    assert violated


def test_empty_ledger_always_validates(corpus_elaborated):
    prior = run_simulation(corpus_elaborated["pipeline_pair"])
    assert prior.constraints == []
    for depths in ({"data": 1}, {"data": 50}):
        graph, access, outcome = re_finalize(prior.graph_dump(), depths)
        assert validate_constraints(prior.ledger(), graph, access, depths) == []


def test_incremental_identical_depths_is_idempotent(corpus_elaborated):
    prior = run_simulation(corpus_elaborated["congestion_router"])
    again = incremental_run(prior, {})
    assert _full_equals(prior, again)
    assert again.stats["statements"] == 0


def test_incremental_preserving_change_reuses_outputs(corpus_elaborated):
    ed = corpus_elaborated["congestion_router"]
    prior = run_simulation(ed)
    out = incremental_run(prior, {"q2": 100})
    assert not isinstance(out, NeedsFullResimulation)
    assert out.outputs == prior.outputs
    assert out.stats["statements"] == 0
    full = run_simulation(ed, {"q1": prior.depths["q1"], "q2": 100})
    assert _full_equals(out, full)


def test_incremental_violating_change_requires_full_run(corpus_elaborated):
    ed = corpus_elaborated["congestion_router"]
    prior = run_simulation(ed)
    out = incremental_run(prior, {"q1": 100})
    assert isinstance(out, NeedsFullResimulation)
    assert out.violated
    # the mandated fallback reproduces the oracle at the new depths
    full = run_simulation(ed, {"q1": 100, "q2": prior.depths["q2"]})
    oracle = oracle_run(ed, {"q1": 100, "q2": prior.depths["q2"]})
    assert _full_equals(full, oracle)


def test_incremental_leaves_prior_untouched(corpus_elaborated):
    prior = run_simulation(corpus_elaborated["stream_pair"])
    before = json.dumps(prior.graph_dump(), sort_keys=True)
    incremental_run(prior, {"link": 1_000_000})
    assert json.dumps(prior.graph_dump(), sort_keys=True) == before


def test_incremental_rejects_non_ok_prior(corpus_elaborated):
    prior = run_simulation(corpus_elaborated["mutual_read_deadlock"])
    with pytest.raises(ValueError):
        incremental_run(prior, {})


def test_incremental_capacity_deadlock_is_not_reusable():
    # at depth 1 the third write waits for a second read that never comes
    ed = parse_elaborate("""
    design shrink {
      fifo f depth 2;
      module w { writes f; write f, 1; write f, 2; write f, 3; }
      module r1 { reads f; locals x; read f -> x; }
      top w, r1;
    }
    """)
    prior = run_simulation(ed)
    assert prior.status == "ok"
    out = incremental_run(prior, {"f": 1})
    assert isinstance(out, NeedsFullResimulation)
    assert out.reason == "capacity-deadlock"
    full = run_simulation(ed, {"f": 1})
    oracle = oracle_run(ed, {"f": 1})
    assert _full_equals(full, oracle)
    assert full.status == "deadlock"


def test_incremental_shrink_without_starvation_reuses():
    ed = parse_elaborate("""
    design shrink_ok {
      fifo f depth 2;
      module w { writes f; write f, 1; write f, 2; }
      module r1 { reads f; locals x; read f -> x; read f -> x; }
      top w, r1;
    }
    """)
    prior = run_simulation(ed)
    out = incremental_run(prior, {"f": 1})
    assert not isinstance(out, NeedsFullResimulation)
    full = run_simulation(ed, {"f": 1})
    assert _full_equals(out, full)


@pytest.mark.parametrize("name", ["sentinel_stream", "drop_counter",
                                  "drop_when_full", "congestion_router",
                                  "fetch_execute", "cycle_timer"])
def test_incremental_soundness_over_grid(name, corpus_designs, corpus_elaborated):
    """Reuse must equal a full re-run; refusal must be confirmed by the
    full re-run disagreeing or not (either is fine, refusal is allowed to
    be conservative only in the capacity-deadlock case)."""
    ed = corpus_elaborated[name]
    grid = depth_grid(corpus_designs[name])
    priors = {}
    for depths in grid:
        result = run_simulation(ed, depths)
        if result.status == "ok":
            priors[json.dumps(depths, sort_keys=True)] = (depths, result)
    for _, prior in priors.values():
        for target, _ in priors.values():
            overrides = {k: v for k, v in ed.resolve_depths(target).items()}
            out = incremental_run(prior, overrides)
            full = run_simulation(ed, overrides)
            if isinstance(out, NeedsFullResimulation):
                # the mandated fallback: a fresh run, checked against the oracle
                assert _full_equals(full, oracle_run(ed, overrides))
                continue
            assert _full_equals(out, full), (name, prior.depths, overrides)
            assert out.stats["statements"] == 0


def test_ledger_json_round_trip(corpus_elaborated):
    prior = run_simulation(corpus_elaborated["congestion_router"])
    ledger = prior.ledger()
    encoded = json.dumps(ledger.to_json())
    decoded = ConstraintLedger.from_json(json.loads(encoded))
    assert decoded == ledger
