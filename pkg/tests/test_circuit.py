import random

import pytest

from casegen import case_instances, mutate, swap_variant
from omap.cases import SPENDING_CASES, CaseId, case_predicate, classify_case, find_case, relation_holds
from omap.primitives import new_spending_key
from omap.r1cs.circuit import (
    CORE,
    NUM_PERMS,
    PUBLIC_NAMES,
    EncodingError,
    build_joinsplit_circuit,
    circuit_inputs,
    is_satisfiable,
    set_selectors,
    synthesize,
)

DEPTH = 6


@pytest.fixture(scope="module")
def instances():
    return case_instances(0, DEPTH)


@pytest.fixture(scope="module")
def circuit():
    return build_joinsplit_circuit(DEPTH)


def case_satisfiable(circuit, chi, omega, case):
    """Full solve and full check with the selector of ``case`` forced on."""
    comp = circuit.compiled
    for p in range(NUM_PERMS):
        inputs = set_selectors(circuit_inputs(chi, omega, DEPTH), int(case), p)
        if comp.first_unsatisfied(comp.solve(inputs)) is None:
            return True
    return False


def test_public_layout(circuit):
    assert circuit.cs.public_names == list(PUBLIC_NAMES)
    assert circuit.cs.num_public == 13
    assert build_joinsplit_circuit(DEPTH) is circuit


def test_every_case_has_instances(instances):
    assert {c for c, _, _ in instances.values()} == set(SPENDING_CASES)


def test_honest_instances(instances, circuit):
    for label, (case, chi, omega) in instances.items():
        syn = synthesize(circuit, chi, omega)
        assert syn.satisfied, label
        assert find_case(chi, omega, DEPTH)[0] is case, label
        assert case_predicate(CaseId(syn.case), chi, omega), label


def test_per_case_equivalence(instances, circuit):
    # stronger than overall agreement: each case's gate on its own
    for label, (_, chi, omega) in instances.items():
        for case in SPENDING_CASES:
            assert case_satisfiable(circuit, chi, omega, case) == case_predicate(case, chi, omega), (label, case)


def test_classification_matches(instances):
    for label, (case, _, omega) in instances.items():
        assert classify_case(omega.n_old_1, omega.n_old_2, omega.n_new_1, omega.n_new_2) is case, label


def test_swaps_keep_validity(instances):
    for label, (_, chi, omega) in instances.items():
        for inputs in (True, False):
            c2, o2 = swap_variant(chi, omega, inputs)
            assert is_satisfiable(c2, o2, DEPTH) and relation_holds(c2, o2, DEPTH), (label, inputs)


def test_mutations_agree(instances):
    rng = random.Random(4)
    items = sorted(instances.items())
    seen = {True: 0, False: 0}
    for _ in range(300):
        label, (_, chi, omega) = rng.choice(items)
        what, c2, o2 = mutate(rng, chi, omega)
        sat = is_satisfiable(c2, o2, DEPTH)
        assert sat == relation_holds(c2, o2, DEPTH), (label, what)
        seen[sat] += 1
    # the generator must exercise both outcomes
    assert seen[True] > 20 and seen[False] > 100


def test_selectors_are_exclusive(instances, circuit):
    _, chi, omega = instances["default"]
    comp = circuit.compiled
    base = circuit_inputs(chi, omega, DEPTH)
    none = set_selectors(dict(base), None, None)
    assert comp.first_unsatisfied(comp.solve(none)) is not None
    both = set_selectors(dict(base), 0, 0)
    both["sel1"] = both["sel1.0"] = 1
    assert comp.first_unsatisfied(comp.solve(both)) is not None
    half = set_selectors(dict(base), 0, 0)
    half["sel0.0"] = 2
    assert comp.first_unsatisfied(comp.solve(half)) is not None


def test_core_failure_short_circuits(instances, circuit):
    from dataclasses import replace

    _, chi, omega = instances["default"]
    bad = replace(omega, a_sk_1=new_spending_key(random.Random(1)))
    syn = synthesize(circuit, chi, bad)
    assert not syn.satisfied
    assert syn.first_failure < circuit.cs.segments[1][1]
    assert circuit.cs.segments[CORE] == (0, 0)


def test_encoding_errors_are_unsatisfiable(instances):
    from dataclasses import replace

    from omap.fieldhash import P

    _, chi, omega = instances["default"]
    bad = replace(chi, rt=P.to_bytes(32, "big"))
    with pytest.raises(EncodingError):
        circuit_inputs(bad, omega, DEPTH)
    assert not is_satisfiable(bad, omega, DEPTH)
    assert not relation_holds(bad, omega, DEPTH)
    with pytest.raises(EncodingError):
        circuit_inputs(chi, omega, DEPTH + 1)
