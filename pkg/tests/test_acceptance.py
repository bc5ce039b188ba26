"""Acceptance criteria 1-10, each at its stated tolerance.

Every test prints one ``criterion N: PASS|FAIL ...`` line; the conftest
summary hook repeats the outcome per test at the end of the run.
"""

import hashlib
import warnings

from ffsmbench import asset_path
from ffsmbench.cli import main
from ffsmbench.feature_model import (
    enumerate_configurations,
    parse_feature_model,
    write_feature_model,
)
from ffsmbench.ffsm import derive_product, parse_ffsm_dot, validate_ffsm, write_ffsm_dot
from ffsmbench.generator import GenSpec, generate_ffsm
from ffsmbench.harness import accuracy, analyze_rounds, conciseness
from ffsmbench.learner import LearnerOptions, learn
from ffsmbench.mealy import equivalent, minimize, parse_dot, write_dot
from conftest import make_m3, make_one_state
from oracles import brute_separating_word, mutate, random_feature_model, random_machine, rng

INPUTS = ["a", "b", "c", "d", "e"]
OUTPUTS = ["0", "1", "2"]


def report(n, ok, detail):
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")


def test_criterion_01_lstar_correctness():
    r = rng(101)
    good = 0
    for _ in range(200):
        m = minimize(random_machine(r, r.randint(1, 30), INPUTS[: r.randint(1, 5)],
                                    OUTPUTS[: r.randint(1, 3)]))
        h, _ = learn(m, m.inputs)
        good += equivalent(h, m) is None and len(h.states) == len(m.states)
    report(1, good == 200, f"{good}/200 learned exactly")
    assert good == 200


def test_criterion_02_one_state_costs():
    _, m = learn(make_one_state(), ["a", "b"], LearnerOptions(cache=False))
    got = (m.rounds, m.eq_count, m.mq_count, m.mq_symbols)
    report(2, got == (1, 1, 6, 10), f"rounds/eq/mq/mq_symbols = {got}")
    assert got == (1, 1, 6, 10)


def test_criterion_03_multiround_witness():
    _, metrics = learn(make_m3(), ["a", "b"])
    a = analyze_rounds(make_m3())
    ok = (metrics.rounds >= 2 and metrics.hypothesis_states[0] == 1
          and ("q0", "q1", 2) in a.merged_pairs)
    report(3, ok, f"rounds={metrics.rounds} first={metrics.hypothesis_states[0]} pairs={a.merged_pairs}")
    assert ok


def test_criterion_04_generator_multiround(game):
    fm, _ = game
    seeds = range(25)
    hits = 0
    for seed in seeds:
        f = generate_ffsm(GenSpec(fm, seed, 4 + seed % 12, ("a", "b", "c"), ("0", "1", "2")))
        rounds = [learn(m, m.inputs)[1].rounds
                  for m in (derive_product(f, c) for c in enumerate_configurations(fm, 10))]
        hits += max(rounds) >= 2
    report(4, hits == len(seeds), f"{hits}/{len(seeds)} seeds with a multi-round product")
    assert hits == len(seeds)


def test_criterion_05_game_derivation(game):
    fm, f = game
    configs = enumerate_configurations(fm, 100)
    learnable = 0
    for c in configs:
        m = derive_product(f, c)
        h, _ = learn(m, m.inputs)
        learnable += equivalent(h, m) is None
    acc = accuracy(f, f).fraction
    ok = len(configs) == 4 and learnable == 4 and acc == 1.0 and validate_ffsm(f).passed
    report(5, ok, f"configs={len(configs)} learnable={learnable} accuracy={acc}")
    assert ok


def test_criterion_06_equivalence_oracle():
    r = rng(606)
    good = 0
    for _ in range(500):
        total = r.randint(2, 10)
        n1 = r.randint(1, total - 1)
        n2 = total - n1
        if r.random() < 0.3:
            n1 = n2 = total // 2
        inputs = ["a", "b", "c"] if total <= 7 and r.random() < 0.5 else ["a", "b"]
        m1 = random_machine(r, n1, inputs, ["0", "1"])
        if n1 == n2 and r.random() < 0.5:
            m2 = mutate(r, m1)
        else:
            m2 = random_machine(r, n2, inputs, ["0", "1"])
        ce = equivalent(m1, m2)
        brute = brute_separating_word(m1, m2, n1 + n2 - 1)
        if brute is None:
            good += ce is None
        else:
            good += ce is not None and len(ce) == len(brute) and m1.run(ce) != m2.run(ce)
    report(6, good == 500, f"{good}/500 agree with brute force")
    assert good == 500


def _digest(directory):
    h = hashlib.sha256()
    for path in sorted(directory.rglob("*")):
        if path.is_file():
            h.update(path.relative_to(directory).as_posix().encode())
            h.update(path.read_bytes())
    return h.hexdigest()


def test_criterion_07_determinism(tmp_path):
    fm = str(asset_path("game", "model.xml"))
    digests = []
    for run, jobs in enumerate(["1", "1", "4"]):
        out = tmp_path / f"run{run}"
        gen = out / "gen"
        assert main(["generate", "--fm", fm, "--seed", "17", "--states", "12", "--inputs", "a,b,c",
                     "--outputs", "x,y,z", "--jobs", jobs, "-o", str(gen)]) == 0
        assert main(["bench", "--fm", str(gen / "model.xml"), "--ffsm", str(gen / "ffsm.dot"),
                     "--oracle", "random:100,2,12,5", "--cache", "--jobs", jobs,
                     "--report", str(out / "bench.json"), "--csv", str(out / "bench.csv")]) == 0
        digests.append(_digest(out))
    ok = len(set(digests)) == 1
    report(7, ok, f"{len(set(digests))} distinct digest(s) over 3 runs")
    assert ok


def test_criterion_08_cache_soundness():
    r = rng(808)
    good = 0
    for _ in range(50):
        m = random_machine(r, r.randint(1, 20), INPUTS[: r.randint(1, 4)], OUTPUTS[: r.randint(1, 3)])
        h_off, off = learn(m, m.inputs, LearnerOptions(cache=False))
        h_on, on = learn(m, m.inputs, LearnerOptions(cache=True))
        good += h_off == h_on and off.rounds == on.rounds and on.mq_count <= off.mq_count
    report(8, good == 50, f"{good}/50 cache-on runs match cache-off")
    assert good == 50


def test_criterion_09_conciseness(game):
    r = rng(909)
    good = total = 0
    while total < 50:
        fm = game[0] if total % 2 == 0 else random_feature_model(r, r.randint(2, 6))
        if len(enumerate_configurations(fm, 10_000)) < 2:
            continue
        spec = GenSpec(fm, r.randrange(2**32), r.randint(4, 15), ("a", "b", "c"), ("0", "1", "2"),
                       variability_degree=r.choice([0.0, 0.1, 0.25, 0.4, 0.5]))
        total += 1
        good += conciseness(generate_ffsm(spec)).ratio < 1
    report(9, good == 50, f"{good}/50 ratios below 1")
    assert good == 50


def test_criterion_10_round_trips(game):
    failures = []

    def check(kind, text, parse, write):
        if write(parse(text)) != text:
            failures.append(kind)

    fm_text = asset_path("game", "model.xml").read_text()
    check("bundled fm", fm_text, parse_feature_model, write_feature_model)
    fm = parse_feature_model(fm_text)
    check("bundled ffsm", asset_path("game", "game.ffsm.dot").read_text(),
          lambda t: parse_ffsm_dot(t, fm), write_ffsm_dot)
    for path in sorted(asset_path("game", "products").iterdir()):
        check(path.name, path.read_text(), parse_dot, write_dot)
    r = rng(1010)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for i in range(100):
            gfm = random_feature_model(r, r.randint(1, 8))
            if not enumerate_configurations(gfm, 10_000):
                gfm = game[0]
            f = generate_ffsm(GenSpec(gfm, i, r.randint(1, 12), ("a", "b"), ("0", "1")))
            check(f"fm {i}", write_feature_model(gfm), parse_feature_model, write_feature_model)
            check(f"ffsm {i}", write_ffsm_dot(f), lambda t: parse_ffsm_dot(t, gfm), write_ffsm_dot)
            m = derive_product(f, enumerate_configurations(gfm, 10_000)[0])
            check(f"fsm {i}", write_dot(m), parse_dot, write_dot)
            if parse_dot(write_dot(m)) != m:
                failures.append(f"fsm object {i}")
            if parse_feature_model(write_feature_model(gfm)) != gfm:
                failures.append(f"fm object {i}")
    report(10, not failures, f"failures={failures[:5]}")
    assert not failures
