import itertools

import pytest

import soplog

K4 = "domain 4\nrel E 2 {" + " ".join(f"({a},{b})" for a in range(4) for b in range(4) if a != b) + "}"


def test_clique_on_complete_and_empty_graph(data):
    phi = soplog.parse_formula((data / "clique.f").read_text())
    assert soplog.evaluate(soplog.load_structure(K4), phi)
    assert not soplog.evaluate(soplog.load_structure("domain 4\nrel E 2 { }"), phi)


def test_evaluator_matches_reference():
    phi = soplog.parse_formula("exists X:1^1 . forall (x) in X . P(x)")
    for bits in itertools.product([0, 1], repeat=4):
        tuples = " ".join(f"({i})" for i, b in enumerate(bits) if b)
        s = soplog.load_structure(f"domain 4\nrel P 1 {{ {tuples} }}")
        assert soplog.evaluate(s, phi) == soplog.reference_evaluate(s, phi)


def test_normal_form_and_classes(data):
    phi = soplog.parse_formula((data / "nodnfsat.f").read_text())
    assert soplog.classify(phi) == "Pi 2"
    mixed = soplog.parse_formula("exists x . exists X:1^1 . X(x)")
    assert soplog.classify(mixed) == "NotQNF"
    assert soplog.classify(soplog.to_qnf(mixed)) == "Sigma 1"


def test_parse_errors_and_budget():
    with pytest.raises(soplog.ParseError):
        soplog.parse_formula("exists X:1^1 . X(ZERO) &")
    s = soplog.load_structure(K4)
    phi = soplog.parse_formula("exists X:2^1 . X(ZERO, ONE) & E(MAX, MAX)")
    with pytest.raises(soplog.BudgetExceeded):
        soplog.evaluate(s, phi, strategy="enumerate", budget=3)


def test_encoding_length():
    s = soplog.load_structure("domain 5\nrel R 2 { (0,1) }\nconst c 3")
    bits = soplog.encode(s)
    assert len(bits) == 25 + 3
    assert bits[1] == "1"
    assert soplog.encoded_length(s.vocabulary, 5) == 28


def test_machines():
    r = soplog.run_machine(soplog.bit0_reader(), "1000", steps=100)
    assert r["outcome"] == "accept"
    r = soplog.run_machine(soplog.bit0_reader(), "0111", steps=100)
    assert r["outcome"] == "reject"
    r = soplog.run_machine(soplog.bit0_reader(), "1000", steps=1)
    assert r["outcome"] == "budget-exceeded"
    assert soplog.run_machine(soplog.alternating_blocks(3), "0110", steps=10**6)["alternations_used"] == 3
    m = soplog.polylog_cnf_sat_machine(2)
    assert soplog.run_machine(m, soplog.encode_cnf([[1, 2], [-1]], 2), steps=10**7)["outcome"] == "accept"
    assert soplog.run_machine(m, soplog.encode_cnf([[1], [-1]], 2), steps=10**7)["outcome"] == "reject"


def test_compiled_machine_agrees():
    vocab = soplog.load_vocabulary("rel P 1")
    sentence, meta = soplog.compile_machine(soplog.exists_one_guesser(), vocab)
    assert soplog.classify(sentence) == "Sigma 1"
    assert "k = 3" in meta
    for tuples, accepts in [("", False), ("(2)", True)]:
        s = soplog.load_structure(f"domain 4\nrel P 1 {{ {tuples} }}")
        r = soplog.check_soundness(soplog.exists_one_guesser(), s)
        assert r["agrees"]
        assert (r["machine"] == "accept") == accepts
