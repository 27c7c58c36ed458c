import json

import pytest

from stratnet.cli import main
from stratnet.formula import Atom
from stratnet.net import load, nets_equal, save
from stratnet import builder

from conftest import make_unstable_membership_net, tensor_loop_net


X = Atom("X")


@pytest.fixture
def dereliction_file(tmp_path, dereliction_net):
    p = tmp_path / "der.json"
    p.write_bytes(save(dereliction_net))
    return str(p)


@pytest.fixture
def shift_source_file(tmp_path, shift_source_net):
    p = tmp_path / "shiftsrc.json"
    p.write_bytes(save(shift_source_net))
    return str(p)


def write_net(tmp_path, name, net):
    p = tmp_path / name
    p.write_bytes(save(net))
    return str(p)


def test_validate_ok(tmp_path, capsys):
    p = write_net(tmp_path, "ax.json", builder.ax(X))
    assert main(["validate", p]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["valid"] is True


def test_validate_flat_conclusion_named(tmp_path, capsys):
    n = builder.flat_rule(builder.ax(X), 0)
    p = tmp_path / "flat.json"
    doc = __import__("stratnet.net", fromlist=["to_document"]).to_document(n)
    p.write_text(json.dumps(doc))
    assert main(["validate", str(p)]) == 2
    err = capsys.readouterr().err
    assert "flat" in err and "e" in err


def test_validate_malformed_json(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{ nope")
    assert main(["validate", str(p)]) == 2
    assert "line" in capsys.readouterr().err


def test_validate_dot_export(tmp_path, capsys):
    p = write_net(tmp_path, "ax.json", builder.ax(X))
    dot = tmp_path / "g.dot"
    assert main(["validate", "--dot", str(dot), p]) == 0
    assert dot.read_text().startswith("graph net {")


def test_check_dr(tmp_path, capsys):
    good = write_net(tmp_path, "good.json", builder.ax(X))
    assert main(["check", "--criterion", "dr", good]) == 0
    bad = write_net(tmp_path, "bad.json", tensor_loop_net())
    assert main(["check", "--criterion", "dr", bad]) == 1
    out = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    assert out[-1]["holds"] is False and out[-1]["witness"]["cycle_edges"]


def test_check_proofnet(tmp_path, par_shift_net, capsys):
    p = write_net(tmp_path, "shift.json", par_shift_net)
    assert main(["check", "--criterion", "proofnet", p]) == 1
    good = write_net(tmp_path, "ax.json", builder.ax(X))
    assert main(["check", "--criterion", "proofnet", good]) == 0


def test_index_shift_source(shift_source_file, capsys):
    assert main(["index", "--flavor", "exponential", shift_source_file]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["flavor"] == "exponential" and doc["assignment"]
    assert main(["index", "--flavor", "plain", "--strong", shift_source_file]) == 1
    witness = json.loads(capsys.readouterr().out)
    assert witness["kind"] == "path" and witness["balance"] == 1


def test_index_axiom_all_zero(tmp_path, capsys):
    p = write_net(tmp_path, "ax.json", builder.ax(X))
    assert main(["index", "--flavor", "plain", p]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert set(doc["assignment"].values()) == {0}


def test_l3_dereliction_unanimous(dereliction_file, capsys):
    assert main(["l3", "--method", "all", dereliction_file]) == 1
    doc = json.loads(capsys.readouterr().out)
    assert doc["verdicts"] == {"indexing": False, "geometric": False, "interactive": False}


def test_l3_shift_source_member(shift_source_file):
    assert main(["l3", "--method", "all", shift_source_file]) == 0


def test_l3_interactive_rejects_cuts(tmp_path, capsys):
    left, _ = make_unstable_membership_net()
    p = write_net(tmp_path, "left.json", left)
    assert main(["l3", "--method", "interactive", p]) == 2
    assert "normalize" in capsys.readouterr().err
    assert main(["l3", "--method", "indexing", p]) == 1


def test_normalize_then_member(tmp_path, capsys):
    left, right = make_unstable_membership_net()
    p = write_net(tmp_path, "left.json", left)
    out = str(tmp_path / "nf.json")
    assert main(["normalize", p, "-o", out]) == 0
    assert main(["l3", "--method", "all", out]) == 0
    result = load(open(out, "rb").read())
    assert nets_equal(result, right)


def test_normalize_cut_free_is_canonical_bytes(tmp_path, capsys):
    n = builder.random_net(8, builder.GenParams(target_size=12, cut_bias=0))
    p = write_net(tmp_path, "n.json", n)
    assert main(["normalize", p]) == 0
    out = capsys.readouterr().out.strip().encode()
    assert out == save(n).strip()


def test_normalize_strategies_agree(tmp_path):
    n = builder.random_net(77, builder.GenParams(target_size=16, cut_bias=0.5))
    p = write_net(tmp_path, "n.json", n)
    results = []
    for strat in ("lo", "in", "level"):
        out = str(tmp_path / f"nf_{strat}.json")
        assert main(["normalize", "--strategy", strat, p, "-o", out]) == 0
        results.append(load(open(out, "rb").read()))
    assert nets_equal(results[0], results[1]) and nets_equal(results[1], results[2])


def test_normalize_trace_output(tmp_path):
    left, _ = make_unstable_membership_net()
    p = write_net(tmp_path, "left.json", left)
    trace = tmp_path / "trace.json"
    assert main(["normalize", p, "-o", str(tmp_path / "nf.json"), "--trace", str(trace)]) == 0
    doc = json.loads(trace.read_text())
    assert doc and all({"cut", "kind", "lift"} == set(step) for step in doc)


def test_normalize_budget_env(tmp_path, monkeypatch, capsys):
    left, _ = make_unstable_membership_net()
    p = write_net(tmp_path, "left.json", left)
    monkeypatch.setenv("STRATNET_BUDGET", "1")
    assert main(["normalize", p]) == 3
    assert "undecided" in capsys.readouterr().err


def test_gen_deterministic(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    args = ["gen", "--seed", "5", "--size", "18", "--cut-bias", "0.3"]
    assert main(args + ["-o", str(a)]) == 0
    assert main(args + ["-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_gen_size_zero(tmp_path, capsys):
    assert main(["gen", "--seed", "1", "--size", "0"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["links"]) <= 1


def test_gen_then_dr(tmp_path):
    for seed in range(5):
        out = str(tmp_path / f"g{seed}.json")
        assert main(["gen", "--seed", str(seed), "--size", "20", "-o", out]) == 0
        assert main(["check", "--criterion", "dr", out]) == 0


def test_test_command_identity(tmp_path, capsys):
    from stratnet.interactive import identity_net
    from stratnet.net import parr_closure

    p = write_net(tmp_path, "id.json", parr_closure(identity_net(Atom("Z"))))
    assert main(["test", p]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["member"] is True


def test_test_command_dereliction(dereliction_file, capsys):
    assert main(["test", dereliction_file]) == 1
    doc = json.loads(capsys.readouterr().out)
    assert any(not lvl["pass"] and lvl["swapped_sites"] >= 1 for lvl in doc["levels"])


def test_test_command_single_level(dereliction_file, capsys):
    assert main(["test", "--level", "0", dereliction_file]) == 1
    doc = json.loads(capsys.readouterr().out)
    assert [lvl["k"] for lvl in doc["levels"]] == [0]


def test_test_command_autocloses(tmp_path, capsys):
    p = write_net(tmp_path, "ax.json", builder.ax(X))
    assert main(["test", p]) == 0
    assert "joining" in capsys.readouterr().err


def test_test_command_rejects_cuts(tmp_path, capsys):
    left, _ = make_unstable_membership_net()
    p = write_net(tmp_path, "left.json", left)
    assert main(["test", p]) == 2


def test_jobs_flag(tmp_path):
    files = []
    for seed in range(4):
        out = str(tmp_path / f"g{seed}.json")
        main(["gen", "--seed", str(seed), "--size", "10", "--cut-bias", "0", "-o", out])
        files.append(out)
    code = main(["l3", "--method", "geometric", "--jobs", "4"] + files)
    assert code in (0, 1)


def test_pretty_flag_both_positions(tmp_path, capsys):
    p = write_net(tmp_path, "ax.json", builder.ax(X))
    assert main(["--pretty", "validate", p]) == 0
    first = capsys.readouterr().out
    assert main(["validate", "--pretty", p]) == 0
    second = capsys.readouterr().out
    assert first == second and "\n  " in first


def test_check_budget_exit(tmp_path, monkeypatch, capsys):
    # five pars make 32 switchings; a budget of 4 leaves the check undecided
    n = builder.par_rule(builder.ax(X), 0, 1)
    for _ in range(4):
        n = builder.mix(n, builder.par_rule(builder.ax(X), 0, 1))
    p = write_net(tmp_path, "wide.json", n)
    monkeypatch.setenv("STRATNET_BUDGET", "4")
    assert main(["check", "--criterion", "dr", p]) == 3
    assert "undecided" in capsys.readouterr().err
