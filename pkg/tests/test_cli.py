import json

import pytest

from omla import model
from omla.cli import BENCH_HEADER, main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


def test_hardness_then_verify(tmp_path, capsys):
    path = tmp_path / "hard.json"
    assert run(capsys, "hardness", "--eps", 0.5, "--out", path)[0] == 0
    out_json = tmp_path / "report.json"
    code, cap = run(capsys, "verify", path, "--json", out_json)
    assert code == 0
    assert "exact_opt = 1.5" in cap.out
    rep = json.loads(out_json.read_text())
    assert rep["ok"]
    l1 = [c for c in rep["checks"] if c["name"].startswith("L1")][0]
    assert l1["rhs"] == pytest.approx(1.5)


def test_bench_with_unit_budgets(tmp_path, capsys):
    inst = tmp_path / "g.json"
    assert run(capsys, "gen", "--machines", 4, "--tasks", 6, "--T", 12, "--L", 2, "--edge-prob", 0.5,
               "--delta", 1, "--seed", 3, "--out", inst)[0] == 0
    out, svg = tmp_path / "bench.csv", tmp_path / "bench.svg"
    assert run(capsys, "bench", inst, "--n", 300, "--seed", 1, "--out", out, "--svg", svg)[0] == 0
    lines = out.read_text().splitlines()
    assert lines[0] == BENCH_HEADER
    rows = [dict(zip(lines[0].split(","), ln.split(","))) for ln in lines[1:]]
    assert [r["policy"] for r in rows] == ["omla", "random", "ug", "eg", "ug+", "eg+"]
    assert all(r["bound"] == "0.5" and r["delta_max"] == "1" for r in rows)
    omla = rows[0]
    assert float(omla["ratio"]) >= 0.5 - float(omla["stderr"]) / float(omla["lp_off"]) * 2
    assert svg.read_text().startswith("<svg")


def test_simulate_is_deterministic(tmp_path, capsys):
    inst = tmp_path / "g.json"
    run(capsys, "gen", "--machines", 3, "--tasks", 4, "--T", 10, "--seed", 2, "--out", inst)
    first = run(capsys, "simulate", inst, "--policy", "omla", "--n", 1, "--seed", 7)[1].out
    second = run(capsys, "simulate", inst, "--policy", "omla", "--n", 1, "--seed", 7)[1].out
    assert first == second
    assert first.splitlines()[0] == "instance_id,policy,n,seed,mean,stderr"
    assert first.splitlines()[1].startswith("g,omla,1,7,")


def test_simulate_trace_and_several_policies(tmp_path, capsys):
    inst = tmp_path / "g.json"
    run(capsys, "gen", "--machines", 3, "--tasks", 4, "--T", 10, "--seed", 2, "--out", inst)
    trace = tmp_path / "t.jsonl"
    code, cap = run(capsys, "simulate", inst, "--policy", "ug", "--policy", "random", "--n", 20,
                    "--trace", trace)
    assert code == 0
    assert len(cap.out.splitlines()) == 3
    assert all("event" in json.loads(ln) for ln in trace.read_text().splitlines())


def test_solve_lp_and_tables(tmp_path, capsys):
    inst = tmp_path / "g.json"
    run(capsys, "gen", "--machines", 3, "--tasks", 4, "--T", 6, "--delta", 2, "--seed", 2, "--out", inst)
    sol, dump, csv = tmp_path / "x.json", tmp_path / "lp.txt", tmp_path / "r.csv"
    code, cap = run(capsys, "solve-lp", inst, "--out", sol, "--dump", dump, "--backend", "simplex")
    assert code == 0 and cap.out.startswith("LP(Off) = ")
    assert json.loads(sol.read_text())["status"] == "optimal"
    assert dump.read_text().startswith("omla-lp ")
    assert run(capsys, "tables", inst, "--csv", csv)[0] == 0
    assert csv.read_text().splitlines()[0] == "delta,u,t,R"


def test_validate_exit_codes(tmp_path, capsys):
    good = tmp_path / "g.json"
    run(capsys, "hardness", "--eps", 0.2, "--out", good)
    assert run(capsys, "validate", good)[0] == 0
    data = json.loads(good.read_text())
    data["rewards"]["2"]["1"] = -1.0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(data))
    code, cap = run(capsys, "validate", bad)
    assert code == 4
    assert run(capsys, "simulate", bad)[0] == 3


def test_flag_errors_exit_2(capsys):
    assert run(capsys, "nosuch")[0] == 2
    assert run(capsys, "simulate", "x.json", "--policy", "greedy")[0] == 2
    assert run(capsys, "gen", "--delta", "0")[0] == 2


def test_malformed_instance_is_a_contract_violation(tmp_path, capsys):
    path = tmp_path / "m.json"
    path.write_text("{}")
    assert run(capsys, "verify", path)[0] == 3


def test_verify_failure_exits_4(tmp_path, capsys):
    from omla.model import DelayDist, make_instance
    inst = make_instance(T=5, L=2, budgets=[1], n_tasks=1, edges=[(0, 0, 0.5)], rewards=[[1.0, 1.01]],
                         theta=[1, 3], arrivals=[[1.0] * 5], delays=[DelayDist.point(1), DelayDist.point(2)])
    path = tmp_path / "c.json"
    model.save(inst, path)
    code, cap = run(capsys, "verify", path)
    assert code == 4
    assert "overall: FAIL" in cap.out


def test_ingest_subcommand(tmp_path, capsys):
    from omla.ingest import COLUMNS
    rows = [f"A,d,-73.99,40.75,-73.95,40.78,2016-01-{5 + i:02d}T19:0{i}:00,2016-01-{5 + i:02d}T19:20:00,"
            f"{700 + 10 * i},{15 + i},0" for i in range(6)]
    csv = tmp_path / "trips.csv"
    csv.write_text("\n".join([",".join(COLUMNS)] + rows) + "\n")
    out, rep = tmp_path / "inst.json", tmp_path / "rep.json"
    code, cap = run(capsys, "ingest", csv, "--out", out, "--report", rep)
    assert code == 0
    assert model.load(out).n_edges == 1
    assert json.loads(rep.read_text())["skipped_rows"] == 0
