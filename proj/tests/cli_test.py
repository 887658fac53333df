"""End-to-end checks of the netcontrol command-line tool.

Usage: cli_test.py <netcontrol binary> <demo data dir> <fixtures dir>
"""

import csv
import hashlib
import json
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

BIN, DATA, FIXTURES = sys.argv[1], Path(sys.argv[2]), Path(sys.argv[3])
FAILURES = []
TEMP_DIRS = []


def run(*args, check=True):
    proc = subprocess.run([BIN, *args], capture_output=True, text=True)
    if check and proc.returncode != 0:
        raise AssertionError(f"{args} exited {proc.returncode}: {proc.stderr}")
    return proc


def graph_args():
    return ["--nodes", str(DATA / "nodes.csv"), "--edges", str(DATA / "edges.csv"),
            "--thresholds", str(DATA / "thresholds.csv")]


def case(fn):
    try:
        fn()
        print(f"ok   {fn.__name__}")
    except Exception as e:  # noqa: BLE001
        FAILURES.append(fn.__name__)
        print(f"FAIL {fn.__name__}: {e}")
    return fn


def rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


@case
def tnpi_happy_path():
    with tempfile.TemporaryDirectory() as out:
        proc = run("tnpi", *graph_args(), "--scenario", "2", "--target", "UTIL", "--target", "TELE",
                   "--iterations", "2000", "--seed", "3", "--out", out)
        listed = proc.stdout.split()
        assert str(Path(out) / "tnpi.csv") in listed, listed
        table = rows(Path(out) / "tnpi.csv")
        assert set(table[0]) >= {"controller_id", "target_id", "tnpi", "stderr"}, table[0]
        for firm in ("UTIL", "TELE"):
            total = sum(float(r["tnpi"]) for r in table if r["target_id"] == firm)
            assert abs(total - 1.0) < 1e-9, (firm, total)
        manifest = json.loads((Path(out) / "manifest.json").read_text())
        assert manifest["status"] == "complete"
        assert manifest["config"]["burn_in"] == 200
        for entry in manifest["outputs"]:
            digest = hashlib.sha256((Path(out) / entry["file"]).read_bytes()).hexdigest()
            assert digest == entry["sha256"], entry


@case
def same_seed_same_bytes():
    outs = []
    for workers in ("1", "3"):
        out = tempfile.mkdtemp()
        TEMP_DIRS.append(out)
        run("tnpf", *graph_args(), "--target", "UTIL", "--iterations", "1500", "--chains", "3",
            "--workers", workers, "--out", out)
        outs.append(out)
    for name in ("tnpf_sources.csv", "tnpf_transit.csv", "tnpf_sources_normalized.csv"):
        a = (Path(outs[0]) / name).read_bytes()
        b = (Path(outs[1]) / name).read_bytes()
        assert a == b, name


@case
def missing_file_is_structured_error():
    with tempfile.TemporaryDirectory() as out:
        missing = str(DATA / "no_such_edges.csv")
        proc = run("npi", "--nodes", str(DATA / "nodes.csv"), "--edges", missing, "--out", out,
                   check=False)
        assert proc.returncode == 1, proc.returncode
        err = json.loads(proc.stderr.strip().splitlines()[-1])
        assert err["error"] == "Io", err
        assert err["context"] == missing, err
        manifest = json.loads((Path(out) / "manifest.json").read_text())
        assert manifest["status"] == "failed"


@case
def bad_option_is_rejected():
    proc = run("tnpi", *graph_args(), "--branch-mode", "sideways", check=False)
    assert proc.returncode == 2, proc.returncode
    assert json.loads(proc.stderr.strip())["error"] == "InvalidConfig"


@case
def invalid_config_writes_nothing():
    with tempfile.TemporaryDirectory() as parent:
        out = Path(parent) / "run"
        proc = run("tnpf", *graph_args(), "--target", "UTIL", "--damping", "1.5", "--out", str(out),
                   check=False)
        assert proc.returncode == 1
        assert json.loads(proc.stderr.strip())["error"] == "InvalidConfig"
        assert not out.exists()


@case
def config_file_and_flag_override():
    with tempfile.TemporaryDirectory() as out:
        conf = Path(out) / "run.ini"
        conf.write_text(f'nodes = "{DATA / "nodes.csv"}"\nedges = "{DATA / "edges.csv"}"\n'
                        'iterations = 500\nseed = 9\nscenario = 3\n')
        run("npi", "--config", str(conf), "--seed", "11", "--out", out)
        cfg = json.loads((Path(out) / "manifest.json").read_text())["config"]
        assert cfg["iterations"] == 500 and cfg["scenario"] == 3, cfg
        assert cfg["seed"] == 11, cfg


@case
def impute_nci_centrality():
    with tempfile.TemporaryDirectory() as out:
        run("impute", *graph_args(), "--scenario", "4", "--out", out)
        edges = rows(Path(out) / "imputed_edges.csv")
        totals = {}
        for e in edges:
            totals[e["owned_id"]] = totals.get(e["owned_id"], 0.0) + float(e["share"])
        assert all(abs(t - 1.0) < 1e-9 for t in totals.values()), totals
        run("nci", *graph_args(), "--firm", "HOLD", "--coverage", "0.75", "--out", out)
        assert rows(Path(out) / "nci.csv")[0]["count"] == "2"
        run("centrality", *graph_args(), "--measure", "pagerank", "--out", out)
        scores = [float(r["score"]) for r in rows(Path(out) / "centrality.csv")]
        assert abs(sum(scores) - 1.0) < 1e-9


@case
def graphml_reads_back():
    import networkx as nx

    with tempfile.TemporaryDirectory() as out:
        run("export", *graph_args(), "--format", "graphml", "--annotate", "pagerank", "--out", out)
        g = nx.read_graphml(Path(out) / "graph.graphml")
        assert g.number_of_nodes() == 12, g.number_of_nodes()
        observed = {(r["owner_id"], r["owned_id"]) for r in rows(DATA / "edges.csv")}
        assert observed <= set(g.edges()), observed - set(g.edges())


@case
def oracle_prints_tables():
    with tempfile.TemporaryDirectory() as out:
        proc = run("oracle", "--fixture", str(FIXTURES / "symmetric.json"), "--out", out)
        assert "# oracle_pivots.csv" in proc.stdout
        assert "X,A,0.3333333333333333" in proc.stdout


for d in TEMP_DIRS:
    shutil.rmtree(d, ignore_errors=True)
if FAILURES:
    print(f"{len(FAILURES)} failed: {', '.join(FAILURES)}")
    sys.exit(1)
print("all CLI checks passed")
