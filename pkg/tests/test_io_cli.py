import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simorbit import io
from simorbit.chain import GeneratorMatrix, StochasticKernel
from simorbit.cli import run
from simorbit.errors import InvalidChain, ValidationError
from simorbit.orbit import IntertwiningLink
from simorbit.samplers import random_kernel


def _run(capsys, *argv):
    status = run(list(argv))
    return status, json.loads(capsys.readouterr().out)


# ----------------------------------------------------------------------------
# files
# ----------------------------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2**32 - 1))
def test_chain_round_trip_is_bit_identical(n, seed):
    K = random_kernel(n, np.random.default_rng(seed))
    text = io.canonical_json(io.chain_to_dict(K))
    back = io.chain_from_dict(json.loads(text))
    np.testing.assert_array_equal(back.matrix, K.matrix)
    np.testing.assert_array_equal(back.pi, K.pi)
    assert io.canonical_json(io.chain_to_dict(back)) == text


def test_report_round_trip(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert run(["analyze", "examples/gmc4.json", "--out", str(out)]) == 0
    text = out.read_text()
    assert io.canonical_json(json.loads(text)) == text


def test_non_markov_generator_round_trip(tmp_path):
    L = GeneratorMatrix([[-1.0, 1.5, -0.5], [0.5, -1.0, 0.5], [0.0, 0.5, -0.5]], markovian=False)
    p = tmp_path / "l.json"
    io.save_chain(L, p)
    back = io.load_chain(p)
    assert isinstance(back, GeneratorMatrix) and not back.markovian
    np.testing.assert_array_equal(back.matrix, L.matrix)


def test_csv_chain_input(tmp_path):
    p = tmp_path / "k.csv"
    p.write_text("0.5,0.5\n0.25,0.75\n")
    K = io.load_chain(p)
    assert isinstance(K, StochasticKernel)
    assert io.chain_from_csv(io.chain_to_csv(K)).matrix.tolist() == K.matrix.tolist()
    with pytest.raises(InvalidChain):
        io.chain_from_csv("1,0\n0,1,0\n")


def test_link_round_trip(rng):
    pi = rng.dirichlet(np.ones(3))
    link = IntertwiningLink(rng.normal(size=(3, 3)), pi, pi)
    back = io.link_from_dict(json.loads(io.canonical_json(io.link_to_dict(link))))
    np.testing.assert_array_equal(back.matrix, link.matrix)
    with pytest.raises(ValidationError):
        io.link_from_dict({"matrix": [[1.0]]})


def test_manifest_forms(tmp_path):
    K = StochasticKernel([[0.5, 0.5], [0.25, 0.75]]).with_stationary()
    for i in range(3):
        io.save_chain(K, tmp_path / f"m{i}.json")
    (tmp_path / "fam.json").write_text(json.dumps({"members": ["m0.json", "m1.json", "m2.json"]}))
    fam = io.FamilyManifest.load(tmp_path / "fam.json")
    assert len(fam.kernels()) == 3 and fam.rule is None
    members = fam.cutoff_members()
    np.testing.assert_allclose(members[0].L.matrix, K.matrix - np.eye(2))
    rule = io.FamilyManifest.from_dict({"members": {"name": "constant_rate", "sizes": [4, 8]}, "mode": "continuous"})
    assert [m.size for m in rule.cutoff_members()] == [5, 9]
    with pytest.raises(ValidationError):
        io.FamilyManifest.from_dict({"members": []})
    with pytest.raises(ValidationError):
        io.FamilyManifest.from_dict({"members": ["a"], "mode": "sideways"})


# ----------------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------------


def test_gmc_check_example(capsys):
    status, rep = _run(capsys, "gmc-check", "examples/gmc4.json")
    assert status == 0
    res = rep["results"]
    assert res["member"] is True
    # condition 6 fails at states 0 and 2 of the bundled example
    assert res["member_plus"] is False


def test_purebirth_example(capsys):
    status, rep = _run(capsys, "purebirth", "examples/g5.json")
    assert status == 0
    np.testing.assert_allclose(rep["results"]["conjugate"]["pi_L"], [0.0625, 0.1875, 0.25, 0.25, 0.25], atol=1e-12)
    assert rep["results"]["conjugate"]["markovian"] is True


def test_analyze_identity_example(capsys):
    status, rep = _run(capsys, "analyze", "examples/identity2.json")
    assert status == 0
    assert rep["results"]["reversible"] is True
    assert any("lambda_star = 1" in w for w in rep["warnings"])


def test_report_fields_are_deterministic(capsys):
    _, a = _run(capsys, "spectral", "examples/gmc4.json")
    _, b = _run(capsys, "spectral", "examples/gmc4.json")
    assert a == b
    assert {"command", "results", "inputs_hash", "tolerances", "warnings"} <= set(a)


@pytest.mark.parametrize(
    "argv",
    [
        ["gmc-reduce", "examples/gmc4.json"],
        ["bounds", "examples/gmc4.json"],
        ["fsst", "examples/gmc4.json", "--non-strict"],
        ["cutoff-sep", "examples/lazy_birth_death_family.json"],
        ["cutoff-l2", "examples/constant_rate_family.json"],
    ],
)
def test_commands_succeed(capsys, tmp_path, argv):
    csv = tmp_path / "out.csv"
    status, rep = _run(capsys, *argv, "--csv", str(csv))
    assert status == 0, rep
    assert "results" in rep


def test_fsst_strict_failure_is_a_validation_error(capsys):
    status, rep = _run(capsys, "fsst", "examples/gmc4.json")
    assert status == 2
    assert rep["error"]["type"] == "NotInGmcPlus"


def test_missing_file_exit_code(capsys):
    status, rep = _run(capsys, "analyze", "no/such/chain.json")
    assert status == 2 and "error" in rep


def test_bad_chain_exit_code(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"kind": "kernel", "matrix": [[0.9, 0.2], [0.5, 0.5]]}))
    status, rep = _run(capsys, "analyze", str(p))
    assert status == 2 and rep["error"]["code"]


def test_estimate_and_seed_determinism(capsys, tmp_path):
    f = tmp_path / "f.json"
    f.write_text(json.dumps([1.0, 0.0, 0.0, 0.0, 0.0]))
    args = ["estimate", "examples/g5.json", "--f", str(f), "--replicas", "300", "--n", "8,16,32", "--seed", "4"]
    status, a = _run(capsys, *args)
    assert status == 0, a
    _, b = _run(capsys, *args)
    assert a["results"] == b["results"]
    assert len(a["results"]["fit"]["rmse"]) == 3


def test_orbit_verify(capsys, tmp_path, g5):
    from simorbit.purebirth import PureBirthLink

    link = IntertwiningLink(PureBirthLink(5).matrix, [0.0625, 0.1875, 0.25, 0.25, 0.25], g5.pi)
    p = tmp_path / "link.json"
    p.write_text(io.canonical_json(io.link_to_dict(link)))
    status, rep = _run(capsys, "orbit-verify", "examples/g5.json", "examples/l5.json", str(p))
    assert status == 0, rep
    assert rep["results"]["verified"] is True


def test_console_module_entry():
    proc = subprocess.run([sys.executable, "-m", "simorbit.cli", "gmc-check", "examples/gmc4.json"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["command"] == "gmc-check"
