import json

import numpy as np
import pytest

from aggchoice import (
    AggregateSpace,
    ChoiceDomain,
    LinearOrder,
    MenuCollectionFamily,
    StochasticChoice,
    aru_evaluate,
    vertex_choice,
)
from aggchoice.cli import main
from aggchoice.serialize import Manifest, load, save
from conftest import random_preferences, random_vertex_mixture

X, Y, A0 = "x", "y", "a0"


@pytest.fixture
def space():
    return AggregateSpace((X, Y), (A0,))


@pytest.fixture
def domain(space):
    return ChoiceDomain.full(space)


@pytest.fixture
def vertex_path(tmp_path, space, domain):
    rho = vertex_choice(
        LinearOrder((X, Y, A0)),
        MenuCollectionFamily.single(A0, [frozenset({X, A0})]),
        domain,
    )
    path = tmp_path / "vertex.json"
    save(Manifest(space=space, choice=rho), str(path))
    return str(path)


@pytest.fixture
def lm_violation_path(tmp_path, space):
    rho = StochasticChoice(
        space,
        {
            frozenset({X, Y}): {X: 0.5, Y: 0.5},
            frozenset({X, Y, A0}): {X: 0.7, Y: 0.1, A0: 0.2},
        },
    )
    path = tmp_path / "violation.json"
    save(Manifest(space=space, choice=rho), str(path))
    return str(path)


class TestCheck:
    def test_vertex_passes_ru(self, vertex_path, capsys):
        assert main(["check", "--input", vertex_path, "--axiom", "ru"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["passed"] is True

    def test_vertex_fails_aru(self, vertex_path, capsys):
        assert main(["check", "--input", vertex_path, "--axiom", "aru"]) == 1

    def test_lm_violation_reported(self, lm_violation_path, capsys):
        assert main(["check", "--input", lm_violation_path, "--axiom", "lm"]) == 1
        payload = json.loads(capsys.readouterr().out)
        (violation,) = payload["violations"]
        assert violation["kind"] == "limited-monotonicity"
        assert violation["subject"] == [["x", "y"], ["x", "y", "a0"], "x"]

    def test_missing_file_is_usage_error(self, tmp_path):
        assert main(["check", "--input", str(tmp_path / "nope.json")]) == 2

    def test_malformed_file_is_usage_error(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{nope")
        assert main(["check", "--input", str(bad)]) == 2


class TestRationalize:
    def test_round_trips_through_evaluate(
        self, tmp_path, space, domain, capsys
    ):
        rho = random_vertex_mixture(space, domain, np.random.default_rng(4))
        source = tmp_path / "data.json"
        save(Manifest(space=space, choice=rho), str(source))
        out = tmp_path / "model.json"
        assert main(["rationalize", "--input", str(source), "--output", str(out)]) == 0
        model = load(str(out))
        assert model.metadata["verification_residual"] <= 1e-9

        # Feed the model back through `evaluate` on the same menus.
        combined = tmp_path / "combined.json"
        save(
            Manifest(
                space=space,
                correspondence=model.correspondence,
                preferences=model.preferences,
                composition=model.composition,
                choice=rho,
            ),
            str(combined),
        )
        evaluated = tmp_path / "evaluated.json"
        assert main(
            ["evaluate", "--input", str(combined), "--output", str(evaluated)]
        ) == 0
        replay = load(str(evaluated))
        assert replay.choice.max_cell_difference(rho) <= 1e-9

    def test_axiom_failure_exits_one(self, lm_violation_path, capsys):
        assert main(["rationalize", "--input", lm_violation_path]) == 1
        payload = json.loads(capsys.readouterr().out)
        assert payload["report"]["passed"] is False

    def test_wrong_variant_exits_two(self, tmp_path):
        space = AggregateSpace((X,), ("a0", "a1"))
        domain = ChoiceDomain.full(space)
        rho = random_vertex_mixture(space, domain, np.random.default_rng(5))
        path = tmp_path / "two.json"
        save(Manifest(space=space, choice=rho), str(path))
        assert main(
            ["rationalize", "--input", str(path), "--variant", "outside_option"]
        ) == 2


class TestDistanceAndCaratheodory:
    def test_distance_on_aru_member(self, tmp_path, space, domain, capsys):
        rho = aru_evaluate(
            random_preferences(space.members, np.random.default_rng(6)), domain
        )
        path = tmp_path / "aru.json"
        save(Manifest(space=space, choice=rho), str(path))
        assert main(["distance", "--input", str(path)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["squared_distance"] <= 1e-10

    def test_caratheodory_reports_bound(self, vertex_path, capsys):
        assert main(["caratheodory", "--input", vertex_path, "--k", "2"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["achieved"] <= payload["bound"] + 1e-12
        assert payload["certifies_ru_n"] == 3

    def test_caratheodory_rejects_non_ru(self, lm_violation_path):
        assert main(["caratheodory", "--input", lm_violation_path, "--k", "2"]) == 1


class TestVertices:
    def test_count_for_n6(self, capsys):
        assert main(["vertices", "--n", "6"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["vertex_count_lower_bound"] == str(
            720 * 2 ** (64 - 15 - 1)
        )
        assert payload["ratio_exceeds_2^2^(n-1)"] is True

    def test_enumeration(self, vertex_path, capsys):
        assert main(["vertices", "--input", vertex_path]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert len(payload["aru_vertices"]) == 6


class TestSimulateAndSweep:
    def test_simulate_default_point(self, capsys):
        assert main(["simulate"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["bias"] == pytest.approx(-0.1116, abs=1e-3)
        assert payload["squared_distance"] <= 1e-8  # menu-independent default

    def test_sweep_csv_deterministic(self, tmp_path):
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        svg = tmp_path / "map.svg"
        for target in (first, second):
            assert main(
                [
                    "sweep",
                    "--mode",
                    "lambda",
                    "--output-csv",
                    str(target),
                    "--output-svg",
                    str(svg),
                ]
            ) == 0
        assert first.read_bytes() == second.read_bytes()
        lines = first.read_text().strip().splitlines()
        assert lines[0] == "lam_z,lam_w,lam_zw,bias,squared_distance"
        assert len(lines) == 67  # header + 66 grid rows
        assert svg.read_text().startswith("<svg")

    def test_parallel_sweep_matches_sequential(self, tmp_path):
        seq = tmp_path / "seq.csv"
        par = tmp_path / "par.csv"
        args = ["sweep", "--mode", "lambda", "--grid", "0.2", "--measures", "bias"]
        assert main(args + ["--output-csv", str(seq)]) == 0
        assert main(args + ["--jobs", "2", "--output-csv", str(par)]) == 0
        assert seq.read_bytes() == par.read_bytes()

    def test_minmax_csv(self, tmp_path):
        out = tmp_path / "mm.csv"
        assert main(["sweep", "--mode", "minmax", "--output-csv", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 67
        header = lines[0].split(",")
        assert header == [
            "lam_w",
            "lam_z",
            "max_bias",
            "min_bias",
            "min_abs_bias",
            "independent_bias",
        ]
        values = [float(line.split(",")[2]) for line in lines[1:]]
        assert max(values) > 2
