"""Entity aggregation and display squashing."""

import math

import numpy as np
import pytest

from collabscore import (GlobalScores, UserModel, VotingRightsMatrix,
                         aggregate_entity, postprocess, squash)

from oracles import grid_minimize, naive_huber

TOL = 1e-6


def rights_of(mapping):
    rights = VotingRightsMatrix()
    rights.rights = dict(mapping)
    return rights


def model(scores, unc=0.0):
    return UserModel(scores=dict(scores),
                     unc_left={e: unc for e in scores},
                     unc_right={e: unc for e in scores})


class TestAggregateEntity:
    def test_no_raters_zero(self):
        assert aggregate_entity("e", rights_of({}), {}, 0.2, 0.1, TOL) == 0.0

    def test_single_rater_regularizer_dominated(self):
        models = {"u": model({"e": 10.0})}
        rights = rights_of({("u", "e"): 1.0})
        result = aggregate_entity("e", rights, models, 0.2, 0.1, TOL)
        oracle = grid_minimize(
            lambda m: m * m / 0.2 + naive_huber(m, 10.0, 0.0, 0.0, 0.2),
            -1.0, 11.0)
        assert result == pytest.approx(oracle, abs=1e-4)
        assert 0.0 < result < 0.1

    def test_low_quantile_penalizes_disagreement(self):
        """Half the population at +x, half at -x: the aggregate goes negative."""
        models = {}
        rights = {}
        for i in range(20):
            value = 4.0 if i % 2 else -4.0
            models[f"u{i}"] = model({"e": value})
            rights[(f"u{i}", "e")] = 1.0
        result = aggregate_entity("e", rights_of(rights), models, 0.2, 0.1,
                                  TOL)
        assert result < -1e-3

    def test_zero_right_users_ignored(self):
        models = {"a": model({"e": 5.0}), "b": model({"e": -5.0})}
        with_b = aggregate_entity(
            "e", rights_of({("a", "e"): 1.0, ("b", "e"): 0.0}), models,
            0.5, 0.1, TOL)
        without_b = aggregate_entity(
            "e", rights_of({("a", "e"): 1.0}), {"a": models["a"]},
            0.5, 0.1, TOL)
        assert with_b == pytest.approx(without_b, abs=2 * TOL)

    def test_zeroing_right_bounded_by_lipschitz(self):
        rng = np.random.default_rng(0)
        lipschitz = 0.1
        for _ in range(30):
            n = int(rng.integers(1, 8))
            models, rights = {}, {}
            for i in range(n):
                models[f"u{i}"] = model({"e": float(rng.uniform(-5, 5))},
                                        unc=float(rng.uniform(0, 1)))
                rights[(f"u{i}", "e")] = float(rng.uniform(0, 1))
            base = aggregate_entity("e", rights_of(rights), models, 0.2,
                                    lipschitz, TOL)
            k = f"u{int(rng.integers(0, n))}"
            cut = dict(rights)
            w = cut.pop((k, "e"))
            moved = aggregate_entity("e", rights_of(cut), models, 0.2,
                                     lipschitz, TOL)
            assert abs(moved - base) <= lipschitz * w + 2 * TOL

    def test_infinite_uncertainty_like_removal(self):
        models = {"a": model({"e": 2.0}),
                  "b": UserModel(scores={"e": -3.0},
                                 unc_left={"e": 1e6}, unc_right={"e": 1e6})}
        rights = rights_of({("a", "e"): 1.0, ("b", "e"): 1.0})
        with_b = aggregate_entity("e", rights, models, 0.2, 0.1, TOL)
        alone = aggregate_entity("e", rights_of({("a", "e"): 1.0}),
                                 {"a": models["a"]}, 0.2, 0.1, TOL)
        assert abs(with_b - alone) <= 1e-3


class TestSquash:
    def test_zero(self):
        assert squash(0.0) == 0.0

    def test_unit_value(self):
        assert squash(1.0) == pytest.approx(100.0 / math.sqrt(2.0))
        assert squash(1.0) == pytest.approx(70.7107, abs=1e-4)

    def test_two_rater_ceiling(self):
        # two unit voting rights at L = 0.1 cap the aggregate at 2L
        assert squash(0.2) == pytest.approx(19.6116, abs=1e-4)

    def test_odd_exact(self):
        rng = np.random.default_rng(1)
        for x in rng.uniform(-50, 50, 100):
            assert squash(-x) == -squash(x)

    def test_strictly_increasing_and_bounded(self):
        grid = np.linspace(-200, 200, 2001)
        values = np.array([squash(x) for x in grid])
        assert np.all(np.diff(values) > 0)
        assert np.all(np.abs(values) < 100.0)

    def test_score_max_parameter(self):
        assert squash(1.0, score_max=10.0) == pytest.approx(10.0 / math.sqrt(2))


class TestPostprocess:
    def test_display_fields_filled(self):
        scores = GlobalScores(rho={"e": 1.0, "f": -0.5})
        models = {"u": model({"e": 2.0, "f": 0.0})}
        out = postprocess(scores, models)
        assert out.rho_display["e"] == pytest.approx(squash(1.0))
        assert out.user_display[("u", "e")] == pytest.approx(squash(2.0))
        assert out.user_display[("u", "f")] == 0.0

    def test_display_order_matches_rho_order(self):
        rng = np.random.default_rng(2)
        rho = {f"e{i}": float(rng.uniform(-4, 4)) for i in range(30)}
        out = postprocess(GlobalScores(rho=rho), {})
        by_rho = sorted(rho, key=rho.get)
        by_display = sorted(out.rho_display, key=out.rho_display.get)
        assert by_rho == by_display
