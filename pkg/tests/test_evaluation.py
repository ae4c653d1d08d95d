import json

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from dwmoe.data import DriftSpec, Regime, Sample, gen_crescents
from dwmoe.ensemble import Ensemble, GrowthConfig
from dwmoe.evaluation import (
    FEATURE_NAMES,
    WEIGHTING_MODES,
    ClassificationConfig,
    EvalReport,
    ExperimentConfig,
    ablation_accuracies,
    benchmark_drift_spec,
    classification_table_csv,
    emit_report,
    parse_report,
    run_classification_ablation,
    run_forecast_experiment,
    walk_forward,
)
from dwmoe.expert import TrainConfig, init_random
from dwmoe.metrics import direction_accuracy, nse_error
from dwmoe.partition import zero_line

nonzero = st.floats(-0.2, 0.2).filter(lambda v: abs(v) > 1e-6)


class TestNse:
    def test_zero_predictor(self):
        assert nse_error([0.0, 0.0, 0.0], [0.1, -0.05, 0.02]) == 1.0

    def test_perfect(self):
        assert nse_error([0.1, 0.0], [0.1, 0.0]) == 0.0

    def test_hand_value(self):
        assert nse_error([0.05], [0.10]) == pytest.approx(0.25, rel=1e-15)

    def test_zero_target_uses_plain_square(self):
        assert nse_error([0.03], [0.0]) == pytest.approx(0.0009, rel=1e-12)

    @given(st.lists(nonzero, min_size=1, max_size=50))
    def test_naive_is_one(self, t):
        assert nse_error([0.0] * len(t), t) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("p, t", [([0.1], [0.1, 0.2]), ([], [])])
    def test_errors(self, p, t):
        with pytest.raises(ValueError):
            nse_error(p, t)


class TestDirection:
    def test_identity(self):
        assert direction_accuracy([0.1, -0.2], [0.1, -0.2]) == 1.0

    def test_antisymmetry(self):
        assert direction_accuracy([-0.1, 0.2], [0.1, -0.2]) == 0.0

    def test_nine_of_ten(self):
        t = [0.01 * (i + 1) for i in range(10)]
        p = t[:9] + [-0.05]
        assert direction_accuracy(p, t) == pytest.approx(0.9)

    def test_zero_target(self):
        assert direction_accuracy([0.005, 0.02], [0.0, 0.0]) == 0.5

    @given(st.lists(st.tuples(nonzero, nonzero), min_size=1, max_size=30), st.floats(1e-3, 1e3))
    def test_scale_invariant(self, pairs, c):
        p, t = zip(*pairs)
        # scaling into the zero-target band changes which rule applies
        assume(min(abs(c * v) for v in p + t) > 0.01)
        a = direction_accuracy(p, t)
        assert 0.0 <= a <= 1.0
        assert direction_accuracy([c * v for v in p], [c * v for v in t]) == a


class TestReport:
    def _report(self):
        rng = np.random.default_rng(0)
        p, t = rng.uniform(-0.2, 0.2, 7), rng.uniform(-0.2, 0.2, 7)
        return EvalReport.from_predictions(p.tolist(), t.tolist())

    def test_empty_csv(self):
        text = emit_report(EvalReport(0.5, 0.25), "csv")
        assert text.splitlines() == ["step,predicted,actual", "nse,0.5,", "direction_accuracy,0.25,"]

    def test_csv_round_trip(self):
        r = self._report()
        back = parse_report(emit_report(r, "csv"), "csv")
        assert back == r
        assert [p for p, _ in back.per_step] == [p for p, _ in r.per_step]

    def test_json_round_trip(self):
        r = self._report()
        assert parse_report(emit_report(r, "json"), "json") == r
        assert json.loads(emit_report(r, "json"))["root_nse"] == pytest.approx(r.nse ** 0.5)

    def test_bad_format(self):
        with pytest.raises(ValueError):
            emit_report(self._report(), "xml")


def _small_ensemble():
    return Ensemble([init_random(6, 2, s) for s in range(3)], zero_line((3, 5)))


class TestWalkForward:
    def _data(self, n, seed=0):
        rng = np.random.default_rng(seed)
        return [Sample(rng.normal(0, 0.05, 6), float(rng.uniform(-0.2, 0.2))) for _ in range(n)]

    def test_does_not_mutate(self):
        e = _small_ensemble()
        before = e.to_dict()
        walk_forward(e, "dynamic", self._data(10), self._data(5, 1))
        assert e.to_dict() == before

    def test_unweighted_ignores_warmup(self):
        e, test = _small_ensemble(), self._data(5, 1)
        a = walk_forward(e, "unweighted", self._data(10), test)
        b = walk_forward(e, "unweighted", [], test)
        assert a == b

    def test_static_and_dynamic_agree_on_first_step(self):
        e, warm, test = _small_ensemble(), self._data(10), self._data(6, 1)
        s = walk_forward(e, "static", warm, test).per_step
        d = walk_forward(e, "dynamic", warm, test).per_step
        assert s[0] == d[0]

    def test_bad_scheme(self):
        with pytest.raises(ValueError):
            walk_forward(_small_ensemble(), "oracle", [], self._data(1))


class TestForecastExperiment:
    def _cfg(self, **kw):
        base = dict(repetitions=1, growth=GrowthConfig(seed_epochs=2, max_iters=5), seed=3)
        base.update(kw)
        return ExperimentConfig(**base)

    def test_deterministic(self):
        assert run_forecast_experiment(self._cfg()).to_csv() == run_forecast_experiment(self._cfg()).to_csv()

    def test_table_layout(self):
        lines = run_forecast_experiment(self._cfg()).to_csv().splitlines()
        assert lines[0].split(",")[:4] == ["scheme", "nse_4w", "nse_10w", "nse_20w"]
        assert [l.split(",")[0] for l in lines[1:]] == ["unweighted", "static", "dynamic"]

    def test_insufficient_data(self):
        spec = DriftSpec(100, (Regime(100, (0.0,) * 6, 0.01),), feature_names=FEATURE_NAMES)
        with pytest.raises(ValueError):
            run_forecast_experiment(self._cfg(drift=spec))

    def test_config_round_trip(self):
        cfg = self._cfg(horizons=(11,))
        assert ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg

    def test_benchmark_length(self):
        spec = benchmark_drift_spec()
        cfg = ExperimentConfig()
        assert spec.n_weeks >= cfg.n_train + cfg.n_warmup + max(cfg.horizons)

    def test_stationary_noise_not_beaten(self):
        # targets are independent of the inputs, so no scheme can do much better than predicting zero
        spec = DriftSpec(130, (Regime(130, (0.0,) * 6, 0.05),), feature_names=FEATURE_NAMES)
        tab = run_forecast_experiment(self._cfg(drift=spec, repetitions=20, seed=7,
                                                growth=GrowthConfig(seed_epochs=2, max_iters=10)))
        for scheme in ("unweighted", "static", "dynamic"):
            assert tab.nse[scheme, 20] > 0.9
            assert abs(tab.direction[scheme, 20] - 0.5) < 0.15


class TestClassification:
    def test_identical_experts_modes_agree(self):
        pts = gen_crescents(200, 0.1, 0)
        X = np.array([p.x for p in pts])
        y = np.array([p.label for p in pts])
        experts = [init_random(2, 2, 4)] * 5
        acc = ablation_accuracies(experts, X[:150], y[:150], X[150:], y[150:])
        assert len(set(acc.values())) == 1

    def test_deterministic_and_table(self):
        cfg = ClassificationConfig(repetitions=2, seed=5, train=TrainConfig(epochs=2))
        a, b = run_classification_ablation(cfg), run_classification_ablation(cfg)
        assert a == b
        lines = classification_table_csv(a).splitlines()
        assert lines[0] == "test,accuracy_percent"
        assert [l.split(",")[0] for l in lines[1:]] == list(WEIGHTING_MODES)

    def test_bad_config(self):
        with pytest.raises(ValueError):
            ClassificationConfig(local_size=200)
