import json
import math
import os
import pathlib

import numpy as np
import pytest
from scipy import stats

import craft_eval as ce

ROOT = pathlib.Path(os.environ.get("CRAFT_SOURCE_DIR", pathlib.Path(__file__).resolve().parents[2]))


def test_version_and_digest():
    assert ce.__version__ == "0.3.0"
    assert ce.embedding_digest("m", "t") == ce.embedding_digest("m", "t")
    assert len(ce.embedding_digest("m", "t")) == 64


def test_vector_metrics():
    v, degenerate = ce.normalize([3.0, 4.0])
    assert v == pytest.approx([0.6, 0.8], abs=1e-15)
    assert not degenerate
    assert ce.normalize([0.0, 0.0])[1]
    assert ce.deviation([1, 0], [1, 0]) == 0.0
    assert ce.deviation([1, 0], [-1, 0]) == 2.0
    assert ce.linguistic_adaptation([1, 2, 3], [1, 2, 3]) == 0.0
    assert ce.cultural_fluency([1, 0], [0.5, 0.0], 0.0) == pytest.approx(0.7, abs=1e-15)
    assert ce.cultural_fluency([1, 0], [1, 0], 1.0, lam=0.0) == 1.0
    assert ce.explanation_consistency([[1, 0], [1, 0], [0, 1]]) == pytest.approx(1 / 3, abs=1e-15)
    assert ce.answer_consistency(["A", "A", "A"]) == 1.0
    assert ce.answer_consistency(["A", "B", "A"]) == 0.5
    assert ce.answer_consistency(["A", "B", "C"]) == 0.0


def test_random_vector_metrics_match_numpy():
    rng = np.random.default_rng(3)
    for _ in range(200):
        dim = int(rng.integers(2, 64))
        e, q = rng.normal(size=dim), rng.normal(size=dim)
        cos = float(e @ q / (np.linalg.norm(e) * np.linalg.norm(q)))
        assert ce.cosine(list(e), list(q)) == pytest.approx(cos, abs=1e-12)
        assert ce.deviation(list(e), list(q)) == pytest.approx(1 - cos, abs=1e-12)


def test_depth_with_shipped_lexicon():
    lex = ce.MarkerLexicon.load(str(ROOT / "data/markers_default.csv"))
    assert "EN" in lex.languages()
    f = ce.extract_features("I agree because family matters.", "EN", lex)
    assert f == {"word_count": 5, "marker_count": 1, "sentence_count": 1, "sentence_word_ratio": 0.2}
    assert ce.depth("I agree because family matters.", "EN", lex) == pytest.approx(0.48854897552345256, abs=1e-12)
    assert ce.depth("", "EN", lex) == 0.0


def test_kruskal_wallis_matches_scipy():
    rng = np.random.default_rng(11)
    for _ in range(50):
        groups = [list(np.round(rng.normal(size=int(rng.integers(3, 20))), 1)) for _ in range(int(rng.integers(2, 5)))]
        ours = ce.kruskal_wallis(groups)
        ref = stats.kruskal(*groups)
        assert ours["H"] == pytest.approx(ref.statistic, rel=1e-9, abs=1e-12)
        assert ours["p"] == pytest.approx(ref.pvalue, rel=1e-9, abs=1e-15)
        assert ours["df"] == len(groups) - 1


def test_wilcoxon_matches_scipy():
    rng = np.random.default_rng(12)
    # Exact region: no ties, no zeros.
    for _ in range(30):
        n = int(rng.integers(3, 13))
        before = rng.normal(size=n)
        after = before + rng.normal(0.3, 1.0, size=n)
        ours = ce.wilcoxon(list(before), list(after))
        ref = stats.wilcoxon(after - before, method="exact")
        assert ours["exact"]
        assert ours["p"] == pytest.approx(ref.pvalue, rel=1e-12)
    # Normal approximation with ties and zeros.
    for _ in range(30):
        n = int(rng.integers(20, 80))
        d = np.round(rng.normal(0.2, 1.0, size=n) * 3)
        ours = ce.wilcoxon([0.0] * n, list(d))
        ref = stats.wilcoxon(d, zero_method="wilcox", correction=True, method="approx")
        assert not ours["exact"]
        assert ours["p"] == pytest.approx(ref.pvalue, rel=1e-9)
        assert ours["direction"] in {"increase", "decrease", "none"}


def test_bootstrap_reference():
    ref = json.loads((ROOT / "tests/data/bootstrap_reference.json").read_text())
    low, high = ce.bootstrap_ci(ref["values"], ref["level"], ref["resamples"], ref["seed"])
    assert low == pytest.approx(ref["ci_low"], abs=1e-12)
    assert high == pytest.approx(ref["ci_high"], abs=1e-12)


def test_pipeline_on_small_fixture(tmp_path):
    report = ce.validate_corpus(str(ROOT / "fixtures/small/corpus.csv"))
    assert report["records"] == 84
    assert report["blocking_defects"] == 0
    out = tmp_path / "out"
    log = ce.run_stage(str(ROOT / "fixtures/small/config.json"), "all", output=str(out), jobs=2)
    assert "score:" in log
    metrics = (out / "reports/metrics.csv").read_text()
    assert metrics.startswith("culture,model,metric,")
    assert (out / "reports/AR.md").exists()
    summary = json.loads((out / "reports/summary.json").read_text())
    assert summary


def test_errors_are_typed(tmp_path):
    with pytest.raises(ce.ConfigError):
        ce.run_stage(str(tmp_path / "missing.json"))
    with pytest.raises(ce.DomainError):
        ce.answer_consistency(["A"])
    with pytest.raises(ce.CraftError):
        ce.kruskal_wallis([[1.0, 2.0]])
    assert issubclass(ce.ConfigError, ce.CraftError)
    assert not math.isnan(ce.cosine([1, 0], [0, 1]))
