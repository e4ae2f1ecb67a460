import json

import pytest

from kgscout_agent import UsageTracker


class TestUsageTracker:
    def test_priced_model(self):
        tracker = UsageTracker()
        cost = tracker.add_usage("policy", "gpt-4.1", prompt_tokens=1000000, completion_tokens=500000)
        assert cost == pytest.approx(6.0)
        summary = tracker.summary()
        assert summary["prompt_tokens"] == 1000000
        assert summary["completion_tokens"] == 500000
        assert summary["models"]["gpt-4.1"]["calls"] == 1

    def test_unpriced_model_counts_tokens_only(self):
        tracker = UsageTracker()
        assert tracker.add_usage("policy", "local-model", 120, 30) == 0.0
        tracker.add_usage("policy", "local-model", 80, 20)
        assert tracker.summary()["models"]["local-model"]["prompt_tokens"] == 200
        assert tracker.summary()["cost"] == 0.0

    def test_save_usage_log(self, tmp_path):
        tracker = UsageTracker(usage_log_path=tmp_path / "logs" / "usage.json")
        tracker.add_usage("policy", "gpt-4o-mini", 10, 5)
        tracker.save_usage_log()
        entries = json.loads((tmp_path / "logs" / "usage.json").read_text())
        assert entries[0]["model"] == "gpt-4o-mini"
