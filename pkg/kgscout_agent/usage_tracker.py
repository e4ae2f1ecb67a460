import json
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from kgscout_shared import get_clean_logger

PRICE_TABLES = {
    "gpt-4.1": {  # price per 1M tokens
        "prompt_tokens": 2.00,
        "completion_tokens": 8.00
    },
    "gpt-4.1-mini": {
        "prompt_tokens": 0.40,
        "completion_tokens": 1.60
    },
    "gpt-4.1-nano": {
        "prompt_tokens": 0.10,
        "completion_tokens": 0.40
    },
    "gpt-4o": {
        "prompt_tokens": 2.50,
        "completion_tokens": 10.00
    },
    "gpt-4o-mini": {
        "prompt_tokens": 0.15,
        "completion_tokens": 0.60
    },
}


class UsageTracker:
    """Accumulates model token usage (and cost where the model is priced) across policy calls."""

    def __init__(self, logger=None, usage_log_path: Optional[Path] = None):
        self.logger = get_clean_logger("usage_tracker", logger)
        self.usage_log_path = Path(usage_log_path) if usage_log_path else None
        self.usage_log: List[Dict[str, Any]] = []
        self.totals: Dict[str, Dict[str, float]] = {}
        self.cost = 0.0

    def add_usage(self, source: str, model: str, prompt_tokens: int = 0, completion_tokens: int = 0) -> float:
        cost = self._get_cost(model, "prompt_tokens", prompt_tokens) + self._get_cost(model, "completion_tokens", completion_tokens)
        self.cost += cost

        totals = self.totals.setdefault(model, {"calls": 0, "prompt_tokens": 0, "completion_tokens": 0, "cost": 0.0})
        totals["calls"] += 1
        totals["prompt_tokens"] += prompt_tokens
        totals["completion_tokens"] += completion_tokens
        totals["cost"] += cost

        self.usage_log.append({
            "timestamp": datetime.now().strftime("%Y-%m-%d %H:%M:%S.%f"),
            "source": source,
            "model": model,
            "prompt_tokens": prompt_tokens,
            "completion_tokens": completion_tokens,
            "cost": cost,
        })
        self.logger.debug(f"Usage for {model}: {prompt_tokens} prompt + {completion_tokens} completion tokens, ${cost:.5f}")
        return cost

    def _get_cost(self, model: str, position: str, tokens: int) -> float:
        if tokens == 0 or model not in PRICE_TABLES:
            return 0.0
        return PRICE_TABLES[model][position] * tokens / 1000000

    def summary(self) -> Dict[str, Any]:
        return {
            "models": {model: dict(totals) for model, totals in sorted(self.totals.items())},
            "prompt_tokens": sum(int(t["prompt_tokens"]) for t in self.totals.values()),
            "completion_tokens": sum(int(t["completion_tokens"]) for t in self.totals.values()),
            "cost": round(self.cost, 6),
        }

    def save_usage_log(self):
        if not self.usage_log_path:
            return
        self.usage_log_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.usage_log_path, "w", encoding="utf-8") as f:
            json.dump(self.usage_log, f, indent=2)
        self.logger.info(f"Saved {len(self.usage_log)} usage entries to {self.usage_log_path}. Total cost: ${self.cost:.5f}")
