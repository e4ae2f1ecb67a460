from .splits import QueryCase, SplitError, load_split
from .evaluation import (
    METRIC_DEPTH,
    MetricReport,
    NeighborsHistogram,
    QueryMetrics,
    QueryOutcome,
    ToolUsageStats,
    evaluate_split,
    metrics_for,
    neighbors_call_histogram,
    neighbors_calls,
    save_report,
    tool_usage_stats,
    trajectory_hit1,
)
from .trajectory_log import (
    ChatMessage,
    ChatRecord,
    CollectionConfig,
    ExportError,
    RecordFormatError,
    collect,
    export,
    parse_records,
    read_records,
    record,
    subsample,
)

__all__ = [
    'QueryCase',
    'SplitError',
    'load_split',
    'METRIC_DEPTH',
    'MetricReport',
    'NeighborsHistogram',
    'QueryMetrics',
    'QueryOutcome',
    'ToolUsageStats',
    'evaluate_split',
    'metrics_for',
    'neighbors_call_histogram',
    'neighbors_calls',
    'save_report',
    'tool_usage_stats',
    'trajectory_hit1',
    'ChatMessage',
    'ChatRecord',
    'CollectionConfig',
    'ExportError',
    'RecordFormatError',
    'collect',
    'export',
    'parse_records',
    'read_records',
    'record',
    'subsample',
]
