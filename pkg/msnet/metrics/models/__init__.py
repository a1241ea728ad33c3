from .eval_report import CSV_HEADER, EvalReport, TaskMetrics

__all__ = [
    "CSV_HEADER",
    "EvalReport",
    "TaskMetrics",
]
