from dataclasses import dataclass

from common.exceptions.custom_exceptions import CustomException
from msnet.metrics.enums import Task
from msnet.metrics.exceptions import MetricsExceptionEnum

CSV_HEADER = (
    "melanoma_accuracy,melanoma_auc,"
    "seborrheic_keratosis_accuracy,seborrheic_keratosis_auc,"
    "average_accuracy,average_auc"
)


@dataclass(frozen=True)
class TaskMetrics:
    task: Task
    accuracy: float
    auc: float

    def __post_init__(self):
        for name in ("accuracy", "auc"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise CustomException(
                    MetricsExceptionEnum.OUT_OF_RANGE, task=self.task.value, metric=name, value=value
                )


@dataclass(frozen=True)
class EvalReport:
    melanoma: TaskMetrics
    seborrheic_keratosis: TaskMetrics

    @property
    def tasks(self) -> tuple[TaskMetrics, TaskMetrics]:
        return self.melanoma, self.seborrheic_keratosis

    @property
    def average_accuracy(self) -> float:
        return (self.melanoma.accuracy + self.seborrheic_keratosis.accuracy) / 2

    @property
    def average_auc(self) -> float:
        return (self.melanoma.auc + self.seborrheic_keratosis.auc) / 2

    def format_table(self) -> str:
        rows = [(m.task.value, m.accuracy, m.auc) for m in self.tasks]
        rows.append(("average", self.average_accuracy, self.average_auc))
        lines = [f"{'task':<22}{'accuracy':>10}{'auc':>8}"]
        lines += [f"{task:<22}{accuracy:>10.3f}{auc:>8.3f}" for task, accuracy, auc in rows]
        return "\n".join(lines)

    def csv_row(self) -> str:
        values = [value for m in self.tasks for value in (m.accuracy, m.auc)]
        values += [self.average_accuracy, self.average_auc]
        return ",".join(f"{value:.6f}" for value in values)
