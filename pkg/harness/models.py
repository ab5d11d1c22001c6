from django.db import models


class ExperimentRun(models.Model):
    class Status(models.TextChoices):
        RUNNING = "running", "Running"
        FINISHED = "finished", "Finished"
        DIVERGED = "diverged", "Diverged"

    name = models.CharField(max_length=100)
    seed = models.PositiveIntegerField(default=0)
    config = models.JSONField(default=dict)
    status = models.CharField(
        max_length=20, choices=Status.choices, default=Status.RUNNING
    )
    steps_completed = models.PositiveIntegerField(default=0)
    final_loss = models.FloatField(null=True, blank=True)
    checkpoint_dir = models.CharField(max_length=500, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)
    finished_at = models.DateTimeField(null=True, blank=True)

    class Meta:
        ordering = ["-created_at"]

    def __str__(self):
        return f"{self.name} (seed {self.seed}, {self.status})"


class EvaluationReport(models.Model):
    run = models.ForeignKey(
        ExperimentRun,
        on_delete=models.SET_NULL,
        null=True,
        blank=True,
        related_name="reports",
    )
    data_dir = models.CharField(max_length=500, blank=True)
    mean_ap = models.FloatField()
    per_class_ap = models.JSONField(default=list)
    excluded_classes = models.JSONField(default=list)
    category_ap = models.JSONField(default=dict)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ["-created_at"]

    def __str__(self):
        return f"mAP {self.mean_ap:.4f} ({self.run or 'no run'})"
