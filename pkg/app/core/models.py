"""
Database models.
"""

from django.db import models


class RunRecord(models.Model):
    """One pipeline run of the transport command."""

    class Command(models.TextChoices):
        SIMULATE = "simulate"
        LZ_FIT = "lz-fit"
        SCAN = "scan"
        RAMSEY = "ramsey"
        FIT_HYPERBOLA = "fit-hyperbola"
        PLAN = "plan"
        SIMULATE_PLAN = "simulate-plan"

    class Status(models.TextChoices):
        SUCCEEDED = "succeeded"
        FAILED = "failed"

    command = models.CharField(max_length=32, choices=Command.choices)
    config_hash = models.CharField(max_length=64, db_index=True)
    config = models.JSONField(default=dict)
    seed = models.IntegerField()
    status = models.CharField(max_length=16, choices=Status.choices)
    output_dir = models.CharField(max_length=500)
    summary = models.JSONField(default=dict, blank=True)
    error = models.TextField(blank=True)
    wall_time_s = models.FloatField()
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ["-created_at", "-id"]

    def __str__(self) -> str:
        return f"{self.command} {self.config_hash[:12]} ({self.status})"
