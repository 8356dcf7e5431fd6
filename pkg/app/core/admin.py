"""
Django admin customization.
"""

from core import models
from django.contrib import admin
from django.utils.translation import gettext_lazy as _


class RunRecordAdmin(admin.ModelAdmin):
    """Define the admin pages for recorded runs. Runs are written by the CLI only."""

    ordering = ["-created_at"]
    list_display = ["command", "status", "short_hash", "seed", "wall_time_s", "created_at"]
    list_filter = ["command", "status"]
    search_fields = ["config_hash", "output_dir"]
    fieldsets = (
        (None, {"fields": ("command", "status", "config_hash", "seed")}),
        (_("Inputs"), {"fields": ("config",)}),
        (_("Outcome"), {"fields": ("output_dir", "summary", "error", "wall_time_s", "created_at")}),
    )
    readonly_fields = [
        "command",
        "status",
        "config_hash",
        "seed",
        "config",
        "output_dir",
        "summary",
        "error",
        "wall_time_s",
        "created_at",
    ]

    @admin.display(description=_("config hash"))
    def short_hash(self, obj: models.RunRecord) -> str:
        return obj.config_hash[:12]

    def has_add_permission(self, request) -> bool:
        return False


admin.site.register(models.RunRecord, RunRecordAdmin)
