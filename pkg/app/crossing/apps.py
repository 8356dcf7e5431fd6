from django.apps import AppConfig


class CrossingConfig(AppConfig):
    name = "crossing"
    verbose_name = "Two-level crossing model"
