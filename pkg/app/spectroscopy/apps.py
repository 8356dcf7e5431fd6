from django.apps import AppConfig


class SpectroscopyConfig(AppConfig):
    name = "spectroscopy"
    verbose_name = "Splitting spectroscopy"
