from django.apps import AppConfig
from django.core.signals import setting_changed


class CoreConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "core"
    verbose_name = "Run registry"

    def ready(self) -> None:
        from core.conf import reload_transport_settings

        setting_changed.connect(reload_transport_settings)
