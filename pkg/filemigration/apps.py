from django.apps import AppConfig


class FilemigrationConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "filemigration"
    verbose_name = "File migration experiments"
