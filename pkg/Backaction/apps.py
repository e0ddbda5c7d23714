from django.apps import AppConfig


class BackactionConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'Backaction'
