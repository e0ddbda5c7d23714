from django.apps import AppConfig


class CavityConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'Cavity'
