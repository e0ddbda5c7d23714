from django.apps import AppConfig


class MontecarloConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'MonteCarlo'
