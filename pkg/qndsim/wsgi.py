"""
WSGI config for the qndsim project.

It exposes the WSGI callable as a module-level variable named ``application``
(served by gunicorn in deployment: ``gunicorn qndsim.wsgi``).
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'qndsim.settings')

application = get_wsgi_application()
