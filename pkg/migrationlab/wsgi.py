"""
WSGI config for migrationlab project.

It exposes the WSGI callable as a module-level variable named ``application``
(served with gunicorn: ``gunicorn migrationlab.wsgi``).
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "migrationlab.settings")

application = get_wsgi_application()
