import os

import django


os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'mtlab.test_settings')
django.setup()
