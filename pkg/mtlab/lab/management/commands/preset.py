"""Inspect the model presets."""
from django.core.management.base import BaseCommand

from mtlab.thermal.hamiltonians import PRESETS


class Command(BaseCommand):
    help = 'List the Hamiltonian presets available to configurations.'

    def add_arguments(self, parser):
        parser.add_argument('action', choices=['list'])

    def handle(self, *args, **options):
        width = max(len(name) for name in PRESETS)
        for name, factory in PRESETS.items():
            self.stdout.write(f'{name:<{width}}  {factory.description}')
