"""Command-line entry point: ``python -m mtlab run config.json``."""
import os
import sys

from django.core.management import execute_from_command_line


def main(argv=None):
    argv = list(sys.argv if argv is None else argv)
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'mtlab.settings')
    argv[0] = 'mtlab'
    # Command modules can't contain hyphens
    if len(argv) > 1 and not argv[1].startswith('-'):
        argv[1] = argv[1].replace('-', '_')
    execute_from_command_line(argv)


if __name__ == '__main__':
    main()
