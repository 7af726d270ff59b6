"""Re-run golden configurations and diff against the stored CSVs."""
from django.core.management.base import BaseCommand, CommandError

from mtlab.exceptions import MTLabError
from mtlab.lab.golden import FAILED, PASSED, SKIPPED, UPDATED, verify_golden


class Command(BaseCommand):
    help = 'Verify (or with --update, regenerate) a directory of golden results.'

    def add_arguments(self, parser):
        parser.add_argument('directory', help='Directory of <name>.config.json and <name>.csv files.')
        parser.add_argument(
            '--update', action='store_true',
            help='Rewrite the golden CSVs from the current code.'
        )
        parser.add_argument('--workers', type=int)

    def handle(self, *args, **options):
        try:
            report = verify_golden(options['directory'], options['update'], options['workers'])
        except MTLabError as e:
            raise CommandError(str(e), returncode=2)

        for case in report.cases:
            if case.status == PASSED:
                self.stdout.write(f'passed - {case.name}')
            elif case.status == UPDATED:
                self.stdout.write(f'updated - {case.name}')
            elif case.status == SKIPPED:
                self.stdout.write(f'skipped - {case.name} ({case.reason})')
            elif case.status == FAILED:
                self.stdout.write(f'* FAILED - {case.name}')
                for line in case.differences:
                    self.stdout.write(f'    {line}')
        if not report.passed:
            raise CommandError(f'{len(report.failed)} golden cases failed', returncode=1)
