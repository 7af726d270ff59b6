"""Run one experiment configuration and write its result files."""
from django.core.management.base import BaseCommand, CommandError
from django.test import override_settings

from mtlab.conf import setting
from mtlab.exceptions import MTLabError
from mtlab.lab.config import load_config
from mtlab.lab.runner import run_experiment


class Command(BaseCommand):
    help = 'Run an experiment configuration and write CSV, JSON and timing files.'

    def add_arguments(self, parser):
        parser.add_argument('config', help='Path to the experiment configuration JSON.')
        parser.add_argument(
            '--seed', type=int,
            help='Override the model seed from the configuration.'
        )
        parser.add_argument(
            '--max-dim', dest='max_dim', type=int,
            help='Override MTLAB_MAX_DIM for this run.'
        )
        parser.add_argument(
            '--workers', type=int,
            help='Number of sweep points measured concurrently.'
        )
        parser.add_argument(
            '--out',
            help='Output directory (default MTLAB_OUTPUT_DIR).'
        )

    def handle(self, *args, **options):
        overrides = {}
        if options['max_dim'] is not None:
            overrides['MTLAB_MAX_DIM'] = options['max_dim']
        with override_settings(**overrides):
            try:
                config = load_config(options['config'])
                if options['seed'] is not None:
                    if options['seed'] < 0:
                        raise CommandError('--seed must be non-negative', returncode=2)
                    config = config.with_seed(options['seed'])
                run = run_experiment(config, options['workers'])
            except MTLabError as e:
                raise CommandError(str(e), returncode=2)

        out = options['out'] or setting('MTLAB_OUTPUT_DIR')
        paths = run.write(out)
        rows = run.rows
        checked = [r for r in rows if r.relation and r.certified]
        advisory = [r for r in rows if r.relation and not r.certified]
        self.stdout.write(
            f'{run.name} ({run.experiment}, config {run.config_hash}): '
            f'{len(run.points)} points, {len(rows)} rows, '
            f'{len(checked) - len(run.failures)}/{len(checked)} checks passed, '
            f'{len(advisory)} advisory'
        )
        self.stdout.write(f'wrote {paths["csv"]}')
        for row in run.failures:
            self.stderr.write(
                f'* FAILED - [{row.point}] {row.quantity}: {row.value!r} '
                f'{row.relation} {row.bound!r} (margin {row.margin!r})'
            )
        if not run.passed:
            raise CommandError(f'{len(run.failures)} checks failed', returncode=1)
