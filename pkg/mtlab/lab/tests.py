import json
import math
import shutil
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

from mtlab.exceptions import ConfigError, DimensionCapError
from mtlab.hilbert.geometry import ChainGeometry
from mtlab.lab.config import load_config, parse_config
from mtlab.lab.experiments import EXPERIMENTS, equal_blocks
from mtlab.lab.golden import FAILED, PASSED, SKIPPED, UPDATED, verify_golden
from mtlab.lab.results import ADVISORY, NATS, PointResult, ResultRow, RunResult, fmt, read_csv
from mtlab.lab.runner import run_experiment
from mtlab.recovery.ledger import LE


GOLDENS = Path(__file__).parent / 'goldens'
LN2 = math.log(2)


def config(experiment, n=4, preset='tfim', boundary='open', **extra):
    data = {
        'experiment': experiment,
        'model': {'preset': preset, 'params': {}, 'seed': 0},
        'geometry': {'n': n, 'boundary': boundary},
    }
    data.update(extra)
    return data


class TempDirMixin:
    def tempdir(self):
        path = Path(tempfile.mkdtemp())
        self.addCleanup(shutil.rmtree, path)
        return path

    def write_config(self, data, name='config.json'):
        path = self.tempdir() / name
        if isinstance(data, str):
            path.write_text(data)
        else:
            path.write_text(json.dumps(data, indent=4))
        return path


class ConfigTest(TempDirMixin, SimpleTestCase):
    def test_unknown_key_line(self):
        """An unknown key is reported with its line number."""
        path = self.write_config(
            '{\n'
            '    "experiment": "cmi-decay",\n'
            '    "model": {"preset": "tfim"},\n'
            '    "geometry": {"n": 4},\n'
            '    "sweeps": {}\n'
            '}\n'
        )
        with self.assertRaisesMessage(ConfigError, f"{path}:5: unknown key 'sweeps'"):
            load_config(path)

    def test_nested_key_line(self):
        """Errors inside nested objects point at the nested key."""
        path = self.write_config(
            '{\n'
            '    "experiment": "cmi-decay",\n'
            '    "model": {\n'
            '        "preset": "ising",\n'
            '        "seed": 0\n'
            '    },\n'
            '    "geometry": {"n": 4}\n'
            '}\n'
        )
        with self.assertRaisesMessage(ConfigError, f"{path}:4: unknown preset 'ising'"):
            load_config(path)

    def test_invalid_json(self):
        """Malformed JSON is reported with the decoder's line."""
        path = self.write_config('{\n  "experiment": "ghz-suite",\n  oops\n}\n')
        with self.assertRaisesMessage(ConfigError, f"{path}:3: invalid JSON"):
            load_config(path)

    def test_validation(self):
        """Bad values are rejected with a readable message."""
        cases = [
            (config('nope'), "unknown experiment 'nope'"),
            (config('cmi-decay', n=0), "geometry.n must be a positive integer"),
            (config('cmi-decay', boundary='twisted'), "geometry.boundary must be one of"),
            (config('cmi-decay', betas=[1.0, -1.0]), "inverse temperature -1.0"),
            (config('cmi-decay', betas=[]), "betas must be a non-empty list"),
            (config('cmi-decay', name='a b'), "name may only contain"),
            (config('cmi-decay', tolerances={'solver': 0}), "tolerance solver must be positive"),
            (config('cmi-decay', tolerances={'eig': 1e-9}), "unknown tolerance 'eig'"),
            ({'experiment': 'cmi-decay', 'model': {'preset': 'tfim'}}, "missing required key 'geometry'"),
        ]
        for data, message in cases:
            with self.subTest(message=message):
                with self.assertRaisesMessage(ConfigError, message):
                    parse_config(data)

    def test_defaults(self):
        """Name, betas and tolerances fall back to their defaults."""
        c = parse_config(config('cmi-decay'))
        self.assertEqual(c.name, 'cmi-decay')
        self.assertEqual(c.betas, (1.0,))
        self.assertEqual(c.solver_tol, 1e-8)
        self.assertEqual(c.geometry.dims, (2, 2, 2, 2))

    def test_dimension_cap(self):
        """Geometries above MTLAB_MAX_DIM are refused when the file is loaded."""
        path = self.write_config(config('cmi-decay', n=13))
        with self.assertRaises(DimensionCapError):
            load_config(path)
        path = self.write_config(config('cmi-decay', n=5))
        with override_settings(MTLAB_MAX_DIM=16):
            with self.assertRaises(DimensionCapError):
                load_config(path)

    def test_hash(self):
        """The config hash depends on content, not on formatting or key order."""
        shipped = load_config(GOLDENS / 'ghz-suite.config.json')
        self.assertEqual(shipped.config_hash, 'bfe2ea71cc83ff69')
        data = json.loads((GOLDENS / 'ghz-suite.config.json').read_text())
        reordered = dict(reversed(list(data.items())))
        self.assertEqual(parse_config(reordered).config_hash, shipped.config_hash)
        self.assertNotEqual(shipped.with_seed(1).config_hash, shipped.config_hash)
        self.assertEqual(load_config(GOLDENS / 'prepare-depth2.config.json').config_hash, 'f831a668464cb469')

    def test_sweep_accessors(self):
        """Sweep values are converted and located on error."""
        c = parse_config(config('cmi-decay', n=6, sweep={'widths': [1, 2], 'a': [0, 9]}))
        self.assertEqual(c.sweep_list('widths', [3]), [1, 2])
        self.assertEqual(c.sweep_list('ls', [0, 1]), [0, 1])
        with self.assertRaisesMessage(ConfigError, "sweep.a lists sites outside 0..5"):
            c.sweep_sites('a', [0])


class RegistryTest(SimpleTestCase):
    def test_experiments(self):
        """All twelve experiments are registered in a stable order."""
        self.assertEqual(list(EXPERIMENTS), [
            'ghz-suite', 'thm1-certify', 'thm2-certify', 'thm3-pipeline',
            'cmi-decay', 'area-law-saturation', 'bp-locality', 'araki-locality',
            'recover-single', 'recover-rus', 'prepare-depth2', 'conjecture-1d',
        ])
        for exp in EXPERIMENTS.values():
            assert exp.description

    def test_equal_blocks(self):
        """Leftover sites go to the first blocks."""
        g = ChainGeometry.qubits(7)
        blocks = equal_blocks(g, 3)
        self.assertEqual([b.indices for b in blocks], [(0, 1, 2), (3, 4), (5, 6)])

    def test_points(self):
        """Sweep points are the product of the axes, β first."""
        c = parse_config(config('recover-single', n=6, betas=[0.5, 1.0], sweep={'b_widths': [2, 3]}))
        labels = [p.label for p in EXPERIMENTS['recover-single'].points(c)]
        self.assertEqual(labels, [
            'beta=0.5,b_width=2', 'beta=0.5,b_width=3', 'beta=1.0,b_width=2', 'beta=1.0,b_width=3',
        ])


class ResultRowTest(SimpleTestCase):
    def test_pass_flags(self):
        """Measurements have no flag; advisory rows never fail."""
        measured = ResultRow('p', 'x', NATS, LN2)
        self.assertEqual(measured.passed_text, '')
        self.assertAlmostEqual(measured.value_bits, 1.0)
        bad = ResultRow('p', 'y', NATS, 2.0, LE, 1.0, -1.0)
        self.assertEqual(bad.passed_text, 'false')
        assert bad.failed
        advisory = ResultRow('p', 'z', NATS, 2.0, LE, 1.0, -1.0, certified=False)
        self.assertEqual(advisory.passed_text, ADVISORY)
        assert not advisory.failed
        nan = ResultRow('p', 'w', NATS, math.nan, LE, 1.0, math.nan)
        assert nan.failed

    def test_run_passed(self):
        """A run passes unless a certified row fails."""
        rows = [ResultRow('p', 'z', NATS, 2.0, LE, 1.0, -1.0, certified=False)]
        run = RunResult('cmi-decay', 'x', '0' * 16, {}, [PointResult('p', {}, rows)])
        assert run.passed
        rows.append(ResultRow('p', 'y', NATS, 2.0, LE, 1.0, -1.0))
        assert not run.passed
        self.assertEqual(run.csv_records()[1]['passed'], 'false')

    def test_fmt(self):
        """Floats round-trip through their text form."""
        self.assertEqual(fmt(None), '')
        self.assertEqual(fmt(math.nan), 'nan')
        self.assertEqual(fmt(0.1), '0.1')
        self.assertEqual(float(fmt(LN2)), LN2)


def names(run, label=None):
    return [r.quantity for p in run.points for r in p.rows if label is None or p.label == label]


def row(run, quantity):
    return next(r for r in run.rows if r.quantity == quantity)


class ExperimentTest(SimpleTestCase):
    def run_config(self, data):
        return run_experiment(parse_config(data))

    def test_ghz_suite(self):
        """Every GHZ cut carries ln 2 and every traced cut none."""
        run = self.run_config(config('ghz-suite', sweep={'ns': [4, 5]}))
        assert run.passed
        self.assertEqual([p.label for p in run.points], ['n=4', 'n=5'])
        self.assertEqual(row(run, 'tripartitions').value, 3.0)
        for quantity in ('cmi.min', 'cmi.max', 'gap.open', 'gap.closed'):
            self.assertAlmostEqual(row(run, quantity).value, LN2, places=9)
        self.assertLessEqual(row(run, 'traced.cmi.max').value, 1e-9)

    def test_ghz_suite_too_short(self):
        """Chains of fewer than 4 sites have no shielding cut to check."""
        with self.assertRaisesMessage(ConfigError, "at least 4 sites"):
            self.run_config(config('ghz-suite', sweep={'ns': [3]}))

    def test_thm1_certify(self):
        """A nearest-neighbour Gibbs state and a Markov chain are both certified."""
        run = self.run_config(config(
            'thm1-certify', n=6, preset='random-nn', sweep={'seeds': [9]},
        ))
        assert run.passed
        self.assertIn('markov.rel_entropy', names(run))

    def test_thm1_refuses_rings(self):
        """The open-chain certificate is not run on a ring."""
        with self.assertRaisesMessage(ConfigError, "open chains"):
            self.run_config(config('thm1-certify', boundary='closed'))

    def test_thm2_certify(self):
        """Both ring variants pass on a TFIM ring."""
        run = self.run_config(config('thm2-certify', boundary='closed'))
        assert run.passed
        self.assertEqual([p.label for p in run.points], [
            'beta=1.0,variant=i,state=gibbs', 'beta=1.0,variant=ii,state=gibbs',
        ])
        self.assertIn('epsilon_prime', names(run))

    def test_thm3_pipeline(self):
        """The pipeline records δ next to the reconstruction ledger."""
        run = self.run_config(config('thm3-pipeline'))
        quantities = names(run)
        for quantity in ('cmi', 'delta', 'delta.envelope', 'reconstruction.distance'):
            self.assertIn(quantity, quantities)
        self.assertEqual(row(run, 'delta.envelope').passed_text, ADVISORY)

    def test_thm3_pipeline_ring(self):
        """On a ring the reconstruction shells wrap around A and its ledger holds."""
        run = self.run_config(config(
            'thm3-pipeline', n=8, boundary='closed',
            sweep={'blocks': 6, 'states': ['ghz-mixed']},
        ))
        self.assertEqual(run.points[0].details['reconstruction']['weight'], 2.0 / 256)
        for quantity in ('marginal_ab', 'recoverable', 'full_rank_mix', 'cmi.ghz'):
            self.assertEqual(row(run, quantity).passed_text, 'true')
        with self.assertRaisesMessage(ConfigError, "at least 6 blocks"):
            self.run_config(config('thm3-pipeline', n=8, boundary='closed'))

    def test_cmi_decay(self):
        """The CMI shrinks with the shell and the chain rule holds."""
        run = self.run_config(config('cmi-decay', n=6))
        assert run.passed
        self.assertEqual(row(run, 'cmi.decay').passed_text, 'true')
        self.assertIn('l3.cmi', names(run))
        for r in run.rows:
            if r.quantity.endswith('.increment') and r.relation:
                self.assertEqual(r.passed_text, ADVISORY)

    def test_area_law(self):
        """I(A:Aᶜ) stays within the area-law bound and bounds every I(A:B_l)."""
        run = self.run_config(config('area-law-saturation', n=5, sweep={'widths': [1, 2]}))
        assert run.passed
        self.assertEqual(row(run, 'boundary_terms').value, 1.0)
        self.assertGreaterEqual(row(run, 'l1.saturation_gap').value, -1e-9)

    def test_bp_locality(self):
        """The flow converges and its truncation errors are recorded."""
        run = self.run_config(config('bp-locality', sweep={'ls': [0, 1]}))
        self.assertEqual(row(run, 'flow.converged').passed_text, 'true')
        self.assertIn('l1.err', names(run))

    def test_araki_locality(self):
        """The Araki identity holds to 1e-9."""
        run = self.run_config(config('araki-locality', sweep={'ls': [0, 1]}))
        self.assertEqual(row(run, 'identity_residual').passed_text, 'true')

    def test_recover_single(self):
        """The instrument is CPTP and a summary compares the B widths."""
        run = self.run_config(config('recover-single', n=6, sweep={'b_widths': [2, 3]}))
        self.assertEqual(row(run, 'instrument.cp').passed_text, 'true')
        self.assertEqual(row(run, 'instrument.tp_defect').passed_text, 'true')
        self.assertEqual(run.points[-1].label, 'summary')
        for r in run.points[-1].rows:
            self.assertEqual(r.passed_text, ADVISORY)

    def test_recover_single_needs_room(self):
        """A and B must leave sites for C."""
        with self.assertRaisesMessage(ConfigError, "leave no room for C"):
            self.run_config(config('recover-single', sweep={'b_widths': [3]}))

    def test_recover_rus(self):
        """A single stage passes its ledger."""
        run = self.run_config(config('recover-rus', n=5, betas=[0.5]))
        assert run.passed
        self.assertIn('stage1.p_success', names(run))

    def test_prepare_depth2(self):
        """Two blocks on six sites are prepared within the telescoped bound."""
        run = self.run_config(config(
            'prepare-depth2', n=6, betas=[0.5], sweep={'k': 2, 'xi': 1.0},
        ))
        assert run.passed
        self.assertEqual(row(run, 'c_width').value, 2.0)

    def test_prepare_depth2_scaled(self):
        """With separators growing alongside the blocks the TFIM error falls with l."""
        run = self.run_config(config(
            'prepare-depth2', n=10, betas=[0.5], sweep={'k': 2, 'ls': [1, 2], 'c_scale': 1},
        ))
        assert run.passed
        self.assertEqual([r.value for r in run.rows if r.quantity == 'n'], [5.0, 10.0])
        self.assertEqual([r.value for r in run.rows if r.quantity == 'c_width'], [1.0, 2.0])
        trend = row(run, 'beta=0.5.error.l2')
        self.assertLess(trend.value, trend.bound)

        with self.assertRaisesMessage(ConfigError, "l=2 needs 10 sites but geometry.n is 9"):
            self.run_config(config('prepare-depth2', n=9, sweep={'ls': [2], 'c_scale': 1}))
        with self.assertRaisesMessage(ConfigError, "not both"):
            self.run_config(config('prepare-depth2', n=9, sweep={'c_width': 1, 'c_scale': 1}))

    def test_conjecture_1d(self):
        """CMI against distance is fitted with an advisory quality row."""
        run = self.run_config(config('conjecture-1d', n=6))
        cmis = [q for q in names(run) if q.startswith('d') and q.endswith('.cmi')]
        self.assertEqual(len(cmis), 3)
        self.assertEqual(row(run, 'fit.rsq').passed_text, ADVISORY)
        assert run.passed

    def test_workers(self):
        """The worker count does not change the result."""
        data = config('cmi-decay', n=5, betas=[0.5, 1.0, 2.0], sweep={'widths': [1, 2]})
        one = run_experiment(parse_config(data), workers=1)
        three = run_experiment(parse_config(data), workers=3)
        self.assertEqual(one.csv_records(), three.csv_records())
        with self.assertRaises(ConfigError):
            run_experiment(parse_config(data), workers=0)


class RunCommandTest(TempDirMixin, SimpleTestCase):
    def run_command(self, *args, **options):
        out = StringIO()
        call_command('run', *args, stdout=out, stderr=StringIO(), **options)
        return out.getvalue()

    def test_writes_files(self):
        """run writes the CSV, the JSON ledger and the timing sidecar."""
        path = self.write_config(config('ghz-suite', name='ghz', sweep={'ns': [4]}))
        out_dir = self.tempdir()
        output = self.run_command(str(path), out=str(out_dir))
        self.assertIn('ghz (ghz-suite', output)
        records = read_csv(out_dir / 'ghz.csv')
        self.assertEqual(len(records), 7)
        self.assertEqual({r['schema_version'] for r in records}, {'1'})
        ledger = json.loads((out_dir / 'ghz.json').read_text())
        self.assertEqual(ledger['config_hash'], records[0]['config_hash'])
        assert ledger['passed']
        self.assertEqual(len(ledger['points'][0]['rows']), 7)
        timings = json.loads((out_dir / 'ghz.timings.json').read_text())
        self.assertEqual(list(timings), ['n=4'])

    def test_deterministic(self):
        """Two runs and two worker counts give byte-identical CSVs."""
        path = self.write_config(config('cmi-decay', n=5, betas=[0.5, 1.0], sweep={'widths': [1, 2]}))
        first, second = self.tempdir(), self.tempdir()
        self.run_command(str(path), out=str(first))
        self.run_command(str(path), out=str(second), workers=2)
        self.assertEqual(
            (first / 'cmi-decay.csv').read_bytes(),
            (second / 'cmi-decay.csv').read_bytes(),
        )

    def test_seed(self):
        """--seed changes the recorded config hash."""
        path = self.write_config(config('ghz-suite', sweep={'ns': [4]}))
        first, second = self.tempdir(), self.tempdir()
        self.run_command(str(path), out=str(first))
        self.run_command(str(path), out=str(second), seed=7)
        a = read_csv(first / 'ghz-suite.csv')[0]['config_hash']
        b = read_csv(second / 'ghz-suite.csv')[0]['config_hash']
        self.assertNotEqual(a, b)

    def test_config_error(self):
        """A bad configuration exits with status 2."""
        path = self.write_config(config('nope'))
        with self.assertRaises(CommandError) as cm:
            self.run_command(str(path), out=str(self.tempdir()))
        self.assertEqual(cm.exception.returncode, 2)

    def test_max_dim(self):
        """--max-dim lowers the dimension cap for one run."""
        path = self.write_config(config('ghz-suite', sweep={'ns': [4]}))
        with self.assertRaises(CommandError) as cm:
            self.run_command(str(path), out=str(self.tempdir()), max_dim=8)
        self.assertEqual(cm.exception.returncode, 2)
        self.assertIn('MTLAB_MAX_DIM=8', str(cm.exception))

    def test_preset_list(self):
        """preset list names every preset with its description."""
        out = StringIO()
        call_command('preset', 'list', stdout=out)
        lines = out.getvalue().splitlines()
        self.assertEqual([line.split()[0] for line in lines], [
            'tfim', 'heisenberg', 'random-nn', 'classical-ising', 'decoupled',
        ])


class GoldenTest(TempDirMixin, SimpleTestCase):
    def copy_goldens(self):
        target = self.tempdir() / 'goldens'
        shutil.copytree(GOLDENS, target)
        return target

    def test_shipped_goldens(self):
        """The shipped goldens reproduce."""
        report = verify_golden(GOLDENS)
        self.assertEqual(
            [(c.name, c.status) for c in report.cases],
            [('ghz-suite', PASSED), ('prepare-depth2', PASSED)],
        )
        assert report.passed

    def test_perturbed_value(self):
        """A perturbed value fails and names the column."""
        directory = self.copy_goldens()
        path = directory / 'ghz-suite.csv'
        lines = path.read_text().splitlines(keepends=True)
        lines[2] = lines[2].replace('0.6931471805599453,1.0', '0.6931472805599453,1.0', 1)
        path.write_text(''.join(lines))
        report = verify_golden(directory)
        case = report.cases[0]
        self.assertEqual(case.status, FAILED)
        self.assertEqual(len(case.differences), 1)
        self.assertIn('column value', case.differences[0])
        self.assertIn('cmi.min', case.differences[0])

    def test_tolerance(self):
        """Differences within the column tolerance pass."""
        directory = self.copy_goldens()
        (directory / 'tolerances.json').write_text('{"value": 1e-6}')
        path = directory / 'ghz-suite.csv'
        text = path.read_text().replace('0.6931471805599453,1.0', '0.6931472805599453,1.0', 1)
        path.write_text(text)
        assert verify_golden(directory).passed

    def test_text_columns(self):
        """Text columns must match exactly."""
        directory = self.copy_goldens()
        path = directory / 'ghz-suite.csv'
        path.write_text(path.read_text().replace(',true\n', ',false\n', 1))
        case = verify_golden(directory).cases[0]
        self.assertEqual(case.status, FAILED)
        self.assertIn('column passed', case.differences[0])

    def test_skip_list(self):
        """Goldens without a configuration and configurations without a golden are skipped."""
        directory = self.copy_goldens()
        (directory / 'ghz-suite.csv').rename(directory / 'orphan.csv')
        report = verify_golden(directory)
        self.assertEqual(
            [(c.name, c.status) for c in report.cases],
            [('ghz-suite', SKIPPED), ('prepare-depth2', PASSED), ('orphan', SKIPPED)],
        )
        assert report.passed

    def test_update(self):
        """--update regenerates goldens that then verify."""
        directory = self.copy_goldens()
        (directory / 'ghz-suite.csv').write_text('stale\n')
        report = verify_golden(directory, update=True)
        self.assertEqual(report.cases[0].status, UPDATED)
        assert verify_golden(directory).passed

    def test_command(self):
        """verify_golden prints one line per case and exits 1 on failure."""
        out = StringIO()
        call_command('verify_golden', str(GOLDENS), stdout=out)
        self.assertEqual(out.getvalue(), 'passed - ghz-suite\npassed - prepare-depth2\n')

        directory = self.copy_goldens()
        path = directory / 'ghz-suite.csv'
        path.write_text(path.read_text().replace('tripartitions,count,3.0', 'tripartitions,count,4.0'))
        out = StringIO()
        with self.assertRaises(CommandError) as cm:
            call_command('verify_golden', str(directory), stdout=out)
        self.assertEqual(cm.exception.returncode, 1)
        self.assertIn('* FAILED - ghz-suite', out.getvalue())
