"""The experiments `mtlab run` knows about.

Each experiment is registered with :func:`experiment`, declares the axes it
sweeps (the cartesian product of their values gives the sweep points) and
measures one point at a time. An optional summary compares points after
they have all run.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from mtlab.beliefprop.araki import araki_expansional, araki_locality_profile, flow_locality_profile
from mtlab.beliefprop.bounds import BoundConstants
from mtlab.beliefprop.flow import bp_flow
from mtlab.exceptions import DomainError
from mtlab.hilbert.geometry import ChainGeometry, SiteSet, check_dimension, sites_distance
from mtlab.hilbert.operators import DensityMatrix, GlobalOperator, ghz_state, partial_trace, trace_distance
from mtlab.info.measures import (
    CLOSED, OPEN, UNIFORM, cmi, markov_gap_scan, mutual_information, relative_entropy,
)
from mtlab.info.states import canonical_markov_state, full_rank_mix
from mtlab.lab.config import ExperimentConfig
from mtlab.lab.results import (
    COUNT, FLAG, NATS, OP_NORM, PROBABILITY, RATE, RATIO, TRACE_NORM, PointResult, ResultRow,
)
from mtlab.maxent.certificates import (
    IDENTITY_TOL, local_reconstruction, thm1_certificate, thm2_certificate, thm3_delta,
)
from mtlab.recovery.kappa import bp_recovery_kappa, normalize_instrument
from mtlab.recovery.decay import CHAIN_RULE_TOL, cmi_decay_experiment
from mtlab.recovery.ledger import APPROX, GE, LE, LedgerEntry
from mtlab.recovery.petz import petz_report
from mtlab.recovery.preparation import PREPARE_TP_TOL, depth_two_prepare
from mtlab.recovery.reconstruction import thm3_states
from mtlab.recovery.rus import RUS_TP_TOL, rus_recovery
from mtlab.thermal.correlation import fit_decay
from mtlab.thermal.gibbs import gibbs_state
from mtlab.thermal.hamiltonians import Hamiltonian


logger = logging.getLogger(__name__)

LN2 = math.log(2)
GHZ_TOL = 1e-9
LENGTH = 'sites'
STATES = ('gibbs', 'ghz-mixed')


def _text(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


class Point:
    """One sweep point: its parameters and the rows measured for it."""

    def __init__(self, params: dict[str, Any], label: str | None = None) -> None:
        self.params = params
        self.label = label or ','.join(f'{k}={_text(v)}' for k, v in params.items())
        self.rows: list[ResultRow] = []
        self.details: dict[str, Any] = {}

    def __getitem__(self, key: str) -> Any:
        return self.params[key]

    def record(self, quantity: str, value: float, unit: str = NATS) -> None:
        self.rows.append(ResultRow(self.label, quantity, unit, float(value)))

    def check(
        self,
        quantity: str,
        value: float,
        bound: float,
        relation: str = LE,
        unit: str = NATS,
        slack: float = 1e-9,
        certified: bool = True,
    ) -> None:
        self.ledger([LedgerEntry(quantity, float(value), float(bound), relation, certified, slack)], unit)

    def ledger(self, entries, unit: str | Callable[[str], str]) -> None:
        for e in entries:
            u = unit(e.name) if callable(unit) else unit
            self.rows.append(ResultRow.from_entry(self.label, e, u))

    def result(self, seconds: float = 0.0) -> PointResult:
        return PointResult(self.label, dict(self.params), self.rows, self.details, seconds)


Axes = Callable[[ExperimentConfig], list[tuple[str, list]]]
Summary = Callable[[ExperimentConfig, list[PointResult]], list[Point]]


@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    measure: Callable[[ExperimentConfig, Point], None]
    axes: Axes
    summarize: Summary | None = field(default=None)

    def points(self, config: ExperimentConfig) -> list[Point]:
        axes = self.axes(config)
        keys = [k for k, _ in axes]
        return [Point(dict(zip(keys, values))) for values in itertools.product(*(v for _, v in axes))]


EXPERIMENTS: OrderedDict[str, Experiment] = OrderedDict()


def experiment(name: str, description: str, axes: Axes, summarize: Summary | None = None) -> Callable:
    """Decorator to register an experiment."""
    def dec(f):
        EXPERIMENTS[name] = Experiment(name, description, f, axes, summarize)
        f.experiment_name = name
        return f
    return dec


def betas(config: ExperimentConfig) -> list[tuple[str, list]]:
    return [('beta', list(config.betas))]


def betas_and(key: str, sweep_key: str, default: list, kind: Callable = int) -> Axes:
    def axes(config: ExperimentConfig) -> list[tuple[str, list]]:
        return betas(config) + [(key, config.sweep_list(sweep_key, default, kind))]
    return axes


def equal_blocks(geometry: ChainGeometry, k: int) -> list[SiteSet]:
    """k contiguous blocks; the first n mod k blocks get the extra sites."""
    if not 1 <= k <= geometry.n:
        raise DomainError(f"cannot cut {geometry.n} sites into {k} blocks")
    size, extra = divmod(geometry.n, k)
    blocks, pos = [], 0
    for i in range(k):
        width = size + (1 if i < extra else 0)
        blocks.append(geometry.interval(pos, pos + width))
        pos += width
    return blocks


def _union(regions: list[SiteSet]) -> SiteSet:
    out = regions[0]
    for r in regions[1:]:
        out = out | r
    return out


def _state(config: ExperimentConfig, point: Point) -> DensityMatrix:
    kind = point.params.get('state', 'gibbs')
    if kind not in STATES:
        raise config.error(f"unknown state {kind!r}; choose one of {', '.join(STATES)}", 'sweep', 'states')
    if kind == 'ghz-mixed':
        return full_rank_mix(ghz_state(config.geometry))
    return gibbs_state(config.hamiltonian(), point['beta']).state


def _bond_term(config: ExperimentConfig, h: Hamiltonian) -> GlobalOperator:
    n = config.geometry.n
    site = config.sweep_value('bond', max(n // 2 - 1, 0))
    pair = tuple(sorted({site % n, (site + 1) % n}))
    for t in h.terms:
        if t.support.indices == pair:
            return t
    raise config.error(f"the model has no interaction term on sites {pair}", 'sweep', 'bond')


def _fit_constants(point: Point, beta: float, strength: float, ls: list[int], errors: list[float]) -> None:
    try:
        constants = BoundConstants.fit(beta, strength, ls, errors)
    except DomainError as e:
        logger.info("%s: no Lieb-Robinson fit (%s)", point.label, e)
        point.details['constants'] = None
        return
    point.record('fit.q1', constants.q1, RATE)
    point.record('fit.c_prime', constants.c_prime, RATIO)
    point.record('fit.v', constants.v, RATE)
    point.details['constants'] = constants.to_json()


def _sweep_constants(config: ExperimentConfig, beta: float, strength: float) -> BoundConstants | None:
    data = config.sweep.get('constants')
    if data is None:
        return None
    if not isinstance(data, dict) or set(data) - {'c_prime', 'v', 'xi'}:
        raise config.error("sweep.constants takes c_prime, v and xi", 'sweep', 'constants')
    try:
        return BoundConstants(beta, strength, float(data.get('c_prime', 1.0)),
                              float(data.get('v', 1.0)), data.get('xi'))
    except (DomainError, TypeError, ValueError) as e:
        raise config.error(f"bad constants: {e}", 'sweep', 'constants') from None


def _trend(summary: Point, quantity: str, points: list[PointResult], key: str, value: str) -> None:
    """Advisory rows asserting ``value`` does not grow along ``key`` at fixed β."""
    for beta in sorted({p.params['beta'] for p in points}):
        series = sorted(
            (p.params[key], p.details[value]) for p in points
            if p.params['beta'] == beta and value in p.details
        )
        for (x0, y0), (x1, y1) in zip(series, series[1:]):
            summary.check(
                f'beta={_text(beta)}.{quantity}.{key}{x1}', y1, y0, LE,
                unit=TRACE_NORM, slack=1e-12, certified=False,
            )


@experiment(
    'ghz-suite',
    "GHZ chains: every shielding cut has I(A:C|B) = ln 2 until one qubit is traced out.",
    axes=lambda config: [('n', config.sweep_list('ns', [config.geometry.n]))],
)
def ghz_suite(config: ExperimentConfig, point: Point) -> None:
    n = point['n']
    if n < 4:
        raise config.error("the GHZ suite needs chains of at least 4 sites", 'sweep', 'ns')
    geometry = ChainGeometry.qubits(n)
    check_dimension(geometry.total_dim)
    rho = ghz_state(geometry)
    cache: dict = {}
    values = [
        cmi(rho, geometry.interval(0, i), geometry.interval(i, j), geometry.interval(j, n), cache).value
        for i in range(1, n - 1) for j in range(i + 1, n)
    ]
    point.record('tripartitions', len(values), COUNT)
    point.check('cmi.min', min(values), LN2, APPROX, slack=GHZ_TOL)
    point.check('cmi.max', max(values), LN2, APPROX, slack=GHZ_TOL)

    traced = []
    for k in range(n):
        rest = geometry.all_sites() - [k]
        reduced = partial_trace(rho, rest)
        idx = rest.indices
        local: dict = {}
        traced += [
            cmi(reduced, geometry.sites(idx[:i]), geometry.sites(idx[i:j]), geometry.sites(idx[j:]), local).value
            for i in range(1, len(idx) - 1) for j in range(i + 1, len(idx))
        ]
    point.check('traced.cmi.max', max(traced), 0.0, LE, slack=GHZ_TOL)

    sites = [geometry.sites([i]) for i in range(n)]
    point.check('gap.open', markov_gap_scan(rho, sites, OPEN).epsilon, LN2, APPROX, slack=GHZ_TOL)
    point.check('gap.closed', markov_gap_scan(rho, sites, CLOSED).epsilon, LN2, APPROX, slack=GHZ_TOL)
    point.check('gap.uniform', markov_gap_scan(rho, sites, UNIFORM).epsilon, 0.0, LE, slack=GHZ_TOL)


def _certificate_rows(point: Point, cert) -> None:
    point.record('epsilon', cert.epsilon)
    if cert.kind != 'open':
        point.record('epsilon_prime', cert.epsilon_prime)
    point.check('entropy_gap', cert.entropy_gap, cert.bound, slack=cert.slack)
    point.check('rel_entropy', cert.rel_entropy, cert.total_bound, slack=cert.slack)
    point.check('identity_residual', cert.identity_residual, IDENTITY_TOL, slack=0.0)
    point.check('solver.converged', float(cert.solution.converged), 1.0, GE, unit=FLAG, slack=0.0)
    point.details['certificate'] = cert.to_json()


@experiment(
    'thm1-certify',
    "Open-chain certificate S(σ_max) − S(ρ) ≤ (n−1)ε for seeded Gibbs states.",
    axes=lambda config: betas(config) + [('seed', config.sweep_list('seeds', [config.seed]))],
)
def thm1_certify(config: ExperimentConfig, point: Point) -> None:
    if config.geometry.closed:
        raise config.error("thm1-certify works on open chains", 'geometry', 'boundary')
    k = config.sweep_value('blocks', 3)
    try:
        blocks = equal_blocks(config.geometry, k)
    except DomainError as e:
        raise config.error(str(e), 'sweep', 'blocks') from None
    if k < 3:
        raise config.error("a Markov chain certificate needs at least 3 blocks", 'sweep', 'blocks')
    h = config.hamiltonian(seed=point['seed'])
    rho = gibbs_state(h, point['beta']).state
    _certificate_rows(point, thm1_certificate(rho, blocks, tol=config.solver_tol))

    if k == 3:
        rng = np.random.default_rng(point['seed'])
        markov = canonical_markov_state(config.geometry, blocks[1].indices[0], rng)
        cert = thm1_certificate(markov, blocks, tol=config.solver_tol)
        point.record('markov.epsilon', cert.epsilon)
        point.check('markov.rel_entropy', cert.rel_entropy, 1e-5, slack=0.0)


@experiment(
    'thm2-certify',
    "Closed-chain certificates (both variants) on rings.",
    axes=lambda config: betas(config) + [
        ('variant', config.sweep_list('variants', ['i', 'ii'], str)),
        ('state', config.sweep_list('states', ['gibbs'], str)),
    ],
)
def thm2_certify(config: ExperimentConfig, point: Point) -> None:
    if not config.geometry.closed:
        raise config.error("thm2-certify works on closed chains", 'geometry', 'boundary')
    k = config.sweep_value('blocks', 4)
    try:
        blocks = equal_blocks(config.geometry, k)
        cert = thm2_certificate(_state(config, point), blocks, point['variant'], tol=config.solver_tol)
    except DomainError as e:
        raise config.error(str(e), 'sweep') from None
    _certificate_rows(point, cert)


@experiment(
    'thm3-pipeline',
    "Distance to the local Gibbs family against I(A:C|B), two-map reconstruction and full-rank mixing.",
    axes=lambda config: betas(config) + [('state', config.sweep_list('states', ['gibbs'], str))],
)
def thm3_pipeline(config: ExperimentConfig, point: Point) -> None:
    geometry = config.geometry
    k = config.sweep_value('blocks', 4)
    if k < 4:
        raise config.error("the pipeline needs at least 4 blocks", 'sweep', 'blocks')
    if geometry.closed and k < 6:
        raise config.error("on closed chains the pipeline needs at least 6 blocks", 'sweep', 'blocks')
    try:
        blocks = equal_blocks(geometry, k)
    except DomainError as e:
        raise config.error(str(e), 'sweep', 'blocks') from None
    rho = _state(config, point)
    a = blocks[0]
    if geometry.closed:
        b = blocks[1] | blocks[-1]
        c = _union(blocks[2:-1])
    else:
        b = blocks[1]
        c = _union(blocks[2:])
    record = thm3_delta(rho, blocks, a, b, c, tol=config.solver_tol)
    point.record('cmi', record.cmi)
    point.record('min_rel_entropy', record.min_rel_entropy)
    point.record('delta', record.delta)
    point.record('epsilon', record.epsilon)
    point.check('delta.envelope', abs(record.delta), record.envelope, unit=NATS, certified=False)
    if point.params.get('state') == 'ghz-mixed':
        point.check('cmi.ghz', record.cmi, 0.5 * LN2, GE, slack=0.0)
        point.check('min_rel_entropy.ghz', record.min_rel_entropy, 0.5 * LN2, GE, slack=0.0)

    if geometry.closed:
        # B1 and B2 are shells around A from both sides of the ring
        b1, b2, c = blocks[1] | blocks[-1], blocks[2] | blocks[-2], _union(blocks[3:-2])
    else:
        b1, b2, c = blocks[1], blocks[2], _union(blocks[3:])
    states = thm3_states(rho, a, b1, b2, c)
    point.ledger(states.ledger, lambda name: NATS if name.startswith('cmi') else TRACE_NORM)
    rebuilt = local_reconstruction(states.rho_tilde, blocks, closed=geometry.closed)
    point.record('reconstruction.rel_entropy', relative_entropy(states.rho_tilde, rebuilt.pi).value)
    point.record('reconstruction.distance', trace_distance(rho, rebuilt.pi), TRACE_NORM)
    point.details['thm3'] = record.to_json()
    point.details['reconstruction'] = states.to_json()


@experiment(
    'cmi-decay',
    "I(A:C|B_l) as the shell B_l around A widens, with the chain-rule bookkeeping.",
    axes=betas,
)
def cmi_decay(config: ExperimentConfig, point: Point) -> None:
    a = config.sweep_sites('a', [0])
    widths = config.sweep_list('widths', [1, 2, 3])
    try:
        table = cmi_decay_experiment(config.hamiltonian(), point['beta'], a, widths)
    except DomainError as e:
        raise config.error(str(e), 'sweep', 'widths') from None
    for row in table.rows:
        point.record(f'l{row.l}.cmi', row.cmi)
        point.record(f'l{row.l}.mi', row.mi)
        point.record(f'l{row.l}.increment', row.increment)
    point.ledger(table.ledger(), NATS)
    if len(table.rows) > 1:
        point.check('cmi.decay', table.rows[-1].cmi, table.rows[0].cmi, LE, slack=CHAIN_RULE_TOL)


@experiment(
    'area-law-saturation',
    "I(A:Aᶜ) against βJr|∂A| and the rate at which I(A:B_l) approaches it.",
    axes=betas,
)
def area_law_saturation(config: ExperimentConfig, point: Point) -> None:
    h = config.hamiltonian()
    beta = point['beta']
    a = config.sweep_sites('a', [0])
    rest = a.complement()
    if not len(rest):
        raise config.error("A must leave some sites outside it", 'sweep', 'a')
    rho = gibbs_state(h, beta).state
    total = mutual_information(rho, a, rest).value
    boundary = sum(1 for t in h.terms if not t.support.isdisjoint(a) and not t.support.issubset(a))
    bound = beta * h.strength * h.range * boundary
    point.record('boundary_terms', boundary, COUNT)
    point.check('mi.area_law', total, bound, slack=1e-6)
    point.record('mi.area_ratio', total / bound if bound > 0 else math.nan, RATIO)
    for l in config.sweep_list('widths', [1, 2, 3]):
        b = (a.grown(l) - a) & rest
        mi = mutual_information(rho, a, b).value
        point.check(f'l{l}.mi', mi, total, LE)
        point.record(f'l{l}.saturation_gap', total - mi)


@experiment(
    'bp-locality',
    "How fast the belief-propagation flow of one bond localizes around it.",
    axes=betas,
)
def bp_locality(config: ExperimentConfig, point: Point) -> None:
    h = config.hamiltonian()
    beta = point['beta']
    v = _bond_term(config, h)
    flow = bp_flow(h.without([v]).operator, v, beta, ode_tol=config.ode_tol)
    point.check('flow.converged', float(flow.converged), 1.0, GE, unit=FLAG, slack=0.0)
    point.record('flow.ode_residual', flow.ode_residual, TRACE_NORM)
    point.record('flow.inverse_residual', flow.inverse_residual, OP_NORM)
    point.check('flow.norm', flow.o.norm(), flow.norm_bound, LE, unit=OP_NORM, slack=1e-6)

    ls = config.sweep_list('ls', [0, 1, 2])
    profile = flow_locality_profile(flow, ls)
    _profile_rows(point, profile)
    _fit_constants(point, beta, h.strength, [r.l for r in profile.rows], profile.errors)
    point.details['flow'] = flow.to_json()


def _profile_rows(point: Point, profile) -> None:
    for row in profile.rows:
        point.record(f'l{row.l}.err', row.measured_err, OP_NORM)
    for prev, row in zip(profile.rows, profile.rows[1:]):
        point.check(
            f'l{row.l}.monotone', row.measured_err, prev.measured_err, LE,
            unit=OP_NORM, slack=profile.floor, certified=False,
        )
    point.record('profile.strictly_decreasing', float(profile.strictly_decreasing), FLAG)
    point.record('profile.log_convex', float(profile.log_convex), FLAG)


@experiment(
    'araki-locality',
    "Araki expansional of one bond: the exact identity and its truncation profile.",
    axes=betas,
)
def araki_locality(config: ExperimentConfig, point: Point) -> None:
    h = config.hamiltonian()
    beta = point['beta']
    v = _bond_term(config, h)
    h0 = h.without([v])
    expansional = araki_expansional(h0.operator, v, beta)
    point.check('identity_residual', expansional.identity_residual, 0.0, LE, unit=TRACE_NORM, slack=1e-9)
    point.record('inverse_residual', expansional.inverse_residual, OP_NORM)
    profile = araki_locality_profile(h0, v, beta, config.sweep_list('ls', [0, 1, 2]))
    _profile_rows(point, profile)
    _fit_constants(point, beta, h.strength, [r.l for r in profile.rows], profile.errors)


def _regions(config: ExperimentConfig, b_width: int) -> tuple[SiteSet, SiteSet, SiteSet]:
    a_width = config.sweep_value('a_width', 1)
    geometry = config.geometry
    if a_width < 1 or a_width + b_width >= geometry.n:
        raise config.error(
            f"A of {a_width} and B of {b_width} sites leave no room for C on {geometry.n} sites",
            'sweep',
        )
    a = geometry.interval(0, a_width)
    b = geometry.interval(a_width, a_width + b_width)
    return a, b, geometry.all_sites() - a - b


def _recover_single_summary(config: ExperimentConfig, points: list[PointResult]) -> list[Point]:
    summary = Point({}, 'summary')
    _trend(summary, 'kappa.error', points, 'b_width', 'kappa_error')
    return [summary] if summary.rows else []


@experiment(
    'recover-single',
    "One normalized recovery instrument built from the belief-propagation flow, next to the Petz map.",
    axes=betas_and('b_width', 'b_widths', [2]),
    summarize=_recover_single_summary,
)
def recover_single(config: ExperimentConfig, point: Point) -> None:
    h = config.hamiltonian()
    beta = point['beta']
    a, b, c = _regions(config, point['b_width'])
    rho = gibbs_state(h, beta).state
    try:
        km = bp_recovery_kappa(h, beta, a, b, c, ode_tol=config.ode_tol)
    except DomainError as e:
        raise config.error(str(e), 'sweep') from None
    inst = normalize_instrument(km, rho)
    point.record('cmi', cmi(rho, a, b, c).value)
    point.record('kappa.error', inst.kappa_error, TRACE_NORM)
    point.record('instrument.error', inst.normalized_error, TRACE_NORM)
    point.record('instrument.lambda_max', inst.lambda_max, RATIO)
    point.record('instrument.p_success', inst.p_success, PROBABILITY)
    point.check('instrument.cp', float(inst.report.cp), 1.0, GE, unit=FLAG, slack=0.0)
    point.check('instrument.tp_defect', inst.report.tp_defect, 0.0, LE, unit=OP_NORM, slack=1e-9)

    petz = petz_report(rho, a, b, c)
    point.record('petz.error', petz.error, TRACE_NORM)
    point.record('petz.fidelity_gap', petz.fidelity_gap)

    constants = _sweep_constants(config, beta, h.strength)
    if constants is not None:
        l = len(b) // 2
        point.check('kappa.error.lemma1', inst.kappa_error, constants.lemma1_bound(l),
                    unit=TRACE_NORM, certified=False)
        point.check('instrument.p_success.lower', inst.p_success, constants.p_lower_bound, GE,
                    unit=PROBABILITY, certified=False)
    point.details['instrument'] = inst.to_json(constants)
    point.details['petz'] = petz.to_json()
    point.details['kappa_error'] = inst.kappa_error


@experiment(
    'recover-rus',
    "Repeat-until-success recovery over l buffered blocks with its error ledger.",
    axes=betas_and('l', 'ls', [1]),
)
def recover_rus(config: ExperimentConfig, point: Point) -> None:
    h = config.hamiltonian()
    beta = point['beta']
    l = point['l']
    block = config.sweep_value('block', 2)
    buffer = config.sweep_value('buffer', 1)
    a, b, c = _regions(config, l * block + (l - 1) * buffer)
    constants = _sweep_constants(config, beta, h.strength)
    try:
        plan = rus_recovery(h, beta, a, b, c, l, block, buffer, config.ode_tol, constants)
    except DomainError as e:
        raise config.error(str(e), 'sweep') from None
    point.record('error', plan.error, TRACE_NORM)
    point.record('single_stage_error', plan.single_stage_error, TRACE_NORM)
    point.check('channel.cp', float(plan.report.cp), 1.0, GE, unit=FLAG, slack=0.0)
    point.check('channel.tp_defect', plan.report.tp_defect, 0.0, LE, unit=OP_NORM, slack=RUS_TP_TOL)
    for i, stage in enumerate(plan.stages, 1):
        point.record(f'stage{i}.p_success', stage.p_success, PROBABILITY)
    point.ledger(plan.ledger, TRACE_NORM)
    point.details['rus'] = plan.to_json()


def _prepare_summary(config: ExperimentConfig, points: list[PointResult]) -> list[Point]:
    summary = Point({}, 'summary')
    _trend(summary, 'error', points, 'l', 'error')
    return [summary] if summary.rows else []


@experiment(
    'prepare-depth2',
    "Depth-two preparation of the Gibbs state of an open chain.",
    axes=betas_and('l', 'ls', [1]),
    summarize=_prepare_summary,
)
def prepare_depth2(config: ExperimentConfig, point: Point) -> None:
    k = config.sweep_value('k', 2)
    c_width = config.sweep.get('c_width')
    c_scale = config.sweep.get('c_scale')
    xi = config.sweep.get('xi')
    if c_scale is not None:
        if c_width is not None:
            raise config.error("give sweep.c_width or sweep.c_scale, not both", 'sweep', 'c_scale')
        c_scale = config.sweep_value('c_scale', c_scale)
        if c_scale < 1:
            raise config.error("sweep.c_scale must be at least 1", 'sweep', 'c_scale')
        # separators grow with the blocks and the chain is sized to fit
        c_width = c_scale * point['l']
        n = 2 * point['l'] * k + (k - 1) * c_width
        if n > config.geometry.n:
            raise config.error(
                f"l={point['l']} needs {n} sites but geometry.n is {config.geometry.n}", 'geometry', 'n',
            )
        geometry = ChainGeometry((config.geometry.dims[0],) * n, config.geometry.boundary)
        check_dimension(geometry.total_dim)
        h = config.hamiltonian(geometry)
    else:
        h = config.hamiltonian()
        if c_width is not None:
            c_width = config.sweep_value('c_width', c_width)
    try:
        result = depth_two_prepare(
            h, point['beta'], point['l'], k, c_width,
            None if xi is None else config.sweep_value('xi', xi, float),
        )
    except DomainError as e:
        raise config.error(str(e), 'sweep') from None
    point.record('error', result.error, TRACE_NORM)
    point.record('n', h.geometry.n, COUNT)
    point.record('c_width', result.layout.c_width, COUNT)
    if math.isfinite(result.asymptotic_c_width):
        point.record('c_width.asymptotic', result.asymptotic_c_width, LENGTH)
    point.check('channel.tp_defect', result.report.tp_defect, 0.0, LE, unit=OP_NORM, slack=PREPARE_TP_TOL)
    for j, (corr, rec) in enumerate(result.terms, 1):
        point.record(f'separator{j}.correlation', corr, TRACE_NORM)
        point.record(f'separator{j}.recovery', rec, TRACE_NORM)
    point.ledger(result.ledger, TRACE_NORM)
    point.details['preparation'] = result.to_json()
    point.details['error'] = result.error


@experiment(
    'conjecture-1d',
    "Exponential fit of I(A:C|B) against d(A,C) on a chain.",
    axes=betas,
)
def conjecture_1d(config: ExperimentConfig, point: Point) -> None:
    h = config.hamiltonian()
    rho = gibbs_state(h, point['beta']).state
    a = config.sweep_sites('a', [0])
    support = rho.support
    cache: dict = {}
    distances, values = [], []
    for w in config.sweep_list('widths', [1, 2, 3]):
        b = (a.grown(w) - a) & support
        c = support - a - b
        if not len(c):
            raise config.error(f"width {w} leaves no sites in C", 'sweep', 'widths')
        d = sites_distance(a, c)
        value = cmi(rho, a, b, c, cache).value
        point.record(f'd{d}.cmi', value)
        distances.append(d)
        values.append(value)
    try:
        fit = fit_decay(distances, values)
    except DomainError as e:
        raise config.error(str(e), 'sweep', 'widths') from None
    point.record('fit.degenerate', float(fit.degenerate), FLAG)
    point.record('fit.xi', fit.xi, LENGTH)
    point.record('fit.prefactor', fit.prefactor, NATS)
    point.check('fit.rsq', fit.rsq, 0.9, GE, unit=RATIO, slack=0.0, certified=False)
