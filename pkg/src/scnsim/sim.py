"""Scenario generation, the per-step network loop, Monte-Carlo runs, and sweeps.

One run builds a random drop (macro at the area center, small cells and UEs
rejection-sampled with minimum separations), then steps a World through
time. Each step, in order: the advertised load estimates fold in the
previous step's loads; the partition refreshes when due; every cluster
samples a sleep/wake action; UEs associate; cluster heads rebalance their
members' UEs; the load-coupled fixed point runs; costs are charged and the
learners update. Monte-Carlo runs use independent seed streams derived from
(seed, run_index) so results are reproducible run-by-run and independent of
worker scheduling.
"""

from __future__ import annotations

import copy
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import association as assoc
from . import clustering as clust
from . import coordination as coord
from . import learning as learn
from . import netmodel
from .config import MODES, ScenarioConfig

STEP_SECONDS = 1.0  # logical tick length; energy (J) = power (W) x ticks
MAX_PLACEMENT_TRIES = 10000

SWEEP_PARAMS = ("ues", "eps_d", "theta")


def _sample_position(
    rng: np.random.Generator,
    side: float,
    anchors: np.ndarray,
    min_dists: np.ndarray,
    max_tries: int = MAX_PLACEMENT_TRIES,
) -> tuple[float, float]:
    """Uniform point in the square, at least min_dists[i] from anchors[i]."""
    for _ in range(max_tries):
        p = rng.uniform(0.0, side, size=2)
        if anchors.size == 0 or np.all(
            np.hypot(anchors[:, 0] - p[0], anchors[:, 1] - p[1]) >= min_dists
        ):
            return float(p[0]), float(p[1])
    raise RuntimeError(
        f"infeasible density: could not place a node after {max_tries} "
        "draws; separation constraints too tight for the area"
    )


def generate_scenario(
    cfg: ScenarioConfig, rng: np.random.Generator
) -> tuple[list[netmodel.BaseStation], list[netmodel.UserEquipment]]:
    """Draw one network drop: macro at the center, then SBSs, then UEs.

    Every UE's position and traffic are drawn consecutively, so two configs
    differing only in the UE count share their first min(n, n') UEs when
    given the same RNG state (common random numbers across sweep points).
    """
    lay, pw = cfg.layout, cfg.power
    center = (lay.side_m / 2.0, lay.side_m / 2.0)
    stations = [
        netmodel.BaseStation(
            id=0,
            kind=netmodel.MACRO,
            position=center,
            p_max=netmodel.dbm_to_watt(pw.macro_p_max_dbm),
            p_idle=pw.macro_p_idle_w,
            idle_scale_active=pw.idle_scale_active,
            never_sleeps=True,
        )
    ]
    small_p_max = netmodel.dbm_to_watt(pw.small_p_max_dbm)
    for i in range(lay.n_small):
        anchors = np.array([bs.position for bs in stations])
        dmin = np.array(
            [lay.min_dist_macro_small_m]
            + [lay.min_dist_small_small_m] * (len(stations) - 1)
        )
        pos = _sample_position(rng, lay.side_m, anchors, dmin)
        stations.append(
            netmodel.BaseStation(
                id=i + 1,
                kind=netmodel.SMALL,
                position=pos,
                p_max=small_p_max,
                p_idle=pw.small_p_idle_w,
                idle_scale_active=pw.idle_scale_active,
            )
        )

    anchors = np.array([bs.position for bs in stations])
    dmin = np.array(
        [lay.min_dist_macro_ue_m] + [lay.min_dist_small_ue_m] * lay.n_small
    )
    ues = []
    for m in range(lay.n_ues):
        pos = _sample_position(rng, lay.side_m, anchors, dmin)
        if cfg.traffic.distribution == "exponential":
            demand = float(rng.exponential(cfg.traffic.mean_rate_bps))
        else:
            demand = float(cfg.traffic.mean_rate_bps)
        ues.append(netmodel.UserEquipment(id=m, position=pos, traffic_rate=demand))
    return stations, ues


@dataclass
class StepRecord:
    """Per-step SBS metrics (the macro is bookkept separately by design)."""

    step: int
    n_clusters: int
    mean_cluster_size: float
    state_changes: int  # SBS on/off flips versus the previous step
    converged: bool  # load fixed point hit tolerance
    sbs_state: np.ndarray
    sbs_power: np.ndarray  # consumed watts per SBS
    sbs_load: np.ndarray  # clamped duty cycles
    sbs_load_raw: np.ndarray
    sbs_cost: np.ndarray  # alpha * power + beta * raw load


@dataclass
class ClusterEvent:
    step: int
    partition: clust.ClusterPartition


class World:
    """One dropped network stepped through time under a single mode."""

    def __init__(
        self,
        cfg: ScenarioConfig,
        stations,
        ues,
        kmeans_rng: np.random.Generator,
        learner_rng: np.random.Generator,
    ):
        if cfg.run.mode not in MODES:
            raise ValueError(f"unknown mode {cfg.run.mode!r}")
        for i, bs in enumerate(stations):
            if bs.id != i:
                raise ValueError("station ids must equal their list positions")
        self.cfg = cfg
        self.mode = cfg.run.mode
        self.stations = list(stations)
        self.ues = list(ues)
        self.n_bs = len(self.stations)
        self.sbs_idx = np.array(
            [bs.id for bs in self.stations if bs.kind == netmodel.SMALL], dtype=int
        )
        self.channel = cfg.channel_model()
        self.positions = np.array(
            [ue.position for ue in self.ues], dtype=float
        ).reshape(-1, 2)
        self.traffic = np.array([ue.traffic_rate for ue in self.ues], dtype=float)
        self.gains = self.channel.gain_matrix(self.stations, self.positions)
        self.net = netmodel.NetworkConfiguration.all_active(self.stations)
        self.estimate = assoc.LoadEstimate(np.zeros(self.n_bs))
        self.kmeans_rng = kmeans_rng
        self.learner_rng = learner_rng
        self.cost = cfg.cost_params()
        self.partition: clust.ClusterPartition | None = None
        self.learners: dict[tuple[int, ...], learn.ClusterLearner] = {}
        self.cluster_events: list[ClusterEvent] = []
        # serving station per UE after the last step (-1 = uncovered)
        self.last_serving = np.zeros(0, dtype=int)

    def _set_partition(self, partition: clust.ClusterPartition, step: int) -> None:
        """Install a partition, keeping learners whose member set is unchanged."""
        lcfg = self.cfg.learning
        kept: dict[tuple[int, ...], learn.ClusterLearner] = {}
        for members in partition.clusters:
            key = tuple(members)
            if key in self.learners:
                kept[key] = self.learners[key]
            else:
                levels = [[self.stations[b].p_max] for b in members]
                kept[key] = learn.ClusterLearner(
                    key,
                    learn.build_action_set(levels, cap=lcfg.max_actions),
                    kappa=lcfg.kappa,
                    utility_exp=lcfg.utility_exp,
                    regret_exp=lcfg.regret_exp,
                    policy_exp=lcfg.policy_exp,
                )
        self.learners = kept
        self.partition = partition
        self.cluster_events.append(ClusterEvent(step, partition))

    def _recluster(self, t: int) -> None:
        ids = self.sbs_idx
        if ids.size == 0:
            self._set_partition(clust.ClusterPartition((), (), epoch=t), t)
            return
        pos = np.array([self.stations[b].position for b in ids])
        loads = self.estimate.rho_hat[ids]
        graph = clust.build_similarity(
            pos, loads, self.cfg.similarity_config(), self.cfg.clustering.laplacian
        )
        init_labels = None
        if self.partition is not None and self.partition.n_clusters:
            group_of = {
                b: j
                for j, members in enumerate(self.partition.clusters)
                for b in members
            }
            init_labels = np.array([group_of.get(int(b), -1) for b in ids])
            if np.any(init_labels < 0):
                init_labels = None
        part = clust.spectral_cluster(
            graph.s_joint,
            [int(b) for b in ids],
            self.kmeans_rng,
            loads=loads,
            laplacian=self.cfg.clustering.laplacian,
            epoch=t,
            init_labels=init_labels,
        )
        self._set_partition(part, t)

    def _singletons(self, t: int) -> None:
        ids = [int(b) for b in self.sbs_idx]
        part = clust.ClusterPartition(
            tuple((b,) for b in ids), tuple(ids), epoch=t
        )
        self._set_partition(part, t)

    def step(self, t: int) -> StepRecord:
        rc = self.cfg.run
        prev_load = self.net.load.copy()
        prev_state = self.net.state.copy()

        # (1) advertised loads trail realized loads by one step
        assoc.update_load_estimate(
            self.estimate, prev_load, t, self.cfg.association.nu_exponent
        )

        # (2) partition refresh when due
        if self.mode == "learning_clustered":
            if t == 1 or t % self.cfg.clustering.recluster_every == 0:
                self._recluster(t)
        elif self.mode == "learning_no_clusters":
            if t == 1:
                self._singletons(t)

        # (3) clusters draw sleep/wake (and level) actions; classical stays on
        power = np.array([bs.p_max for bs in self.stations], dtype=float)
        state = np.ones(self.n_bs, dtype=np.int64)
        played: dict[tuple[int, ...], int] = {}
        for key, learner in self.learners.items():
            idx = learner.sample(self.learner_rng)
            played[key] = idx
            act = learner.actions[idx]
            for b, level, on in zip(key, act.powers, act.states):
                state[b] = on
                if on:
                    power[b] = level
        net = netmodel.NetworkConfiguration(
            power=power,
            state=state,
            load=prev_load.copy(),
            load_raw=self.net.load_raw.copy(),
        )

        # (4) association against active stations only; a step with nothing
        # awake charges penalties instead of aborting
        n_ue = self.traffic.size
        delta = 0.0 if self.mode == "classical" else self.cfg.association.delta
        no_coverage = False
        if n_ue:
            rx = power[:, None] * self.gains
            try:
                serving = assoc.associate_all(
                    rx, state, self.estimate.rho_hat, delta
                )
            except assoc.NoCoverageError:
                no_coverage = True
                serving = np.full(n_ue, -1, dtype=int)
        else:
            serving = np.zeros(0, dtype=int)
        z = np.zeros((self.n_bs, n_ue))
        if n_ue and not no_coverage:
            z[serving, np.arange(n_ue)] = 1.0

        # (5) each cluster head rebalances the UEs attached to its members,
        # with interference frozen at the previous step's loads
        penalized: set[tuple[int, ...]] = set()
        if self.partition is not None and n_ue and not no_coverage:
            excl = netmodel.exclusion_matrix(self.n_bs, self.partition.clusters)
            rates = netmodel.rate_matrix(
                self.stations, net, self.gains, self.channel, excl,
                interference_load=prev_load,
            )
            for members in self.partition.clusters:
                midx = np.fromiter(members, dtype=int)
                sel = np.flatnonzero(np.isin(serving, midx))
                if sel.size == 0:
                    continue
                with np.errstate(divide="ignore"):
                    costs = self.traffic[sel][None, :] / rates[np.ix_(midx, sel)]
                try:
                    sched = coord.solve_cluster_schedule(
                        costs, members, sel.tolist(), state[midx] == 1
                    )
                except coord.UncoveredUEsError:
                    # cluster slept on its UEs: they go unserved this step
                    # and the cluster pays the worst-case penalty below
                    penalized.add(tuple(members))
                    z[:, sel] = 0.0
                    serving[sel] = -1
                    continue
                choice = midx[np.argmax(sched.binary, axis=0)]
                z[:, sel] = 0.0
                z[choice, sel] = 1.0
                serving[sel] = choice

        # (6) realized loads from the coupled fixed point, warm-started
        clusters = self.partition.clusters if self.partition is not None else None
        self.net = netmodel.compute_loads(
            self.stations, self.channel, self.gains, net, z, self.traffic,
            clusters=clusters, gamma=rc.load_gamma, tol=rc.load_tol,
            max_iter=rc.load_max_iter, init=prev_load,
        )

        # (7) running cost per BS
        totals = netmodel.total_powers(self.stations, self.net)
        per_bs_cost = self.cost.alpha * totals + self.cost.beta * self.net.load_raw

        # (8) every learner observes the negated cost of its own members;
        # clusters that left UEs uncovered observe the bounded penalty instead
        for key, learner in self.learners.items():
            if no_coverage or key in penalized:
                p_max = [self.stations[b].p_max for b in key]
                utility = -learn.penalty_cost(p_max, self.cost)
            else:
                utility = -float(np.sum(per_bs_cost[list(key)]))
            learner.update(played[key], utility)

        # (9) SBS-scope bookkeeping
        self.last_serving = serving.copy()
        s = self.sbs_idx
        return StepRecord(
            step=t,
            n_clusters=self.partition.n_clusters if self.partition else 0,
            mean_cluster_size=self.partition.mean_size() if self.partition else 0.0,
            state_changes=int(np.sum(state[s] != prev_state[s])),
            converged=self.net.converged,
            sbs_state=state[s].copy(),
            sbs_power=totals[s],
            sbs_load=self.net.load[s],
            sbs_load_raw=self.net.load_raw[s],
            sbs_cost=per_bs_cost[s],
        )


@dataclass
class RunResult:
    """Post-burn-in summary of one run; energies in joules, powers in watts."""

    run: int
    mode: str
    n_sbs: int
    n_ues: int
    mean_cost_per_bs: float
    mean_energy_per_bs: float
    energy_per_sbs: np.ndarray  # one sample per SBS (window energy)
    total_energy: float  # all steps, all SBSs
    mean_load: float
    cluster_count: float
    mean_cluster_size: float
    state_changes: int
    converged_frac: float
    records: list[StepRecord] | None = None
    cluster_events: list[ClusterEvent] | None = None


def burn_in_steps(steps: int, frac: float) -> int:
    """Leading steps dropped from summaries; always leaves a non-empty window."""
    return min(int(round(frac * steps)), steps - 1)


def run_once(
    cfg: ScenarioConfig,
    run_index: int,
    keep_records: bool = False,
    keep_clusters: bool = False,
) -> RunResult:
    """Execute one seeded run and reduce it to a RunResult.

    Three independent RNG streams are spawned from (seed, run_index): one
    for the drop, one for k-means restarts, one for learner action draws,
    so changing e.g. the learning dynamics never perturbs the geometry.
    """
    ss = np.random.SeedSequence([int(cfg.run.seed), int(run_index)])
    scen_seed, kmeans_seed, learn_seed = ss.spawn(3)
    stations, ues = generate_scenario(cfg, np.random.default_rng(scen_seed))
    world = World(
        cfg, stations, ues,
        np.random.default_rng(kmeans_seed), np.random.default_rng(learn_seed),
    )
    records = [world.step(t) for t in range(1, cfg.run.steps + 1)]
    burn = burn_in_steps(cfg.run.steps, cfg.run.burn_in_frac)
    window = records[burn:]
    n_sbs = int(world.sbs_idx.size)

    if n_sbs:
        cost = float(np.mean([np.sum(r.sbs_cost) / n_sbs for r in window]))
        energy = np.sum([r.sbs_power for r in window], axis=0) * STEP_SECONDS
        mean_energy = float(np.mean(energy))
        mean_load = float(np.mean([r.sbs_load for r in window]))
        total_energy = float(
            np.sum([np.sum(r.sbs_power) for r in records]) * STEP_SECONDS
        )
    else:
        cost, mean_energy, mean_load, total_energy = 0.0, 0.0, 0.0, 0.0
        energy = np.zeros(0)

    return RunResult(
        run=run_index,
        mode=cfg.run.mode,
        n_sbs=n_sbs,
        n_ues=len(ues),
        mean_cost_per_bs=cost,
        mean_energy_per_bs=mean_energy,
        energy_per_sbs=energy,
        total_energy=total_energy,
        mean_load=mean_load,
        cluster_count=float(np.mean([r.n_clusters for r in window])),
        mean_cluster_size=float(np.mean([r.mean_cluster_size for r in window])),
        state_changes=int(sum(r.state_changes for r in records)),
        converged_frac=float(np.mean([r.converged for r in records])),
        records=records if keep_records else None,
        cluster_events=world.cluster_events if keep_clusters else None,
    )


def _run_once_star(args):
    return run_once(*args)


@dataclass
class ExperimentResult:
    """Aggregate over the Monte-Carlo runs of one sweep point."""

    mode: str
    ue_count: int
    eps_d: float
    theta: float
    mean_cost_per_bs: float
    ci95: float  # 1.96 * sd / sqrt(runs) of the per-run mean cost
    mean_energy_per_bs: float
    mean_load: float
    cluster_count: float
    mean_cluster_size: float
    energy_samples: np.ndarray  # pooled per-SBS window energies, sorted
    runs: list[RunResult]


def run_experiment(
    cfg: ScenarioConfig,
    keep_records: bool = False,
    keep_clusters: bool = False,
) -> ExperimentResult:
    """Run cfg.run.runs seeded runs (in a process pool when jobs > 1)."""
    n = cfg.run.runs
    tasks = [(cfg, i, keep_records, keep_clusters) for i in range(n)]
    if cfg.run.jobs > 1 and n > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.run.jobs, n)) as pool:
            results = list(pool.map(_run_once_star, tasks))
    else:
        results = [run_once(*task) for task in tasks]
    results.sort(key=lambda r: r.run)

    costs = np.array([r.mean_cost_per_bs for r in results])
    ci95 = (
        1.96 * float(np.std(costs, ddof=1)) / float(np.sqrt(n)) if n > 1 else 0.0
    )
    pooled = (
        np.sort(np.concatenate([r.energy_per_sbs for r in results]))
        if results and results[0].n_sbs
        else np.zeros(0)
    )
    return ExperimentResult(
        mode=cfg.run.mode,
        ue_count=cfg.layout.n_ues,
        eps_d=cfg.clustering.eps_d_m,
        theta=cfg.clustering.theta,
        mean_cost_per_bs=float(np.mean(costs)),
        ci95=ci95,
        mean_energy_per_bs=float(np.mean([r.mean_energy_per_bs for r in results])),
        mean_load=float(np.mean([r.mean_load for r in results])),
        cluster_count=float(np.mean([r.cluster_count for r in results])),
        mean_cluster_size=float(np.mean([r.mean_cluster_size for r in results])),
        energy_samples=pooled,
        runs=results,
    )


def apply_sweep_param(cfg: ScenarioConfig, param: str, value: float) -> None:
    if param == "ues":
        cfg.layout.n_ues = int(value)
    elif param == "eps_d":
        cfg.clustering.eps_d_m = float(value)
    elif param == "theta":
        cfg.clustering.theta = float(value)
    else:
        raise ValueError(
            f"unknown sweep parameter {param!r}; expected one of {SWEEP_PARAMS}"
        )


def sweep(
    cfg: ScenarioConfig,
    param: str,
    values,
    modes=None,
    keep_records: bool = False,
    keep_clusters: bool = False,
) -> list[ExperimentResult]:
    """Run every (mode, value) combination; outer loop over modes.

    All sweep points reuse the same base seed, so scenario draws are common
    random numbers across points (identical BS drops; shared UE prefixes).
    """
    modes = list(MODES) if modes is None else list(modes)
    out = []
    for mode in modes:
        for v in values:
            point = copy.deepcopy(cfg)
            point.run.mode = mode
            apply_sweep_param(point, param, v)
            out.append(
                run_experiment(
                    point, keep_records=keep_records, keep_clusters=keep_clusters
                )
            )
    return out
