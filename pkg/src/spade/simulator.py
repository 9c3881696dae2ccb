"""Seeded DMTA-cycle simulation against a ground-truth dataset.

Each cycle the policy proposes a batch, the simulator reveals the hidden PICs
of those ligands, and the endpoint is checked at the cycle boundary.  A
campaign ends at the endpoint, at the test cap, or on pool exhaustion; the
failed flag is equivalent to ligands_to_target == cap, so a run that only
hits the endpoint on the cap boundary itself counts as a failure.  Replicate
r of a run uses seed base_seed + r; all policy randomness in cycle c flows
from a generator seeded with (campaign_seed, c), which makes campaigns
reproducible and lets an event log be replayed without generator state.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import Dataset, EndpointSpec, PolicyConfig, validate_dataset
from .policy import Proposal, make_context, rank_ids, update_help_counters

DEFAULT_CAP = 400


def cycle_rng(seed: int, cycle: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(cycle)])


def limit_worker_threads():
    """Pin BLAS to one thread inside pool workers; the parallelism is ours.

    The matrices here are small (matvecs against a few hundred negatives), so
    oversubscribing cores with BLAS threads only adds contention.
    """
    try:
        from threadpoolctl import threadpool_limits
        threadpool_limits(limits=1)
    except ImportError:
        pass


def endpoint_reached(seen_pics, endpoint: EndpointSpec) -> bool:
    """True once the k best seen PICs satisfy the endpoint."""
    pics = np.asarray(seen_pics, dtype=np.float64)
    if pics.size < endpoint.k:
        return False
    top = np.sort(pics)[-endpoint.k:]
    if endpoint.kind == EndpointSpec.AVG:
        return bool(top.mean() >= endpoint.target)
    return bool(top[0] >= endpoint.target)


@dataclass
class CampaignState:
    """Mutable per-campaign record: the only mutable state in a run."""

    dataset: Dataset
    seed: int
    seen_indices: list[int] = field(default_factory=list)
    seen_pics: list[float] = field(default_factory=list)
    help_counts: np.ndarray = None
    cycle_log: list[list[str]] = field(default_factory=list)

    def __post_init__(self):
        if self.help_counts is None:
            self.help_counts = np.zeros(self.dataset.n, dtype=np.int64)
        self._seen_mask = np.zeros(self.dataset.n, dtype=bool)
        self._seen_mask[self.seen_indices] = True
        self._id_rank = rank_ids(self.dataset.ids)
        self._mu = self.dataset.X.mean(axis=0) if self.dataset.n else None

    @property
    def rest_indices(self) -> np.ndarray:
        return np.flatnonzero(~self._seen_mask)

    def context(self, cycle: int):
        return make_context(
            self.dataset.ids, self.dataset.X,
            seen_indices=np.asarray(self.seen_indices, dtype=np.int64),
            seen_pics=np.asarray(self.seen_pics, dtype=np.float64),
            rest_indices=self.rest_indices,
            help_counts=self.help_counts,
            rng=cycle_rng(self.seed, cycle),
            kind=self.dataset.kind,
            mu=self._mu,
            id_rank=self._id_rank,
        )

    def apply(self, proposal: Proposal):
        for idx in proposal.batch:
            self.seen_indices.append(int(idx))
            self.seen_pics.append(float(self.dataset.pics[idx]))
            self._seen_mask[idx] = True
        self.help_counts = update_help_counters(self.help_counts, proposal)
        self.cycle_log.append([self.dataset.ids[i] for i in proposal.batch])


@dataclass(frozen=True)
class CampaignResult:
    ligands_to_target: int
    failed: bool
    cycle_log: list[list[str]]


def run_campaign(dataset: Dataset, policy, endpoint: EndpointSpec,
                 cap: int = DEFAULT_CAP, seed: int = 0) -> CampaignResult:
    """One seeded campaign; fully deterministic in (dataset, policy, seed)."""
    validate_dataset(dataset)
    state = CampaignState(dataset=dataset, seed=seed)
    tests = 0
    cycle = 0
    while tests < cap:
        if state.rest_indices.size == 0:
            break
        proposal = policy.propose(state.context(cycle))
        budget = cap - tests
        if len(proposal.batch) > budget:
            keep = set(proposal.batch[:budget])
            proposal = Proposal(
                batch=proposal.batch[:budget],
                helper_of={k: v for k, v in proposal.helper_of.items() if k in keep})
        state.apply(proposal)
        tests += len(proposal.batch)
        cycle += 1
        if tests < cap and endpoint_reached(state.seen_pics, endpoint):
            return CampaignResult(tests, False, state.cycle_log)
    return CampaignResult(cap, True, state.cycle_log)


@dataclass(frozen=True)
class RunResult:
    """Replicated campaigns for one (protein, policy, endpoint) cell."""

    protein_id: str
    policy_name: str
    endpoint: EndpointSpec
    batch_size: int
    cap: int
    seeds: list[int]
    ligands_to_target: list[int]
    failed: list[bool]

    @property
    def mlt(self) -> float:
        return float(np.mean(self.ligands_to_target))

    @property
    def failure_rate(self) -> float:
        return float(np.mean(self.failed))


def _one_replicate(args):
    dataset, policy, endpoint, cap, seed = args
    res = run_campaign(dataset, policy, endpoint, cap=cap, seed=seed)
    return res.ligands_to_target, res.failed


def run_replicates(dataset: Dataset, policy, endpoint: EndpointSpec,
                   reps: int = 50, base_seed: int = 0, cap: int = DEFAULT_CAP,
                   workers: int = 1,
                   executor: Optional[ProcessPoolExecutor] = None) -> RunResult:
    """reps independent campaigns with seeds base_seed..base_seed+reps-1.

    The mean ligands-to-target (MLT) includes cap-censored failures.  Results
    are ordered by replicate index, so worker count never changes the output.
    """
    seeds = [base_seed + r for r in range(reps)]
    jobs = [(dataset, policy, endpoint, cap, s) for s in seeds]
    if executor is not None:
        outcomes = list(executor.map(_one_replicate, jobs))
    elif workers > 1:
        with ProcessPoolExecutor(max_workers=workers,
                                 initializer=limit_worker_threads) as pool:
            outcomes = list(pool.map(_one_replicate, jobs))
    else:
        outcomes = [_one_replicate(j) for j in jobs]
    return RunResult(
        protein_id=dataset.protein_id,
        policy_name=policy.name,
        endpoint=endpoint,
        batch_size=policy.config.batch_size,
        cap=cap,
        seeds=seeds,
        ligands_to_target=[o[0] for o in outcomes],
        failed=[o[1] for o in outcomes],
    )


def make_policy(name: str, config: PolicyConfig):
    """Policy registry used by the CLI and benchmark harness."""
    from .baselines import GpPolicy
    from .policy import RandomPolicy, SpadePolicy

    if name == "spade":
        return SpadePolicy(config)
    if name == "random":
        return RandomPolicy(config)
    if name.startswith("gp-"):
        return GpPolicy(config, name[3:])
    raise ValueError(f"unknown policy {name!r}")
