"""Live campaign service: suggest batches, accept measured PICs, persist state.

Live mode has no ground truth: the pool is ids + embeddings only, and the
service learns PICs exclusively through submitted results.  Every mutation is
an append-only event (Created / BatchSuggested / ResultsSubmitted) written as
one JSON line and fsynced; folding the log reproduces the state exactly, so a
restart is a replay.  Batch suggestions embed their help-counter attribution
in the event payload, which keeps replay cheap (no classifier retraining).
"""
from __future__ import annotations

import json
import math
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .core import BINARY, DENSE, ConfigError, EndpointSpec, PolicyConfig
from .policy import make_context, rank_ids
from .simulator import cycle_rng, endpoint_reached, make_policy

SCHEMA_VERSION = 1


class ServiceError(ValueError):
    """Base for request-level failures (mapped to 4xx by the HTTP layer)."""


class UnknownCampaign(ServiceError):
    pass


class PendingBatchConflict(ServiceError):
    """A partially-reported batch is awaiting results; pass override to force."""


class PoolExhausted(ServiceError):
    pass


@dataclass
class LivePool:
    protein_id: str
    ids: list[str]
    X: np.ndarray
    kind: str

    def to_payload(self) -> dict:
        if self.kind == BINARY:
            emb = [np.packbits(row.astype(np.uint8)).tobytes().hex()
                   for row in self.X]
        else:
            emb = [[float(v) for v in row] for row in self.X]
        return {"protein_id": self.protein_id, "kind": self.kind,
                "dim": int(self.X.shape[1]), "ids": list(self.ids),
                "embeddings": emb}

    @classmethod
    def from_payload(cls, payload: dict) -> "LivePool":
        kind = payload["kind"]
        dim = int(payload["dim"])
        if kind == BINARY:
            rows = [np.unpackbits(np.frombuffer(bytes.fromhex(e), dtype=np.uint8))[:dim]
                    .astype(np.float64) for e in payload["embeddings"]]
        elif kind == DENSE:
            rows = [np.asarray(e, dtype=np.float64) for e in payload["embeddings"]]
        else:
            raise ServiceError(f"unknown embedding kind {kind!r}")
        X = np.stack(rows) if rows else np.zeros((0, dim))
        return cls(payload["protein_id"], list(payload["ids"]), X, kind)


@dataclass
class Campaign:
    """In-memory fold of one campaign's event log."""

    campaign_id: str
    pool: LivePool
    policy_name: str
    config: PolicyConfig
    endpoint: EndpointSpec
    seed: int
    seen: dict[str, float] = field(default_factory=dict)
    help_counts: np.ndarray = None
    pending_batch: Optional[list[str]] = None
    pending_reported: set = field(default_factory=set)
    cycles_suggested: int = 0
    history: list[dict] = field(default_factory=list)
    next_seq: int = 0
    lock: threading.RLock = field(default_factory=threading.RLock, repr=False)

    def __post_init__(self):
        if self.help_counts is None:
            self.help_counts = np.zeros(len(self.pool.ids), dtype=np.int64)
        self._index = {lid: i for i, lid in enumerate(self.pool.ids)}
        self._id_rank = rank_ids(self.pool.ids)
        self._mu = (self.pool.X.mean(axis=0) if len(self.pool.ids)
                    else np.zeros(0))

    # -- event folds ------------------------------------------------------

    def fold_batch_suggested(self, payload: dict):
        self.pending_batch = list(payload["batch"])
        self.pending_reported = set()
        self.cycles_suggested += 1
        for anchor_id in payload.get("helpers", {}).values():
            self.help_counts[self._index[anchor_id]] += 1
        self.history.append({"cycle": self.cycles_suggested,
                             "batch": list(payload["batch"]),
                             "observations": []})

    def fold_results_submitted(self, payload: dict):
        for obs in payload["observations"]:
            lid, pic = obs["ligand_id"], float(obs["pic"])
            self.seen[lid] = pic
            if self.pending_batch and lid in self.pending_batch:
                self.pending_reported.add(lid)
        if self.history:
            self.history[-1]["observations"].extend(
                [dict(o) for o in payload["observations"]])
        if self.pending_batch and self.pending_reported >= set(self.pending_batch):
            self.pending_batch = None
            self.pending_reported = set()

    # -- queries ----------------------------------------------------------

    def sorted_seen(self) -> list[tuple[str, float]]:
        return sorted(self.seen.items(), key=lambda kv: (-kv[1], kv[0]))

    def state_summary(self) -> dict:
        top = self.sorted_seen()
        pics = [p for _, p in top]
        k = self.endpoint.k
        current = None
        if len(pics) >= k:
            current = (float(np.mean(pics[:k]))
                       if self.endpoint.kind == EndpointSpec.AVG else pics[k - 1])
        return {
            "schema": SCHEMA_VERSION,
            "campaign_id": self.campaign_id,
            "protein_id": self.pool.protein_id,
            "policy": self.policy_name,
            "pool_size": len(self.pool.ids),
            "seen_count": len(self.seen),
            "batch_size": self.config.batch_size,
            "top": [{"ligand_id": lid, "pic": pic} for lid, pic in top[:10]],
            "endpoint": {
                "kind": self.endpoint.kind,
                "k": k,
                "target": self.endpoint.target,
                "current": current,
                "reached": endpoint_reached(pics, self.endpoint),
            },
            "progress": {
                "avg_top10": float(np.mean(pics[:10])) if len(pics) >= 10 else None,
                "min_top3": pics[2] if len(pics) >= 3 else None,
            },
            "pending_batch": list(self.pending_batch) if self.pending_batch else None,
            "pending_reported": sorted(self.pending_reported),
            "cycles": self.history,
        }

    def compute_suggestion(self) -> tuple[list[str], dict[str, str]]:
        rest = [i for i, lid in enumerate(self.pool.ids) if lid not in self.seen]
        if not rest:
            raise PoolExhausted(f"campaign {self.campaign_id}: no untested ligands")
        seen_idx = np.array([self._index[lid] for lid in self.seen], dtype=np.int64)
        ctx = make_context(
            self.pool.ids, self.pool.X,
            seen_indices=seen_idx,
            seen_pics=np.array([self.seen[self.pool.ids[i]] for i in seen_idx]),
            rest_indices=np.array(rest, dtype=np.int64),
            help_counts=self.help_counts,
            rng=cycle_rng(self.seed, self.cycles_suggested),
            kind=self.pool.kind,
            mu=self._mu,
            id_rank=self._id_rank,
        )
        policy = make_policy(self.policy_name, self.config)
        proposal = policy.propose(ctx)
        batch = [self.pool.ids[i] for i in proposal.batch]
        helpers = {self.pool.ids[k]: self.pool.ids[v]
                   for k, v in proposal.helper_of.items()}
        return batch, helpers


class CampaignStore:
    """All campaigns under one data directory; one event-log file each."""

    def __init__(self, data_dir):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._campaigns: dict[str, Campaign] = {}
        self._lock = threading.Lock()
        for log in sorted(self.data_dir.glob("*.events")):
            campaign = self._replay_file(log)
            self._campaigns[campaign.campaign_id] = campaign

    # -- persistence ------------------------------------------------------

    def _log_path(self, campaign_id: str) -> Path:
        return self.data_dir / f"{campaign_id}.events"

    def _append_event(self, campaign: Campaign, kind: str, payload: dict):
        event = {"seq": campaign.next_seq, "kind": kind,
                 "ts": round(time.time(), 6), "payload": payload}
        line = json.dumps(event, sort_keys=True, separators=(",", ":"))
        with open(self._log_path(campaign.campaign_id), "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        campaign.next_seq += 1

    @staticmethod
    def _fold(campaign: Optional[Campaign], event: dict) -> Campaign:
        kind = event["kind"]
        payload = event["payload"]
        if kind == "Created":
            campaign = Campaign(
                campaign_id=payload["campaign_id"],
                pool=LivePool.from_payload(payload["pool"]),
                policy_name=payload["policy"],
                config=PolicyConfig(**payload["config"]),
                endpoint=EndpointSpec(**payload["endpoint"]),
                seed=int(payload["seed"]),
            )
        elif campaign is None:
            raise ServiceError("event log does not start with Created")
        elif kind == "BatchSuggested":
            campaign.fold_batch_suggested(payload)
        elif kind == "ResultsSubmitted":
            campaign.fold_results_submitted(payload)
        else:
            raise ServiceError(f"unknown event kind {kind!r}")
        campaign.next_seq = event["seq"] + 1
        return campaign

    def _replay_file(self, path: Path) -> Campaign:
        campaign = None
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh):
                event = json.loads(line)
                if event["seq"] != lineno:
                    raise ServiceError(f"{path}: sequence gap at line {lineno}")
                campaign = self._fold(campaign, event)
        if campaign is None:
            raise ServiceError(f"{path}: empty event log")
        return campaign

    # -- API --------------------------------------------------------------

    def create_campaign(self, pool: LivePool, config: PolicyConfig,
                        endpoint: EndpointSpec, seed: int = 0,
                        policy: str = "spade") -> str:
        if len(pool.ids) != len(set(pool.ids)):
            raise ConfigError("pool ligand ids must be unique")
        if len(pool.ids) == 0:
            raise ConfigError("pool must contain at least one ligand")
        if config.batch_size > len(pool.ids):
            raise ConfigError(
                f"batch size {config.batch_size} exceeds pool size {len(pool.ids)}")
        if not np.all(np.isfinite(pool.X)):
            raise ConfigError("pool embeddings must be finite")
        make_policy(policy, config)  # validates the name
        campaign_id = uuid.uuid4().hex[:12]
        campaign = Campaign(campaign_id=campaign_id, pool=pool,
                            policy_name=policy, config=config,
                            endpoint=endpoint, seed=seed)
        payload = {
            "schema": SCHEMA_VERSION,
            "campaign_id": campaign_id,
            "policy": policy,
            "config": {
                "sigma": config.sigma, "alpha": config.alpha, "beta": config.beta,
                "n_max": config.n_max, "p_plus": config.p_plus,
                "batch_size": config.batch_size, "help_limit": config.help_limit,
                "solver_max_iter": config.solver_max_iter,
                "solver_tol": config.solver_tol,
            },
            "endpoint": {"kind": endpoint.kind, "k": endpoint.k,
                         "target": endpoint.target},
            "seed": seed,
            "pool": pool.to_payload(),
        }
        with self._lock:
            self._campaigns[campaign_id] = campaign
        self._append_event(campaign, "Created", payload)
        return campaign_id

    def _get(self, campaign_id: str) -> Campaign:
        with self._lock:
            campaign = self._campaigns.get(campaign_id)
        if campaign is None:
            raise UnknownCampaign(f"unknown campaign {campaign_id!r}")
        return campaign

    def campaign_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._campaigns)

    def suggest(self, campaign_id: str, override: bool = False) -> dict:
        campaign = self._get(campaign_id)
        with campaign.lock:
            if campaign.pending_batch is not None and not override:
                if not campaign.pending_reported:
                    # Idempotent: same batch until results arrive.
                    return {"campaign_id": campaign_id,
                            "cycle": campaign.cycles_suggested,
                            "batch": list(campaign.pending_batch),
                            "pending": True}
                raise PendingBatchConflict(
                    f"campaign {campaign_id}: batch partially reported "
                    f"({len(campaign.pending_reported)}/{len(campaign.pending_batch)}); "
                    "pass override=true to request a fresh batch")
            batch, helpers = campaign.compute_suggestion()
            payload = {"cycle": campaign.cycles_suggested + 1, "batch": batch,
                       "helpers": helpers,
                       "random": len(campaign.seen) == 0}
            campaign.fold_batch_suggested(payload)
            self._append_event(campaign, "BatchSuggested", payload)
            return {"campaign_id": campaign_id,
                    "cycle": campaign.cycles_suggested,
                    "batch": batch, "pending": False}

    def submit_results(self, campaign_id: str, observations: list[dict],
                       off_batch: bool = False) -> dict:
        campaign = self._get(campaign_id)
        with campaign.lock:
            if not observations:
                raise ServiceError("no observations submitted")
            seen_now = set()
            for obs in observations:
                lid = obs.get("ligand_id")
                if lid not in campaign._index:
                    raise ServiceError(f"unknown ligand {lid!r}")
                if lid in campaign.seen or lid in seen_now:
                    raise ServiceError(f"duplicate observation for ligand {lid!r}")
                pic = obs.get("pic")
                if not isinstance(pic, (int, float)) or not math.isfinite(pic):
                    raise ServiceError(f"non-finite PIC for ligand {lid!r}")
                if not off_batch and (campaign.pending_batch is None
                                      or lid not in campaign.pending_batch):
                    raise ServiceError(
                        f"ligand {lid!r} is not in the suggested batch; "
                        "flag off_batch to record unscheduled tests")
                seen_now.add(lid)
            payload = {"observations": [
                {"ligand_id": o["ligand_id"], "pic": float(o["pic"])}
                for o in observations], "off_batch": off_batch}
            campaign.fold_results_submitted(payload)
            self._append_event(campaign, "ResultsSubmitted", payload)
            return campaign.state_summary()

    def get_state(self, campaign_id: str) -> dict:
        campaign = self._get(campaign_id)
        with campaign.lock:
            return campaign.state_summary()

    def events(self, campaign_id: str) -> list[dict]:
        self._get(campaign_id)
        path = self._log_path(campaign_id)
        with open(path, "r", encoding="utf-8") as fh:
            return [json.loads(line) for line in fh]


def state_json(summary: dict) -> str:
    """Canonical serialization used for byte-identical comparisons."""
    return json.dumps(summary, sort_keys=True, separators=(",", ":"))
