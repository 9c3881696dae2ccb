import json

import numpy as np
import pytest

from spade.core import BINARY, ConfigError, EndpointSpec, PolicyConfig
from spade.data_io import SyntheticConfig, generate_synthetic
from spade.service import (
    CampaignStore,
    LivePool,
    PendingBatchConflict,
    PoolExhausted,
    ServiceError,
    UnknownCampaign,
    state_json,
)
from spade.simulator import run_campaign, make_policy

AVG10 = EndpointSpec(EndpointSpec.AVG, 10, 8.0)


def live_pool(n=60, d=32, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 2, size=(n, d)).astype(float)
    return LivePool("PROT", [f"L{i:03d}" for i in range(n)], X, BINARY)


def fresh_store(tmp_path, name="a"):
    return CampaignStore(tmp_path / name)


class TestCreate:
    def test_create_issues_id_and_empty_state(self, tmp_path):
        store = fresh_store(tmp_path)
        cid = store.create_campaign(live_pool(), PolicyConfig(), AVG10, seed=5)
        state = store.get_state(cid)
        assert state["seen_count"] == 0
        assert state["pool_size"] == 60
        assert state["pending_batch"] is None

    def test_batch_larger_than_pool_rejected(self, tmp_path):
        store = fresh_store(tmp_path)
        with pytest.raises(ConfigError):
            store.create_campaign(live_pool(n=5), PolicyConfig(batch_size=10), AVG10)

    def test_unknown_campaign(self, tmp_path):
        store = fresh_store(tmp_path)
        with pytest.raises(UnknownCampaign):
            store.get_state("nope")


class TestSuggestAndResults:
    def test_full_cycle_updates_seen(self, tmp_path):
        store = fresh_store(tmp_path)
        cid = store.create_campaign(live_pool(), PolicyConfig(), AVG10, seed=1)
        batch = store.suggest(cid)["batch"]
        assert len(batch) == 10
        summary = store.submit_results(
            cid, [{"ligand_id": lid, "pic": 6.0 + i * 0.1}
                  for i, lid in enumerate(batch)])
        assert summary["seen_count"] == 10
        assert summary["pending_batch"] is None

    def test_suggest_idempotent_until_results(self, tmp_path):
        store = fresh_store(tmp_path)
        cid = store.create_campaign(live_pool(), PolicyConfig(), AVG10, seed=2)
        first = store.suggest(cid)
        second = store.suggest(cid)
        assert first["batch"] == second["batch"]
        assert second["pending"] is True
        # only one BatchSuggested event was written
        kinds = [e["kind"] for e in store.events(cid)]
        assert kinds.count("BatchSuggested") == 1

    def test_partial_results_conflict_and_override(self, tmp_path):
        store = fresh_store(tmp_path)
        cid = store.create_campaign(live_pool(), PolicyConfig(), AVG10, seed=3)
        batch = store.suggest(cid)["batch"]
        store.submit_results(cid, [{"ligand_id": batch[0], "pic": 7.0}])
        with pytest.raises(PendingBatchConflict):
            store.suggest(cid)
        fresh = store.suggest(cid, override=True)
        assert fresh["pending"] is False
        assert batch[0] not in fresh["batch"]

    def test_duplicate_and_unknown_observations(self, tmp_path):
        store = fresh_store(tmp_path)
        cid = store.create_campaign(live_pool(), PolicyConfig(), AVG10, seed=4)
        batch = store.suggest(cid)["batch"]
        store.submit_results(cid, [{"ligand_id": batch[0], "pic": 7.0}])
        with pytest.raises(ServiceError, match="duplicate"):
            store.submit_results(cid, [{"ligand_id": batch[0], "pic": 7.5}])
        with pytest.raises(ServiceError, match="unknown ligand"):
            store.submit_results(cid, [{"ligand_id": "GHOST", "pic": 7.5}])
        with pytest.raises(ServiceError, match="non-finite"):
            store.submit_results(cid, [{"ligand_id": batch[1], "pic": float("nan")}])

    def test_off_batch_flag_required(self, tmp_path):
        store = fresh_store(tmp_path)
        cid = store.create_campaign(live_pool(), PolicyConfig(), AVG10, seed=5)
        batch = store.suggest(cid)["batch"]
        outside = next(lid for lid in (f"L{i:03d}" for i in range(60))
                       if lid not in batch)
        with pytest.raises(ServiceError, match="off_batch"):
            store.submit_results(cid, [{"ligand_id": outside, "pic": 6.0}])
        summary = store.submit_results(cid, [{"ligand_id": outside, "pic": 6.0}],
                                       off_batch=True)
        assert summary["seen_count"] == 1

    def test_pool_exhaustion(self, tmp_path):
        store = fresh_store(tmp_path)
        cid = store.create_campaign(live_pool(n=10), PolicyConfig(batch_size=10),
                                    AVG10, seed=6)
        batch = store.suggest(cid)["batch"]
        store.submit_results(cid, [{"ligand_id": lid, "pic": 6.0} for lid in batch])
        with pytest.raises(PoolExhausted):
            store.suggest(cid)


class TestReplay:
    def _drive(self, store, cid, cycles=3):
        rng = np.random.default_rng(99)
        for _ in range(cycles):
            batch = store.suggest(cid)["batch"]
            store.submit_results(cid, [
                {"ligand_id": lid, "pic": float(rng.uniform(5, 9))} for lid in batch])

    def test_restart_reproduces_state_byte_identical(self, tmp_path):
        store = CampaignStore(tmp_path / "d")
        cid = store.create_campaign(live_pool(), PolicyConfig(), AVG10, seed=7)
        self._drive(store, cid)
        before = state_json(store.get_state(cid))
        reopened = CampaignStore(tmp_path / "d")  # simulated crash + restart
        after = state_json(reopened.get_state(cid))
        assert before == after

    def test_restart_midcycle_keeps_pending_batch(self, tmp_path):
        store = CampaignStore(tmp_path / "e")
        cid = store.create_campaign(live_pool(), PolicyConfig(), AVG10, seed=8)
        batch = store.suggest(cid)["batch"]
        store.submit_results(cid, [{"ligand_id": batch[0], "pic": 8.0}])
        reopened = CampaignStore(tmp_path / "e")
        state = reopened.get_state(cid)
        assert state["pending_batch"] == batch
        assert state["pending_reported"] == [batch[0]]
        with pytest.raises(PendingBatchConflict):
            reopened.suggest(cid)

    def test_next_suggestion_identical_after_restart(self, tmp_path):
        # Two stores driven identically, one restarted: suggestions must agree.
        paths = [tmp_path / "f1", tmp_path / "f2"]
        cids = []
        for p in paths:
            store = CampaignStore(p)
            cid = store.create_campaign(live_pool(), PolicyConfig(), AVG10, seed=9)
            self._drive(store, cid, cycles=2)
            cids.append(cid)
        s1 = CampaignStore(paths[0])  # restart
        s2 = CampaignStore(paths[1])
        assert s1.suggest(cids[0])["batch"] == s2.suggest(cids[1])["batch"]

    def test_event_log_is_gap_free(self, tmp_path):
        store = fresh_store(tmp_path)
        cid = store.create_campaign(live_pool(), PolicyConfig(), AVG10, seed=10)
        self._drive(store, cid, cycles=2)
        events = store.events(cid)
        assert [e["seq"] for e in events] == list(range(len(events)))
        assert events[0]["kind"] == "Created"


class TestInformationHygiene:
    def test_suggestions_depend_only_on_submitted_observations(self, tmp_path):
        # Same pool, same seed, different submitted PICs: later suggestions
        # must differ only because observations differ, never from hidden truth.
        pool = live_pool(n=80, d=24, seed=3)
        outcomes = []
        for variant, spread in enumerate((0.0, 3.0)):
            store = CampaignStore(tmp_path / f"h{variant}")
            cid = store.create_campaign(pool, PolicyConfig(), AVG10, seed=11)
            batch = store.suggest(cid)["batch"]
            store.submit_results(cid, [
                {"ligand_id": lid, "pic": 6.0 + spread * (i % 3)}
                for i, lid in enumerate(batch)])
            outcomes.append(store.suggest(cid)["batch"])
        # first random batch is shared; the informed second batches diverge
        assert outcomes[0] != outcomes[1]

    def test_matches_simulator_on_identical_inputs(self, tmp_path):
        # Scripted session: feeding the simulator's ground truth through the
        # service must reproduce the simulator's campaign exactly.
        ds = generate_synthetic(SyntheticConfig(
            n_ligands=120, dim=32, bit_density=0.2, signal_bits=8, seed=21))
        endpoint = EndpointSpec(EndpointSpec.AVG, 5, 7.0)
        cfg = PolicyConfig(batch_size=10)
        sim = run_campaign(ds, make_policy("spade", cfg), endpoint, cap=40, seed=33)

        pool = LivePool(ds.protein_id, ds.ids, ds.X, ds.kind)
        store = fresh_store(tmp_path)
        cid = store.create_campaign(pool, cfg, endpoint, seed=33)
        for cycle_batch in sim.cycle_log:
            got = store.suggest(cid)["batch"]
            assert got == cycle_batch
            store.submit_results(cid, [
                {"ligand_id": lid, "pic": ds.pic_of(lid)} for lid in got])
        state = store.get_state(cid)
        seen_pics = sorted((ds.pic_of(lid) for cyc in sim.cycle_log for lid in cyc),
                           reverse=True)
        top_expected = seen_pics[:10]
        assert [t["pic"] for t in state["top"]] == pytest.approx(top_expected)
        assert state["endpoint"]["reached"] == (not sim.failed)
