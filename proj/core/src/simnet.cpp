// Copyright 2026 the postchain authors. Licensed under the Apache License,
// Version 2.0. See the COPYING file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "postchain/simnet.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <set>
#include <unordered_set>

namespace postchain::sim {

const char* to_string(LinkClass c) {
    switch (c) {
        case LinkClass::InfiniBand: return "infiniband";
        case LinkClass::Ethernet: return "ethernet";
        case LinkClass::Custom: return "custom";
    }
    return "unknown";
}

LinkClass link_class_from_string(const std::string& s) {
    if (s == "infiniband" || s == "ib") return LinkClass::InfiniBand;
    if (s == "ethernet" || s == "eth") return LinkClass::Ethernet;
    if (s == "custom") return LinkClass::Custom;
    throw ConfigError("unknown link class: " + s);
}

const char* to_string(SystemMode m) {
    switch (m) {
        case SystemMode::Conventional: return "conventional";
        case SystemMode::MemoryOnly: return "memory";
        case SystemMode::SciChain: return "scichain";
    }
    return "unknown";
}

SystemMode mode_from_string(const std::string& s) {
    if (s == "conventional") return SystemMode::Conventional;
    if (s == "memory" || s == "memory-only") return SystemMode::MemoryOnly;
    if (s == "scichain") return SystemMode::SciChain;
    throw ConfigError("unknown system mode: " + s);
}

const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::TxSubmit: return "TxSubmit";
        case EventKind::BlockProposed: return "BlockProposed";
        case EventKind::BlockDeliver: return "BlockDeliver";
        case EventKind::VoteDeliver: return "VoteDeliver";
        case EventKind::StorageRequest: return "StorageRequest";
        case EventKind::StorageReply: return "StorageReply";
        case EventKind::NodeFail: return "NodeFail";
        case EventKind::NodeRestart: return "NodeRestart";
        case EventKind::QueuePop: return "QueuePop";
    }
    return "Unknown";
}

double LatencyModel::class_mean_us(LinkClass c, double custom_mean_us) {
    switch (c) {
        case LinkClass::InfiniBand: return 2.0;
        case LinkClass::Ethernet: return 250.0;
        case LinkClass::Custom: return custom_mean_us;
    }
    return custom_mean_us;
}

double SimConfig::link_jitter_sigma_us() const {
    if (jitter_var < 0) return link_mean_us() / 10.0;
    return std::sqrt(jitter_var);
}

void SimConfig::validate() const {
    if (nodes < 2) throw ConfigError("need at least 2 compute nodes");
    if (!difficulty.valid()) throw ConfigError("difficulty out of range [0, 16]");
    if (batch_size < kMinBatchSize)
        throw ConfigError("batch size below the twelve-transaction minimum");
    if (window_capacity < 1) throw ConfigError("window capacity must be positive");
    if (pop_interval_us <= 0) throw ConfigError("pop interval must be positive");
    if (per_hash_us <= 0) throw ConfigError("per-hash cost must be positive");
    if (storage_rtt_us <= 0) throw ConfigError("storage round trip must be positive");
    if (tx_interval_us <= 0) throw ConfigError("transaction interval must be positive");
    if (tamper_fraction < 0 || tamper_fraction > 0.49)
        throw ConfigError("tamper fraction must lie in [0, 0.49]");
    if (analytic_difficulty_threshold < 0 || analytic_difficulty_threshold > Difficulty::kMax)
        throw ConfigError("analytic mining threshold out of range");
    if (max_retries < 0) throw ConfigError("max retries must be non-negative");
    if (link_class == LinkClass::Custom && mean_us <= 0)
        throw ConfigError("custom link mean must be positive");
}

void FaultPlan::validate(std::size_t n_nodes) const {
    std::map<NodeId, int> down;  // entity -> outstanding fails
    std::vector<const FaultEvent*> ordered;
    ordered.reserve(schedule.size());
    for (const auto& e : schedule) ordered.push_back(&e);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const FaultEvent* a, const FaultEvent* b) { return a->at_us < b->at_us; });
    for (const auto* e : ordered) {
        if (e->node > n_nodes) throw PlanError("fault addresses unknown node");
        switch (e->action) {
            case FaultAction::Fail:
                if (down[e->node] > 0) throw PlanError("fail of an already-failed entity");
                down[e->node] = 1;
                break;
            case FaultAction::Restart:
                if (down[e->node] == 0) throw PlanError("restart without a preceding fail");
                down[e->node] = 0;
                break;
            case FaultAction::TamperBlock:
                if (e->node == 0) throw PlanError("cannot tamper the shared storage");
                break;
        }
    }
    if (byzantine_fraction < 0 || byzantine_fraction > 0.49)
        throw PlanError("byzantine fraction must lie in [0, 0.49]");
}

Nsec mining_time_ns(std::uint64_t hash_evals, double per_hash_us, const NodeProfile& profile) {
    return Nsec(double(hash_evals) * per_hash_us * 1000.0 / profile.speed + 0.5);
}

double SimReport::mean_latency_us() const {
    if (blocks.empty()) return 0;
    double sum = 0;
    for (const auto& b : blocks) sum += ns_to_us(b.latency_ns());
    return sum / double(blocks.size());
}

namespace {

enum DeliverPurpose : std::uint64_t { kProposal = 0, kCommit = 1, kCommitDone = 2 };
enum StorageOp : std::uint64_t { kPull = 0, kPush = 1, kSync = 2 };

struct Ev {
    Nsec at = 0;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::TxSubmit;
    NodeId node = 0;
    std::uint64_t round_id = 0;
    std::uint64_t aux = 0;

    bool operator>(const Ev& o) const {
        if (at != o.at) return at > o.at;
        return seq > o.seq;
    }
};

struct OutMsg {
    DeliverPurpose purpose = kProposal;
    std::uint64_t round_id = 0;
};

struct NodeState {
    consensus::ComputeNode core;
    std::deque<OutMsg> queue;
    bool pop_scheduled = false;
    std::uint64_t queue_epoch = 0;  // bumped on failure; voids scheduled pops
    std::uint64_t committed_blocks = 0;
    double append_us_sum = 0;
    std::uint64_t append_samples = 0;

    NodeState(NodeId id, std::size_t capacity, std::int64_t initial_balance)
        : core(id, capacity, initial_balance) {}
};

struct Candidate {
    NodeId node = 0;
    Block block;
    Nsec duration = 0;
    std::uint64_t evals = 0;
    bool voided = false;
};

enum class RoundPhase { Mining, Voting, Pulling, Distributing, Pushing };

struct Round {
    std::uint64_t id = 0;
    Nsec race_start = 0;
    RoundPhase phase = RoundPhase::Mining;
    std::vector<Candidate> candidates;
    std::size_t candidates_outstanding = 0;
    std::vector<Transaction> batch;

    Block block;
    NodeId proposer = 0;
    Nsec mining_ns = 0;
    std::uint64_t winner_evals = 0;
    bool broadcast_popped = false;

    consensus::QuorumSet votes;
    std::map<NodeId, bool> vote_of;  // filled at delivery, read at vote arrival
    std::size_t votes_outstanding = 0;

    bool storage_pulled = false;
    bool storage_pushed = false;
    int storage_accesses = 0;
    Nsec quorum_at = 0;
    std::size_t validators_at_commit = 0;

    std::size_t appends_outstanding = 0;
    int attempts = 1;
    int retries = 0;
    Nsec first_race_start = 0;
};

struct WaitingBlock {
    Block block;
    std::vector<Transaction> batch;
    int retries = 0;
    int attempts = 1;
    Nsec first_race_start = 0;
};

}  // namespace

struct Simulator::Impl {
    SimConfig cfg;
    std::vector<Transaction> workload;
    FaultPlan plan;
    std::ostream* trace = nullptr;

    Difficulty verify_difficulty{1};  // capped for analytic mining runs

    std::priority_queue<Ev, std::vector<Ev>, std::greater<Ev>> heap;
    std::uint64_t next_event_seq = 0;
    Nsec clock = 0;

    std::vector<NodeState> nodes;  // index = node id, [0] unused
    storage::SharedLedger shared;
    bool storage_up = true;
    std::uint64_t storage_epoch = 0;

    std::vector<Block> committed;  // canonical chain incl. genesis (all modes)
    BalanceBook committed_balances;
    std::unordered_set<std::uint64_t> committed_tx_ids;

    TxPool pool;
    std::optional<Round> round;
    std::uint64_t next_round_id = 1;
    std::deque<WaitingBlock> waiting;
    std::set<NodeId> awaiting_sync;  // Restarting nodes whose sync was lost

    LinkSampler link;
    Rng mine_rng;

    SimReport report;
    Sha256 event_hasher;

    Impl(SimConfig config, std::vector<Transaction> txs, FaultPlan fault_plan)
        : cfg(std::move(config)),
          workload(std::move(txs)),
          plan(std::move(fault_plan)),
          shared(cfg.initial_balance),
          committed_balances(cfg.initial_balance),
          link(LatencyModel{cfg.link_class, cfg.link_mean_us(), cfg.link_jitter_sigma_us(),
                            derive_seed(cfg.seed, 1)}),
          mine_rng(derive_seed(cfg.seed, 2)) {
        cfg.validate();
        plan.validate(cfg.nodes);
        verify_difficulty.leading_zeros =
            std::min(cfg.difficulty.leading_zeros, cfg.analytic_difficulty_threshold);

        if (has_storage() && !cfg.ledger_path.empty())
            shared = storage::SharedLedger::recover_from_file(cfg.ledger_path,
                                                              cfg.initial_balance);

        nodes.reserve(cfg.nodes + 1);
        nodes.emplace_back(0, cfg.window_capacity, cfg.initial_balance);  // placeholder
        for (NodeId id = 1; id <= cfg.nodes; ++id)
            nodes.emplace_back(id, cfg.window_capacity, cfg.initial_balance);

        committed.push_back(Block::genesis());
        report.rewards.assign(cfg.nodes + 1, 0);

        for (const auto& tx : workload)
            schedule(us_to_ns(double(tx.timestamp)), EventKind::TxSubmit, tx.sender, 0,
                     std::uint64_t(&tx - workload.data()));
        for (const auto& f : plan.schedule) {
            const EventKind kind = f.action == FaultAction::Fail      ? EventKind::NodeFail
                                   : f.action == FaultAction::Restart ? EventKind::NodeRestart
                                                                      : EventKind::NodeFail;
            if (f.action == FaultAction::TamperBlock) {
                schedule(us_to_ns(f.at_us), EventKind::NodeFail, f.node, 0,
                         0x8000'0000'0000'0000ULL | f.tamper_index);
            } else {
                schedule(us_to_ns(f.at_us), kind, f.node, 0, 0);
            }
        }
    }

    bool has_storage() const { return cfg.mode == SystemMode::SciChain; }

    Nsec pop_interval_ns() const { return us_to_ns(cfg.pop_interval_us); }
    Nsec storage_rtt_ns() const { return us_to_ns(cfg.storage_rtt_us); }
    Nsec disk_write_ns() const { return us_to_ns(cfg.disk_write_us); }
    Nsec validate_ns() const {
        return mining_time_ns(1 + std::uint64_t(cfg.batch_size), cfg.per_hash_us);
    }

    const Block& canonical_tip() const { return committed.back(); }

    void schedule(Nsec at, EventKind kind, NodeId node, std::uint64_t round_id,
                  std::uint64_t aux) {
        heap.push(Ev{std::max(at, clock), next_event_seq++, kind, node, round_id, aux});
    }

    // ---- round lifecycle -------------------------------------------------

    void maybe_start_round() {
        if (round || pool.size() < cfg.batch_size) return;
        std::vector<NodeId> participants;
        for (NodeId id = 1; id <= cfg.nodes; ++id) {
            const auto& n = nodes[id];
            if (n.core.phase != consensus::Phase::Up || n.core.tampered) continue;
            if (n.core.ledger.tip_hash() != canonical_tip().hash) continue;  // lagging
            participants.push_back(id);
        }
        if (participants.empty()) return;

        Round r;
        r.id = next_round_id++;
        r.race_start = clock;
        r.first_race_start = clock;
        r.batch = pool.pack(cfg.batch_size);
        r.votes.total_nodes = cfg.nodes;
        r.candidates.reserve(participants.size());

        const bool analytic = cfg.difficulty.leading_zeros > cfg.analytic_difficulty_threshold;
        const double p_success = std::pow(16.0, -double(cfg.difficulty.leading_zeros));
        for (NodeId id : participants) {
            Candidate c;
            c.node = id;
            const auto mined =
                mine_block(canonical_tip().hash, r.batch, id, nodes[id].committed_blocks + 1,
                           verify_difficulty);
            c.block = mined.block;
            c.evals = analytic ? mine_rng.geometric_trials(p_success) : mined.hash_evals;
            c.duration = mining_time_ns(c.evals, cfg.per_hash_us);
            c.block.mined_at = Usec(ns_to_us(clock + c.duration) + 0.5);
            report.candidate_mine_us.push_back(double(c.evals) * cfg.per_hash_us);
            r.candidates.push_back(std::move(c));
        }
        r.candidates_outstanding = r.candidates.size();
        round = std::move(r);
        for (std::size_t i = 0; i < round->candidates.size(); ++i) {
            schedule(clock + round->candidates[i].duration, EventKind::BlockProposed,
                     round->candidates[i].node, round->id, i);
        }
    }

    void enqueue_block_msg(NodeId sender, DeliverPurpose purpose) {
        auto& n = nodes[sender];
        n.queue.push_back(OutMsg{purpose, round->id});
        if (!n.pop_scheduled) {
            n.pop_scheduled = true;
            schedule(clock + pop_interval_ns(), EventKind::QueuePop, sender, 0, n.queue_epoch);
        }
    }

    void on_block_proposed(const Ev& ev) {
        if (!round || round->id != ev.round_id) return;  // round gone
        auto& cand = round->candidates[ev.aux];
        if (round->phase != RoundPhase::Mining) return;  // lost the race
        if (cand.voided) return;
        if (nodes[ev.node].core.phase != consensus::Phase::Up) {
            void_candidate(ev.aux);
            return;
        }
        // Winner: the earliest surviving proposal.
        round->phase = RoundPhase::Voting;
        round->block = cand.block;
        round->proposer = ev.node;
        round->mining_ns = cand.duration;
        round->winner_evals = cand.evals;
        round->votes.compute_voters.insert(ev.node);  // the creator vouches
        enqueue_block_msg(ev.node, kProposal);
    }

    void void_candidate(std::size_t index) {
        auto& cand = round->candidates[index];
        if (cand.voided) return;
        cand.voided = true;
        ++report.mining_aborts;
        if (--round->candidates_outstanding == 0 && round->phase == RoundPhase::Mining) {
            // Every racer died; recycle the batch for a later race.
            pool.requeue_front(std::move(round->batch));
            round.reset();
        }
    }

    void on_queue_pop(const Ev& ev) {
        auto& n = nodes[ev.node];
        if (ev.aux != n.queue_epoch) return;  // voided by a failure
        if (n.core.phase != consensus::Phase::Up || n.queue.empty()) {
            n.pop_scheduled = false;
            return;
        }
        const OutMsg msg = n.queue.front();
        n.queue.pop_front();
        if (round && msg.round_id == round->id) {
            if (msg.purpose == kProposal) {
                round->broadcast_popped = true;
                round->votes_outstanding = cfg.nodes - 1;
            }
            for (NodeId peer = 1; peer <= cfg.nodes; ++peer) {
                if (peer == ev.node) continue;
                schedule(clock + link.sample_ns(), EventKind::BlockDeliver, peer, msg.round_id,
                         msg.purpose);
            }
        }
        if (!n.queue.empty()) {
            schedule(clock + pop_interval_ns(), EventKind::QueuePop, ev.node, 0, n.queue_epoch);
        } else {
            n.pop_scheduled = false;
        }
    }

    void on_block_deliver(const Ev& ev) {
        if (!round || round->id != ev.round_id) return;
        switch (DeliverPurpose(ev.aux)) {
            case kProposal: deliver_proposal(ev.node); break;
            case kCommit: deliver_commit(ev.node); break;
            case kCommitDone: finish_append(ev.node); break;
        }
    }

    void deliver_proposal(NodeId id) {
        if (round->phase != RoundPhase::Voting) return;  // decision already made
        auto& n = nodes[id];
        if (n.core.phase != consensus::Phase::Up) {
            ++report.dropped_deliveries;
            vote_resolved();
            return;
        }
        RejectReason why = RejectReason::None;
        const bool yes =
            consensus::node_votes_for(n.core, round->block, verify_difficulty, &why);
        round->vote_of[id] = yes;
        schedule(clock + validate_ns() + link.sample_ns(), EventKind::VoteDeliver, id,
                 round->id, yes ? 1 : 0);
    }

    void on_vote_deliver(const Ev& ev) {
        if (!round || round->id != ev.round_id) return;
        if (round->phase != RoundPhase::Voting) return;  // stale straggler
        if (ev.aux != 0) round->votes.compute_voters.insert(ev.node);
        if (round->votes.quorum()) {
            begin_commit();
            return;
        }
        vote_resolved();
    }

    void vote_resolved() {
        if (round->votes_outstanding > 0) --round->votes_outstanding;
        if (round->votes_outstanding != 0 || round->phase != RoundPhase::Voting) return;
        if (!round->broadcast_popped) return;
        // Compute quorum exhausted without a majority: storage fallback.
        if (!has_storage()) {
            park_round(0);
            return;
        }
        if (!storage_up) {
            park_round(0);
            return;
        }
        round->phase = RoundPhase::Pulling;
        schedule(clock + storage_rtt_ns(), EventKind::StorageReply, 0, round->id,
                 (storage_epoch << 8) | kPull);
    }

    void begin_commit() {
        round->phase = RoundPhase::Distributing;
        round->quorum_at = clock;
        round->validators_at_commit = round->votes.size();
        // The proposer holds the block and appends at the decision point.
        append_on_node(round->proposer, clock);
        if (nodes[round->proposer].core.phase == consensus::Phase::Up) {
            enqueue_block_msg(round->proposer, kCommit);
            round->appends_outstanding = cfg.nodes - 1;
        } else {
            // Proposer down: survivors learned the block during voting; the
            // commit decision reaches them one link hop later.
            round->appends_outstanding = 0;
            for (NodeId peer = 1; peer <= cfg.nodes; ++peer) {
                if (peer == round->proposer) continue;
                ++round->appends_outstanding;
                schedule(clock + link.sample_ns(), EventKind::BlockDeliver, peer, round->id,
                         kCommit);
            }
            if (round->appends_outstanding == 0) maybe_close_round();
        }
    }

    void deliver_commit(NodeId id) {
        if (round->phase != RoundPhase::Distributing) return;
        auto& n = nodes[id];
        if (n.core.phase != consensus::Phase::Up) {
            ++report.dropped_deliveries;
            finish_append(0);  // nothing to apply; account the slot
            return;
        }
        if (cfg.mode == SystemMode::Conventional) {
            // Every node persists every block to its own simulated disk.
            apply_append(id);
            schedule(clock + disk_write_ns(), EventKind::BlockDeliver, id, round->id,
                     kCommitDone);
            return;
        }
        append_on_node(id, clock);
        finish_append(id);
    }

    void finish_append(NodeId id) {
        if (cfg.mode == SystemMode::Conventional && id != 0) record_append_latency(id, clock);
        if (round->appends_outstanding > 0) --round->appends_outstanding;
        maybe_close_round();
    }

    void apply_append(NodeId id) {
        auto& n = nodes[id];
        const ValidationResult v = n.core.ledger.validate_block(round->block, verify_difficulty);
        if (v.ok) {
            n.core.ledger.append_block(round->block, verify_difficulty);
        } else if (v.reason != RejectReason::AlreadyPresent) {
            resync_node(id);  // lagging window; catch up from the ground truth
        }
    }

    void append_on_node(NodeId id, Nsec at) {
        if (nodes[id].core.phase != consensus::Phase::Up) return;
        apply_append(id);
        record_append_latency(id, at);
    }

    void record_append_latency(NodeId id, Nsec at) {
        auto& n = nodes[id];
        n.append_us_sum += ns_to_us(at - round->race_start);
        ++n.append_samples;
    }

    void maybe_close_round() {
        if (round->phase != RoundPhase::Distributing || round->appends_outstanding != 0) return;
        if (has_storage() && !round->storage_pushed) {
            if (!storage_up) {
                park_round(round->storage_accesses);
                return;
            }
            round->phase = RoundPhase::Pushing;
            schedule(clock + storage_rtt_ns(), EventKind::StorageReply, 0, round->id,
                     (storage_epoch << 8) | kPush);
            return;
        }
        finish_commit();
    }

    void on_storage_reply(const Ev& ev) {
        const std::uint64_t epoch = ev.aux >> 8;
        const StorageOp op = StorageOp(ev.aux & 0xff);
        if (epoch != storage_epoch || !storage_up) return;  // lost with the storage node
        if (op == kSync) {
            complete_node_sync(ev.node);
            return;
        }
        if (!round || round->id != ev.round_id) return;
        if (op == kPull) {
            if (round->phase != RoundPhase::Pulling) return;
            round->storage_pulled = true;
            round->storage_accesses = 1;
            const bool ok = shared.pull_validate(round->block, verify_difficulty);
            if (ok) round->votes.storage_voted = true;
            if (ok && (round->votes.quorum() || cfg.storage_override)) {
                shared.push(round->block);  // same storage visit
                round->storage_pushed = true;
                begin_commit();
            } else {
                park_round(1);
            }
            return;
        }
        // kPush: durable commit acknowledged.
        if (round->phase != RoundPhase::Pushing) return;
        shared.push(round->block);
        round->storage_pushed = true;
        if (round->storage_accesses == 0) round->storage_accesses = 1;
        finish_commit();
    }

    void finish_commit() {
        BlockRecord rec;
        rec.chain_position = committed.size();
        rec.hash = round->block.hash;
        rec.creator = round->block.creator;
        rec.race_start = round->first_race_start;
        rec.committed_at = clock;
        rec.mining_ns = round->mining_ns;
        rec.winner_evals = round->winner_evals;
        rec.validators = round->validators_at_commit;
        rec.storage_pulled = round->storage_pulled;
        rec.storage_pushed = round->storage_pushed;
        rec.storage_accesses = round->storage_accesses;
        rec.attempts = round->attempts;
        report.blocks.push_back(rec);

        committed.push_back(round->block);
        for (const auto& tx : round->block.transactions) {
            committed_balances.add(tx.sender, -tx.amount);
            committed_balances.add(tx.receiver, tx.amount);
            committed_tx_ids.insert(tx.tx_id);
        }
        ++nodes[round->block.creator].committed_blocks;
        ++report.rewards[round->block.creator];
        round.reset();

        retry_waiting(/*commit_triggered=*/true);
        maybe_start_round();
    }

    void park_round(int accesses_so_far) {
        WaitingBlock w;
        w.block = round->block;
        w.batch = std::move(round->batch);
        w.retries = round->retries;
        w.attempts = round->attempts;
        w.first_race_start = round->first_race_start;
        (void)accesses_so_far;
        waiting.push_back(std::move(w));
        round.reset();
        maybe_start_round();
    }

    // ---- waiting queue ----------------------------------------------------

    bool block_available(const WaitingBlock& w) const {
        if (nodes[w.block.creator].core.phase == consensus::Phase::Up) return true;
        for (NodeId id = 1; id <= cfg.nodes; ++id) {
            if (nodes[id].core.phase == consensus::Phase::Up &&
                nodes[id].core.ledger.contains(w.block.hash))
                return true;
        }
        return false;
    }

    void retry_waiting(bool commit_triggered) {
        while (!waiting.empty() && !round) {
            WaitingBlock& w = waiting.front();
            // Already on the canonical chain (e.g. a push whose ack was lost).
            bool committed_already = false;
            for (auto it = committed.rbegin(); it != committed.rend(); ++it) {
                if (it->hash == w.block.hash) {
                    committed_already = true;
                    break;
                }
            }
            if (committed_already) {
                waiting.pop_front();
                continue;
            }
            if (w.block.parent_hash != canonical_tip().hash) {
                // Superseded at its height; recycle any uncommitted payload.
                ++report.stale_drops;
                recycle_batch(std::move(w.batch));
                waiting.pop_front();
                maybe_start_round();
                continue;
            }
            if (commit_triggered && w.retries >= cfg.max_retries) {
                ++report.queued_drops;
                recycle_batch(std::move(w.batch));
                waiting.pop_front();
                continue;
            }
            if (!block_available(w)) return;  // retried when its holder recovers

            NodeId proposer = w.block.creator;
            if (nodes[proposer].core.phase != consensus::Phase::Up) {
                for (NodeId id = 1; id <= cfg.nodes; ++id) {
                    if (nodes[id].core.phase == consensus::Phase::Up &&
                        nodes[id].core.ledger.contains(w.block.hash)) {
                        proposer = id;
                        break;
                    }
                }
            }

            Round r;
            r.id = next_round_id++;
            r.race_start = clock;
            r.first_race_start = w.first_race_start;
            r.batch = std::move(w.batch);
            r.block = w.block;
            r.proposer = proposer;
            r.phase = RoundPhase::Voting;
            r.votes.total_nodes = cfg.nodes;
            r.votes.compute_voters.insert(proposer);
            r.attempts = w.attempts + 1;
            r.retries = w.retries + (commit_triggered ? 1 : 0);
            waiting.pop_front();
            round = std::move(r);
            enqueue_block_msg(proposer, kProposal);
            return;
        }
    }

    void recycle_batch(std::vector<Transaction> batch) {
        std::vector<Transaction> keep;
        keep.reserve(batch.size());
        for (auto& tx : batch) {
            if (!committed_tx_ids.contains(tx.tx_id)) keep.push_back(std::move(tx));
        }
        pool.requeue_front(std::move(keep));
    }

    // ---- faults and recovery ----------------------------------------------

    void on_node_fail(const Ev& ev) {
        if (ev.aux & 0x8000'0000'0000'0000ULL) {
            apply_tamper(ev.node, std::size_t(ev.aux & 0x7fff'ffff'ffff'ffffULL));
            return;
        }
        if (ev.node == 0) {
            storage_fail();
            return;
        }
        auto& n = nodes[ev.node];
        if (n.core.phase == consensus::Phase::Failed) return;
        n.core.phase = consensus::Phase::Failed;
        n.queue.clear();
        n.pop_scheduled = false;
        ++n.queue_epoch;
        awaiting_sync.erase(ev.node);

        if (!round) return;
        if (round->phase == RoundPhase::Mining) {
            for (std::size_t i = 0; i < round->candidates.size(); ++i) {
                if (round->candidates[i].node == ev.node && !round->candidates[i].voided) {
                    void_candidate(i);
                    break;
                }
            }
            return;
        }
        if (round->phase == RoundPhase::Voting && ev.node == round->proposer &&
            !round->broadcast_popped) {
            // Proposal died inside the failed node's queue; the block stays
            // with its creator until a restart resubmits it.
            park_round(0);
        }
    }

    void apply_tamper(NodeId id, std::size_t index) {
        auto& n = nodes[id];
        if (n.core.phase != consensus::Phase::Up) return;
        auto& window = n.core.ledger;
        if (window.window().empty()) return;
        const std::size_t i = std::min(index, window.window().size() - 1);
        window.fault_window_block(i);
        n.core.tampered = true;
    }

    void storage_fail() {
        if (!storage_up) return;
        storage_up = false;
        ++storage_epoch;
        if (round && (round->phase == RoundPhase::Pulling || round->phase == RoundPhase::Pushing))
            park_round(round->storage_accesses);
    }

    void on_node_restart(const Ev& ev) {
        if (ev.node == 0) {
            storage_restart();
            return;
        }
        auto& n = nodes[ev.node];
        if (n.core.phase != consensus::Phase::Failed) return;
        n.core.phase = consensus::Phase::Restarting;
        if (!has_storage()) {
            // Peer catch-up: adopt the canonical suffix directly.
            complete_peer_sync(ev.node);
            return;
        }
        request_sync(ev.node);
    }

    void request_sync(NodeId id) {
        if (!storage_up) {
            awaiting_sync.insert(id);  // recovery requires the ground truth
            return;
        }
        schedule(clock + storage_rtt_ns(), EventKind::StorageReply, id, 0,
                 (storage_epoch << 8) | kSync);
    }

    void complete_node_sync(NodeId id) {
        auto& n = nodes[id];
        if (n.core.phase != consensus::Phase::Restarting) return;
        // In-flight block check: commit marker when it already reached S_B.
        for (auto it = waiting.begin(); it != waiting.end();) {
            if (it->block.creator == id && shared.contains(it->block.hash)) {
                it = waiting.erase(it);
            } else {
                ++it;
            }
        }
        n.core.ledger.reset_window(shared.sync_window(cfg.window_capacity), shared.height(),
                                   shared.balances_snapshot());
        n.core.tampered = false;
        n.core.phase = consensus::Phase::Up;
        retry_waiting(/*commit_triggered=*/false);
        maybe_start_round();
    }

    void complete_peer_sync(NodeId id) {
        auto& n = nodes[id];
        std::vector<Block> suffix;
        const std::size_t take = std::min(committed.size(), cfg.window_capacity);
        suffix.assign(committed.end() - std::ptrdiff_t(take), committed.end());
        n.core.ledger.reset_window(suffix, committed.size(), committed_balances);
        n.core.tampered = false;
        n.core.phase = consensus::Phase::Up;
        retry_waiting(/*commit_triggered=*/false);
        maybe_start_round();
    }

    void storage_restart() {
        if (storage_up) return;
        storage_up = true;
        for (NodeId id : awaiting_sync) request_sync(id);
        awaiting_sync.clear();
        retry_waiting(/*commit_triggered=*/false);
        maybe_start_round();
    }

    // ---- workload ----------------------------------------------------------

    void on_tx_submit(const Ev& ev) {
        const Transaction& tx = workload[ev.aux];
        if (tx.sender >= 1 && tx.sender <= cfg.nodes &&
            nodes[tx.sender].core.phase != consensus::Phase::Up) {
            ++report.lost_txs;  // a failed node spawns nothing
            return;
        }
        pool.add(tx);
        maybe_start_round();
    }

    // ---- main loop ----------------------------------------------------------

    void fold_event(const Ev& ev) {
        std::uint64_t words[4] = {ev.at, std::uint64_t(ev.kind), ev.node, ev.aux};
        event_hasher.update(words, sizeof(words));
        ++report.event_count;
        if (trace) {
            char line[160];
            std::snprintf(line, sizeof(line), "%.3f\t%s\t%llu\t%llu\n", ns_to_us(ev.at),
                          to_string(ev.kind), static_cast<unsigned long long>(ev.node),
                          static_cast<unsigned long long>(ev.aux));
            *trace << line;
        }
    }

    SimReport run() {
        while (!heap.empty()) {
            const Ev ev = heap.top();
            heap.pop();
            clock = ev.at;
            fold_event(ev);
            switch (ev.kind) {
                case EventKind::TxSubmit: on_tx_submit(ev); break;
                case EventKind::BlockProposed: on_block_proposed(ev); break;
                case EventKind::QueuePop: on_queue_pop(ev); break;
                case EventKind::BlockDeliver: on_block_deliver(ev); break;
                case EventKind::VoteDeliver: on_vote_deliver(ev); break;
                case EventKind::StorageReply: on_storage_reply(ev); break;
                case EventKind::NodeFail: on_node_fail(ev); break;
                case EventKind::NodeRestart: on_node_restart(ev); break;
                case EventKind::StorageRequest: break;  // requests are folded into replies
            }
        }
        finalize();
        return std::move(report);
    }

    void finalize() {
        report.committed = report.blocks.size();
        report.queued_at_end = waiting.size();
        report.leftover_txs = pool.size();
        report.end_time = clock;
        report.storage_access = shared.access_log();
        report.event_log_hash = event_hasher.finish();

        report.node_window_valid.assign(cfg.nodes + 1, false);
        report.node_mean_append_us.assign(cfg.nodes + 1, 0.0);
        std::size_t valid = 0;
        for (NodeId id = 1; id <= cfg.nodes; ++id) {
            const bool ok = window_matches_canonical(nodes[id].core.ledger);
            report.node_window_valid[id] = ok;
            if (ok) ++valid;
            if (nodes[id].append_samples > 0)
                report.node_mean_append_us[id] =
                    nodes[id].append_us_sum / double(nodes[id].append_samples);
        }
        report.validity_ratio = double(valid) / double(cfg.nodes);
    }

    /// A node's window is valid when every retained block, re-hashed from its
    /// contents, matches the canonical chain at the corresponding height.
    bool window_matches_canonical(const LocalLedger& ledger) const {
        const auto& win = ledger.window();
        const std::uint64_t h = ledger.height();
        if (h < win.size()) return false;
        const std::uint64_t base = h - win.size();
        for (std::size_t k = 0; k < win.size(); ++k) {
            const std::uint64_t pos = base + k;
            if (pos >= committed.size()) return false;
            const Block& b = win[k];
            if (hash_block(b) != committed[pos].hash) return false;
            for (const auto& tx : b.transactions) {
                if (tx.compute_digest() != tx.digest) return false;
            }
        }
        return true;
    }
};

Simulator::Simulator(SimConfig config, std::vector<Transaction> workload, FaultPlan plan)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(workload), std::move(plan))) {}

Simulator::~Simulator() = default;

SimReport Simulator::run() {
    impl_->trace = trace_;
    return impl_->run();
}

SimReport run(const SimConfig& config, std::vector<Transaction> workload, const FaultPlan& plan) {
    Simulator sim(config, std::move(workload), plan);
    return sim.run();
}

}  // namespace postchain::sim
