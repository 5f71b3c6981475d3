// Copyright 2026 the postchain authors. Licensed under the Apache License,
// Version 2.0. See the COPYING file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <deque>
#include <iosfwd>
#include <memory>

#include "postchain/consensus.hpp"
#include "postchain/rng.hpp"

namespace postchain::sim {

using Nsec = std::uint64_t;  // internal clock: integer nanoseconds

inline constexpr Nsec kNsPerUs = 1000;

inline Nsec us_to_ns(double us) { return Nsec(us * 1000.0 + 0.5); }
inline double ns_to_us(Nsec ns) { return double(ns) / 1000.0; }

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& why) : std::runtime_error("bad config: " + why) {}
};

struct PlanError : std::runtime_error {
    explicit PlanError(const std::string& why) : std::runtime_error("bad fault plan: " + why) {}
};

enum class LinkClass { InfiniBand, Ethernet, Custom };

const char* to_string(LinkClass c);
LinkClass link_class_from_string(const std::string& s);

/// Per-link delay model: a truncated normal around the class mean. Identical
/// seeds yield identical delay sequences; sampled delays never go negative.
struct LatencyModel {
    LinkClass link_class = LinkClass::InfiniBand;
    double mean_us = 2.0;
    double jitter_sigma_us = 0.0;
    std::uint64_t seed = 0;

    static double class_mean_us(LinkClass c, double custom_mean_us);
};

class LinkSampler {
public:
    explicit LinkSampler(const LatencyModel& model) : model_(model), rng_(model.seed) {}

    Nsec sample_ns() {
        const double us = std::max(0.0, rng_.normal(model_.mean_us, model_.jitter_sigma_us));
        return us_to_ns(us);
    }

    const LatencyModel& model() const { return model_; }

private:
    LatencyModel model_;
    Rng rng_;
};

enum class EventKind {
    TxSubmit,
    BlockProposed,
    BlockDeliver,
    VoteDeliver,
    StorageRequest,
    StorageReply,
    NodeFail,
    NodeRestart,
    QueuePop,
};

const char* to_string(EventKind k);

enum class FaultAction { Fail, Restart, TamperBlock };

struct FaultEvent {
    double at_us = 0;
    NodeId node = 0;  // node id; 0 addresses the shared storage
    FaultAction action = FaultAction::Fail;
    std::size_t tamper_index = 0;  // window index for TamperBlock
};

struct FaultPlan {
    std::vector<FaultEvent> schedule;
    double byzantine_fraction = 0.0;

    /// Sorts by time and checks that every Restart is preceded by a Fail of
    /// the same entity. Throws PlanError otherwise.
    void validate(std::size_t n_nodes) const;
};

enum class SystemMode { Conventional, MemoryOnly, SciChain };

const char* to_string(SystemMode m);
SystemMode mode_from_string(const std::string& s);

struct SimConfig {
    std::size_t nodes = 4;
    Difficulty difficulty{1};
    SystemMode mode = SystemMode::SciChain;
    LinkClass link_class = LinkClass::InfiniBand;
    double mean_us = 2.0;        // Custom link mean
    double jitter_var = -1.0;    // µs² link jitter variance; negative → (mean/10)²
    std::uint64_t seed = 1;
    std::size_t window_capacity = LocalLedger::kDefaultWindowCapacity;
    std::size_t batch_size = kMinBatchSize;
    double pop_interval_us = 300.0;
    bool storage_override = false;
    double tamper_fraction = 0.0;

    // Calibration constants; acceptance assertions use ratios and orderings,
    // never absolute times.
    double per_hash_us = 0.5;
    double storage_rtt_us = 250.0;   // one storage visit, round trip
    double disk_write_us = 2500.0;   // Conventional per-node persistence
    double tx_interval_us = 1000.0;  // per-node transaction spawn interval
    int analytic_difficulty_threshold = 3;
    int max_retries = 3;
    std::int64_t initial_balance = 1'000'000;
    std::string ledger_path;  // non-empty → file-backed shared ledger

    double link_mean_us() const { return LatencyModel::class_mean_us(link_class, mean_us); }
    double link_jitter_sigma_us() const;

    void validate() const;  // throws ConfigError
};

/// Hash-evaluation count converted to simulated time under a node's speed
/// profile.
struct NodeProfile {
    double speed = 1.0;  // hash evaluations per per_hash_us tick
};

Nsec mining_time_ns(std::uint64_t hash_evals, double per_hash_us,
                    const NodeProfile& profile = {});

struct BlockRecord {
    std::uint64_t chain_position = 0;
    Hash32 hash{};
    NodeId creator = 0;
    Nsec race_start = 0;
    Nsec committed_at = 0;
    Nsec mining_ns = 0;          // winner's mining duration
    std::uint64_t winner_evals = 0;
    std::size_t validators = 0;  // voter count at commit decision (incl. storage)
    bool storage_pulled = false;
    bool storage_pushed = false;
    int storage_accesses = 0;
    int attempts = 1;

    Nsec latency_ns() const { return committed_at - race_start; }
};

struct SimReport {
    std::vector<BlockRecord> blocks;  // committed, in chain order
    storage::AccessLog storage_access;
    std::size_t committed = 0;
    std::size_t queued_drops = 0;    // blocks dropped after exhausting retries
    std::size_t stale_drops = 0;     // blocks superseded at the same height
    std::size_t queued_at_end = 0;   // blocks still waiting when the run drained
    std::size_t mining_aborts = 0;   // in-flight mining lost to node failures
    std::size_t dropped_deliveries = 0;
    std::size_t lost_txs = 0;        // spawned at a failed node
    std::vector<std::uint64_t> rewards;  // per node id (creator credit counter)
    double validity_ratio = 1.0;
    std::vector<bool> node_window_valid;     // index = node id
    std::vector<double> node_mean_append_us;  // index = node id
    std::vector<double> candidate_mine_us;    // pooled full per-candidate costs
    std::uint64_t event_count = 0;
    Hash32 event_log_hash{};
    Nsec end_time = 0;
    std::size_t leftover_txs = 0;

    double mean_latency_us() const;
};

/// Deterministic discrete-event simulation of one POST deployment: virtual
/// clock, per-link latency, FIFO block queues, mining-cost-to-time
/// conversion, and fault/tamper injection. Bit-identical output for
/// identical (config, workload, fault plan).
class Simulator {
public:
    Simulator(SimConfig config, std::vector<Transaction> workload, FaultPlan plan = {});
    ~Simulator();

    /// Optional tab-separated event trace: `fire_at  kind  node  detail`.
    void set_trace(std::ostream* out) { trace_ = out; }

    SimReport run();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::ostream* trace_ = nullptr;
};

/// One-shot convenience wrapper.
SimReport run(const SimConfig& config, std::vector<Transaction> workload,
              const FaultPlan& plan = {});

}  // namespace postchain::sim
