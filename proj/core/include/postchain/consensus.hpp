// Copyright 2026 the postchain authors. Licensed under the Apache License,
// Version 2.0. See the COPYING file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <optional>
#include <set>
#include <span>

#include "postchain/storage.hpp"

namespace postchain::consensus {

enum class Phase { Up, Failed, Restarting };

const char* to_string(Phase p);

/// A compute node as seen by the consensus layer. A tampered node holds a
/// corrupted window and refuses to vouch for honest blocks.
struct ComputeNode {
    NodeId id = 0;
    Phase phase = Phase::Up;
    bool tampered = false;
    LocalLedger ledger;

    ComputeNode(NodeId node_id, std::size_t window_capacity = LocalLedger::kDefaultWindowCapacity,
                std::int64_t initial_balance = 1'000'000)
        : id(node_id), ledger(node_id, window_capacity, initial_balance) {}
};

/// The set of voters that validated a candidate block. The shared storage
/// counts as at most one extra voter.
struct QuorumSet {
    std::set<NodeId> compute_voters;
    bool storage_voted = false;
    std::size_t total_nodes = 0;  // N

    std::size_t size() const { return compute_voters.size() + (storage_voted ? 1 : 0); }

    /// Strictly more than floor(N/2) voters.
    bool quorum() const { return size() > total_nodes / 2; }
};

enum class Status { Committed, Queued };

struct ConsensusOutcome {
    Status status = Status::Queued;
    QuorumSet validators;
    bool storage_pulled = false;
    bool storage_pushed = false;
    bool storage_unavailable = false;
    int storage_accesses = 0;  // round trips beyond the initial membership check
    bool already_persisted = false;
    std::vector<std::pair<NodeId, RejectReason>> rejections;
};

struct Params {
    Difficulty difficulty{1};
    /// When set, a successful storage validation commits the block even if
    /// the combined voter count stays at or below floor(N/2) (the paper's
    /// literal fallback reading). Off by default: the storage vote counts
    /// as one voter and the combined set must still clear the quorum bar.
    bool storage_override = false;
    bool storage_up = true;
};

/// A node's vote on a candidate block: valid against its window, or already
/// held by it (a block on a node's chain is vouched for by that node).
bool node_votes_for(const ComputeNode& node, const Block& block, Difficulty d,
                    RejectReason* reject = nullptr);

/// Push method. One storage membership look-up short-circuits resubmitted
/// blocks; otherwise every Up node validates and appends locally, and a
/// strict majority persists the block to the shared ledger exactly once.
ConsensusOutcome pss_persist(const Block& block, std::span<ComputeNode> nodes,
                             storage::SharedLedger& shared, const Params& params);

/// Pull method fallback. Compute nodes validate (and append) first; if the
/// voter count stays at or below floor(N/2) the storage ledger validates the
/// block against the full chain, and on success the block is persisted and
/// distributed to every surviving node not already holding it.
ConsensusOutcome poet_validate(const Block& block, std::span<ComputeNode> nodes,
                               storage::SharedLedger& shared, const Params& params);

/// Full consensus: compute-node votes first, the storage vote only on a
/// shortfall, appends everywhere once the combined set clears the quorum
/// bar. Exactly one storage access per committed block.
ConsensusOutcome post_consensus(const Block& block, std::span<ComputeNode> nodes,
                                storage::SharedLedger& shared, const Params& params);

struct RecoveryOutcome {
    Phase phase = Phase::Restarting;
    std::optional<Hash32> committed_marker;
    bool resubmit = false;
};

/// Fail/restart recovery. If the node's in-flight block already reached the
/// shared ledger the restart lands in a commit state; otherwise the block
/// must be resubmitted (abort state). Either way the node's window is
/// resynchronized from storage. If storage is unreachable the node stays
/// Restarting.
RecoveryOutcome recover_node(ComputeNode& node, storage::SharedLedger& shared,
                             const std::optional<Block>& in_flight_block, const Params& params);

struct TipCandidate {
    Hash32 hash{};
    std::uint64_t height = 0;
};

/// Longest valid chain wins; ties break to the tip present on the shared
/// ledger, then to the lexicographically smallest hash.
Hash32 resolve_fork(std::span<const TipCandidate> candidate_tips,
                    const storage::SharedLedger& shared);

}  // namespace postchain::consensus
