// Copyright 2026 the postchain authors. Licensed under the Apache License,
// Version 2.0. See the COPYING file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "postchain/consensus.hpp"

#include <algorithm>
#include <cassert>

namespace postchain::consensus {

const char* to_string(Phase p) {
    switch (p) {
        case Phase::Up: return "Up";
        case Phase::Failed: return "Failed";
        case Phase::Restarting: return "Restarting";
    }
    return "Unknown";
}

bool node_votes_for(const ComputeNode& node, const Block& block, Difficulty d,
                    RejectReason* reject) {
    if (node.tampered) {
        if (reject) *reject = RejectReason::BadDigest;  // corrupt window, refuses to vouch
        return false;
    }
    const ValidationResult v = node.ledger.validate_block(block, d);
    if (v.ok) return true;
    if (v.reason == RejectReason::AlreadyPresent) return true;  // held means vouched
    if (reject) *reject = v.reason;
    return false;
}

namespace {

/// Vote collection shared by all three protocols. Appends on successful
/// validation when `append_on_validate` is set (Protocols 1 and 2).
QuorumSet collect_votes(const Block& block, std::span<ComputeNode> nodes, Difficulty d,
                        bool append_on_validate,
                        std::vector<std::pair<NodeId, RejectReason>>& rejections) {
    QuorumSet votes;
    votes.total_nodes = nodes.size();
    for (auto& node : nodes) {
        if (node.phase != Phase::Up) continue;
        RejectReason why = RejectReason::None;
        if (!node_votes_for(node, block, d, &why)) {
            if (why != RejectReason::None) rejections.emplace_back(node.id, why);
            continue;
        }
        if (append_on_validate && !node.ledger.contains(block.hash))
            node.ledger.append_block(block, d);
        votes.compute_voters.insert(node.id);
    }
    return votes;
}

/// Distributes a committed block to every Up node not already holding it.
/// A node whose window lags behind (evicted parent) resynchronizes from the
/// shared ledger instead.
void distribute_committed(const Block& block, std::span<ComputeNode> nodes,
                          storage::SharedLedger& shared, Difficulty d) {
    for (auto& node : nodes) {
        if (node.phase != Phase::Up) continue;
        if (node.ledger.contains(block.hash)) continue;
        const ValidationResult v = node.ledger.validate_block(block, d);
        if (v.ok) {
            node.ledger.append_block(block, d);
        } else {
            node.ledger.reset_window(shared.sync_window(node.ledger.window_capacity()),
                                     shared.height(), shared.balances_snapshot());
            node.tampered = false;
        }
    }
}

}  // namespace

ConsensusOutcome pss_persist(const Block& block, std::span<ComputeNode> nodes,
                             storage::SharedLedger& shared, const Params& params) {
    ConsensusOutcome out;
    out.validators.total_nodes = nodes.size();

    if (!params.storage_up) {
        out.status = Status::Queued;
        out.storage_unavailable = true;
        return out;
    }
    if (shared.contains(block.hash)) {  // need only one look-up
        out.status = Status::Committed;
        out.already_persisted = true;
        return out;
    }

    out.validators = collect_votes(block, nodes, params.difficulty,
                                   /*append_on_validate=*/true, out.rejections);
    if (out.validators.quorum()) {
        shared.push(block);  // Push method, exactly once
        out.storage_pushed = true;
        out.storage_accesses = 1;
        out.status = Status::Committed;
    } else {
        out.status = Status::Queued;
    }
    return out;
}

ConsensusOutcome poet_validate(const Block& block, std::span<ComputeNode> nodes,
                               storage::SharedLedger& shared, const Params& params) {
    ConsensusOutcome out;
    out.validators = collect_votes(block, nodes, params.difficulty,
                                   /*append_on_validate=*/true, out.rejections);

    if (out.validators.size() <= nodes.size() / 2) {  // compute nodes fail?
        if (!params.storage_up) {
            out.status = Status::Queued;
            out.storage_unavailable = true;
            return out;
        }
        out.storage_pulled = true;
        out.storage_accesses = 1;
        if (shared.pull_validate(block, params.difficulty)) {  // Pull method
            out.validators.storage_voted = true;
            if (out.validators.quorum() || params.storage_override) {
                shared.push(block);
                out.storage_pushed = true;
                distribute_committed(block, nodes, shared, params.difficulty);
                out.status = Status::Committed;
                return out;
            }
        }
        out.status = Status::Queued;  // both compute quorum and storage failed
        return out;
    }

    // Compute quorum reached: persist the valid block in storage.
    if (!params.storage_up) {
        out.status = Status::Queued;
        out.storage_unavailable = true;
        return out;
    }
    shared.push(block);
    out.storage_pushed = true;
    out.storage_accesses = 1;
    out.status = Status::Committed;
    return out;
}

ConsensusOutcome post_consensus(const Block& block, std::span<ComputeNode> nodes,
                                storage::SharedLedger& shared, const Params& params) {
    ConsensusOutcome out;
    out.validators = collect_votes(block, nodes, params.difficulty,
                                   /*append_on_validate=*/false, out.rejections);

    if (out.validators.size() <= nodes.size() / 2) {
        // Consensus from storage nodes.
        if (!params.storage_up) {
            out.status = Status::Queued;
            out.storage_unavailable = true;
            return out;
        }
        out.storage_pulled = true;
        out.storage_accesses = 1;
        if (shared.pull_validate(block, params.difficulty))
            out.validators.storage_voted = true;
    }

    if (!out.validators.quorum() &&
        !(params.storage_override && out.validators.storage_voted)) {
        out.status = Status::Queued;
        return out;
    }

    if (!params.storage_up) {
        out.status = Status::Queued;
        out.storage_unavailable = true;
        return out;
    }

    // Commit: append on all compute nodes, persist exactly once.
    distribute_committed(block, nodes, shared, params.difficulty);
    shared.push(block);
    out.storage_pushed = true;
    if (out.storage_accesses == 0) out.storage_accesses = 1;  // push visit
    out.status = Status::Committed;
    return out;
}

RecoveryOutcome recover_node(ComputeNode& node, storage::SharedLedger& shared,
                             const std::optional<Block>& in_flight_block,
                             const Params& params) {
    assert(node.phase == Phase::Restarting);
    RecoveryOutcome out;
    if (!params.storage_up) {
        out.phase = Phase::Restarting;  // recovery needs the ground truth; retry later
        return out;
    }
    if (in_flight_block) {
        if (shared.contains(in_flight_block->hash)) {
            out.committed_marker = in_flight_block->hash;  // commit state, no resubmission
        } else {
            out.resubmit = true;  // abort state: restart consensus for the block
        }
    }
    node.ledger.reset_window(shared.sync_window(node.ledger.window_capacity()),
                             shared.height(), shared.balances_snapshot());
    node.tampered = false;
    node.phase = Phase::Up;
    out.phase = Phase::Up;
    return out;
}

Hash32 resolve_fork(std::span<const TipCandidate> candidate_tips,
                    const storage::SharedLedger& shared) {
    assert(!candidate_tips.empty());
    const TipCandidate* best = &candidate_tips[0];
    for (const auto& tip : candidate_tips.subspan(1)) {
        if (tip.height != best->height) {
            if (tip.height > best->height) best = &tip;
            continue;
        }
        const bool tip_on_storage = shared.position_of(tip.hash).has_value();
        const bool best_on_storage = shared.position_of(best->hash).has_value();
        if (tip_on_storage != best_on_storage) {
            if (tip_on_storage) best = &tip;  // ground truth wins
            continue;
        }
        if (std::lexicographical_compare(tip.hash.begin(), tip.hash.end(), best->hash.begin(),
                                         best->hash.end())) {
            best = &tip;
        }
    }
    return best->hash;
}

}  // namespace postchain::consensus
