// Copyright 2026 the postchain authors. Licensed under the Apache License,
// Version 2.0. See the COPYING file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "postchain/ledger.hpp"

#include <algorithm>
#include <cassert>

namespace postchain {

const char* to_string(RejectReason r) {
    switch (r) {
        case RejectReason::None: return "None";
        case RejectReason::AlreadyPresent: return "AlreadyPresent";
        case RejectReason::ParentNotInWindow: return "ParentNotInWindow";
        case RejectReason::StaleParent: return "StaleParent";
        case RejectReason::BadPow: return "BadPow";
        case RejectReason::BadBalance: return "BadBalance";
        case RejectReason::BadDigest: return "BadDigest";
        case RejectReason::TooFewTransactions: return "TooFewTransactions";
    }
    return "Unknown";
}

void BalanceBook::ensure(NodeId id) const {
    if (balances_.size() <= id) balances_.resize(id + 1, initial_);
}

std::int64_t BalanceBook::get(NodeId id) const {
    ensure(id);
    return balances_[id];
}

void BalanceBook::add(NodeId id, std::int64_t delta) {
    ensure(id);
    balances_[id] += delta;
}

std::int64_t BalanceBook::net_drift() const {
    std::int64_t drift = 0;
    for (auto b : balances_) drift += b - initial_;
    return drift;
}

LocalLedger::LocalLedger(NodeId owner, std::size_t window_capacity, std::int64_t initial_balance)
    : owner_(owner), capacity_(std::max<std::size_t>(1, window_capacity)),
      balances_(initial_balance) {
    window_.push_back(Block::genesis());
    height_ = 1;
}

bool LocalLedger::contains(const Hash32& block_hash) const {
    return std::any_of(window_.begin(), window_.end(),
                       [&](const Block& b) { return b.hash == block_hash; });
}

ValidationResult LocalLedger::validate_block(const Block& block, Difficulty d) const {
    if (contains(block.hash)) return {false, RejectReason::AlreadyPresent};
    if (block.transactions.size() < kMinBatchSize)
        return {false, RejectReason::TooFewTransactions};
    if (!verify_pow(block, d)) return {false, RejectReason::BadPow};
    for (const auto& tx : block.transactions) {
        if (tx.amount < 0 || tx.compute_digest() != tx.digest)
            return {false, RejectReason::BadDigest};
    }
    if (block.parent_hash != tip_hash()) {
        const bool in_window = contains(block.parent_hash);
        return {false, in_window ? RejectReason::StaleParent : RejectReason::ParentNotInWindow};
    }
    // Transfers apply in order; no intermediate balance may go negative.
    BalanceBook scratch = balances_;
    for (const auto& tx : block.transactions) {
        scratch.add(tx.sender, -tx.amount);
        scratch.add(tx.receiver, tx.amount);
        if (scratch.get(tx.sender) < 0) return {false, RejectReason::BadBalance};
    }
    return {true, RejectReason::None};
}

void LocalLedger::append_block(const Block& block, Difficulty d) {
    const ValidationResult v = validate_block(block, d);
    if (!v.ok) throw InvalidAppend(v.reason);
    for (const auto& tx : block.transactions) {
        balances_.add(tx.sender, -tx.amount);
        balances_.add(tx.receiver, tx.amount);
    }
    window_.push_back(block);
    if (window_.size() > capacity_) window_.pop_front();
    ++height_;
}

void LocalLedger::reset_window(const std::vector<Block>& suffix, std::uint64_t chain_height,
                               BalanceBook balances) {
    assert(!suffix.empty());
    window_.assign(suffix.begin(), suffix.end());
    while (window_.size() > capacity_) window_.pop_front();
    height_ = chain_height;
    balances_ = std::move(balances);
}

std::vector<Transaction> TxPool::pack(std::size_t batch_size) {
    if (pending_.size() < batch_size) throw NotEnoughTransactions(pending_.size(), batch_size);
    std::vector<Transaction> out;
    out.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) {
        out.push_back(std::move(pending_.front()));
        pending_.pop_front();
    }
    return out;
}

void TxPool::requeue_front(std::vector<Transaction> txs) {
    for (auto it = txs.rbegin(); it != txs.rend(); ++it) pending_.push_front(std::move(*it));
}

std::vector<Transaction> pack_block(TxPool& pool, std::size_t batch_size) {
    assert(batch_size >= kMinBatchSize);
    return pool.pack(batch_size);
}

}  // namespace postchain
