// Copyright 2026 the postchain authors. Licensed under the Apache License,
// Version 2.0. See the COPYING file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

#include "postchain/pow.hpp"

namespace postchain {

/// Why a block was rejected by local validation. AlreadyPresent,
/// ParentNotInWindow, BadPow, BadBalance and BadDigest are the protocol
/// outcomes; StaleParent and TooFewTransactions cover adversarial input
/// (fork at a retained height, undersized batch).
enum class RejectReason {
    None,
    AlreadyPresent,
    ParentNotInWindow,
    StaleParent,
    BadPow,
    BadBalance,
    BadDigest,
    TooFewTransactions,
};

const char* to_string(RejectReason r);

struct ValidationResult {
    bool ok = false;
    RejectReason reason = RejectReason::None;

    explicit operator bool() const { return ok; }
};

struct InvalidAppend : std::logic_error {
    explicit InvalidAppend(RejectReason r)
        : std::logic_error(std::string("append precondition violated: ") + to_string(r)),
          reason(r) {}
    RejectReason reason;
};

/// Materialized per-node balances. Node ids are dense (1..N); every account
/// starts at `initial`.
class BalanceBook {
public:
    explicit BalanceBook(std::int64_t initial = 1'000'000) : initial_(initial) {}

    std::int64_t get(NodeId id) const;
    void add(NodeId id, std::int64_t delta);
    std::int64_t initial() const { return initial_; }

    /// Sum over all accounts ever touched, relative to their initial value.
    /// Zero for any sequence of zero-sum transfers.
    std::int64_t net_drift() const;

private:
    void ensure(NodeId id) const;

    std::int64_t initial_;
    mutable std::vector<std::int64_t> balances_;  // index = node id
};

/// Volatile per-compute-node chain keeping only the most recent blocks.
/// Starts at genesis; eviction is oldest-first once the window is full.
class LocalLedger {
public:
    static constexpr std::size_t kDefaultWindowCapacity = 64;

    explicit LocalLedger(NodeId owner, std::size_t window_capacity = kDefaultWindowCapacity,
                         std::int64_t initial_balance = 1'000'000);

    NodeId owner() const { return owner_; }
    std::size_t window_capacity() const { return capacity_; }
    const std::deque<Block>& window() const { return window_; }
    const Hash32& tip_hash() const { return window_.back().hash; }
    std::uint64_t height() const { return height_; }
    const BalanceBook& balances() const { return balances_; }

    bool contains(const Hash32& block_hash) const;

    /// Protocol validity of `block` against this ledger: PoW at `d`,
    /// parent appends to the tip (an evicted parent means the caller must
    /// fall back to storage), transaction digests verify, no balance goes
    /// negative, and the block is not already present.
    ValidationResult validate_block(const Block& block, Difficulty d) const;

    /// Appends a block previously accepted by validate_block. Throws
    /// InvalidAppend otherwise (programming error, not a protocol outcome).
    void append_block(const Block& block, Difficulty d);

    /// Recovery: replaces the retained window with a suffix fetched from
    /// shared storage and adopts the storage's materialized state.
    void reset_window(const std::vector<Block>& suffix, std::uint64_t chain_height,
                      BalanceBook balances);

private:
    NodeId owner_;
    std::size_t capacity_;
    std::deque<Block> window_;
    std::uint64_t height_ = 0;  // total chain length including evicted blocks
    BalanceBook balances_;
};

struct NotEnoughTransactions : std::runtime_error {
    NotEnoughTransactions(std::size_t have, std::size_t need)
        : std::runtime_error("not enough pending transactions: have " + std::to_string(have) +
                             ", need " + std::to_string(need)) {}
};

/// FIFO pool of pending transactions, ordered by arrival.
class TxPool {
public:
    void add(Transaction tx) { pending_.push_back(std::move(tx)); }
    std::size_t size() const { return pending_.size(); }
    bool empty() const { return pending_.empty(); }
    const std::deque<Transaction>& pending() const { return pending_; }

    /// Removes and returns the `batch_size` oldest transactions in FIFO
    /// order. Throws NotEnoughTransactions if fewer are pending.
    std::vector<Transaction> pack(std::size_t batch_size = kMinBatchSize);

    /// Returns transactions to the head of the pool (rejected block whose
    /// payload must recommit), preserving their original relative order.
    void requeue_front(std::vector<Transaction> txs);

private:
    std::deque<Transaction> pending_;
};

/// Batch selection for a new block: the `batch_size` oldest pending
/// transactions, FIFO. Batch size must be at least kMinBatchSize.
std::vector<Transaction> pack_block(TxPool& pool, std::size_t batch_size = kMinBatchSize);

}  // namespace postchain
