// Copyright 2026 the postchain authors. Licensed under the Apache License,
// Version 2.0. See the COPYING file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdio>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "postchain/ledger.hpp"

namespace postchain::storage {

struct ParentMismatch : std::runtime_error {
    ParentMismatch() : std::runtime_error("block does not extend the storage tip") {}
};

struct StorageUnavailable : std::runtime_error {
    explicit StorageUnavailable(const std::string& why)
        : std::runtime_error("shared storage unavailable: " + why) {}
};

struct CorruptLedger : std::runtime_error {
    explicit CorruptLedger(const std::string& why)
        : std::runtime_error("ledger file corrupt: " + why) {}
};

/// Storage access counters. `lookups` are membership checks, `pulls` are
/// fallback validations (Pull method), `pushes` are appended blocks (Push
/// method), `syncs` are recovery window reads.
struct AccessLog {
    std::uint64_t lookups = 0;
    std::uint64_t pulls = 0;
    std::uint64_t pushes = 0;
    std::uint64_t syncs = 0;
};

/// The persistent ground-truth chain on the shared storage node. Holds the
/// full history from genesis (no window eviction) and optionally journals
/// every appended block to an append-only file, fsync'd before the push is
/// acknowledged.
class SharedLedger {
public:
    explicit SharedLedger(std::int64_t initial_balance = 1'000'000);
    ~SharedLedger();

    SharedLedger(SharedLedger&&) noexcept;
    SharedLedger& operator=(SharedLedger&&) noexcept;
    SharedLedger(const SharedLedger&) = delete;
    SharedLedger& operator=(const SharedLedger&) = delete;

    /// Opens (or creates) a file-backed ledger, replaying and validating any
    /// existing records. A torn final record is truncated; interior
    /// corruption raises CorruptLedger.
    static SharedLedger recover_from_file(const std::string& path,
                                          std::int64_t initial_balance = 1'000'000);

    /// O(1) membership look-up ("need only one look-up").
    bool contains(const Hash32& block_hash);

    /// Appends a quorum-approved block extending the current tip. Journals
    /// and fsyncs before returning when file-backed. Idempotent: pushing an
    /// already-present block acknowledges its existing position. Returns the
    /// block's position in the chain (genesis = 0).
    std::uint64_t push(const Block& block);

    /// Pull method: full validation against the complete chain — PoW at `d`,
    /// parent equals the storage tip, transaction digests, balances replayed
    /// from genesis, and the block must not already be present.
    bool pull_validate(const Block& block, Difficulty d);

    /// The most recent min(capacity, height) blocks, oldest first, for node
    /// recovery.
    std::vector<Block> sync_window(std::size_t node_window_capacity);

    const std::vector<Block>& chain() const { return chain_; }
    std::uint64_t height() const { return chain_.size(); }
    const Hash32& tip_hash() const { return chain_.back().hash; }
    const Block& block_at(std::uint64_t position) const { return chain_.at(position); }
    std::optional<std::uint64_t> position_of(const Hash32& block_hash) const;

    const AccessLog& access_log() const { return access_; }
    const BalanceBook& balances() const { return balances_; }
    BalanceBook balances_snapshot() const { return balances_; }
    const std::string& file_path() const { return path_; }

private:
    void index_block(const Block& b, std::uint64_t pos);
    void journal_append(const Block& b);

    struct HashKey {
        std::size_t operator()(const Hash32& h) const {
            std::size_t v = 0;
            for (int i = 0; i < 8; ++i) v = (v << 8) | h[std::size_t(i)];
            return v;
        }
    };

    std::vector<Block> chain_;
    std::unordered_map<Hash32, std::uint64_t, HashKey> index_;
    BalanceBook balances_;
    AccessLog access_;
    std::string path_;     // empty for memory-backed ledgers
    std::FILE* file_ = nullptr;
};

/// Wire encoding of one journal record (exposed for tests and tooling):
/// magic "PCLG" | u32 payload length | payload | 4-byte truncated SHA-256
/// of the payload. The payload is the block's full little-endian encoding
/// including transactions.
std::vector<std::uint8_t> encode_record(const Block& b);

/// Decodes a record payload back into a block. Throws CorruptLedger on
/// malformed payloads.
Block decode_record_payload(const std::uint8_t* payload, std::size_t len);

inline constexpr char kRecordMagic[4] = {'P', 'C', 'L', 'G'};

}  // namespace postchain::storage
