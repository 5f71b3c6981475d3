// Copyright 2026 the postchain authors. Licensed under the Apache License,
// Version 2.0. See the COPYING file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "postchain/sha256.hpp"

namespace postchain {

using NodeId = std::uint64_t;
using Usec = std::uint64_t;  // simulated microseconds

/// Fund-transfer-style provenance record. The digest covers the canonical
/// 40-byte serialization (tx_id | sender | receiver | amount | timestamp,
/// little-endian u64 each); the annotation is carried alongside and is
/// never hashed.
struct Transaction {
    std::uint64_t tx_id = 0;
    NodeId sender = 0;
    NodeId receiver = 0;
    std::int64_t amount = 0;  // non-negative abstract units
    Usec timestamp = 0;
    Hash32 digest{};
    std::string annotation;  // plumbing metadata (trace provenance), unhashed

    /// Canonical 40-byte little-endian serialization.
    std::array<std::uint8_t, 40> canonical_bytes() const;
    Hash32 compute_digest() const;

    static Transaction make(std::uint64_t tx_id, NodeId sender, NodeId receiver,
                            std::int64_t amount, Usec timestamp);
};

/// Hash-chained container of transactions. `hash` covers the canonical
/// layout creator | seq | parent_hash | tx_count | tx digests | nonce;
/// `mined_at` is bookkeeping and stays outside the hash.
struct Block {
    NodeId creator = 0;
    std::uint64_t seq = 0;  // per-creator sequence, 1-based (genesis uses 0)
    Hash32 parent_hash{};
    std::vector<Transaction> transactions;
    std::uint64_t nonce = 0;
    Hash32 hash{};
    Usec mined_at = 0;

    bool is_genesis() const { return creator == 0 && seq == 0; }

    /// The fixed first block of every ledger: zero transactions, zero
    /// parent hash, nonce 0.
    static const Block& genesis();
};

/// Minimum transactions per non-genesis block.
inline constexpr std::size_t kMinBatchSize = 12;

/// SHA-256 over the canonical block layout. Total function; deterministic.
Hash32 hash_block(NodeId creator, std::uint64_t seq, const Hash32& parent_hash,
                  const std::vector<Hash32>& tx_digests, std::uint64_t nonce);

/// Convenience: canonical hash of a block's own fields (transactions are
/// reduced to their stored digests).
Hash32 hash_block(const Block& b);

/// Serializes the canonical hashed layout of a block into `out` (appended).
void append_canonical_bytes(std::vector<std::uint8_t>& out, NodeId creator,
                            std::uint64_t seq, const Hash32& parent_hash,
                            const std::vector<Hash32>& tx_digests, std::uint64_t nonce);

}  // namespace postchain
