// Copyright 2026 the postchain authors. Licensed under the Apache License,
// Version 2.0. See the COPYING file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "postchain/block.hpp"

#include <cassert>

namespace postchain {

namespace {

inline void put_u64le(std::uint8_t* p, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = std::uint8_t(v >> (8 * i));
}

inline void put_u32le(std::uint8_t* p, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) p[i] = std::uint8_t(v >> (8 * i));
}

}  // namespace

std::array<std::uint8_t, 40> Transaction::canonical_bytes() const {
    std::array<std::uint8_t, 40> out;
    put_u64le(out.data(), tx_id);
    put_u64le(out.data() + 8, sender);
    put_u64le(out.data() + 16, receiver);
    put_u64le(out.data() + 24, std::uint64_t(amount));
    put_u64le(out.data() + 32, timestamp);
    return out;
}

Hash32 Transaction::compute_digest() const {
    const auto bytes = canonical_bytes();
    return Sha256::digest(bytes.data(), bytes.size());
}

Transaction Transaction::make(std::uint64_t tx_id, NodeId sender, NodeId receiver,
                              std::int64_t amount, Usec timestamp) {
    assert(amount >= 0);
    Transaction tx;
    tx.tx_id = tx_id;
    tx.sender = sender;
    tx.receiver = receiver;
    tx.amount = amount;
    tx.timestamp = timestamp;
    tx.digest = tx.compute_digest();
    return tx;
}

void append_canonical_bytes(std::vector<std::uint8_t>& out, NodeId creator,
                            std::uint64_t seq, const Hash32& parent_hash,
                            const std::vector<Hash32>& tx_digests, std::uint64_t nonce) {
    const std::size_t base = out.size();
    out.resize(base + 8 + 8 + 32 + 4 + 32 * tx_digests.size() + 8);
    std::uint8_t* p = out.data() + base;
    put_u64le(p, creator);
    put_u64le(p + 8, seq);
    std::copy(parent_hash.begin(), parent_hash.end(), p + 16);
    put_u32le(p + 48, std::uint32_t(tx_digests.size()));
    std::uint8_t* q = p + 52;
    for (const auto& d : tx_digests) {
        std::copy(d.begin(), d.end(), q);
        q += 32;
    }
    put_u64le(q, nonce);
}

Hash32 hash_block(NodeId creator, std::uint64_t seq, const Hash32& parent_hash,
                  const std::vector<Hash32>& tx_digests, std::uint64_t nonce) {
    std::vector<std::uint8_t> buf;
    append_canonical_bytes(buf, creator, seq, parent_hash, tx_digests, nonce);
    return Sha256::digest(buf.data(), buf.size());
}

Hash32 hash_block(const Block& b) {
    std::vector<Hash32> digests;
    digests.reserve(b.transactions.size());
    for (const auto& tx : b.transactions) digests.push_back(tx.digest);
    return hash_block(b.creator, b.seq, b.parent_hash, digests, b.nonce);
}

const Block& Block::genesis() {
    static const Block g = [] {
        Block b;
        b.creator = 0;
        b.seq = 0;
        b.parent_hash.fill(0);
        b.nonce = 0;
        b.mined_at = 0;
        b.hash = hash_block(b);
        return b;
    }();
    return g;
}

}  // namespace postchain
