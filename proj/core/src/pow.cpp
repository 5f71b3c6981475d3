// Copyright 2026 the postchain authors. Licensed under the Apache License,
// Version 2.0. See the COPYING file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "postchain/pow.hpp"

#include <cassert>

namespace postchain {

bool hash_meets_difficulty(const Hash32& h, Difficulty d) {
    assert(d.valid());
    for (int i = 0; i < d.leading_zeros; ++i) {
        const std::uint8_t byte = h[std::size_t(i) / 2];
        const std::uint8_t nibble = (i % 2 == 0) ? (byte >> 4) : (byte & 0xf);
        if (nibble != 0) return false;
    }
    return true;
}

bool verify_pow(const Block& block, Difficulty d) {
    if (!hash_meets_difficulty(block.hash, d)) return false;
    return hash_block(block) == block.hash;
}

MiningResult mine_block(const Hash32& parent_hash, std::vector<Transaction> transactions,
                        NodeId creator, std::uint64_t seq, Difficulty d,
                        std::uint64_t start_nonce, const CancelSignal& cancel) {
    assert(d.valid());

    std::vector<Hash32> digests;
    digests.reserve(transactions.size());
    for (const auto& tx : transactions) digests.push_back(tx.digest);

    // Serialize once and patch the trailing 8 nonce bytes per try.
    std::vector<std::uint8_t> buf;
    append_canonical_bytes(buf, creator, seq, parent_hash, digests, start_nonce);
    std::uint8_t* nonce_bytes = buf.data() + buf.size() - 8;

    std::uint64_t nonce = start_nonce;
    std::uint64_t evals = 0;
    for (;;) {
        if (cancel && cancel()) throw MiningAborted{};
        for (int i = 0; i < 8; ++i) nonce_bytes[i] = std::uint8_t(nonce >> (8 * i));
        const Hash32 h = Sha256::digest(buf.data(), buf.size());
        ++evals;
        if (hash_meets_difficulty(h, d)) {
            Block b;
            b.creator = creator;
            b.seq = seq;
            b.parent_hash = parent_hash;
            b.transactions = std::move(transactions);
            b.nonce = nonce;
            b.hash = h;
            return MiningResult{std::move(b), evals};
        }
        ++nonce;
    }
}

}  // namespace postchain
