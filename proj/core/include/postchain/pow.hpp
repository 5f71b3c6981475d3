// Copyright 2026 the postchain authors. Licensed under the Apache License,
// Version 2.0. See the COPYING file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <functional>
#include <stdexcept>

#include "postchain/block.hpp"

namespace postchain {

/// Puzzle difficulty: number of leading zero hexadecimal digits required of
/// a block hash.
struct Difficulty {
    int leading_zeros = 1;

    static constexpr int kMax = 16;

    bool valid() const { return leading_zeros >= 0 && leading_zeros <= kMax; }
};

/// True iff the first `leading_zeros` hex digits (nibbles) of `h` are zero.
bool hash_meets_difficulty(const Hash32& h, Difficulty d);

/// True iff the block's stored hash satisfies the difficulty predicate AND
/// recomputing the canonical hash over the block's contents reproduces it.
bool verify_pow(const Block& block, Difficulty d);

struct MiningAborted : std::runtime_error {
    MiningAborted() : std::runtime_error("mining aborted by cancellation signal") {}
};

struct MiningResult {
    Block block;
    std::uint64_t hash_evals = 0;  // nonce tries, each one hash evaluation
};

/// External cancellation signal for in-flight mining (simulated node failure
/// mid-mine). Polled between nonce tries.
using CancelSignal = std::function<bool()>;

/// Deterministic mining: finds the smallest nonce >= start_nonce whose block
/// hash satisfies `d`. Transactions must already carry their digests.
/// Throws MiningAborted if `cancel` fires before a nonce is found.
MiningResult mine_block(const Hash32& parent_hash, std::vector<Transaction> transactions,
                        NodeId creator, std::uint64_t seq, Difficulty d,
                        std::uint64_t start_nonce = 0, const CancelSignal& cancel = {});

}  // namespace postchain
