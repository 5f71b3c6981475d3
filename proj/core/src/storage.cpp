// Copyright 2026 the postchain authors. Licensed under the Apache License,
// Version 2.0. See the COPYING file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "postchain/storage.hpp"

#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace postchain::storage {

namespace {

inline void put_u64le(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

inline void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

inline std::uint64_t get_u64le(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

inline std::uint32_t get_u32le(const std::uint8_t* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

std::vector<std::uint8_t> encode_payload(const Block& b) {
    std::vector<std::uint8_t> out;
    out.reserve(100 + 40 * b.transactions.size());
    put_u64le(out, b.creator);
    put_u64le(out, b.seq);
    out.insert(out.end(), b.parent_hash.begin(), b.parent_hash.end());
    put_u64le(out, b.mined_at);
    put_u64le(out, b.nonce);
    out.insert(out.end(), b.hash.begin(), b.hash.end());
    put_u32le(out, std::uint32_t(b.transactions.size()));
    for (const auto& tx : b.transactions) {
        const auto bytes = tx.canonical_bytes();
        out.insert(out.end(), bytes.begin(), bytes.end());
    }
    return out;
}

}  // namespace

Block decode_record_payload(const std::uint8_t* p, std::size_t len) {
    constexpr std::size_t kHeader = 8 + 8 + 32 + 8 + 8 + 32 + 4;
    if (len < kHeader) throw CorruptLedger("record payload shorter than block header");
    Block b;
    b.creator = get_u64le(p);
    b.seq = get_u64le(p + 8);
    std::copy(p + 16, p + 48, b.parent_hash.begin());
    b.mined_at = get_u64le(p + 48);
    b.nonce = get_u64le(p + 56);
    std::copy(p + 64, p + 96, b.hash.begin());
    const std::uint32_t tx_count = get_u32le(p + 96);
    if (len != kHeader + std::size_t(tx_count) * 40)
        throw CorruptLedger("record payload length does not match transaction count");
    const std::uint8_t* q = p + kHeader;
    b.transactions.reserve(tx_count);
    for (std::uint32_t i = 0; i < tx_count; ++i, q += 40) {
        Transaction tx;
        tx.tx_id = get_u64le(q);
        tx.sender = get_u64le(q + 8);
        tx.receiver = get_u64le(q + 16);
        tx.amount = std::int64_t(get_u64le(q + 24));
        tx.timestamp = get_u64le(q + 32);
        tx.digest = tx.compute_digest();
        b.transactions.push_back(std::move(tx));
    }
    return b;
}

std::vector<std::uint8_t> encode_record(const Block& b) {
    const auto payload = encode_payload(b);
    std::vector<std::uint8_t> out;
    out.reserve(payload.size() + 12);
    out.insert(out.end(), std::begin(kRecordMagic), std::end(kRecordMagic));
    put_u32le(out, std::uint32_t(payload.size()));
    out.insert(out.end(), payload.begin(), payload.end());
    const Hash32 sum = Sha256::digest(payload.data(), payload.size());
    out.insert(out.end(), sum.begin(), sum.begin() + 4);
    return out;
}

SharedLedger::SharedLedger(std::int64_t initial_balance) : balances_(initial_balance) {
    chain_.push_back(Block::genesis());
    index_block(chain_.back(), 0);
}

SharedLedger::~SharedLedger() {
    if (file_) std::fclose(file_);
}

SharedLedger::SharedLedger(SharedLedger&& other) noexcept
    : chain_(std::move(other.chain_)),
      index_(std::move(other.index_)),
      balances_(std::move(other.balances_)),
      access_(other.access_),
      path_(std::move(other.path_)),
      file_(other.file_) {
    other.file_ = nullptr;
}

SharedLedger& SharedLedger::operator=(SharedLedger&& other) noexcept {
    if (this != &other) {
        if (file_) std::fclose(file_);
        chain_ = std::move(other.chain_);
        index_ = std::move(other.index_);
        balances_ = std::move(other.balances_);
        access_ = other.access_;
        path_ = std::move(other.path_);
        file_ = other.file_;
        other.file_ = nullptr;
    }
    return *this;
}

void SharedLedger::index_block(const Block& b, std::uint64_t pos) {
    index_.emplace(b.hash, pos);
}

bool SharedLedger::contains(const Hash32& block_hash) {
    ++access_.lookups;
    return index_.find(block_hash) != index_.end();
}

std::optional<std::uint64_t> SharedLedger::position_of(const Hash32& block_hash) const {
    const auto it = index_.find(block_hash);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::uint64_t SharedLedger::push(const Block& block) {
    if (const auto pos = position_of(block.hash)) return *pos;  // idempotent
    if (block.parent_hash != tip_hash()) throw ParentMismatch{};
    const std::uint64_t pos = chain_.size();
    journal_append(block);
    chain_.push_back(block);
    index_block(chain_.back(), pos);
    for (const auto& tx : block.transactions) {
        balances_.add(tx.sender, -tx.amount);
        balances_.add(tx.receiver, tx.amount);
    }
    ++access_.pushes;
    return pos;
}

bool SharedLedger::pull_validate(const Block& block, Difficulty d) {
    ++access_.pulls;
    if (index_.find(block.hash) != index_.end()) return false;  // b already in S_B
    if (block.transactions.size() < kMinBatchSize) return false;
    if (!verify_pow(block, d)) return false;
    if (block.parent_hash != tip_hash()) return false;
    for (const auto& tx : block.transactions) {
        if (tx.amount < 0 || tx.compute_digest() != tx.digest) return false;
    }
    BalanceBook scratch = balances_;
    for (const auto& tx : block.transactions) {
        scratch.add(tx.sender, -tx.amount);
        scratch.add(tx.receiver, tx.amount);
        if (scratch.get(tx.sender) < 0) return false;
    }
    return true;
}

std::vector<Block> SharedLedger::sync_window(std::size_t node_window_capacity) {
    ++access_.syncs;
    const std::size_t n = std::min<std::size_t>(node_window_capacity, chain_.size());
    return std::vector<Block>(chain_.end() - std::ptrdiff_t(n), chain_.end());
}

void SharedLedger::journal_append(const Block& b) {
    if (!file_) return;
    const auto record = encode_record(b);
    if (std::fwrite(record.data(), 1, record.size(), file_) != record.size())
        throw StorageUnavailable(std::string("write failed: ") + std::strerror(errno));
    if (std::fflush(file_) != 0 || ::fsync(fileno(file_)) != 0)
        throw StorageUnavailable(std::string("fsync failed: ") + std::strerror(errno));
}

SharedLedger SharedLedger::recover_from_file(const std::string& path,
                                             std::int64_t initial_balance) {
    SharedLedger ledger(initial_balance);
    ledger.path_ = path;

    std::vector<std::uint8_t> bytes;
    if (std::FILE* f = std::fopen(path.c_str(), "rb")) {
        std::fseek(f, 0, SEEK_END);
        const long size = std::ftell(f);
        std::fseek(f, 0, SEEK_SET);
        bytes.resize(std::size_t(std::max(0L, size)));
        if (!bytes.empty() && std::fread(bytes.data(), 1, bytes.size(), f) != bytes.size()) {
            std::fclose(f);
            throw StorageUnavailable("short read of ledger file");
        }
        std::fclose(f);
    }

    // A record is torn only at the physical end of the file. Any failure
    // with a further record magic behind it is interior corruption.
    const auto magic_beyond = [&](std::size_t from) {
        for (std::size_t i = from; i + 4 <= bytes.size(); ++i) {
            if (std::memcmp(bytes.data() + i, kRecordMagic, 4) == 0) return true;
        }
        return false;
    };

    std::size_t off = 0;
    std::size_t valid_end = 0;
    while (off < bytes.size()) {
        const std::size_t remaining = bytes.size() - off;
        if (remaining < 8) break;  // torn header
        if (std::memcmp(bytes.data() + off, kRecordMagic, 4) != 0)
            throw CorruptLedger("bad record magic at offset " + std::to_string(off));
        const std::uint32_t len = get_u32le(bytes.data() + off + 4);
        const std::size_t total = 8 + std::size_t(len) + 4;
        if (remaining < total) {
            if (magic_beyond(off + 4)) throw CorruptLedger("truncated record mid-file");
            break;  // torn tail
        }
        const std::uint8_t* payload = bytes.data() + off + 8;
        const Hash32 sum = Sha256::digest(payload, len);
        const bool checksum_ok = std::memcmp(sum.data(), payload + len, 4) == 0;
        const bool is_last = (off + total == bytes.size());
        if (!checksum_ok) {
            if (is_last && !magic_beyond(off + 4)) break;  // torn tail
            throw CorruptLedger("record checksum mismatch at offset " + std::to_string(off));
        }

        Block b = decode_record_payload(payload, len);
        if (hash_block(b) != b.hash)
            throw CorruptLedger("stored block hash does not match contents at position " +
                                std::to_string(ledger.chain_.size()));
        if (b.parent_hash != ledger.tip_hash())
            throw CorruptLedger("hash chain broken at position " +
                                std::to_string(ledger.chain_.size()));
        const std::uint64_t pos = ledger.chain_.size();
        ledger.chain_.push_back(std::move(b));
        ledger.index_block(ledger.chain_.back(), pos);
        for (const auto& tx : ledger.chain_.back().transactions) {
            ledger.balances_.add(tx.sender, -tx.amount);
            ledger.balances_.add(tx.receiver, tx.amount);
        }
        off += total;
        valid_end = off;
    }

    // Reopen for appends, truncating any torn tail first.
    std::FILE* f = std::fopen(path.c_str(), bytes.empty() ? "wb" : "rb+");
    if (!f) throw StorageUnavailable(std::string("cannot open ledger file: ") +
                                     std::strerror(errno));
    if (valid_end < bytes.size()) {
        if (::ftruncate(fileno(f), long(valid_end)) != 0) {
            std::fclose(f);
            throw StorageUnavailable("cannot truncate torn tail");
        }
    }
    std::fseek(f, 0, SEEK_END);
    ledger.file_ = f;
    return ledger;
}

}  // namespace postchain::storage
