#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "relay/hash.hpp"
#include "relay/kvstore.hpp"

namespace relay {

/**
 * Fixed-width bit string addressing a trie leaf slot. Bit 0 is the most
 * significant bit of the first byte and is consumed first when descending
 * from the root. Bits past `width` are always zero (canonical form).
 */
struct BitPath {
    int width = 0;
    std::array<std::uint8_t, 32> bits{};

    bool bit(int i) const { return (bits[i / 8] >> (7 - i % 8)) & 1; }
    void set_bit(int i, bool v);
    int byte_len() const { return (width + 7) / 8; }
    Bytes bytes() const { return Bytes(bits.begin(), bits.begin() + byte_len()); }
    std::string hex() const { return to_hex(ByteView(bits.data(), byte_len())); }

    static BitPath from_digest(const Digest& d, int width);
    static BitPath from_hex(std::string_view h, int width);
    /** Convenience for tests: low `width` bits of v, most significant first. */
    static BitPath from_uint(std::uint64_t v, int width);

    auto operator<=>(const BitPath&) const = default;
};

/** (hash, sum) pair carried by every node, including the root commitment. */
struct NodeSummary {
    Digest hash;
    std::uint64_t sum = 0;

    bool operator==(const NodeSummary&) const = default;
};

struct MembershipProof {
    BitPath leaf_key;
    Digest value_hash;
    std::uint64_t weight = 0;
    std::vector<NodeSummary> siblings;  // index 0 = deepest level, index width-1 = below root
};

struct DuplicateKeyError : std::runtime_error {
    DuplicateKeyError() : std::runtime_error("smst: key already present (replay rejected)") {}
};
struct KeyNotFoundError : std::runtime_error {
    KeyNotFoundError() : std::runtime_error("smst: key not found") {}
};
struct EmptyTrieError : std::runtime_error {
    EmptyTrieError() : std::runtime_error("smst: trie is empty") {}
};

/**
 * Sparse Merkle sum trie. Conceptually a full binary tree of depth `width`
 * whose leaves sit at the bottom; empty subtrees hash to per-height defaults
 * and runs of empty siblings are never materialized, so a leaf costs O(log n)
 * stored nodes. Keys are unique; inserting a present key is rejected.
 *
 * Node hashing:
 *   leaf     H("smst:leaf" || key || value_hash || weight)
 *   internal H("smst:node" || left.hash || left.sum || right.hash || right.sum)
 * with every part length-prefixed and sums encoded as be64.
 */
class SumTrie {
public:
    explicit SumTrie(int key_width = 256, std::unique_ptr<KvStore> store = nullptr);
    SumTrie(SumTrie&&) noexcept = default;
    SumTrie& operator=(SumTrie&&) noexcept = default;

    int key_width() const { return width_; }
    std::uint64_t leaf_count() const { return leaf_count_; }
    NodeSummary root() const;

    /** Insert value under key with weight 1. Throws DuplicateKeyError on replay. */
    void insert(const BitPath& key, ByteView value);
    void insert(const Digest& key, ByteView value);

    /** Import path: insert a leaf whose value bytes are not available. */
    void insert_hashed(const BitPath& key, const Digest& value_hash, std::uint64_t weight);

    bool contains(const BitPath& key) const;
    std::optional<Bytes> value(const BitPath& key) const;

    MembershipProof prove(const BitPath& key) const;            // throws KeyNotFoundError
    MembershipProof closest_proof(const BitPath& target) const;  // throws EmptyTrieError

    void export_to(std::ostream& out) const;
    static SumTrie import_from(std::istream& in, std::unique_ptr<KvStore> store = nullptr);

    /** Summary of an empty subtree with `height` levels below it. */
    static NodeSummary empty_at(int height);

private:
    struct ChildRef;
    struct InternalNode;

    InternalNode load_internal(int depth, const BitPath& key) const;
    void store_internal(int depth, const BitPath& key, const InternalNode& node);
    Bytes internal_store_key(int depth, const BitPath& key) const;
    Bytes leaf_store_key(const BitPath& key) const;
    NodeSummary folded_leaf(const BitPath& key, const NodeSummary& base, int levels) const;
    void insert_leaf(const BitPath& key, const Digest& value_hash, std::uint64_t weight,
                     ByteView value, bool has_value);
    void write_meta();

    int width_ = 256;
    std::uint64_t leaf_count_ = 0;
    std::unique_ptr<KvStore> store_;
};

NodeSummary leaf_summary(const BitPath& key, const Digest& value_hash, std::uint64_t weight);
NodeSummary combine(const NodeSummary& left, const NodeSummary& right);

/** Recompute the root from a proof and compare. Malformed proofs return false. */
bool verify_proof(const NodeSummary& root, const MembershipProof& proof);

/**
 * verify_proof plus the closest-leaf rule: wherever the revealed key diverges
 * from the target path, the subtree on the target side must be empty. This is
 * checkable from the proof alone because that subtree is exactly the recorded
 * sibling at the divergence level.
 */
bool verify_closest_proof(const NodeSummary& root, const MembershipProof& proof,
                          const BitPath& target);

}  // namespace relay
