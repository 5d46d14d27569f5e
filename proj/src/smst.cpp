#include "relay/smst.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace relay {

namespace {

constexpr std::uint8_t kChildEmpty = 0;
constexpr std::uint8_t kChildLeaf = 1;
constexpr std::uint8_t kChildInternal = 2;

Bytes be64_bytes(std::uint64_t v) {
    Bytes b;
    append_be64(b, v);
    return b;
}

}  // namespace

void BitPath::set_bit(int i, bool v) {
    std::uint8_t mask = static_cast<std::uint8_t>(1u << (7 - i % 8));
    if (v)
        bits[i / 8] |= mask;
    else
        bits[i / 8] &= static_cast<std::uint8_t>(~mask);
}

BitPath BitPath::from_digest(const Digest& d, int width) {
    if (width < 1 || width > 256) throw std::invalid_argument("bitpath: width out of range");
    BitPath p;
    p.width = width;
    p.bits = d.bytes;
    for (int i = width; i < 256; ++i) p.set_bit(i, false);
    return p;
}

BitPath BitPath::from_hex(std::string_view h, int width) {
    Bytes raw = relay::from_hex(h);
    if (static_cast<int>(raw.size()) != (width + 7) / 8) {
        throw std::invalid_argument("bitpath: hex length does not match width");
    }
    Digest d;
    std::copy(raw.begin(), raw.end(), d.bytes.begin());
    return from_digest(d, width);
}

BitPath BitPath::from_uint(std::uint64_t v, int width) {
    if (width < 1 || width > 64) throw std::invalid_argument("bitpath: uint width out of range");
    BitPath p;
    p.width = width;
    for (int i = 0; i < width; ++i) {
        p.set_bit(i, (v >> (width - 1 - i)) & 1);
    }
    return p;
}

NodeSummary leaf_summary(const BitPath& key, const Digest& value_hash, std::uint64_t weight) {
    Bytes kb = key.bytes();
    Bytes wb = be64_bytes(weight);
    return NodeSummary{
        hash_parts("smst:leaf", {ByteView(kb), value_hash.view(), ByteView(wb)}), weight};
}

NodeSummary combine(const NodeSummary& left, const NodeSummary& right) {
    Bytes ls = be64_bytes(left.sum);
    Bytes rs = be64_bytes(right.sum);
    return NodeSummary{
        hash_parts("smst:node", {left.hash.view(), ByteView(ls), right.hash.view(), ByteView(rs)}),
        left.sum + right.sum};
}

NodeSummary SumTrie::empty_at(int height) {
    static const std::vector<NodeSummary> table = [] {
        std::vector<NodeSummary> t;
        t.reserve(257);
        t.push_back(NodeSummary{Digest{}, 0});
        for (int h = 1; h <= 256; ++h) t.push_back(combine(t.back(), t.back()));
        return t;
    }();
    if (height < 0 || height > 256) throw std::invalid_argument("smst: bad height");
    return table[static_cast<std::size_t>(height)];
}

struct SumTrie::ChildRef {
    std::uint8_t type = kChildEmpty;
    NodeSummary summary;
    BitPath leaf_key;  // meaningful when type == kChildLeaf
};

struct SumTrie::InternalNode {
    ChildRef child[2];
};

SumTrie::SumTrie(int key_width, std::unique_ptr<KvStore> store)
    : width_(key_width), store_(std::move(store)) {
    if (width_ < 1 || width_ > 256) throw std::invalid_argument("smst: key width out of range");
    if (!store_) store_ = std::make_unique<MemoryKvStore>();
    Bytes meta_key = to_bytes("M");
    if (auto meta = store_->get(ByteView(meta_key))) {
        if (meta->size() != 16) throw std::runtime_error("smst: corrupt meta record");
        int stored_width = static_cast<int>(read_be64(ByteView(meta->data(), 8)));
        if (stored_width != width_) throw std::runtime_error("smst: store width mismatch");
        leaf_count_ = read_be64(ByteView(meta->data() + 8, 8));
    } else {
        write_meta();
    }
}

void SumTrie::write_meta() {
    Bytes v;
    append_be64(v, static_cast<std::uint64_t>(width_));
    append_be64(v, leaf_count_);
    Bytes meta_key = to_bytes("M");
    store_->put(ByteView(meta_key), ByteView(v));
}

Bytes SumTrie::internal_store_key(int depth, const BitPath& key) const {
    Bytes k = to_bytes("N");
    k.push_back(static_cast<std::uint8_t>(depth >> 8));
    k.push_back(static_cast<std::uint8_t>(depth & 0xff));
    int nbytes = (depth + 7) / 8;
    for (int i = 0; i < nbytes; ++i) k.push_back(key.bits[static_cast<std::size_t>(i)]);
    if (depth % 8 != 0) {
        // zero bits past the prefix so the store key is canonical
        k.back() &= static_cast<std::uint8_t>(0xff << (8 - depth % 8));
    }
    return k;
}

Bytes SumTrie::leaf_store_key(const BitPath& key) const {
    Bytes k = to_bytes("L");
    Bytes kb = key.bytes();
    k.insert(k.end(), kb.begin(), kb.end());
    return k;
}

SumTrie::InternalNode SumTrie::load_internal(int depth, const BitPath& key) const {
    Bytes sk = internal_store_key(depth, key);
    auto rec = store_->get(ByteView(sk));
    if (!rec) throw std::runtime_error("smst: missing internal node");
    InternalNode node;
    std::size_t off = 0;
    int key_bytes = (width_ + 7) / 8;
    for (int side = 0; side < 2; ++side) {
        ChildRef& c = node.child[side];
        c.type = (*rec)[off++];
        std::copy(rec->begin() + static_cast<long>(off),
                  rec->begin() + static_cast<long>(off) + 32, c.summary.hash.bytes.begin());
        off += 32;
        c.summary.sum = read_be64(ByteView(rec->data() + off, 8));
        off += 8;
        if (c.type == kChildLeaf) {
            c.leaf_key.width = width_;
            std::copy(rec->begin() + static_cast<long>(off),
                      rec->begin() + static_cast<long>(off) + key_bytes,
                      c.leaf_key.bits.begin());
            off += static_cast<std::size_t>(key_bytes);
        }
    }
    return node;
}

void SumTrie::store_internal(int depth, const BitPath& key, const InternalNode& node) {
    Bytes v;
    for (int side = 0; side < 2; ++side) {
        const ChildRef& c = node.child[side];
        v.push_back(c.type);
        v.insert(v.end(), c.summary.hash.bytes.begin(), c.summary.hash.bytes.end());
        append_be64(v, c.summary.sum);
        if (c.type == kChildLeaf) {
            Bytes kb = c.leaf_key.bytes();
            v.insert(v.end(), kb.begin(), kb.end());
        }
    }
    Bytes sk = internal_store_key(depth, key);
    store_->put(ByteView(sk), ByteView(v));
}

NodeSummary SumTrie::folded_leaf(const BitPath& key, const NodeSummary& base, int levels) const {
    // Lift a bottom-level leaf summary `levels` steps up its own path,
    // combining with the empty default on the unoccupied side each time.
    NodeSummary cur = base;
    for (int i = 0; i < levels; ++i) {
        NodeSummary sib = empty_at(i);
        bool bit = key.bit(width_ - 1 - i);
        cur = bit ? combine(sib, cur) : combine(cur, sib);
    }
    return cur;
}

NodeSummary SumTrie::root() const {
    if (leaf_count_ == 0) return empty_at(width_);
    InternalNode n = load_internal(0, BitPath{});
    return combine(n.child[0].summary, n.child[1].summary);
}

void SumTrie::insert(const BitPath& key, ByteView value) {
    insert_leaf(key, sha256(value), 1, value, true);
}

void SumTrie::insert(const Digest& key, ByteView value) {
    insert(BitPath::from_digest(key, width_), value);
}

void SumTrie::insert_hashed(const BitPath& key, const Digest& value_hash, std::uint64_t weight) {
    insert_leaf(key, value_hash, weight, ByteView(), false);
}

void SumTrie::insert_leaf(const BitPath& key, const Digest& value_hash, std::uint64_t weight,
                          ByteView value, bool has_value) {
    if (key.width != width_) throw std::invalid_argument("smst: key width mismatch");
    Bytes lk = leaf_store_key(key);
    if (store_->get(ByteView(lk))) throw DuplicateKeyError();

    // Leaf record: value_hash || weight || has_value || value
    Bytes rec(value_hash.bytes.begin(), value_hash.bytes.end());
    append_be64(rec, weight);
    rec.push_back(has_value ? 1 : 0);
    if (has_value) append_field(rec, value);
    store_->put(ByteView(lk), ByteView(rec));

    NodeSummary bottom = leaf_summary(key, value_hash, weight);

    if (leaf_count_ == 0) {
        InternalNode root{};
        for (int side = 0; side < 2; ++side) {
            root.child[side].type = kChildEmpty;
            root.child[side].summary = empty_at(width_ - 1);
        }
        store_internal(0, BitPath{}, root);
    }

    struct PathEntry {
        int depth;
        InternalNode node;
        int side;
    };
    std::vector<PathEntry> path;

    int depth = 0;
    for (;;) {
        InternalNode node = load_internal(depth, key);
        int side = key.bit(depth) ? 1 : 0;
        ChildRef& slot = node.child[side];

        if (slot.type == kChildEmpty) {
            slot.type = kChildLeaf;
            slot.leaf_key = key;
            slot.summary = folded_leaf(key, bottom, width_ - depth - 1);
            store_internal(depth, key, node);
            path.push_back({depth, node, side});
            break;
        }

        if (slot.type == kChildLeaf) {
            BitPath other = slot.leaf_key;
            int j = -1;
            for (int i = depth + 1; i < width_; ++i) {
                if (key.bit(i) != other.bit(i)) {
                    j = i;
                    break;
                }
            }
            if (j < 0) throw DuplicateKeyError();  // unreachable: caught by record check

            auto orec = store_->get(ByteView(leaf_store_key(other)));
            if (!orec) throw std::runtime_error("smst: dangling leaf reference");
            Digest ovh;
            std::copy(orec->begin(), orec->begin() + 32, ovh.bytes.begin());
            std::uint64_t oweight = read_be64(ByteView(orec->data() + 32, 8));
            NodeSummary obottom = leaf_summary(other, ovh, oweight);

            // Chain of internals from the divergence level back up to this slot.
            NodeSummary below{};
            for (int t = j; t >= depth + 1; --t) {
                InternalNode nn{};
                if (t == j) {
                    int kside = key.bit(j) ? 1 : 0;
                    nn.child[kside].type = kChildLeaf;
                    nn.child[kside].leaf_key = key;
                    nn.child[kside].summary = folded_leaf(key, bottom, width_ - j - 1);
                    nn.child[1 - kside].type = kChildLeaf;
                    nn.child[1 - kside].leaf_key = other;
                    nn.child[1 - kside].summary = folded_leaf(other, obottom, width_ - j - 1);
                } else {
                    int kside = key.bit(t) ? 1 : 0;
                    nn.child[kside].type = kChildInternal;
                    nn.child[kside].summary = below;
                    nn.child[1 - kside].type = kChildEmpty;
                    nn.child[1 - kside].summary = empty_at(width_ - t - 1);
                }
                store_internal(t, key, nn);
                below = combine(nn.child[0].summary, nn.child[1].summary);
            }
            slot.type = kChildInternal;
            slot.leaf_key = BitPath{};
            slot.summary = below;
            store_internal(depth, key, node);
            path.push_back({depth, node, side});
            break;
        }

        path.push_back({depth, node, side});
        depth += 1;
    }

    // Refresh cached child summaries up the traversal path.
    if (path.size() > 1) {
        NodeSummary below =
            combine(path.back().node.child[0].summary, path.back().node.child[1].summary);
        for (auto it = path.rbegin() + 1; it != path.rend(); ++it) {
            it->node.child[it->side].summary = below;
            store_internal(it->depth, key, it->node);
            below = combine(it->node.child[0].summary, it->node.child[1].summary);
        }
    }

    leaf_count_ += 1;
    write_meta();
}

bool SumTrie::contains(const BitPath& key) const {
    if (key.width != width_) return false;
    Bytes lk;
    lk = leaf_store_key(key);
    return store_->get(ByteView(lk)).has_value();
}

std::optional<Bytes> SumTrie::value(const BitPath& key) const {
    Bytes lk = leaf_store_key(key);
    auto rec = store_->get(ByteView(lk));
    if (!rec) return std::nullopt;
    std::size_t off = 32 + 8;
    if ((*rec)[off] == 0) return std::nullopt;
    off += 1;
    std::uint64_t vlen = read_be64(ByteView(rec->data() + off, 8));
    off += 8;
    return Bytes(rec->begin() + static_cast<long>(off),
                 rec->begin() + static_cast<long>(off + vlen));
}

MembershipProof SumTrie::prove(const BitPath& key) const {
    if (key.width != width_) throw KeyNotFoundError();
    auto rec = store_->get(ByteView(leaf_store_key(key)));
    if (!rec) throw KeyNotFoundError();

    MembershipProof proof;
    proof.leaf_key = key;
    std::copy(rec->begin(), rec->begin() + 32, proof.value_hash.bytes.begin());
    proof.weight = read_be64(ByteView(rec->data() + 32, 8));
    proof.siblings.assign(static_cast<std::size_t>(width_), NodeSummary{});

    int depth = 0;
    for (;;) {
        InternalNode node = load_internal(depth, key);
        int side = key.bit(depth) ? 1 : 0;
        proof.siblings[static_cast<std::size_t>(width_ - 1 - depth)] =
            node.child[1 - side].summary;
        const ChildRef& slot = node.child[side];
        if (slot.type == kChildLeaf) {
            // Remaining deeper levels are the leaf's fold region: all defaults.
            for (int i = 0; i < width_ - depth - 1; ++i) {
                proof.siblings[static_cast<std::size_t>(i)] = empty_at(i);
            }
            return proof;
        }
        if (slot.type != kChildInternal) throw std::runtime_error("smst: broken path");
        depth += 1;
    }
}

MembershipProof SumTrie::closest_proof(const BitPath& target) const {
    if (target.width != width_) throw std::invalid_argument("smst: target width mismatch");
    if (leaf_count_ == 0) throw EmptyTrieError();

    BitPath taken{};
    taken.width = width_;
    int depth = 0;
    for (;;) {
        InternalNode node = load_internal(depth, taken);
        int want = target.bit(depth) ? 1 : 0;
        int side = (node.child[want].type == kChildEmpty) ? 1 - want : want;
        const ChildRef& slot = node.child[side];
        if (slot.type == kChildEmpty) throw std::runtime_error("smst: node with no children");
        if (slot.type == kChildLeaf) return prove(slot.leaf_key);
        taken.set_bit(depth, side == 1);
        depth += 1;
    }
}

bool verify_proof(const NodeSummary& root, const MembershipProof& proof) {
    int width = proof.leaf_key.width;
    if (width < 1 || width > 256) return false;
    if (proof.siblings.size() != static_cast<std::size_t>(width)) return false;
    for (int i = width; i < 256; ++i) {
        if (proof.leaf_key.bit(i)) return false;  // non-canonical key
    }
    NodeSummary cur = leaf_summary(proof.leaf_key, proof.value_hash, proof.weight);
    for (int i = 0; i < width; ++i) {
        const NodeSummary& sib = proof.siblings[static_cast<std::size_t>(i)];
        bool bit = proof.leaf_key.bit(width - 1 - i);
        cur = bit ? combine(sib, cur) : combine(cur, sib);
    }
    return cur == root;
}

bool verify_closest_proof(const NodeSummary& root, const MembershipProof& proof,
                          const BitPath& target) {
    if (target.width != proof.leaf_key.width) return false;
    if (!verify_proof(root, proof)) return false;
    int width = proof.leaf_key.width;
    for (int i = 0; i < width; ++i) {
        int bit_index = width - 1 - i;
        if (target.bit(bit_index) == proof.leaf_key.bit(bit_index)) continue;
        if (!(proof.siblings[static_cast<std::size_t>(i)] == SumTrie::empty_at(i))) return false;
    }
    return true;
}

void SumTrie::export_to(std::ostream& out) const {
    out << "smst v1\n";
    out << "width " << width_ << '\n';
    NodeSummary r = root();
    out << "root " << r.hash.hex() << ' ' << r.sum << '\n';
    Bytes prefix = to_bytes("L");
    store_->scan_prefix(ByteView(prefix), [&](ByteView k, ByteView v) {
        Digest vh;
        std::copy(v.begin(), v.begin() + 32, vh.bytes.begin());
        std::uint64_t weight = read_be64(ByteView(v.data() + 32, 8));
        out << "leaf " << to_hex(k.subspan(1)) << ' ' << vh.hex() << ' ' << weight << '\n';
    });
}

SumTrie SumTrie::import_from(std::istream& in, std::unique_ptr<KvStore> store) {
    std::string line;
    auto fail = [](const std::string& why) -> std::runtime_error {
        return std::runtime_error("smst import: " + why);
    };
    if (!std::getline(in, line) || line != "smst v1") throw fail("bad magic line");
    if (!std::getline(in, line)) throw fail("missing width line");
    std::istringstream ws(line);
    std::string tok;
    int width = 0;
    if (!(ws >> tok >> width) || tok != "width" || width < 1 || width > 256) {
        throw fail("bad width line");
    }
    if (!std::getline(in, line)) throw fail("missing root line");
    std::istringstream rs(line);
    std::string root_hex;
    std::uint64_t root_sum = 0;
    if (!(rs >> tok >> root_hex >> root_sum) || tok != "root") throw fail("bad root line");
    NodeSummary declared{Digest::from_hex(root_hex), root_sum};

    SumTrie trie(width, std::move(store));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string key_hex, vh_hex;
        std::uint64_t weight = 0;
        if (!(ls >> tok >> key_hex >> vh_hex >> weight) || tok != "leaf") {
            throw fail("bad leaf line: " + line);
        }
        trie.insert_hashed(BitPath::from_hex(key_hex, width), Digest::from_hex(vh_hex), weight);
    }
    if (!(trie.root() == declared)) throw fail("root mismatch");
    return trie;
}

}  // namespace relay
