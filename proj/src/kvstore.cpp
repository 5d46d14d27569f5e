#include "relay/kvstore.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace relay {

namespace {
bool has_prefix(const Bytes& key, ByteView prefix) {
    if (key.size() < prefix.size()) return false;
    return std::equal(prefix.begin(), prefix.end(), key.begin());
}
}  // namespace

std::optional<Bytes> MemoryKvStore::get(ByteView key) const {
    auto it = map_.find(Bytes(key.begin(), key.end()));
    if (it == map_.end()) return std::nullopt;
    return it->second;
}

void MemoryKvStore::put(ByteView key, ByteView value) {
    map_[Bytes(key.begin(), key.end())] = Bytes(value.begin(), value.end());
}

bool MemoryKvStore::erase(ByteView key) {
    return map_.erase(Bytes(key.begin(), key.end())) > 0;
}

void MemoryKvStore::scan_prefix(ByteView prefix,
                                const std::function<void(ByteView, ByteView)>& fn) const {
    auto it = map_.lower_bound(Bytes(prefix.begin(), prefix.end()));
    for (; it != map_.end() && has_prefix(it->first, prefix); ++it) {
        fn(ByteView(it->first), ByteView(it->second));
    }
}

FileKvStore::FileKvStore(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_, std::ios::binary);
    if (!in) return;  // fresh store
    auto read_u64 = [&in]() {
        std::uint8_t buf[8];
        in.read(reinterpret_cast<char*>(buf), 8);
        return read_be64(ByteView(buf, 8));
    };
    std::uint64_t count = read_u64();
    if (!in) throw std::runtime_error("kvstore: truncated file " + path_);
    for (std::uint64_t i = 0; i < count; ++i) {
        std::uint64_t klen = read_u64();
        Bytes k(klen);
        in.read(reinterpret_cast<char*>(k.data()), static_cast<std::streamsize>(klen));
        std::uint64_t vlen = read_u64();
        Bytes v(vlen);
        in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(vlen));
        if (!in) throw std::runtime_error("kvstore: truncated file " + path_);
        mem_.put(ByteView(k), ByteView(v));
    }
}

FileKvStore::~FileKvStore() {
    try {
        flush();
    } catch (...) {
        // destructor must not throw; data loss here is acceptable for a cache
    }
}

std::optional<Bytes> FileKvStore::get(ByteView key) const { return mem_.get(key); }

void FileKvStore::put(ByteView key, ByteView value) {
    mem_.put(key, value);
    dirty_ = true;
}

bool FileKvStore::erase(ByteView key) {
    bool hit = mem_.erase(key);
    dirty_ = dirty_ || hit;
    return hit;
}

void FileKvStore::scan_prefix(ByteView prefix,
                              const std::function<void(ByteView, ByteView)>& fn) const {
    mem_.scan_prefix(prefix, fn);
}

void FileKvStore::flush() {
    if (!dirty_) return;
    std::string tmp = path_ + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("kvstore: cannot write " + tmp);
        Bytes header;
        std::uint64_t count = 0;
        mem_.scan_prefix(ByteView(), [&count](ByteView, ByteView) { ++count; });
        append_be64(header, count);
        out.write(reinterpret_cast<const char*>(header.data()),
                  static_cast<std::streamsize>(header.size()));
        mem_.scan_prefix(ByteView(), [&out](ByteView k, ByteView v) {
            Bytes rec;
            append_field(rec, k);
            append_field(rec, v);
            out.write(reinterpret_cast<const char*>(rec.data()),
                      static_cast<std::streamsize>(rec.size()));
        });
        if (!out) throw std::runtime_error("kvstore: write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path_.c_str()) != 0) {
        throw std::runtime_error("kvstore: rename failed for " + path_);
    }
    dirty_ = false;
}

}  // namespace relay
