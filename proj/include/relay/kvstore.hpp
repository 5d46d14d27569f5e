#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "relay/bytes.hpp"

namespace relay {

/**
 * Minimal key-value backing store for tries. Ordered iteration is part of the
 * contract (exports list leaves in key order).
 */
class KvStore {
public:
    virtual ~KvStore() = default;
    virtual std::optional<Bytes> get(ByteView key) const = 0;
    virtual void put(ByteView key, ByteView value) = 0;
    virtual bool erase(ByteView key) = 0;
    /** Visit entries with the given key prefix in ascending key order. */
    virtual void scan_prefix(ByteView prefix,
                             const std::function<void(ByteView, ByteView)>& fn) const = 0;
};

class MemoryKvStore final : public KvStore {
public:
    std::optional<Bytes> get(ByteView key) const override;
    void put(ByteView key, ByteView value) override;
    bool erase(ByteView key) override;
    void scan_prefix(ByteView prefix,
                     const std::function<void(ByteView, ByteView)>& fn) const override;

    std::size_t size() const { return map_.size(); }

private:
    std::map<Bytes, Bytes> map_;
};

/**
 * File-backed store: loads the whole map on open, persists on flush() and
 * destruction. No crash recovery; the file is rewritten atomically-enough for
 * desk use (write temp, rename).
 */
class FileKvStore final : public KvStore {
public:
    explicit FileKvStore(std::string path);
    ~FileKvStore() override;

    std::optional<Bytes> get(ByteView key) const override;
    void put(ByteView key, ByteView value) override;
    bool erase(ByteView key) override;
    void scan_prefix(ByteView prefix,
                     const std::function<void(ByteView, ByteView)>& fn) const override;

    void flush();

private:
    std::string path_;
    MemoryKvStore mem_;
    bool dirty_ = false;
};

}  // namespace relay
