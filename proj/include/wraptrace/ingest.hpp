#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wraptrace/chain.hpp"

namespace wraptrace {

struct BlockRange {
    std::uint64_t from_block{};
    std::uint64_t to_block{};

    BlockRange() = default;
    BlockRange(std::uint64_t from, std::uint64_t to);

    [[nodiscard]] std::uint64_t width() const { return to_block - from_block + 1; }
    [[nodiscard]] bool contains(std::uint64_t block) const {
        return block >= from_block && block <= to_block;
    }

    friend bool operator==(const BlockRange&, const BlockRange&) = default;
};

struct CacheSegment {
    BlockRange range;
    std::uint64_t record_count{};
    Word32 checksum;  // keccak256 of the segment file bytes

    [[nodiscard]] std::string file_name() const;

    friend bool operator==(const CacheSegment&, const CacheSegment&) = default;
};

struct Checkpoint {
    std::uint64_t last_complete_block{};
    std::vector<CacheSegment> segments;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

// Pull-based stream of raw logs.
class RawLogReader {
  public:
    virtual ~RawLogReader() = default;
    virtual std::optional<RawLog> next() = 0;
};

class VectorLogReader final : public RawLogReader {
  public:
    explicit VectorLogReader(std::vector<RawLog> logs) : logs_(std::move(logs)) {}
    std::optional<RawLog> next() override {
        if (index_ >= logs_.size()) return std::nullopt;
        return logs_[index_++];
    }

  private:
    std::vector<RawLog> logs_;
    std::size_t index_ = 0;
};

// One log per line:
//   block<TAB>tx_hash<TAB>log_index<TAB>emitter<TAB>topic0,topic1,...<TAB>data_hex
std::string format_raw_log_line(const RawLog& log);
RawLog parse_raw_log_line(std::string_view line);

// Streaming reader over a raw-log line file; enforces strict
// (block_number, log_index) order and reports parse errors with line numbers.
std::unique_ptr<RawLogReader> replay_file(const std::filesystem::path& path);

struct WriteResult {
    Checkpoint checkpoint;
    std::uint64_t segments_written{};  // newly written by this call
};

// Persists a sorted log stream into <dir> as line-format segment files plus a
// checkpoint record. Segment boundaries sit on global multiples of
// segment_blocks; runs of record-free windows collapse into a single empty
// segment. Idempotent: a rerun over a fully cached range writes nothing, and
// a resumed run continues from last_complete_block + 1 producing the same
// bytes as an uninterrupted run.
WriteResult write_cache(RawLogReader& logs, const std::filesystem::path& dir, BlockRange range,
                        std::uint64_t segment_blocks);

std::optional<Checkpoint> load_checkpoint(const std::filesystem::path& dir);

// Highest block B such that segments cover [range.from_block, B] contiguously;
// nullopt when the first block is uncovered.
std::optional<std::uint64_t> covered_until(const Checkpoint& checkpoint, std::uint64_t from_block);

// Recomputes each segment file's checksum against the checkpoint.
// Throws CacheError on any mismatch or missing file.
void verify_cache(const std::filesystem::path& dir);

// Reads cached segments covering `range` in order; throws CoverageError
// naming the first gap when the cache does not cover the range.
std::unique_ptr<RawLogReader> open_cache(const std::filesystem::path& dir, BlockRange range);

// Anything that can hand out a fresh sorted RawLog stream on demand
// (discovery rescans the same source once per iteration).
class LogSource {
  public:
    virtual ~LogSource() = default;
    [[nodiscard]] virtual std::unique_ptr<RawLogReader> open() const = 0;
};

class VectorLogSource final : public LogSource {
  public:
    explicit VectorLogSource(std::vector<RawLog> logs) : logs_(std::move(logs)) {}
    [[nodiscard]] std::unique_ptr<RawLogReader> open() const override {
        return std::make_unique<VectorLogReader>(logs_);
    }

  private:
    std::vector<RawLog> logs_;
};

class FileLogSource final : public LogSource {
  public:
    explicit FileLogSource(std::filesystem::path path) : path_(std::move(path)) {}
    [[nodiscard]] std::unique_ptr<RawLogReader> open() const override {
        return replay_file(path_);
    }

  private:
    std::filesystem::path path_;
};

class CacheLogSource final : public LogSource {
  public:
    CacheLogSource(std::filesystem::path dir, BlockRange range)
        : dir_(std::move(dir)), range_(range) {}
    [[nodiscard]] std::unique_ptr<RawLogReader> open() const override {
        return open_cache(dir_, range_);
    }

  private:
    std::filesystem::path dir_;
    BlockRange range_;
};

struct TxGroup {
    Word32 tx_hash;
    std::vector<RawLog> logs;
};

// Groups a sorted log stream by transaction: one group per tx_hash, logs in
// log_index order, groups in first-occurrence order. Buffers at most one
// block's logs.
class TxGroupReader {
  public:
    explicit TxGroupReader(RawLogReader& source) : source_(source) {}
    std::optional<TxGroup> next();

  private:
    void fill();

    RawLogReader& source_;
    std::deque<TxGroup> ready_;
    std::optional<RawLog> lookahead_;
    std::optional<std::pair<std::uint64_t, std::uint32_t>> last_key_;
    bool exhausted_ = false;
};

// ----------------------------------------------------------------------------
// JSON-RPC fetch

// Transport seam: posts one JSON-RPC body, returns the raw response body.
// Throws RpcError on network failure (the retry loop lives above this).
class RpcTransport {
  public:
    virtual ~RpcTransport() = default;
    virtual std::string post(const std::string& body) = 0;
};

// HTTP transport over cpp-httplib for endpoints like "http://host:port/path".
std::unique_ptr<RpcTransport> make_http_transport(const std::string& endpoint);

struct RetryPolicy {
    std::chrono::milliseconds initial_delay{500};
    unsigned factor = 2;
    unsigned max_attempts = 6;
};

struct FetchOptions {
    std::optional<std::vector<Address>> token_filter;
    RetryPolicy retry{};
    std::uint64_t head_guard_blocks = 64;  // refuse ranges this close to the chain head
    bool allow_unfinalized = false;
};

// Streams every Transfer-topic log in `range` from the endpoint, sorted by
// (block_number, log_index). Splits the range adaptively when the provider
// reports a result-limit error; retries network failures with exponential
// backoff per options.retry.
std::unique_ptr<RawLogReader> fetch_logs(RpcTransport& transport, BlockRange range,
                                         const FetchOptions& options = {});

// Advisory lock on a cache directory; at most one process at a time.
class CacheLock {
  public:
    ~CacheLock();
    CacheLock(CacheLock&& other) noexcept;
    CacheLock& operator=(CacheLock&&) = delete;
    CacheLock(const CacheLock&) = delete;

    // nullopt when another process holds the lock.
    static std::optional<CacheLock> try_acquire(const std::filesystem::path& dir);

  private:
    explicit CacheLock(int fd) : fd_(fd) {}
    int fd_ = -1;
};

}  // namespace wraptrace
