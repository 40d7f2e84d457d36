#include "wraptrace/ingest.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <sstream>

#include "wraptrace/errors.hpp"
#include "wraptrace/keccak.hpp"

namespace wraptrace {

namespace {

constexpr const char* kCheckpointName = "checkpoint";

std::uint64_t parse_decimal_u64(std::string_view text, const char* what) {
    if (text.empty()) throw ParseError(std::string(what) + " is empty");
    std::uint64_t value = 0;
    for (char c : text) {
        if (c < '0' || c > '9') {
            throw ParseError(std::string(what) + " has non-decimal character: '" +
                             std::string(text) + "'");
        }
        const std::uint64_t digit = static_cast<std::uint64_t>(c - '0');
        if (value > (UINT64_MAX - digit) / 10) {
            throw ParseError(std::string(what) + " overflows: '" + std::string(text) + "'");
        }
        value = value * 10 + digit;
    }
    return value;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.push_back(text.substr(start));
            break;
        }
        parts.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

void check_strict_order(std::optional<std::pair<std::uint64_t, std::uint32_t>>& last,
                        const LogPosition& pos, const std::string& context) {
    const auto key = pos.order_key();
    if (last && key <= *last) {
        throw OrderingError(context + ": (block " + std::to_string(pos.block_number) +
                            ", log " + std::to_string(pos.log_index) +
                            ") does not advance past (block " + std::to_string(last->first) +
                            ", log " + std::to_string(last->second) + ")");
    }
    last = key;
}

void atomic_write(const std::filesystem::path& target, const std::string& contents) {
    const std::filesystem::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) throw IoError("short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) throw IoError("rename " + tmp.string() + " -> " + target.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

Word32 digest_of(const std::string& bytes) {
    Word32 w;
    w.bytes = keccak256(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
    return w;
}

std::string serialize_checkpoint(const Checkpoint& cp) {
    std::string out = "last_complete_block=" + std::to_string(cp.last_complete_block) + "\n";
    for (const CacheSegment& seg : cp.segments) {
        out += "segment=" + std::to_string(seg.range.from_block) + "," +
               std::to_string(seg.range.to_block) + "," + std::to_string(seg.record_count) + "," +
               seg.checksum.to_hex() + "\n";
    }
    return out;
}

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& cp) {
    atomic_write(dir / kCheckpointName, serialize_checkpoint(cp));
}

class FileLogReader final : public RawLogReader {
  public:
    explicit FileLogReader(const std::filesystem::path& path)
        : path_(path.string()), in_(path, std::ios::binary) {
        if (!in_) throw IoError("cannot open " + path_);
    }

    std::optional<RawLog> next() override {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_number_;
            if (line.empty()) continue;
            RawLog log;
            try {
                log = parse_raw_log_line(line);
            } catch (const ParseError& e) {
                throw ParseError(path_ + ":" + std::to_string(line_number_) + ": " + e.what());
            }
            check_strict_order(last_key_, log.position, path_);
            return log;
        }
        return std::nullopt;
    }

  private:
    std::string path_;
    std::ifstream in_;
    std::uint64_t line_number_ = 0;
    std::optional<std::pair<std::uint64_t, std::uint32_t>> last_key_;
};

}  // namespace

BlockRange::BlockRange(std::uint64_t from, std::uint64_t to) : from_block(from), to_block(to) {
    if (from > to) {
        throw ParseError("invalid block range: from " + std::to_string(from) + " > to " +
                         std::to_string(to));
    }
}

std::string CacheSegment::file_name() const {
    return "segment-" + std::to_string(range.from_block) + "-" + std::to_string(range.to_block) +
           ".logs";
}

std::string format_raw_log_line(const RawLog& log) {
    std::string line = std::to_string(log.position.block_number);
    line += '\t';
    line += log.position.tx_hash.to_hex();
    line += '\t';
    line += std::to_string(log.position.log_index);
    line += '\t';
    line += log.emitter.to_hex();
    line += '\t';
    for (std::size_t i = 0; i < log.topics.size(); ++i) {
        if (i > 0) line += ',';
        line += log.topics[i].to_hex();
    }
    line += '\t';
    line += hex_encode(log.data);
    return line;
}

RawLog parse_raw_log_line(std::string_view line) {
    const auto fields = split(line, '\t');
    if (fields.size() != 6) {
        throw ParseError("expected 6 tab-separated fields, got " + std::to_string(fields.size()));
    }
    RawLog log;
    log.position.block_number = parse_decimal_u64(fields[0], "block_number");
    log.position.tx_hash = Word32::from_hex(fields[1]);
    const std::uint64_t index = parse_decimal_u64(fields[2], "log_index");
    if (index > UINT32_MAX) throw ParseError("log_index overflows 32 bits");
    log.position.log_index = static_cast<std::uint32_t>(index);
    log.emitter = Address::from_hex(fields[3]);
    if (fields[4].empty()) throw ParseError("log has no topics");
    for (std::string_view topic : split(fields[4], ',')) {
        log.topics.push_back(Word32::from_hex(topic));
    }
    log.data = hex_decode(fields[5]);
    return log;
}

std::unique_ptr<RawLogReader> replay_file(const std::filesystem::path& path) {
    return std::make_unique<FileLogReader>(path);
}

WriteResult write_cache(RawLogReader& logs, const std::filesystem::path& dir, BlockRange range,
                        std::uint64_t segment_blocks) {
    if (segment_blocks == 0) throw ParseError("segment_blocks must be >= 1");
    std::filesystem::create_directories(dir);

    Checkpoint cp = load_checkpoint(dir).value_or(Checkpoint{});
    const std::optional<std::uint64_t> covered = covered_until(cp, range.from_block);
    if (covered && *covered >= range.to_block) {
        cp.last_complete_block = *covered;
        return {cp, 0};
    }
    const std::uint64_t resume_from = covered ? *covered + 1 : range.from_block;

    const auto window_start = [&](std::uint64_t block) {
        return (block / segment_blocks) * segment_blocks;
    };
    const auto window_end = [&](std::uint64_t block) {
        return window_start(block) + segment_blocks - 1;
    };

    std::uint64_t seg_start = resume_from;
    std::string seg_bytes;
    std::uint64_t seg_records = 0;
    std::uint64_t segments_written = 0;

    const auto flush = [&](std::uint64_t seg_end) {
        CacheSegment seg;
        seg.range = BlockRange(seg_start, seg_end);
        seg.record_count = seg_records;
        seg.checksum = digest_of(seg_bytes);
        atomic_write(dir / seg.file_name(), seg_bytes);
        const auto at = std::upper_bound(
            cp.segments.begin(), cp.segments.end(), seg,
            [](const CacheSegment& a, const CacheSegment& b) {
                return a.range.from_block < b.range.from_block;
            });
        cp.segments.insert(at, seg);
        cp.last_complete_block = covered_until(cp, range.from_block).value_or(range.from_block);
        save_checkpoint(dir, cp);
        ++segments_written;
        seg_bytes.clear();
        seg_records = 0;
        seg_start = seg_end + 1;
    };

    std::optional<std::pair<std::uint64_t, std::uint32_t>> last_key;
    while (std::optional<RawLog> log = logs.next()) {
        check_strict_order(last_key, log->position, "write_cache input");
        const std::uint64_t block = log->position.block_number;
        if (block < resume_from) continue;  // already cached
        if (block > range.to_block) {
            throw OrderingError("log at block " + std::to_string(block) +
                                " is beyond the requested range end " +
                                std::to_string(range.to_block));
        }
        if (seg_records > 0 && block > window_end(seg_start)) {
            flush(window_end(seg_start));
        }
        if (block > window_end(seg_start)) {
            // maximal run of record-free windows becomes one empty segment
            flush(window_start(block) - 1);
        }
        seg_bytes += format_raw_log_line(*log);
        seg_bytes += '\n';
        ++seg_records;
    }

    if (seg_records > 0 && range.to_block > window_end(seg_start)) {
        flush(window_end(seg_start));
    }
    flush(range.to_block);

    return {cp, segments_written};
}

std::optional<Checkpoint> load_checkpoint(const std::filesystem::path& dir) {
    const std::filesystem::path path = dir / kCheckpointName;
    if (!std::filesystem::exists(path)) return std::nullopt;

    Checkpoint cp;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    std::uint64_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError(path.string() + ":" + std::to_string(line_number) +
                             ": expected key=value");
        }
        const std::string_view key = std::string_view(line).substr(0, eq);
        const std::string_view value = std::string_view(line).substr(eq + 1);
        if (key == "last_complete_block") {
            cp.last_complete_block = parse_decimal_u64(value, "last_complete_block");
        } else if (key == "segment") {
            const auto parts = split(value, ',');
            if (parts.size() != 4) {
                throw ParseError(path.string() + ":" + std::to_string(line_number) +
                                 ": segment needs from,to,count,checksum");
            }
            CacheSegment seg;
            seg.range = BlockRange(parse_decimal_u64(parts[0], "segment from"),
                                   parse_decimal_u64(parts[1], "segment to"));
            seg.record_count = parse_decimal_u64(parts[2], "segment count");
            seg.checksum = Word32::from_hex(parts[3]);
            cp.segments.push_back(seg);
        } else {
            throw ParseError(path.string() + ":" + std::to_string(line_number) +
                             ": unknown key '" + std::string(key) + "'");
        }
    }
    std::sort(cp.segments.begin(), cp.segments.end(),
              [](const CacheSegment& a, const CacheSegment& b) {
                  return a.range.from_block < b.range.from_block;
              });
    for (std::size_t i = 1; i < cp.segments.size(); ++i) {
        if (cp.segments[i].range.from_block <= cp.segments[i - 1].range.to_block) {
            throw CacheError(path.string() + ": segments overlap around block " +
                             std::to_string(cp.segments[i].range.from_block));
        }
    }
    return cp;
}

std::optional<std::uint64_t> covered_until(const Checkpoint& checkpoint,
                                           std::uint64_t from_block) {
    std::optional<std::uint64_t> end;
    for (const CacheSegment& seg : checkpoint.segments) {
        if (!end) {
            if (seg.range.from_block <= from_block && from_block <= seg.range.to_block) {
                end = seg.range.to_block;
            }
            continue;
        }
        if (seg.range.from_block == *end + 1) {
            end = seg.range.to_block;
        } else if (seg.range.from_block > *end + 1) {
            break;
        }
    }
    return end;
}

void verify_cache(const std::filesystem::path& dir) {
    const std::optional<Checkpoint> cp = load_checkpoint(dir);
    if (!cp) return;
    for (const CacheSegment& seg : cp->segments) {
        const std::filesystem::path file = dir / seg.file_name();
        if (!std::filesystem::exists(file)) {
            throw CacheError("missing segment file " + file.string());
        }
        if (digest_of(read_file(file)) != seg.checksum) {
            throw CacheError("checksum mismatch in " + file.string());
        }
    }
}

namespace {

class CacheReader final : public RawLogReader {
  public:
    CacheReader(std::filesystem::path dir, std::vector<CacheSegment> segments, BlockRange range)
        : dir_(std::move(dir)), segments_(std::move(segments)), range_(range) {}

    std::optional<RawLog> next() override {
        while (true) {
            if (current_) {
                if (std::optional<RawLog> log = current_->next()) {
                    if (log->position.block_number < range_.from_block) continue;
                    if (log->position.block_number > range_.to_block) {
                        current_.reset();
                        segment_index_ = segments_.size();  // past the range end; done
                        return std::nullopt;
                    }
                    check_strict_order(last_key_, log->position, "cache stream");
                    return log;
                }
                current_.reset();
            }
            if (segment_index_ >= segments_.size()) return std::nullopt;
            const CacheSegment& seg = segments_[segment_index_++];
            const std::filesystem::path file = dir_ / seg.file_name();
            const std::string bytes = read_file(file);
            if (digest_of(bytes) != seg.checksum) {
                throw CacheError("checksum mismatch in " + file.string());
            }
            current_ = replay_file(file);
        }
    }

  private:
    std::filesystem::path dir_;
    std::vector<CacheSegment> segments_;
    BlockRange range_;
    std::size_t segment_index_ = 0;
    std::unique_ptr<RawLogReader> current_;
    std::optional<std::pair<std::uint64_t, std::uint32_t>> last_key_;
};

}  // namespace

std::unique_ptr<RawLogReader> open_cache(const std::filesystem::path& dir, BlockRange range) {
    const std::optional<Checkpoint> cp = load_checkpoint(dir);
    if (!cp) {
        throw CoverageError("no checkpoint in cache directory " + dir.string());
    }
    const std::optional<std::uint64_t> covered = covered_until(*cp, range.from_block);
    if (!covered) {
        throw CoverageError("cache does not cover block " + std::to_string(range.from_block));
    }
    if (*covered < range.to_block) {
        throw CoverageError("cache covers only up to block " + std::to_string(*covered) +
                            " of requested range ending " + std::to_string(range.to_block));
    }
    std::vector<CacheSegment> wanted;
    for (const CacheSegment& seg : cp->segments) {
        if (seg.range.to_block < range.from_block || seg.range.from_block > range.to_block) {
            continue;
        }
        wanted.push_back(seg);
    }
    return std::make_unique<CacheReader>(dir, std::move(wanted), range);
}

std::optional<TxGroup> TxGroupReader::next() {
    if (ready_.empty()) fill();
    if (ready_.empty()) return std::nullopt;
    TxGroup group = std::move(ready_.front());
    ready_.pop_front();
    return group;
}

void TxGroupReader::fill() {
    if (exhausted_) return;

    std::vector<RawLog> block_logs;
    std::optional<std::uint64_t> block;
    if (lookahead_) {
        block = lookahead_->position.block_number;
        block_logs.push_back(std::move(*lookahead_));
        lookahead_.reset();
    }
    while (true) {
        std::optional<RawLog> log = source_.next();
        if (!log) {
            exhausted_ = true;
            break;
        }
        check_strict_order(last_key_, log->position, "transaction grouping");
        if (!block) {
            block = log->position.block_number;
        } else if (log->position.block_number != *block) {
            lookahead_ = std::move(log);
            break;
        }
        block_logs.push_back(std::move(*log));
    }

    // One group per tx_hash in first-occurrence order.
    std::vector<std::pair<Word32, std::size_t>> seen;
    for (RawLog& log : block_logs) {
        std::size_t slot = seen.size();
        for (const auto& [hash, index] : seen) {
            if (hash == log.position.tx_hash) {
                slot = index;
                break;
            }
        }
        if (slot == seen.size()) {
            seen.emplace_back(log.position.tx_hash, slot);
            ready_.push_back(TxGroup{log.position.tx_hash, {}});
        }
        ready_[ready_.size() - (seen.size() - slot)].logs.push_back(std::move(log));
    }
}

CacheLock::~CacheLock() {
    if (fd_ >= 0) ::close(fd_);
}

CacheLock::CacheLock(CacheLock&& other) noexcept : fd_(other.fd_) {
    other.fd_ = -1;
}

std::optional<CacheLock> CacheLock::try_acquire(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path lock_path = dir / ".lock";
    const int fd = ::open(lock_path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    if (fd < 0) throw IoError("cannot open lock file " + lock_path.string());
    if (::flock(fd, LOCK_EX | LOCK_NB) != 0) {
        ::close(fd);
        return std::nullopt;
    }
    return CacheLock(fd);
}

}  // namespace wraptrace
