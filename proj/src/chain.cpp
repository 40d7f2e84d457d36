#include "wraptrace/chain.hpp"

#include <charconv>
#include <cstring>

#include "wraptrace/errors.hpp"
#include "wraptrace/keccak.hpp"

namespace wraptrace {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

void require_prefix(std::string_view text) {
    if (text.size() < 2 || text[0] != '0' || text[1] != 'x') {
        throw ParseError("expected 0x-prefixed hex, got '" + std::string(text) + "'");
    }
}

template <std::size_t N>
std::array<std::uint8_t, N> fixed_from_hex(std::string_view text, const char* what) {
    require_prefix(text);
    if (text.size() != 2 + 2 * N) {
        throw ParseError(std::string(what) + " must be 0x + " + std::to_string(2 * N) +
                         " hex digits, got '" + std::string(text) + "'");
    }
    std::array<std::uint8_t, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
        const int hi = hex_nibble(text[2 + 2 * i]);
        const int lo = hex_nibble(text[3 + 2 * i]);
        if (hi < 0 || lo < 0) {
            throw ParseError(std::string(what) + " has non-hex character in '" +
                             std::string(text) + "'");
        }
        out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
    }
    return out;
}

std::size_t fnv1a(std::span<const std::uint8_t> bytes) {
    std::size_t h = 14695981039346656037ULL;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

std::string hex_encode(std::span<const std::uint8_t> bytes) {
    std::string out;
    out.reserve(2 + 2 * bytes.size());
    out += "0x";
    for (std::uint8_t b : bytes) {
        out += kHexDigits[b >> 4];
        out += kHexDigits[b & 0x0f];
    }
    return out;
}

std::vector<std::uint8_t> hex_decode(std::string_view text) {
    require_prefix(text);
    const std::string_view digits = text.substr(2);
    if (digits.size() % 2 != 0) {
        throw ParseError("hex byte string needs an even digit count: '" + std::string(text) + "'");
    }
    std::vector<std::uint8_t> out(digits.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const int hi = hex_nibble(digits[2 * i]);
        const int lo = hex_nibble(digits[2 * i + 1]);
        if (hi < 0 || lo < 0) {
            throw ParseError("non-hex character in '" + std::string(text) + "'");
        }
        out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
    }
    return out;
}

bool Address::is_zero() const {
    for (std::uint8_t b : bytes) {
        if (b != 0) return false;
    }
    return true;
}

std::string Address::to_hex() const {
    return hex_encode(bytes);
}

Address Address::from_hex(std::string_view text) {
    return Address{fixed_from_hex<20>(text, "address")};
}

bool Word32::is_zero() const {
    for (std::uint8_t b : bytes) {
        if (b != 0) return false;
    }
    return true;
}

std::string Word32::to_hex() const {
    return hex_encode(bytes);
}

Word32 Word32::from_hex(std::string_view text) {
    return Word32{fixed_from_hex<32>(text, "32-byte word")};
}

std::size_t AddressHash::operator()(const Address& a) const noexcept {
    return fnv1a(a.bytes);
}

std::size_t Word32Hash::operator()(const Word32& w) const noexcept {
    return fnv1a(w.bytes);
}

Word32 amount_to_word(const Amount& value) {
    Word32 out;
    for (int i = 31; i >= 0; --i) {
        out.bytes[static_cast<std::size_t>(i)] =
            static_cast<std::uint8_t>((value >> (8 * (31 - i))).convert_to<unsigned>() & 0xffu);
    }
    return out;
}

Amount amount_from_word(const Word32& word) {
    Amount value = 0;
    for (std::uint8_t b : word.bytes) {
        value <<= 8;
        value |= b;
    }
    return value;
}

const Word32& transfer_topic0() {
    static const Word32 topic = [] {
        Word32 w;
        w.bytes = keccak256(std::string_view("Transfer(address,address,uint256)"));
        return w;
    }();
    return topic;
}

std::optional<TransferEvent> decode_transfer(const RawLog& log) {
    if (log.topics.empty() || log.topics[0] != transfer_topic0()) {
        return std::nullopt;
    }
    if (log.topics.size() != 3 || log.data.size() != 32) {
        throw MalformedLogError(
            "Transfer log at block " + std::to_string(log.position.block_number) + " index " +
            std::to_string(log.position.log_index) + " has ABI shape " +
            std::to_string(log.topics.size()) + " topics / " + std::to_string(log.data.size()) +
            " data bytes (want 3 topics / 32 bytes)");
    }
    TransferEvent event;
    event.token = log.emitter;
    std::memcpy(event.from.bytes.data(), log.topics[1].bytes.data() + 12, 20);
    std::memcpy(event.to.bytes.data(), log.topics[2].bytes.data() + 12, 20);
    Word32 word;
    std::memcpy(word.bytes.data(), log.data.data(), 32);
    event.value = amount_from_word(word);
    event.position = log.position;
    return event;
}

RawLog encode_transfer(const TransferEvent& event) {
    RawLog log;
    log.emitter = event.token;
    log.topics.resize(3);
    log.topics[0] = transfer_topic0();
    std::memcpy(log.topics[1].bytes.data() + 12, event.from.bytes.data(), 20);
    std::memcpy(log.topics[2].bytes.data() + 12, event.to.bytes.data(), 20);
    const Word32 word = amount_to_word(event.value);
    log.data.assign(word.bytes.begin(), word.bytes.end());
    log.position = event.position;
    return log;
}

std::uint64_t parse_hex_quantity(std::string_view text) {
    require_prefix(text);
    const std::string_view digits = text.substr(2);
    if (digits.empty()) {
        throw ParseError("hex quantity has no digits: '" + std::string(text) + "'");
    }
    std::uint64_t value = 0;
    const auto [ptr, ec] =
        std::from_chars(digits.data(), digits.data() + digits.size(), value, 16);
    if (ec == std::errc::result_out_of_range) {
        throw ParseError("hex quantity overflows 64 bits: '" + std::string(text) + "'");
    }
    if (ec != std::errc() || ptr != digits.data() + digits.size()) {
        throw ParseError("non-hex character in quantity '" + std::string(text) + "'");
    }
    return value;
}

}  // namespace wraptrace
