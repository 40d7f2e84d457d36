#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace wraptrace {

// Unsigned 256-bit token amount. Never touches floating point.
using Amount = boost::multiprecision::uint256_t;

std::string hex_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> hex_decode(std::string_view text);

// 20-byte account/contract identifier.
struct Address {
    std::array<std::uint8_t, 20> bytes{};

    [[nodiscard]] bool is_zero() const;
    [[nodiscard]] std::string to_hex() const;  // canonical: 0x + 40 lowercase digits
    static Address from_hex(std::string_view text);

    auto operator<=>(const Address&) const = default;
};

// 32-byte word: log topics, transaction hashes, digests.
struct Word32 {
    std::array<std::uint8_t, 32> bytes{};

    [[nodiscard]] bool is_zero() const;
    [[nodiscard]] std::string to_hex() const;  // canonical: 0x + 64 lowercase digits
    static Word32 from_hex(std::string_view text);

    auto operator<=>(const Word32&) const = default;
};

struct AddressHash {
    std::size_t operator()(const Address& a) const noexcept;
};
struct Word32Hash {
    std::size_t operator()(const Word32& w) const noexcept;
};

Word32 amount_to_word(const Amount& value);      // 32-byte big-endian
Amount amount_from_word(const Word32& word);

struct LogPosition {
    std::uint64_t block_number{};
    Word32 tx_hash{};
    std::uint32_t log_index{};

    // Strict stream order is (block_number, log_index).
    [[nodiscard]] std::pair<std::uint64_t, std::uint32_t> order_key() const {
        return {block_number, log_index};
    }

    friend bool operator==(const LogPosition&, const LogPosition&) = default;
};

// One undecoded event log as emitted by a contract.
struct RawLog {
    Address emitter;
    std::vector<Word32> topics;
    std::vector<std::uint8_t> data;
    LogPosition position;

    friend bool operator==(const RawLog&, const RawLog&) = default;
};

// A decoded ERC-20 Transfer.
struct TransferEvent {
    Address token;
    Address from;
    Address to;
    Amount value;
    LogPosition position;

    friend bool operator==(const TransferEvent&, const TransferEvent&) = default;
};

// keccak256("Transfer(address,address,uint256)"), computed once.
const Word32& transfer_topic0();

// Returns the decoded event iff the log is an ERC-20 Transfer; std::nullopt
// for any other event. Throws MalformedLogError when topic0 matches but the
// topic count or data width violates the ABI shape.
std::optional<TransferEvent> decode_transfer(const RawLog& log);

// Inverse of decode_transfer: addresses left-padded to 32-byte topics, value
// as a 32-byte big-endian data word.
RawLog encode_transfer(const TransferEvent& event);

// JSON-RPC quantity: "0x" followed by 1+ hex digits, minimal or zero-padded.
std::uint64_t parse_hex_quantity(std::string_view text);

}  // namespace wraptrace
