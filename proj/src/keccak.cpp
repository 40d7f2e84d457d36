#include "wraptrace/keccak.hpp"

#include <cstring>

namespace wraptrace {

namespace {

constexpr std::array<std::uint64_t, 24> kRoundConstants = {
    0x0000000000000001ULL, 0x0000000000008082ULL, 0x800000000000808aULL,
    0x8000000080008000ULL, 0x000000000000808bULL, 0x0000000080000001ULL,
    0x8000000080008081ULL, 0x8000000000008009ULL, 0x000000000000008aULL,
    0x0000000000000088ULL, 0x0000000080008009ULL, 0x000000008000000aULL,
    0x000000008000808bULL, 0x800000000000008bULL, 0x8000000000008089ULL,
    0x8000000000008003ULL, 0x8000000000008002ULL, 0x8000000000000080ULL,
    0x000000000000800aULL, 0x800000008000000aULL, 0x8000000080008081ULL,
    0x8000000000008080ULL, 0x0000000080000001ULL, 0x8000000080008008ULL,
};

// Rotation offsets indexed [x][y].
constexpr unsigned kRotation[5][5] = {
    {0, 36, 3, 41, 18},
    {1, 44, 10, 45, 2},
    {62, 6, 43, 15, 61},
    {28, 55, 25, 21, 56},
    {27, 20, 39, 8, 14},
};

inline std::uint64_t rotl(std::uint64_t v, unsigned n) {
    return n == 0 ? v : (v << n) | (v >> (64 - n));
}

// State lane (x, y) lives at index x + 5*y.
void keccak_f1600(std::uint64_t* a) {
    for (unsigned round = 0; round < 24; ++round) {
        std::uint64_t c[5];
        for (unsigned x = 0; x < 5; ++x) {
            c[x] = a[x] ^ a[x + 5] ^ a[x + 10] ^ a[x + 15] ^ a[x + 20];
        }
        for (unsigned x = 0; x < 5; ++x) {
            const std::uint64_t d = c[(x + 4) % 5] ^ rotl(c[(x + 1) % 5], 1);
            for (unsigned y = 0; y < 5; ++y) {
                a[x + 5 * y] ^= d;
            }
        }

        std::uint64_t b[25];
        for (unsigned x = 0; x < 5; ++x) {
            for (unsigned y = 0; y < 5; ++y) {
                b[y + 5 * ((2 * x + 3 * y) % 5)] = rotl(a[x + 5 * y], kRotation[x][y]);
            }
        }
        for (unsigned x = 0; x < 5; ++x) {
            for (unsigned y = 0; y < 5; ++y) {
                a[x + 5 * y] = b[x + 5 * y] ^ (~b[(x + 1) % 5 + 5 * y] & b[(x + 2) % 5 + 5 * y]);
            }
        }
        a[0] ^= kRoundConstants[round];
    }
}

}  // namespace

std::array<std::uint8_t, 32> keccak256(std::span<const std::uint8_t> data) {
    constexpr std::size_t kRate = 136;  // 1600/8 - 2*256/8
    std::uint64_t state[25] = {};
    std::uint8_t block[kRate];

    std::size_t offset = 0;
    while (data.size() - offset >= kRate) {
        std::memcpy(block, data.data() + offset, kRate);
        for (unsigned i = 0; i < kRate / 8; ++i) {
            std::uint64_t lane;
            std::memcpy(&lane, block + 8 * i, 8);
            state[i] ^= lane;  // little-endian host assumed; true for all targets here
        }
        keccak_f1600(state);
        offset += kRate;
    }

    // Final block with Keccak pad10*1 (0x01 domain byte).
    const std::size_t tail = data.size() - offset;
    std::memset(block, 0, kRate);
    if (tail > 0) {
        std::memcpy(block, data.data() + offset, tail);
    }
    block[tail] = 0x01;
    block[kRate - 1] |= 0x80;
    for (unsigned i = 0; i < kRate / 8; ++i) {
        std::uint64_t lane;
        std::memcpy(&lane, block + 8 * i, 8);
        state[i] ^= lane;
    }
    keccak_f1600(state);

    std::array<std::uint8_t, 32> out;
    std::memcpy(out.data(), state, 32);
    return out;
}

std::array<std::uint8_t, 32> keccak256(std::string_view text) {
    return keccak256(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace wraptrace
