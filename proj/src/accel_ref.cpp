#include <zlib.h>

#include <algorithm>
#include <cstring>

#include "nicpool/app_model.hpp"

namespace nicpool {

// Non-overlapping occurrences of each literal rule, summed.
static std::int64_t regex_match_count(const std::vector<std::string>& rules,
                                      std::span<const std::uint8_t> payload) {
    std::int64_t total = 0;
    for (const auto& rule : rules) {
        if (rule.empty()) continue;
        auto it = payload.begin();
        while (true) {
            it = std::search(it, payload.end(), rule.begin(), rule.end(),
                             [](std::uint8_t a, char b) { return a == static_cast<std::uint8_t>(b); });
            if (it == payload.end()) break;
            ++total;
            it += static_cast<std::ptrdiff_t>(rule.size());
        }
    }
    return total;
}

// Reference codec: zlib stream prefixed with the original length so the
// inverse is self-contained.
static std::vector<std::uint8_t> ref_compress(int level, std::span<const std::uint8_t> payload) {
    uLongf bound = compressBound(static_cast<uLong>(payload.size()));
    std::vector<std::uint8_t> out(8 + bound);
    std::uint64_t n = payload.size();
    for (int i = 0; i < 8; ++i) out[static_cast<size_t>(i)] = static_cast<std::uint8_t>(n >> (8 * i));
    int lvl = std::clamp(level, 1, 9);
    int rc = compress2(out.data() + 8, &bound, payload.data(), static_cast<uLong>(payload.size()), lvl);
    if (rc != Z_OK) throw_error(Errc::BadParams, "reference compressor failed");
    out.resize(8 + bound);
    return out;
}

static std::vector<std::uint8_t> ref_decompress(std::span<const std::uint8_t> payload) {
    if (payload.size() < 8) throw_error(Errc::BadParams, "compressed payload too short");
    std::uint64_t n = 0;
    for (int i = 0; i < 8; ++i) n |= static_cast<std::uint64_t>(payload[static_cast<size_t>(i)]) << (8 * i);
    std::vector<std::uint8_t> out(n);
    uLongf out_len = static_cast<uLongf>(n);
    int rc = uncompress(out.data(), &out_len, payload.data() + 8, static_cast<uLong>(payload.size() - 8));
    if (rc != Z_OK || out_len != n) throw_error(Errc::BadParams, "reference decompressor failed");
    return out;
}

// Keyed per-block permutation standing in for AES: a rotate + keystream XOR
// per round. Bijective on each block, so an inverse exists for tests.
static std::uint8_t keystream(std::uint64_t key, std::uint64_t block, int round, int i) {
    std::uint64_t x = mix_seed(key ^ (block * 0x9e3779b97f4a7c15ULL) ^
                               (static_cast<std::uint64_t>(round) << 32) ^ static_cast<std::uint64_t>(i));
    return static_cast<std::uint8_t>(x);
}

static constexpr int kPermRounds = 3;

static std::vector<std::uint8_t> keyed_permute(std::uint64_t key, int block_size,
                                               std::span<const std::uint8_t> payload, bool inverse) {
    if (block_size <= 0) throw_error(Errc::BadParams, "block size must be positive");
    std::vector<std::uint8_t> data(payload.begin(), payload.end());
    size_t nblocks = (data.size() + static_cast<size_t>(block_size) - 1) / static_cast<size_t>(block_size);
    for (size_t b = 0; b < nblocks; ++b) {
        size_t lo = b * static_cast<size_t>(block_size);
        size_t len = std::min(static_cast<size_t>(block_size), data.size() - lo);
        std::vector<std::uint8_t> blk(data.begin() + static_cast<std::ptrdiff_t>(lo),
                                      data.begin() + static_cast<std::ptrdiff_t>(lo + len));
        if (!inverse) {
            for (int r = 0; r < kPermRounds; ++r) {
                std::rotate(blk.begin(), blk.begin() + (blk.size() > 1 ? 1 : 0), blk.end());
                for (size_t i = 0; i < blk.size(); ++i)
                    blk[i] ^= keystream(key, b, r, static_cast<int>(i));
            }
        } else {
            for (int r = kPermRounds - 1; r >= 0; --r) {
                for (size_t i = 0; i < blk.size(); ++i)
                    blk[i] ^= keystream(key, b, r, static_cast<int>(i));
                std::rotate(blk.begin(), blk.end() - (blk.size() > 1 ? 1 : 0), blk.end());
            }
        }
        std::copy(blk.begin(), blk.end(), data.begin() + static_cast<std::ptrdiff_t>(lo));
    }
    return data;
}

static std::vector<std::uint8_t> digest_tag_append(std::uint64_t key,
                                                   std::span<const std::uint8_t> payload) {
    std::uint64_t tag = fnv1a64(payload, key ^ 0xcbf29ce484222325ULL);
    std::vector<std::uint8_t> out(payload.begin(), payload.end());
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(tag >> (8 * i)));
    return out;
}

AccelOutput accel_reference(AcceleratorKind kind, const AccelParams& params,
                            std::span<const std::uint8_t> payload) {
    AccelOutput out;
    switch (kind) {
        case AcceleratorKind::Regex:
            out.payload.assign(payload.begin(), payload.end());
            out.match_info.match_count = regex_match_count(params.rules, payload);
            return out;
        case AcceleratorKind::Compression:
            out.payload = ref_compress(params.level, payload);
            return out;
        case AcceleratorKind::Aes:
            out.payload = keyed_permute(params.key, params.block_size, payload, false);
            return out;
        case AcceleratorKind::Sha:
            out.payload = digest_tag_append(params.key, payload);
            return out;
    }
    throw_error(Errc::UnknownAccelerator, "accel_reference");
}

std::vector<std::uint8_t> accel_reference_inverse(AcceleratorKind kind, const AccelParams& params,
                                                  std::span<const std::uint8_t> payload) {
    switch (kind) {
        case AcceleratorKind::Regex:
            return {payload.begin(), payload.end()};
        case AcceleratorKind::Compression:
            return ref_decompress(payload);
        case AcceleratorKind::Aes:
            return keyed_permute(params.key, params.block_size, payload, true);
        case AcceleratorKind::Sha: {
            if (payload.size() < 8) throw_error(Errc::BadParams, "digest tag missing");
            return {payload.begin(), payload.end() - 8};
        }
    }
    throw_error(Errc::UnknownAccelerator, "accel_reference_inverse");
}

}  // namespace nicpool
