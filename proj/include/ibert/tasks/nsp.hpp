#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ibert/rng.hpp"
#include "ibert/tasks/sample.hpp"

namespace ibert::tasks {

enum class NspKind { Add, Copy, Reverse };

std::string_view nsp_kind_name(NspKind kind);
NspKind parse_nsp_kind(std::string_view name);

// Largest difficulty whose operands and sums fit in 64 bits.
inline constexpr std::size_t kMaxDifficulty = 18;

struct NspSpec {
    NspKind kind = NspKind::Add;
    std::size_t d_lo = 1;
    std::size_t d_hi = 1;
    std::size_t count = 0;
    std::uint64_t seed = 0;

    void validate() const;
};

// Least-significant digit first; 0 -> {0}.
std::vector<int> encode_little_endian(std::uint64_t n);
// Throws std::invalid_argument on a value outside 0..9 or an empty sequence.
std::uint64_t decode_little_endian(std::span<const int> digits);

// Add -> a1 + a2; Copy -> a1; Reverse -> a1 with its decimal digits reversed.
std::uint64_t apply_rule(NspKind kind, std::uint64_t a1, std::uint64_t a2 = 0);

// Number of operands drawn before the final number (2 for Add, 1 otherwise).
std::size_t operand_count(NspKind kind);

// Token layout: digits(a1) | digits(a2) [| digits(a3)], with every digit of
// the final number masked.
Sample make_nsp_sample(NspKind kind, std::span<const std::uint64_t> operands, std::size_t difficulty);

// Add: a1 uniform on [0, 10^d), a2 uniform over d-digit numbers.
// Copy/Reverse: a1 uniform over d-digit numbers. For d = 1 the d-digit
// numbers are 0..9.
Sample gen_nsp_sample(NspKind kind, std::size_t difficulty, Rng& rng);

// Samples per difficulty: count / n_buckets, with the remainder going one
// each to the lowest difficulties. Sample i draws from Rng(seed).split(i).
std::vector<std::size_t> bucket_counts(const NspSpec& spec);
std::vector<Sample> gen_nsp_dataset(const NspSpec& spec);

// Recovers the operands from a sample's target stream.
std::vector<std::uint64_t> nsp_numbers(const Sample& s);

}  // namespace ibert::tasks
