#include "ibert/tasks/nsp.hpp"

#include <stdexcept>
#include <string>

namespace ibert::tasks {

namespace {

std::uint64_t pow10(std::size_t e) {
    std::uint64_t v = 1;
    for (std::size_t i = 0; i < e; ++i) v *= 10;
    return v;
}

// Numbers with exactly d digits; 0..9 for d = 1.
std::uint64_t sample_exact_digits(std::size_t d, Rng& rng) {
    const std::uint64_t lo = d == 1 ? 0 : pow10(d - 1);
    return rng.uniform_int(lo, pow10(d) - 1);
}

}  // namespace

std::string_view nsp_kind_name(NspKind kind) {
    switch (kind) {
        case NspKind::Add: return "add";
        case NspKind::Copy: return "copy";
        case NspKind::Reverse: return "reverse";
    }
    return "?";
}

NspKind parse_nsp_kind(std::string_view name) {
    if (name == "add") return NspKind::Add;
    if (name == "copy") return NspKind::Copy;
    if (name == "reverse") return NspKind::Reverse;
    throw std::invalid_argument("unknown NSP task '" + std::string(name) + "'");
}

void NspSpec::validate() const {
    if (d_lo < 1) throw std::invalid_argument("NSP difficulty must be >= 1");
    if (d_hi < d_lo) throw std::invalid_argument("NSP difficulty range is empty");
    if (d_hi > kMaxDifficulty)
        throw std::invalid_argument("NSP difficulty above " + std::to_string(kMaxDifficulty) + " is not supported");
    if (count == 0) throw std::invalid_argument("NSP sample count must be >= 1");
}

std::vector<int> encode_little_endian(std::uint64_t n) {
    std::vector<int> digits;
    do {
        digits.push_back(static_cast<int>(n % 10));
        n /= 10;
    } while (n != 0);
    return digits;
}

std::uint64_t decode_little_endian(std::span<const int> digits) {
    if (digits.empty()) throw std::invalid_argument("cannot decode an empty digit sequence");
    std::uint64_t n = 0;
    for (std::size_t i = digits.size(); i-- > 0;) {
        if (digits[i] < 0 || digits[i] > 9)
            throw std::invalid_argument("not a decimal digit: " + std::to_string(digits[i]));
        n = n * 10 + static_cast<std::uint64_t>(digits[i]);
    }
    return n;
}

std::uint64_t apply_rule(NspKind kind, std::uint64_t a1, std::uint64_t a2) {
    switch (kind) {
        case NspKind::Add: return a1 + a2;
        case NspKind::Copy: return a1;
        case NspKind::Reverse: {
            std::uint64_t r = 0;
            do {
                r = r * 10 + a1 % 10;
                a1 /= 10;
            } while (a1 != 0);
            return r;
        }
    }
    return 0;
}

std::size_t operand_count(NspKind kind) { return kind == NspKind::Add ? 2 : 1; }

Sample make_nsp_sample(NspKind kind, std::span<const std::uint64_t> operands, std::size_t difficulty) {
    if (operands.size() != operand_count(kind))
        throw std::invalid_argument(std::string(nsp_kind_name(kind)) + " takes " +
                                    std::to_string(operand_count(kind)) + " operands");
    const std::uint64_t final_number = apply_rule(kind, operands[0], operands.size() > 1 ? operands[1] : 0);
    std::vector<TokenId> tokens;
    for (auto a : operands) {
        for (int digit : encode_little_endian(a)) tokens.push_back(digit_id(digit));
        tokens.push_back(Vocab::kDelim);
    }
    std::vector<std::size_t> masked;
    for (int digit : encode_little_endian(final_number)) {
        masked.push_back(tokens.size());
        tokens.push_back(digit_id(digit));
    }
    return make_sample(std::move(tokens), masked, difficulty);
}

Sample gen_nsp_sample(NspKind kind, std::size_t difficulty, Rng& rng) {
    if (difficulty < 1 || difficulty > kMaxDifficulty)
        throw std::invalid_argument("NSP difficulty " + std::to_string(difficulty) + " out of range");
    if (kind == NspKind::Add) {
        const std::uint64_t a1 = rng.uniform_int(0, pow10(difficulty) - 1);
        const std::uint64_t a2 = sample_exact_digits(difficulty, rng);
        const std::uint64_t ops[] = {a1, a2};
        return make_nsp_sample(kind, ops, difficulty);
    }
    const std::uint64_t ops[] = {sample_exact_digits(difficulty, rng)};
    return make_nsp_sample(kind, ops, difficulty);
}

std::vector<std::size_t> bucket_counts(const NspSpec& spec) {
    spec.validate();
    const std::size_t buckets = spec.d_hi - spec.d_lo + 1;
    std::vector<std::size_t> counts(buckets, spec.count / buckets);
    for (std::size_t i = 0; i < spec.count % buckets; ++i) ++counts[i];
    return counts;
}

std::vector<Sample> gen_nsp_dataset(const NspSpec& spec) {
    const auto counts = bucket_counts(spec);
    const Rng root(spec.seed);
    std::vector<Sample> out;
    out.reserve(spec.count);
    std::uint64_t index = 0;
    for (std::size_t b = 0; b < counts.size(); ++b)
        for (std::size_t i = 0; i < counts[b]; ++i) {
            Rng rng = root.split(index++);
            out.push_back(gen_nsp_sample(spec.kind, spec.d_lo + b, rng));
        }
    return out;
}

std::vector<std::uint64_t> nsp_numbers(const Sample& s) {
    std::vector<std::uint64_t> numbers;
    std::vector<int> digits;
    auto flush = [&] {
        if (digits.empty()) throw std::invalid_argument("NSP sample has an empty number");
        numbers.push_back(decode_little_endian(digits));
        digits.clear();
    };
    for (auto id : s.target_ids) {
        if (id == Vocab::kDelim) {
            flush();
            continue;
        }
        const int digit = digit_of(id);
        if (digit < 0) throw std::invalid_argument("NSP sample holds a non-digit token id " + std::to_string(id));
        digits.push_back(digit);
    }
    flush();
    return numbers;
}

}  // namespace ibert::tasks
