#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ibert::tasks {

using TokenId = std::int32_t;

// Token <-> id map. Ids 0..3 are always PAD, MASK, DELIM, UNK; regular
// tokens follow in the order given.
class Vocab {
public:
    static constexpr TokenId kPad = 0;
    static constexpr TokenId kMask = 1;
    static constexpr TokenId kDelim = 2;
    static constexpr TokenId kUnk = 3;
    static constexpr std::size_t kSpecialCount = 4;

    Vocab();
    // Regular tokens must be distinct and must not collide with the specials.
    explicit Vocab(const std::vector<std::string>& regular);

    // Specials plus the digits "0".."9" (14 tokens); digit k has id 4 + k.
    static Vocab nsp();

    std::size_t size() const { return tokens_.size(); }
    const std::vector<std::string>& tokens() const { return tokens_; }
    const std::string& token(TokenId id) const;
    std::optional<TokenId> find(std::string_view token) const;
    // Unknown tokens map to kUnk.
    TokenId id(std::string_view token) const;

    // Dataset-file surface forms: MASK "*", DELIM "|", PAD "<pad>", UNK
    // "<unk>", a single space "_". Regular tokens that would read as one of
    // these, or that start with a backslash, get a leading backslash.
    std::string render(TokenId id) const;
    TokenId parse(std::string_view surface) const;

    void save(const std::filesystem::path& path) const;
    static Vocab load(const std::filesystem::path& path);

    bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> index_;
};

TokenId digit_id(int digit);
// -1 when the id is not a digit token of Vocab::nsp().
int digit_of(TokenId id);

}  // namespace ibert::tasks
