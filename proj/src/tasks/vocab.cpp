#include "ibert/tasks/vocab.hpp"

#include <array>
#include <sstream>
#include <stdexcept>

#include "ibert/util/fs.hpp"

namespace ibert::tasks {

namespace {

constexpr std::array<std::string_view, Vocab::kSpecialCount> kSpecialNames = {"<pad>", "<mask>", "<delim>", "<unk>"};
constexpr std::array<std::string_view, Vocab::kSpecialCount> kSpecialSurface = {"<pad>", "*", "|", "<unk>"};
constexpr std::string_view kSpaceSurface = "_";

bool needs_escape(std::string_view token) {
    if (token.empty()) return false;
    if (token.front() == '\\' || token == kSpaceSurface) return true;
    for (auto s : kSpecialSurface)
        if (token == s) return true;
    return false;
}

}  // namespace

Vocab::Vocab() : Vocab(std::vector<std::string>{}) {}

Vocab::Vocab(const std::vector<std::string>& regular) {
    for (auto name : kSpecialNames) {
        index_.emplace(std::string(name), static_cast<TokenId>(tokens_.size()));
        tokens_.emplace_back(name);
    }
    for (const auto& t : regular) {
        if (t.empty()) throw std::invalid_argument("vocabulary tokens must be non-empty");
        if (!index_.emplace(t, static_cast<TokenId>(tokens_.size())).second)
            throw std::invalid_argument("duplicate or reserved vocabulary token '" + t + "'");
        tokens_.push_back(t);
    }
}

Vocab Vocab::nsp() {
    std::vector<std::string> digits;
    for (int d = 0; d < 10; ++d) digits.push_back(std::to_string(d));
    return Vocab(digits);
}

const std::string& Vocab::token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
        throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary of " +
                                std::to_string(tokens_.size()));
    return tokens_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocab::find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

TokenId Vocab::id(std::string_view token) const { return find(token).value_or(kUnk); }

std::string Vocab::render(TokenId id) const {
    if (id >= 0 && static_cast<std::size_t>(id) < kSpecialCount) return std::string(kSpecialSurface[id]);
    const std::string& t = token(id);
    if (t == " ") return std::string(kSpaceSurface);
    if (needs_escape(t)) return "\\" + t;
    return t;
}

TokenId Vocab::parse(std::string_view surface) const {
    if (surface.empty()) throw std::invalid_argument("empty token in dataset text");
    for (std::size_t i = 0; i < kSpecialCount; ++i)
        if (surface == kSpecialSurface[i]) return static_cast<TokenId>(i);
    if (surface == kSpaceSurface) return id(" ");
    if (surface.front() == '\\') surface.remove_prefix(1);
    auto found = find(surface);
    if (!found) return kUnk;
    if (*found < static_cast<TokenId>(kSpecialCount)) return kUnk;
    return *found;
}

void Vocab::save(const std::filesystem::path& path) const {
    std::string out;
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        out += render(static_cast<TokenId>(i));
        out += '\n';
    }
    util::write_file_atomic(path, out);
}

Vocab Vocab::load(const std::filesystem::path& path) {
    std::istringstream in(util::read_file(path));
    std::vector<std::string> regular;
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line); ++line_no) {
        if (line_no < kSpecialCount) {
            if (line != kSpecialSurface[line_no])
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no + 1) +
                                         ": expected special token '" + std::string(kSpecialSurface[line_no]) + "'");
            continue;
        }
        if (line == kSpaceSurface)
            regular.emplace_back(" ");
        else if (!line.empty() && line.front() == '\\')
            regular.emplace_back(line.substr(1));
        else
            regular.push_back(line);
    }
    if (line_no < kSpecialCount) throw std::runtime_error(path.string() + ": vocabulary file is truncated");
    return Vocab(regular);
}

TokenId digit_id(int digit) {
    if (digit < 0 || digit > 9) throw std::invalid_argument("not a decimal digit: " + std::to_string(digit));
    return static_cast<TokenId>(Vocab::kSpecialCount) + digit;
}

int digit_of(TokenId id) {
    const int d = id - static_cast<TokenId>(Vocab::kSpecialCount);
    return d >= 0 && d <= 9 ? d : -1;
}

}  // namespace ibert::tasks
