#include "ibert/tasks/text.hpp"

#include <set>
#include <sstream>
#include <stdexcept>

#include "ibert/util/fs.hpp"

namespace ibert::tasks {

namespace {

// Byte length of the UTF-8 sequence starting at s[i], or 0 if malformed.
std::size_t utf8_width(std::string_view s, std::size_t i) {
    const auto lead = static_cast<unsigned char>(s[i]);
    std::size_t n = 0;
    if (lead < 0x80) return 1;
    if ((lead & 0xE0) == 0xC0) n = 2;
    else if ((lead & 0xF0) == 0xE0) n = 3;
    else if ((lead & 0xF8) == 0xF0) n = 4;
    else return 0;
    if (i + n > s.size()) return 0;
    for (std::size_t k = 1; k < n; ++k)
        if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return 0;
    return n;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f'; }

}  // namespace

std::string_view text_level_name(TextLevel level) { return level == TextLevel::Char ? "char" : "word"; }

TextLevel parse_text_level(std::string_view name) {
    if (name == "char") return TextLevel::Char;
    if (name == "word") return TextLevel::Word;
    throw std::invalid_argument("unknown text level '" + std::string(name) + "'");
}

std::vector<std::string> split_words(std::string_view sentence) {
    std::vector<std::string> words;
    std::size_t i = 0;
    while (i < sentence.size()) {
        while (i < sentence.size() && is_space(sentence[i])) ++i;
        std::size_t j = i;
        while (j < sentence.size() && !is_space(sentence[j])) ++j;
        if (j > i) words.emplace_back(sentence.substr(i, j - i));
        i = j;
    }
    return words;
}

std::vector<std::string> split_chars(std::string_view sentence) {
    std::vector<std::string> chars;
    for (std::size_t i = 0; i < sentence.size();) {
        const std::size_t w = utf8_width(sentence, i);
        if (w == 0) throw std::invalid_argument("invalid UTF-8 in sentence");
        chars.emplace_back(sentence.substr(i, w));
        i += w;
    }
    return chars;
}

std::vector<std::string> load_text_corpus(const std::filesystem::path& path) {
    const std::string text = util::read_file(path);
    std::vector<std::string> sentences;
    std::istringstream in(text);
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        for (std::size_t i = 0; i < line.size();) {
            const std::size_t w = utf8_width(line, i);
            if (w == 0)
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": invalid UTF-8");
            i += w;
        }
        const auto words = split_words(line);
        if (words.empty()) continue;
        std::string joined = words.front();
        for (std::size_t k = 1; k < words.size(); ++k) joined += " " + words[k];
        sentences.push_back(std::move(joined));
    }
    return sentences;
}

std::vector<std::string> tokenize(std::string_view sentence, TextLevel level) {
    if (level == TextLevel::Char) return split_chars(sentence);
    auto words = split_words(sentence);
    words.insert(words.begin(), std::string(kSentenceStart));
    return words;
}

std::size_t text_length(std::string_view sentence, TextLevel level) {
    if (level == TextLevel::Char) return split_chars(sentence).size();
    return split_words(sentence).size() + 1;
}

Vocab build_text_vocab(const std::vector<std::string>& sentences, TextLevel level) {
    const Vocab specials;
    std::set<std::string> distinct;
    if (level == TextLevel::Word) distinct.emplace(kSentenceStart);
    for (const auto& s : sentences)
        for (auto& t : tokenize(s, level))
            if (!specials.find(t)) distinct.insert(std::move(t));
    return Vocab(std::vector<std::string>(distinct.begin(), distinct.end()));
}

Sample make_masked_lm_sample(std::string_view sentence, TextLevel level, Rng& rng, const Vocab& vocab) {
    const auto words = split_words(sentence);
    if (words.empty()) throw std::invalid_argument("cannot mask an empty sentence");
    const std::size_t chosen = static_cast<std::size_t>(rng.uniform_int(0, words.size() - 1));

    std::vector<TokenId> ids;
    std::vector<std::size_t> masked;
    if (level == TextLevel::Word) {
        ids.push_back(vocab.id(kSentenceStart));
        for (std::size_t w = 0; w < words.size(); ++w) {
            if (w == chosen) masked.push_back(ids.size());
            ids.push_back(vocab.id(words[w]));
        }
    } else {
        for (std::size_t w = 0; w < words.size(); ++w) {
            if (w > 0) ids.push_back(vocab.id(" "));
            for (const auto& ch : split_chars(words[w])) {
                if (w == chosen) masked.push_back(ids.size());
                ids.push_back(vocab.id(ch));
            }
        }
    }
    const std::size_t length = ids.size();
    return make_sample(std::move(ids), masked, length);
}

}  // namespace ibert::tasks
