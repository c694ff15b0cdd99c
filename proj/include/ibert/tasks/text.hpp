#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ibert/rng.hpp"
#include "ibert/tasks/sample.hpp"
#include "ibert/tasks/vocab.hpp"

namespace ibert::tasks {

enum class TextLevel { Char, Word };

std::string_view text_level_name(TextLevel level);
TextLevel parse_text_level(std::string_view name);

// Leading token of every word-level sequence.
inline constexpr std::string_view kSentenceStart = "<s>";

// One sentence per line. Words are re-joined with single spaces; lines that
// hold no word are skipped. Invalid UTF-8 or an unreadable file throws.
std::vector<std::string> load_text_corpus(const std::filesystem::path& path);

std::vector<std::string> split_words(std::string_view sentence);
// UTF-8 code points as separate strings; the space is its own token.
std::vector<std::string> split_chars(std::string_view sentence);

// Token sequence at the given level (word level starts with <s>).
std::vector<std::string> tokenize(std::string_view sentence, TextLevel level);

// Length measure used for inductive splits: code points (char level) or
// tokens including <s> (word level).
std::size_t text_length(std::string_view sentence, TextLevel level);

// Sorted distinct tokens of the given sentences; tokens that spell a
// reserved special are left to UNK.
Vocab build_text_vocab(const std::vector<std::string>& sentences, TextLevel level);

// Masks every character (char level) or the single token (word level) of one
// word chosen uniformly at random. difficulty = text_length.
Sample make_masked_lm_sample(std::string_view sentence, TextLevel level, Rng& rng, const Vocab& vocab);

}  // namespace ibert::tasks
