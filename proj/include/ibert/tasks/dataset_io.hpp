#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ibert/tasks/batch.hpp"
#include "ibert/tasks/sample.hpp"
#include "ibert/tasks/vocab.hpp"

namespace ibert::tasks {

// Dataset text format, one sample per line:
//   <difficulty> TAB <input tokens> TAB <target tokens at masked positions>
// Tokens are space-separated Vocab::render surface forms (MASK "*", DELIM
// "|"); PAD is never written.
std::string format_sample_line(const Sample& s, const Vocab& vocab);
Sample parse_sample_line(std::string_view line, const Vocab& vocab);

void write_samples(const std::filesystem::path& path, const std::vector<Sample>& samples, const Vocab& vocab);
std::vector<Sample> read_samples(const std::filesystem::path& path, const Vocab& vocab);

// A generated dataset directory: train.tsv, valid.tsv, vocab.txt and
// manifest.txt (sorted key=value lines).
struct Dataset {
    Vocab vocab;
    std::vector<Sample> train;
    std::vector<Sample> valid;
    std::map<std::string, std::string> manifest;

    // NSP pads per batch, text tasks to the widest sample of the split.
    PadTo pad_to() const;
    std::size_t max_length() const;
};

std::map<std::string, std::string> bucket_manifest(const std::vector<Sample>& samples, const std::string& prefix);

void write_dataset(const std::filesystem::path& dir, const Dataset& dataset);
Dataset read_dataset(const std::filesystem::path& dir);

std::string format_key_values(const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> parse_key_values(std::string_view text, const std::string& origin);

}  // namespace ibert::tasks
