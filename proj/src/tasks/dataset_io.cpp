#include "ibert/tasks/dataset_io.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "ibert/util/fs.hpp"
#include "ibert/util/parse.hpp"

namespace ibert::tasks {

std::string format_sample_line(const Sample& s, const Vocab& vocab) {
    std::string line = std::to_string(s.difficulty);
    line += '\t';
    for (std::size_t i = 0; i < s.length; ++i) {
        if (i) line += ' ';
        line += vocab.render(s.input_ids[i]);
    }
    line += '\t';
    bool first = true;
    for (std::size_t i = 0; i < s.length; ++i) {
        if (!s.mask_flags[i]) continue;
        if (!first) line += ' ';
        line += vocab.render(s.target_ids[i]);
        first = false;
    }
    return line;
}

Sample parse_sample_line(std::string_view line, const Vocab& vocab) {
    const auto fields = util::split(line, '\t');
    if (fields.size() != 3) throw std::invalid_argument("expected 3 tab-separated fields");
    std::vector<TokenId> input;
    for (const auto& t : util::split(fields[1], ' ')) input.push_back(vocab.parse(t));
    std::vector<TokenId> masked_targets;
    if (!fields[2].empty())
        for (const auto& t : util::split(fields[2], ' ')) masked_targets.push_back(vocab.parse(t));

    std::vector<TokenId> original = input;
    std::vector<std::size_t> positions;
    for (std::size_t i = 0; i < input.size(); ++i) {
        if (input[i] != Vocab::kMask) continue;
        if (positions.size() == masked_targets.size())
            throw std::invalid_argument("fewer targets than masked positions");
        original[i] = masked_targets[positions.size()];
        positions.push_back(i);
    }
    if (positions.size() != masked_targets.size()) throw std::invalid_argument("more targets than masked positions");
    return make_sample(std::move(original), positions, util::parse_size(fields[0], "difficulty"));
}

void write_samples(const std::filesystem::path& path, const std::vector<Sample>& samples, const Vocab& vocab) {
    std::string out;
    for (const auto& s : samples) {
        out += format_sample_line(s, vocab);
        out += '\n';
    }
    util::write_file_atomic(path, out);
}

std::vector<Sample> read_samples(const std::filesystem::path& path, const Vocab& vocab) {
    std::istringstream in(util::read_file(path));
    std::vector<Sample> samples;
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (line.empty()) continue;
        try {
            samples.push_back(parse_sample_line(line, vocab));
        } catch (const std::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return samples;
}

PadTo Dataset::pad_to() const {
    auto it = manifest.find("pad_to");
    if (it != manifest.end() && it->second == "dataset_max") return PadTo::DatasetMax;
    return PadTo::BatchMax;
}

std::size_t Dataset::max_length() const {
    std::size_t m = 0;
    for (const auto* split : {&train, &valid})
        for (const auto& s : *split) m = std::max(m, s.length);
    return m;
}

std::map<std::string, std::string> bucket_manifest(const std::vector<Sample>& samples, const std::string& prefix) {
    std::map<std::size_t, std::size_t> counts;
    for (const auto& s : samples) ++counts[s.difficulty];
    std::map<std::string, std::string> kv;
    kv[prefix + ".n"] = std::to_string(samples.size());
    for (const auto& [bucket, n] : counts) kv[prefix + ".bucket." + std::to_string(bucket)] = std::to_string(n);
    return kv;
}

std::string format_key_values(const std::map<std::string, std::string>& kv) {
    std::string out;
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    return out;
}

std::map<std::string, std::string> parse_key_values(std::string_view text, const std::string& origin) {
    std::map<std::string, std::string> kv;
    std::size_t line_no = 0;
    for (const auto& raw : util::split(text, '\n')) {
        ++line_no;
        const auto line = util::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw std::invalid_argument(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
        const auto key = util::trim(line.substr(0, eq));
        if (key.empty()) throw std::invalid_argument(origin + ":" + std::to_string(line_no) + ": empty key");
        kv[std::string(key)] = std::string(util::trim(line.substr(eq + 1)));
    }
    return kv;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
    std::filesystem::create_directories(dir);
    dataset.vocab.save(dir / "vocab.txt");
    write_samples(dir / "train.tsv", dataset.train, dataset.vocab);
    write_samples(dir / "valid.tsv", dataset.valid, dataset.vocab);
    util::write_file_atomic(dir / "manifest.txt", format_key_values(dataset.manifest));
}

Dataset read_dataset(const std::filesystem::path& dir) {
    for (const char* name : {"vocab.txt", "train.tsv", "valid.tsv", "manifest.txt"})
        if (!std::filesystem::exists(dir / name))
            throw util::IoError("dataset file '" + (dir / name).string() + "' does not exist");
    Dataset d;
    d.vocab = Vocab::load(dir / "vocab.txt");
    d.train = read_samples(dir / "train.tsv", d.vocab);
    d.valid = read_samples(dir / "valid.tsv", d.vocab);
    d.manifest = parse_key_values(util::read_file(dir / "manifest.txt"), (dir / "manifest.txt").string());
    return d;
}

}  // namespace ibert::tasks
