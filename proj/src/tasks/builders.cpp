#include "ibert/tasks/builders.hpp"

#include <functional>

#include "ibert/rng.hpp"

namespace ibert::tasks {

namespace {
constexpr std::uint64_t kTrainStream = 1;
constexpr std::uint64_t kValidStream = 2;

std::string range_text(std::size_t lo, std::size_t hi) { return std::to_string(lo) + ".." + std::to_string(hi); }
}  // namespace

Dataset build_nsp_dataset(const NspDatasetSpec& spec) {
    const Rng root(spec.seed);
    NspSpec train{spec.kind, spec.train_lo, spec.train_hi, spec.train_n, root.split(kTrainStream).key()};
    NspSpec valid{spec.kind, spec.valid_lo, spec.valid_hi, spec.valid_n, root.split(kValidStream).key()};
    train.validate();
    valid.validate();

    Dataset d;
    d.vocab = Vocab::nsp();
    d.train = gen_nsp_dataset(train);
    d.valid = gen_nsp_dataset(valid);
    d.manifest = bucket_manifest(d.train, "train");
    for (auto& kv : bucket_manifest(d.valid, "valid")) d.manifest.insert(kv);
    d.manifest["task"] = std::string(nsp_kind_name(spec.kind));
    d.manifest["train.d"] = range_text(spec.train_lo, spec.train_hi);
    d.manifest["valid.d"] = range_text(spec.valid_lo, spec.valid_hi);
    d.manifest["seed"] = std::to_string(spec.seed);
    d.manifest["pad_to"] = "batch_max";
    return d;
}

Dataset build_text_dataset(const TextDatasetSpec& spec) {
    auto sentences = load_text_corpus(spec.corpus);
    const std::size_t total = sentences.size();
    const TextLevel level = spec.level;
    auto split = split_by<std::string>(std::move(sentences), spec.bounds,
                                       [level](const std::string& s) { return text_length(s, level); });
    if (spec.max_train && split.train.size() > *spec.max_train) split.train.resize(*spec.max_train);
    if (spec.max_valid && split.valid.size() > *spec.max_valid) split.valid.resize(*spec.max_valid);

    Dataset d;
    d.vocab = build_text_vocab(split.train, level);
    const Rng root(spec.seed);
    const Rng train_rng = root.split(kTrainStream), valid_rng = root.split(kValidStream);
    for (std::size_t i = 0; i < split.train.size(); ++i) {
        Rng r = train_rng.split(i);
        d.train.push_back(make_masked_lm_sample(split.train[i], level, r, d.vocab));
    }
    for (std::size_t i = 0; i < split.valid.size(); ++i) {
        Rng r = valid_rng.split(i);
        d.valid.push_back(make_masked_lm_sample(split.valid[i], level, r, d.vocab));
    }
    d.manifest = bucket_manifest(d.train, "train");
    for (auto& kv : bucket_manifest(d.valid, "valid")) d.manifest.insert(kv);
    d.manifest["task"] = "text";
    d.manifest["level"] = std::string(text_level_name(level));
    d.manifest["corpus"] = spec.corpus.string();
    d.manifest["corpus.sentences"] = std::to_string(total);
    d.manifest["dropped"] = std::to_string(split.dropped);
    d.manifest["train.length"] = range_text(spec.bounds.train_min, spec.bounds.threshold);
    d.manifest["valid.length"] = range_text(spec.bounds.threshold + 1, spec.bounds.valid_max);
    d.manifest["vocab.size"] = std::to_string(d.vocab.size());
    d.manifest["seed"] = std::to_string(spec.seed);
    d.manifest["pad_to"] = "dataset_max";
    return d;
}

}  // namespace ibert::tasks
