#include "ibert/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ibert/util/fs.hpp"

namespace ibert::model {

namespace {

constexpr char kMagic[8] = {'I', 'B', 'R', 'T', 'C', 'K', 'P', 'T'};

class Writer {
public:
    void u32(std::uint32_t v) { put_le(v, 4); }
    void u64(std::uint64_t v) { put_le(v, 8); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void bytes(std::string_view s) { buf_.append(s); }
    const std::string& str() const { return buf_; }

private:
    void put_le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    std::string buf_;
};

class Reader {
public:
    Reader(std::string data, std::string origin) : data_(std::move(data)), origin_(std::move(origin)) {}

    std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
    std::uint64_t u64() { return get_le(8); }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool at_end() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) throw std::runtime_error(origin_ + ": truncated checkpoint");
    }
    std::uint64_t get_le(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    std::string data_;
    std::string origin_;
    std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    auto header_map = checkpoint.config.to_map();
    for (const auto& [k, v] : checkpoint.meta) header_map["meta." + k] = v;
    std::string header;
    for (const auto& [k, v] : header_map) header += k + "=" + v + "\n";

    Writer w;
    w.bytes(std::string_view(kMagic, sizeof kMagic));
    w.u32(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(header.size()));
    w.bytes(header);
    w.u32(static_cast<std::uint32_t>(checkpoint.params.size()));
    for (const auto& [name, t] : checkpoint.params) {
        w.u32(static_cast<std::uint32_t>(name.size()));
        w.bytes(name);
        w.u32(static_cast<std::uint32_t>(t.ndim()));
        for (auto d : t.shape()) w.u64(d);
        for (float v : t.data()) w.f32(v);
    }
    util::write_file_atomic(path, w.str());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    Reader r(util::read_file(path), path.string());
    if (r.bytes(sizeof kMagic) != std::string(kMagic, sizeof kMagic))
        throw std::runtime_error(path.string() + ": not a checkpoint file");
    if (const auto version = r.u32(); version != kCheckpointVersion)
        throw std::runtime_error(path.string() + ": unsupported checkpoint version " + std::to_string(version));
    const std::string header = r.bytes(r.u32());

    std::map<std::string, std::string> kv;
    Checkpoint ck;
    std::istringstream lines(header);
    for (std::string line; std::getline(lines, line);) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error(path.string() + ": malformed header line '" + line + "'");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        if (key.rfind("meta.", 0) == 0)
            ck.meta[key.substr(5)] = value;
        else
            kv[key] = value;
    }
    ck.config = ModelConfig::from_map(kv);

    const std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string name = r.bytes(r.u32());
        const std::uint32_t ndim = r.u32();
        num::Shape shape(ndim);
        for (auto& d : shape) d = r.u64();
        std::vector<float> values(num::numel(shape));
        for (auto& v : values) v = r.f32();
        ck.params.add(std::move(name), num::Tensor<float>::from(std::move(shape), std::move(values), true));
    }
    if (!r.at_end()) throw std::runtime_error(path.string() + ": trailing bytes after checkpoint");
    return ck;
}

}  // namespace ibert::model
