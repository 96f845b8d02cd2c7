#include "crackseg/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "crackseg/serialization.hpp"

namespace crackseg {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'C', 'R', 'K', 'W'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is, const fs::path& path) {
    unsigned char b[4] = {};
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw ArchiveError("truncated archive: " + path.string());
    return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::string get_string(std::istream& is, std::uint32_t len, const fs::path& path) {
    std::string s(len, '\0');
    if (len > 0 && !is.read(s.data(), len)) throw ArchiveError("truncated archive: " + path.string());
    return s;
}

template <typename T>
std::vector<std::uint32_t> shape_of(const nn::Tensor<T>& t) {
    return {static_cast<std::uint32_t>(t.n), static_cast<std::uint32_t>(t.c),
            static_cast<std::uint32_t>(t.h), static_cast<std::uint32_t>(t.w)};
}

std::string shape_string(const std::vector<std::uint32_t>& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
    return out;
}

}  // namespace

const WeightArchive::Entry* WeightArchive::find(const std::string& name) const {
    for (const auto& e : entries) {
        if (e.name == name) return &e;
    }
    return nullptr;
}

template <typename T>
WeightArchive WeightArchive::from_model(const nn::Model<T>& model) {
    WeightArchive a;
    a.config_json = nlohmann::json(model.config()).dump();
    for (const auto* p : model.params()) {
        Entry e;
        e.name = p->name;
        e.shape = shape_of(p->value);
        e.values.assign(p->value.data.begin(), p->value.data.end());
        a.entries.push_back(std::move(e));
    }
    return a;
}

template WeightArchive WeightArchive::from_model(const nn::Model<float>&);
template WeightArchive WeightArchive::from_model(const nn::Model<double>&);

void WeightArchive::save(const fs::path& path) const {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ArchiveError("cannot write " + path.string());
    os.write(kMagic, 4);
    put_u32(os, kVersion);
    put_u32(os, static_cast<std::uint32_t>(config_json.size()));
    os.write(config_json.data(), static_cast<std::streamsize>(config_json.size()));
    put_u32(os, static_cast<std::uint32_t>(entries.size()));
    for (const auto& e : entries) {
        put_u32(os, static_cast<std::uint32_t>(e.name.size()));
        os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        put_u32(os, static_cast<std::uint32_t>(e.shape.size()));
        for (auto d : e.shape) put_u32(os, d);
        for (float v : e.values) {
            std::uint32_t bits = 0;
            std::memcpy(&bits, &v, 4);
            put_u32(os, bits);
        }
    }
    if (!os) throw ArchiveError("write failed: " + path.string());
}

WeightArchive WeightArchive::load(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ArchiveError("cannot open archive " + path.string());
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) throw ArchiveError("not a weight archive: " + path.string());
    if (get_u32(is, path) != kVersion) throw ArchiveError("unsupported archive version: " + path.string());
    WeightArchive a;
    a.config_json = get_string(is, get_u32(is, path), path);
    const std::uint32_t count = get_u32(is, path);
    for (std::uint32_t i = 0; i < count; ++i) {
        Entry e;
        e.name = get_string(is, get_u32(is, path), path);
        const std::uint32_t ndim = get_u32(is, path);
        std::size_t total = 1;
        for (std::uint32_t d = 0; d < ndim; ++d) {
            e.shape.push_back(get_u32(is, path));
            total *= e.shape.back();
        }
        e.values.resize(total);
        for (float& v : e.values) {
            const std::uint32_t bits = get_u32(is, path);
            std::memcpy(&v, &bits, 4);
        }
        a.entries.push_back(std::move(e));
    }
    return a;
}

template <typename T>
void load_weights(nn::Model<T>& model, const WeightArchive& archive, const std::string& prefix) {
    for (auto* p : model.params()) {
        if (p->name.rfind(prefix, 0) != 0) continue;
        const auto* e = archive.find(p->name);
        if (e == nullptr) throw ArchiveError("archive is missing layer '" + p->name + "'");
        if (e->shape != shape_of(p->value)) {
            throw ArchiveError("layer '" + p->name + "' has shape " + shape_string(e->shape) +
                               " in archive, model expects " + shape_string(shape_of(p->value)));
        }
        for (std::size_t i = 0; i < e->values.size(); ++i) p->value.data[i] = static_cast<T>(e->values[i]);
    }
}

template void load_weights(nn::Model<float>&, const WeightArchive&, const std::string&);
template void load_weights(nn::Model<double>&, const WeightArchive&, const std::string&);

void save_checkpoint(const fs::path& path, const Model& model) {
    WeightArchive::from_model(model).save(path);
}

Model load_checkpoint(const fs::path& path) {
    const WeightArchive a = WeightArchive::load(path);
    ModelConfig cfg;
    try {
        cfg = nlohmann::json::parse(a.config_json).get<ModelConfig>();
    } catch (const nlohmann::json::exception& e) {
        throw ArchiveError("bad model config in " + path.string() + ": " + e.what());
    }
    Model model(cfg);
    load_weights(model, a);
    return model;
}

}  // namespace crackseg
