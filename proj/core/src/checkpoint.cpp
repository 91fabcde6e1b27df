#include "casrnn/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include "casrnn/errors.hpp"

namespace casrnn {

namespace {

constexpr std::uint16_t kVersion = 1;
constexpr std::uint32_t kMaxNameLen = 4096;
constexpr std::uint32_t kMaxRank = 8;

void put_u16(std::ofstream& out, std::uint16_t v) {
    const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
    out.write(b, 2);
}

void put_u32(std::ofstream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
}

void put_f64(std::ofstream& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(b, 8);
}

class Reader {
  public:
    explicit Reader(const std::string& path) : in_(path, std::ios::binary) {
        if (!in_) throw ArgumentError("cannot open '" + path + "' for reading");
    }

    std::size_t offset() const { return offset_; }

    void raw(void* dst, std::size_t n, const char* what) {
        if (!in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n))) {
            throw FormatError(std::string("truncated checkpoint while reading ") + what,
                              offset_);
        }
        offset_ += n;
    }

    std::uint16_t u16(const char* what) {
        unsigned char b[2];
        raw(b, 2, what);
        return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    }

    std::uint32_t u32(const char* what) {
        unsigned char b[4];
        raw(b, 4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }

    double f64(const char* what) {
        unsigned char b[8];
        raw(b, 8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return std::bit_cast<double>(v);
    }

    void expect_eof() {
        char c;
        if (in_.read(&c, 1)) throw FormatError("trailing bytes after manifest", offset_);
    }

  private:
    std::ifstream in_;
    std::size_t offset_ = 0;
};

}  // namespace

void save_checkpoint(const TensorManifest& tensors, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out.write("CRNW", 4);
    put_u16(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, tensor] : tensors) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_u32(out, static_cast<std::uint32_t>(tensor.rank()));
        for (std::size_t d : tensor.shape) put_u32(out, static_cast<std::uint32_t>(d));
        for (double v : tensor.data) put_f64(out, v);
    }
    out.flush();
    if (!out) throw Error("write to '" + path + "' failed");
}

TensorManifest load_checkpoint(const std::string& path) {
    Reader r(path);
    char magic[4];
    r.raw(magic, 4, "magic 'CRNW'");
    if (std::memcmp(magic, "CRNW", 4) != 0) {
        throw FormatError("bad magic, expected \"CRNW\"", 0);
    }
    const std::uint16_t version = r.u16("version");
    if (version != kVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);
    }
    const std::uint32_t count = r.u32("tensor count");

    TensorManifest manifest;
    manifest.reserve(count);
    for (std::uint32_t t = 0; t < count; ++t) {
        const std::uint32_t name_len = r.u32("name length");
        if (name_len == 0 || name_len > kMaxNameLen) {
            throw FormatError("implausible name length " + std::to_string(name_len),
                              r.offset() - 4);
        }
        std::string name(name_len, '\0');
        r.raw(name.data(), name_len, "tensor name");
        const std::uint32_t rank = r.u32("rank");
        if (rank == 0 || rank > kMaxRank) {
            throw FormatError("implausible rank " + std::to_string(rank), r.offset() - 4);
        }
        std::vector<std::size_t> shape(rank);
        std::uint64_t numel = 1;
        for (std::uint32_t i = 0; i < rank; ++i) {
            const std::uint32_t d = r.u32("dimension");
            if (d == 0) throw FormatError("zero dimension", r.offset() - 4);
            shape[i] = d;
            numel *= d;
            if (numel > (1ULL << 40)) throw FormatError("dimension overflow", r.offset() - 4);
        }
        std::vector<double> data(static_cast<std::size_t>(numel));
        for (double& v : data) {
            const std::size_t at = r.offset();
            v = r.f64("tensor payload");
            if (!std::isfinite(v)) throw FormatError("non-finite value in tensor payload", at);
        }
        manifest.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
    }
    r.expect_eof();
    return manifest;
}

namespace {

Tensor scalar(double v) { return Tensor({1}, {v}); }

double hyper(const std::map<std::string, const Tensor*>& index, const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) throw StateError("checkpoint is missing '" + name + "'");
    if (it->second->size() != 1) throw StateError("'" + name + "' is not a scalar");
    return it->second->data[0];
}

std::size_t hyper_size(const std::map<std::string, const Tensor*>& index,
                       const std::string& name) {
    const double v = hyper(index, name);
    if (v < 0 || v != std::floor(v)) throw StateError("'" + name + "' is not a valid size");
    return static_cast<std::size_t>(v);
}

std::map<std::string, const Tensor*> make_index(const TensorManifest& manifest) {
    std::map<std::string, const Tensor*> index;
    for (const auto& [name, tensor] : manifest) {
        if (!index.emplace(name, &tensor).second) {
            throw StateError("duplicate tensor '" + name + "' in checkpoint");
        }
    }
    return index;
}

void assign_params(const NamedParamRefs& params,
                   const std::map<std::string, const Tensor*>& index) {
    for (const auto& [name, param] : params) {
        auto it = index.find(name);
        if (it == index.end()) throw StateError("checkpoint is missing tensor '" + name + "'");
        if (it->second->shape != param->value.shape) {
            throw StateError("checkpoint tensor '" + name + "' has shape " +
                             it->second->shape_str() + ", model expects " +
                             param->value.shape_str());
        }
        param->value = *it->second;
    }
}

void append_cascade_hyper(TensorManifest& m, const CascadeConfig& c) {
    m.emplace_back("hyper.variant", scalar(static_cast<double>(static_cast<int>(c.variant))));
    m.emplace_back("hyper.bands", scalar(static_cast<double>(c.bands)));
    m.emplace_back("hyper.sub_sequences", scalar(static_cast<double>(c.sub_sequences)));
    m.emplace_back("hyper.hidden1", scalar(static_cast<double>(c.hidden1)));
    m.emplace_back("hyper.hidden2", scalar(static_cast<double>(c.hidden2)));
    m.emplace_back("hyper.classes", scalar(static_cast<double>(c.classes)));
    m.emplace_back("hyper.input_dim", scalar(static_cast<double>(c.input_dim)));
}

CascadeConfig read_cascade_hyper(const std::map<std::string, const Tensor*>& index) {
    CascadeConfig c;
    const int variant = static_cast<int>(hyper(index, "hyper.variant"));
    if (variant < 0 || variant > 3) throw StateError("bad variant code in checkpoint");
    c.variant = static_cast<Variant>(variant);
    c.bands = hyper_size(index, "hyper.bands");
    c.sub_sequences = hyper_size(index, "hyper.sub_sequences");
    c.hidden1 = hyper_size(index, "hyper.hidden1");
    c.hidden2 = hyper_size(index, "hyper.hidden2");
    c.classes = hyper_size(index, "hyper.classes");
    c.input_dim = hyper_size(index, "hyper.input_dim");
    return c;
}

}  // namespace

void save_model(CascadeModel& model, const std::string& path) {
    TensorManifest manifest;
    manifest.emplace_back("hyper.kind", scalar(0.0));
    append_cascade_hyper(manifest, model.config);
    for (const auto& [name, param] : model.named_params()) {
        manifest.emplace_back(name, param->value);
    }
    save_checkpoint(manifest, path);
}

void save_model(SsCascadeModel& model, const std::string& path) {
    TensorManifest manifest;
    manifest.emplace_back("hyper.kind", scalar(1.0));
    append_cascade_hyper(manifest, model.cascade.config);
    const SpatialConfig& sp = model.band_cnn.config;
    manifest.emplace_back("hyper.patch", scalar(static_cast<double>(sp.patch)));
    manifest.emplace_back("hyper.activation",
                          scalar(static_cast<double>(static_cast<int>(sp.activation))));
    for (std::size_t i = 0; i < sp.conv.size(); ++i) {
        const std::string p = "hyper.conv" + std::to_string(i + 1);
        manifest.emplace_back(p + ".kernel", scalar(static_cast<double>(sp.conv[i].kernel)));
        manifest.emplace_back(p + ".channels",
                              scalar(static_cast<double>(sp.conv[i].channels)));
    }
    manifest.emplace_back("hyper.stage", scalar(static_cast<double>(model.stage)));
    for (const auto& [name, param] : model.named_params()) {
        manifest.emplace_back(name, param->value);
    }
    save_checkpoint(manifest, path);
}

bool checkpoint_is_spatial(const std::string& path) {
    const TensorManifest manifest = load_checkpoint(path);
    const auto index = make_index(manifest);
    return hyper(index, "hyper.kind") == 1.0;
}

CascadeModel load_cascade_model(const std::string& path) {
    const TensorManifest manifest = load_checkpoint(path);
    const auto index = make_index(manifest);
    if (hyper(index, "hyper.kind") != 0.0) {
        throw StateError("'" + path + "' holds a spectral-spatial model");
    }
    Rng rng(0);
    CascadeModel model(read_cascade_hyper(index), rng);
    assign_params(model.named_params(), index);
    return model;
}

SsCascadeModel load_sscas_model(const std::string& path) {
    const TensorManifest manifest = load_checkpoint(path);
    const auto index = make_index(manifest);
    if (hyper(index, "hyper.kind") != 1.0) {
        throw StateError("'" + path + "' holds a spectral-only model");
    }
    SpatialConfig sp;
    sp.patch = hyper_size(index, "hyper.patch");
    const int act = static_cast<int>(hyper(index, "hyper.activation"));
    if (act < 0 || act > 1) throw StateError("bad activation code in checkpoint");
    sp.activation = static_cast<Activation>(act);
    sp.conv.clear();
    for (std::size_t i = 0; i < 3; ++i) {
        const std::string p = "hyper.conv" + std::to_string(i + 1);
        sp.conv.push_back({hyper_size(index, p + ".kernel"), hyper_size(index, p + ".channels")});
    }
    Rng rng(0);
    SsCascadeModel model(sp, read_cascade_hyper(index), rng);
    model.stage = static_cast<int>(hyper(index, "hyper.stage"));
    assign_params(model.named_params(), index);
    return model;
}

}  // namespace casrnn
