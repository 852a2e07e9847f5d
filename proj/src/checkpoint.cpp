#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "wm/errors.hpp"
#include "wm/train.hpp"

// Checkpoint file layout: "WMCK" magic, u32 format version, then
// length-prefixed named sections (config text, transform, both networks,
// optimizer buffers, loop state), closed by a FNV-1a 64 digest of everything
// before it. All integers little-endian; all floats IEEE binary64.

namespace wm {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

constexpr char kMagic[4] = {'W', 'M', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

std::uint64_t fnv1a64(const std::uint8_t* p, std::size_t n) {
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

struct Writer {
    std::vector<std::uint8_t> buf;

    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf.insert(buf.end(), b, b + n);
    }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void u64(std::uint64_t v) { bytes(&v, 8); }
    void f64(double v) { bytes(&v, 8); }
    void f64s(const std::vector<double>& v) {
        u64(v.size());
        bytes(v.data(), v.size() * sizeof(double));
    }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
};

struct Reader {
    const std::uint8_t* p;
    std::size_t n;
    std::size_t off = 0;

    void need(std::size_t k) const {
        if (off + k > n) throw IoError("checkpoint: truncated section data");
    }
    void bytes(void* dst, std::size_t k) {
        need(k);
        std::memcpy(dst, p + off, k);
        off += k;
    }
    std::uint8_t u8() {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        bytes(&v, 4);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        bytes(&v, 8);
        return v;
    }
    double f64() {
        double v;
        bytes(&v, 8);
        return v;
    }
    std::vector<double> f64s() {
        const std::uint64_t k = u64();
        if (k > (n - off) / sizeof(double)) throw IoError("checkpoint: bad float array length");
        std::vector<double> v(k);
        bytes(v.data(), k * sizeof(double));
        return v;
    }
    std::string str() {
        const std::uint32_t k = u32();
        need(k);
        std::string s(reinterpret_cast<const char*>(p + off), k);
        off += k;
        return s;
    }
};

void write_section(Writer& w, const std::string& name, const Writer& payload) {
    w.str(name);
    w.u64(payload.buf.size());
    w.bytes(payload.buf.data(), payload.buf.size());
}

void write_layers(Writer& w, const std::vector<ConvLayer>& layers) {
    w.u32(static_cast<std::uint32_t>(layers.size()));
    for (const ConvLayer& l : layers) {
        w.u8(static_cast<std::uint8_t>(l.kind));
        w.u8(static_cast<std::uint8_t>(l.act));
        w.u32(static_cast<std::uint32_t>(l.n_in));
        w.u32(static_cast<std::uint32_t>(l.n_out));
        w.u8(l.has_bias() ? 1 : 0);
        w.f64s(l.weights);
        if (l.has_bias()) w.f64s(l.bias);
    }
}

std::vector<ConvLayer> read_layers(Reader& r) {
    const std::uint32_t count = r.u32();
    std::vector<ConvLayer> layers;
    layers.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto kind = static_cast<ConvKind>(r.u8());
        const auto act = static_cast<Activation>(r.u8());
        const int n_in = static_cast<int>(r.u32());
        const int n_out = static_cast<int>(r.u32());
        const bool has_bias = r.u8() != 0;
        ConvLayer l = ConvLayer::make(kind, n_in, n_out, act, has_bias);
        l.weights = r.f64s();
        if (l.weights.size() != l.weight_count()) throw IoError("checkpoint: bad layer weight size");
        if (has_bias) {
            l.bias = r.f64s();
            if (static_cast<int>(l.bias.size()) != n_out) throw IoError("checkpoint: bad bias size");
        }
        layers.push_back(std::move(l));
    }
    return layers;
}

void write_transform(Writer& w, const TransformSpec& t) {
    w.str(t.name);
    w.u32(static_cast<std::uint32_t>(t.block_rows));
    w.u32(static_cast<std::uint32_t>(t.block_cols));
    w.u32(static_cast<std::uint32_t>(t.n_basis));
    w.f64s(t.forward_mat);
    w.f64s(t.inverse_mat);
}

TransformSpec read_transform(Reader& r) {
    TransformSpec t;
    t.name = r.str();
    t.block_rows = static_cast<int>(r.u32());
    t.block_cols = static_cast<int>(r.u32());
    t.n_basis = static_cast<int>(r.u32());
    t.forward_mat = r.f64s();
    t.inverse_mat = r.f64s();
    const std::size_t mn = static_cast<std::size_t>(t.block_rows) * t.block_cols;
    if (t.forward_mat.size() != mn * t.n_basis || t.inverse_mat.size() != mn * t.n_basis)
        throw IoError("checkpoint: transform matrix size mismatch");
    return t;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    Writer w;
    w.bytes(kMagic, 4);
    w.u32(kVersion);

    {
        Writer s;
        s.str(canonical_config_text(ckpt.config));
        write_section(w, "config", s);
    }
    {
        Writer s;
        write_transform(s, ckpt.embedder.transform);
        write_section(w, "transform", s);
    }
    {
        Writer s;
        write_layers(s, ckpt.embedder.layers);
        write_section(w, "embedder", s);
    }
    {
        Writer s;
        write_layers(s, ckpt.extractor.layers);
        write_section(w, "extractor", s);
    }
    {
        Writer s;
        s.u32(static_cast<std::uint32_t>(ckpt.momentum.buffers.size()));
        for (const auto& b : ckpt.momentum.buffers) s.f64s(b);
        write_section(w, "optimizer", s);
    }
    {
        Writer s;
        s.u64(ckpt.iteration);
        s.str(ckpt.rng_state);
        write_section(w, "state", s);
    }

    w.u64(fnv1a64(w.buf.data(), w.buf.size()));

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create " + path);
    out.write(reinterpret_cast<const char*>(w.buf.data()), static_cast<std::streamsize>(w.buf.size()));
    if (!out) throw IoError("failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
    if (buf.size() < 4 + 4 + 8) throw IoError(path + ": not a checkpoint file");
    if (std::memcmp(buf.data(), kMagic, 4) != 0) throw IoError(path + ": bad checkpoint magic");

    const std::size_t body = buf.size() - 8;
    std::uint64_t stored = 0;
    std::memcpy(&stored, buf.data() + body, 8);
    if (fnv1a64(buf.data(), body) != stored)
        throw IoError(path + ": checkpoint is corrupt (checksum mismatch)");

    Reader r{buf.data(), body, 4};
    const std::uint32_t version = r.u32();
    if (version != kVersion)
        throw ConfigError(path + ": unsupported checkpoint version " + std::to_string(version));

    Checkpoint ckpt;
    ckpt.version = version;
    bool have_config = false, have_transform = false, have_emb = false, have_ext = false;
    TransformSpec transform;
    while (r.off < r.n) {
        const std::string name = r.str();
        const std::uint64_t len = r.u64();
        r.need(len);
        Reader section{r.p + r.off, static_cast<std::size_t>(len), 0};
        r.off += len;
        if (name == "config") {
            ckpt.config = parse_config_text(section.str());
            have_config = true;
        } else if (name == "transform") {
            transform = read_transform(section);
            have_transform = true;
        } else if (name == "embedder") {
            ckpt.embedder.layers = read_layers(section);
            have_emb = true;
        } else if (name == "extractor") {
            ckpt.extractor.layers = read_layers(section);
            have_ext = true;
        } else if (name == "optimizer") {
            const std::uint32_t count = section.u32();
            ckpt.momentum.buffers.clear();
            for (std::uint32_t i = 0; i < count; ++i)
                ckpt.momentum.buffers.push_back(section.f64s());
        } else if (name == "state") {
            ckpt.iteration = section.u64();
            ckpt.rng_state = section.str();
        }
        // Unknown sections are skipped for forward-compatible additions.
    }
    if (!have_config || !have_transform || !have_emb || !have_ext)
        throw IoError(path + ": checkpoint is missing required sections");
    ckpt.embedder.transform = transform;
    ckpt.extractor.transform = std::move(transform);
    validate_architecture(ckpt.embedder);
    validate_architecture(ckpt.extractor);
    return ckpt;
}

}  // namespace wm
