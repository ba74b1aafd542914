#include "pointprompt/checkpoint.hpp"

#include "pointprompt/errors.hpp"
#include "pointprompt/hash.hpp"

#include <cstring>
#include <fstream>
#include <set>

namespace pointprompt {

namespace {

constexpr char kMagic[8] = {'3', 'D', 'P', 'R', 'O', 'M', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& buf, std::uint32_t v) {
    buf.append(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_u64(std::string& buf, std::uint64_t v) {
    buf.append(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_i64(std::string& buf, std::int64_t v) {
    buf.append(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_str(std::string& buf, const std::string& s) {
    put_u32(buf, static_cast<std::uint32_t>(s.size()));
    buf.append(s);
}
void put_f64_block(std::string& buf, const ArrayX& values) {
    buf.append(reinterpret_cast<const char*>(values.data()), sizeof(Scalar) * values.size());
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    explicit Reader(const std::string& b) : buf(b) {}

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw CheckpointError("checkpoint truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v;
        std::memcpy(&v, buf.data() + pos, 4);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v;
        std::memcpy(&v, buf.data() + pos, 8);
        pos += 8;
        return v;
    }
    std::int64_t i64() {
        need(8);
        std::int64_t v;
        std::memcpy(&v, buf.data() + pos, 8);
        pos += 8;
        return v;
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(buf[pos++]);
    }
    std::string str() {
        const std::uint32_t n = u32();
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
    ArrayX f64_block(std::size_t count) {
        need(count * sizeof(Scalar));
        ArrayX v(static_cast<Index>(count));
        std::memcpy(v.data(), buf.data() + pos, count * sizeof(Scalar));
        pos += count * sizeof(Scalar);
        return v;
    }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

// Validates magic, version and the trailing checksum; returns a reader
// positioned after the header with the checksum stripped.
std::string verify_container(const std::string& raw) {
    if (raw.size() < sizeof(kMagic) + 4 + 32) throw CheckpointError("checkpoint truncated");
    if (std::memcmp(raw.data(), kMagic, sizeof(kMagic)) != 0) {
        throw CheckpointError("bad checkpoint magic");
    }
    const std::string body = raw.substr(0, raw.size() - 32);
    const std::string stored_digest = raw.substr(raw.size() - 32);
    const std::string actual_hex = sha256_hex(body.data(), body.size());
    std::string actual_raw(32, '\0');
    for (int i = 0; i < 32; ++i) {
        actual_raw[i] = static_cast<char>(
            std::stoi(actual_hex.substr(2 * static_cast<std::size_t>(i), 2), nullptr, 16));
    }
    if (actual_raw != stored_digest) throw CheckpointError("checkpoint checksum mismatch");
    return body;
}

}  // namespace

void save_checkpoint(Model& model, const AdamW* optimizer, Index step,
                     const std::string& path) {
    std::string buf;
    buf.append(kMagic, sizeof(kMagic));
    put_u32(buf, kVersion);

    const std::string config_text = canonical_config_text(model.config);
    put_str(buf, sha256_hex(config_text));
    put_str(buf, config_text);
    put_u64(buf, static_cast<std::uint64_t>(step));

    std::vector<Parameter*> params = model.all_params();
    put_u32(buf, static_cast<std::uint32_t>(params.size()));
    for (const Parameter* p : params) {
        put_str(buf, p->name);
        const Shape& shape = p->tensor.shape();
        put_u32(buf, static_cast<std::uint32_t>(shape.size()));
        for (Index d : shape) put_i64(buf, d);
        put_f64_block(buf, p->tensor.values());
    }

    buf.push_back(optimizer ? '\x01' : '\x00');
    if (optimizer) {
        put_u64(buf, static_cast<std::uint64_t>(optimizer->step_count()));
        put_u32(buf, static_cast<std::uint32_t>(optimizer->moments().size()));
        for (const auto& [name, mom] : optimizer->moments()) {
            put_str(buf, name);
            put_u64(buf, static_cast<std::uint64_t>(mom.m.size()));
            put_f64_block(buf, mom.m);
            put_f64_block(buf, mom.v);
        }
    }

    const std::string digest_hex = sha256_hex(buf.data(), buf.size());
    for (int i = 0; i < 32; ++i) {
        buf.push_back(static_cast<char>(
            std::stoi(digest_hex.substr(2 * static_cast<std::size_t>(i), 2), nullptr, 16)));
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write checkpoint '" + path + "'");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw CheckpointError("short write to '" + path + "'");
}

namespace {

// Shared header walk: returns reader past version, plus config text.
std::string parse_header(Reader& r) {
    r.pos = sizeof(kMagic);
    const std::uint32_t version = r.u32();
    if (version != kVersion) {
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    }
    const std::string stored_hash = r.str();
    const std::string config_text = r.str();
    if (sha256_hex(config_text) != stored_hash) {
        throw CheckpointError("checkpoint config hash mismatch");
    }
    return config_text;
}

}  // namespace

RunConfig read_checkpoint_config(const std::string& path) {
    const std::string body = verify_container(read_file(path));
    Reader r(body);
    return resolve_config(parse_config_text(parse_header(r)));
}

Index load_checkpoint_into(Model& model, AdamW* optimizer, const std::string& path) {
    const std::string body = verify_container(read_file(path));
    Reader r(body);
    parse_header(r);
    const Index step = static_cast<Index>(r.u64());

    const std::uint32_t param_count = r.u32();
    std::vector<Parameter*> params = model.all_params();

    std::map<std::string, Parameter*> by_name;
    for (Parameter* p : params) by_name[p->name] = p;

    std::set<std::string> seen;
    for (std::uint32_t i = 0; i < param_count; ++i) {
        const std::string name = r.str();
        const std::uint32_t rank = r.u32();
        Shape shape(rank);
        for (std::uint32_t d = 0; d < rank; ++d) shape[d] = r.i64();
        ArrayX values = r.f64_block(static_cast<std::size_t>(shape_size(shape)));

        const auto it = by_name.find(name);
        if (it == by_name.end()) {
            throw CheckpointError("checkpoint parameter '" + name +
                                  "' does not exist in the model");
        }
        Parameter* p = it->second;
        if (p->tensor.shape() != shape) {
            throw CheckpointError("shape mismatch for '" + name + "': checkpoint " +
                                  Tensor::zeros(shape).shape_str() + " vs model " +
                                  p->tensor.shape_str());
        }
        p->tensor.values_mut() = std::move(values);
        seen.insert(name);
    }
    for (const auto& [name, p] : by_name) {
        (void)p;
        if (!seen.count(name)) {
            throw CheckpointError("model parameter '" + name + "' missing from checkpoint");
        }
    }

    const std::uint8_t has_opt = r.u8();
    if (has_opt && optimizer) {
        const Index opt_step = static_cast<Index>(r.u64());
        const std::uint32_t entries = r.u32();
        std::map<std::string, AdamW::Moments> moments;
        for (std::uint32_t i = 0; i < entries; ++i) {
            const std::string name = r.str();
            const std::size_t size = static_cast<std::size_t>(r.u64());
            AdamW::Moments mom;
            mom.m = r.f64_block(size);
            mom.v = r.f64_block(size);
            moments.emplace(name, std::move(mom));
        }
        optimizer->restore(opt_step, std::move(moments));
    }
    return step;
}

void load_backbone_into(Model& model, const std::string& path) {
    const std::string body = verify_container(read_file(path));
    Reader r(body);
    parse_header(r);
    r.u64();  // step

    std::map<std::string, Parameter*> wanted;
    model.backbone->visit([&](Parameter& p) { wanted[p.name] = &p; });

    const std::uint32_t param_count = r.u32();
    std::set<std::string> seen;
    for (std::uint32_t i = 0; i < param_count; ++i) {
        const std::string name = r.str();
        const std::uint32_t rank = r.u32();
        Shape shape(rank);
        for (std::uint32_t d = 0; d < rank; ++d) shape[d] = r.i64();
        ArrayX values = r.f64_block(static_cast<std::size_t>(shape_size(shape)));
        const auto it = wanted.find(name);
        if (it == wanted.end()) continue;  // prompt/adapter entries are fine to skip
        if (it->second->tensor.shape() != shape) {
            throw CheckpointError("shape mismatch for '" + name + "': checkpoint " +
                                  Tensor::zeros(shape).shape_str() + " vs model " +
                                  it->second->tensor.shape_str());
        }
        it->second->tensor.values_mut() = std::move(values);
        seen.insert(name);
    }
    for (const auto& [name, p] : wanted) {
        (void)p;
        if (!seen.count(name)) {
            throw CheckpointError("backbone parameter '" + name + "' missing from checkpoint");
        }
    }
}

}  // namespace pointprompt
