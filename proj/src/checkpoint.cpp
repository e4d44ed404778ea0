#include "stegnet/checkpoint.hpp"

#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "stegnet/common.hpp"

namespace stegnet {
namespace {

constexpr char kMagic[4] = {'M', 'S', 'H', 'D'};
constexpr uint32_t kVersion = 1;

void put_u16(std::vector<uint8_t>& b, uint16_t v) {
    b.push_back(uint8_t(v));
    b.push_back(uint8_t(v >> 8));
}
void put_u32(std::vector<uint8_t>& b, uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(uint8_t(v >> (8 * i)));
}
void put_u64(std::vector<uint8_t>& b, uint64_t v) {
    for (int i = 0; i < 8; ++i) b.push_back(uint8_t(v >> (8 * i)));
}
void put_f32(std::vector<uint8_t>& b, float v) {
    uint32_t u;
    std::memcpy(&u, &v, 4);
    put_u32(b, u);
}

struct Reader {
    const uint8_t* p;
    size_t len, pos = 0;

    void need(size_t n) const {
        if (pos + n > len) throw IntegrityError("checkpoint truncated");
    }
    uint16_t u16() { need(2); uint16_t v = uint16_t(p[pos] | (p[pos + 1] << 8)); pos += 2; return v; }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= uint32_t(p[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= uint64_t(p[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    float f32() { uint32_t u = u32(); float v; std::memcpy(&v, &u, 4); return v; }
    uint8_t u8() { need(1); return p[pos++]; }
    std::string str(size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(p + pos), n);
        pos += n;
        return s;
    }
};

Tensor meta_scalar(float v) {
    Tensor t({1});
    t.data[0] = v;
    return t;
}

} // namespace

Checkpoint make_checkpoint(const ModelConfig& cfg) {
    Checkpoint ck;
    ck.cfg = cfg;
    ck.cfg.validate();
    ck.params = init_params(cfg);
    return ck;
}

std::vector<uint8_t> serialize_checkpoint(const Checkpoint& ck) {
    std::vector<uint8_t> b;
    b.insert(b.end(), kMagic, kMagic + 4);
    put_u32(b, kVersion);
    put_u32(b, uint32_t(ck.cfg.block));
    put_u32(b, uint32_t(ck.cfg.k));
    put_u32(b, uint32_t(ck.cfg.msg_bits));
    put_f32(b, ck.cfg.lambda_i);
    put_f32(b, ck.cfg.lambda_m);
    put_f32(b, ck.cfg.lambda_g);
    put_f32(b, ck.cfg.lr);
    put_u64(b, ck.cfg.seed);

    std::vector<std::pair<std::string, const Tensor*>> entries;
    for (const auto& [name, t] : ck.params.items()) entries.emplace_back(name, &t);
    Tensor step_t = meta_scalar(float(ck.step));
    Tensor ber_t = meta_scalar(ck.best_val_ber);
    Tensor psnr_t = meta_scalar(ck.best_val_psnr);
    entries.emplace_back("meta.step", &step_t);
    entries.emplace_back("meta.best_val_ber", &ber_t);
    entries.emplace_back("meta.best_val_psnr", &psnr_t);

    put_u32(b, uint32_t(entries.size()));
    for (const auto& [name, t] : entries) {
        if (name.size() > 0xFFFF) throw Error("checkpoint: tensor name too long");
        put_u16(b, uint16_t(name.size()));
        b.insert(b.end(), name.begin(), name.end());
        if (t->ndim() > 0xFF) throw Error("checkpoint: too many dimensions");
        b.push_back(uint8_t(t->ndim()));
        for (int d : t->shape) put_u32(b, uint32_t(d));
        size_t at = b.size();
        b.resize(at + t->data.size() * 4);
        std::memcpy(b.data() + at, t->data.data(), t->data.size() * 4);
    }

    uint32_t crc = crc32(crc32(0, nullptr, 0), b.data(), uInt(b.size()));
    put_u32(b, crc);
    return b;
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    std::vector<uint8_t> bytes = serialize_checkpoint(ck);
    std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError("cannot open file for writing: " + tmp);
        f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
        f.flush();
        if (!f) throw DataError("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw DataError("cannot rename checkpoint into place: " + path);
    }
}

Checkpoint parse_checkpoint(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 4 + 4 + 4) throw IntegrityError("checkpoint truncated");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw IntegrityError("not a checkpoint file (bad magic)");

    uint32_t stored_crc = 0;
    for (int i = 0; i < 4; ++i) stored_crc |= uint32_t(bytes[bytes.size() - 4 + i]) << (8 * i);
    uint32_t calc_crc = crc32(crc32(0, nullptr, 0), bytes.data(), uInt(bytes.size() - 4));
    if (stored_crc != calc_crc) throw IntegrityError("checkpoint CRC mismatch (file corrupted)");

    Reader r{bytes.data(), bytes.size() - 4};
    r.pos = 4;
    uint32_t version = r.u32();
    if (version != kVersion)
        throw IntegrityError("unsupported checkpoint version " + std::to_string(version));

    Checkpoint ck;
    ck.cfg.block = int(r.u32());
    ck.cfg.k = int(r.u32());
    ck.cfg.msg_bits = int(r.u32());
    ck.cfg.lambda_i = r.f32();
    ck.cfg.lambda_m = r.f32();
    ck.cfg.lambda_g = r.f32();
    ck.cfg.lr = r.f32();
    ck.cfg.seed = r.u64();
    try {
        ck.cfg.validate();
    } catch (const Error& e) {
        throw IntegrityError(std::string("checkpoint holds an invalid config: ") + e.what());
    }

    uint32_t count = r.u32();
    for (uint32_t i = 0; i < count; ++i) {
        uint16_t name_len = r.u16();
        std::string name = r.str(name_len);
        uint8_t ndim = r.u8();
        std::vector<int> shape(ndim);
        size_t numel = 1;
        for (int d = 0; d < ndim; ++d) {
            uint32_t v = r.u32();
            if (v == 0 || v > (1u << 28)) throw IntegrityError("checkpoint tensor has invalid dimension");
            shape[d] = int(v);
            numel *= v;
            if (numel > (1u << 28)) throw IntegrityError("checkpoint tensor unreasonably large");
        }
        r.need(numel * 4);
        Tensor t(shape);
        std::memcpy(t.data.data(), r.p + r.pos, numel * 4);
        r.pos += numel * 4;

        if (name == "meta.step") ck.step = int64_t(t.data[0]);
        else if (name == "meta.best_val_ber") ck.best_val_ber = t.data[0];
        else if (name == "meta.best_val_psnr") ck.best_val_psnr = t.data[0];
        else ck.params.add(name, std::move(t));
    }
    if (r.pos != r.len) throw IntegrityError("checkpoint has trailing bytes");

    // Stored parameters must exactly match what the config implies.
    auto expected = param_shapes(ck.cfg);
    const auto& got = ck.params.items();
    if (got.size() != expected.size())
        throw IntegrityError("checkpoint parameter count does not match its config (" +
                             std::to_string(got.size()) + " vs " + std::to_string(expected.size()) + ")");
    for (size_t i = 0; i < expected.size(); ++i) {
        if (got[i].first != expected[i].first)
            throw IntegrityError("checkpoint parameter order/name mismatch: got '" + got[i].first +
                                 "', expected '" + expected[i].first + "'");
        if (got[i].second.shape != expected[i].second)
            throw IntegrityError("checkpoint tensor '" + got[i].first + "' has shape " +
                                 shape_str(got[i].second.shape) + ", config implies " +
                                 shape_str(expected[i].second));
    }
    return ck;
}

Checkpoint load_checkpoint(const std::string& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec))
        throw DataError("cannot open checkpoint: " + path);
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open checkpoint: " + path);
    f.seekg(0, std::ios::end);
    std::streamoff n = f.tellg();
    f.seekg(0);
    if (n < 0) throw DataError("cannot read checkpoint: " + path);
    std::vector<uint8_t> bytes(static_cast<size_t>(n));
    if (n > 0) f.read(reinterpret_cast<char*>(bytes.data()), n);
    if (!f) throw DataError("cannot read checkpoint: " + path);
    return parse_checkpoint(bytes);
}

} // namespace stegnet
