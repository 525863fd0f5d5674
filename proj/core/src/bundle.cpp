#include "fixq/bundle.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "fixq/catalog.hpp"
#include "fixq/errors.hpp"

namespace fixq {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

std::string sanitize(std::string_view name) {
    std::string s;
    for (char c : name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '.' || c == '-' || c == '_';
        s += ok ? c : '_';
    }
    return s;
}

std::string payload_name(char kind, std::size_t index, std::string_view name, std::string_view ext) {
    char prefix[16];
    std::snprintf(prefix, sizeof prefix, "%c%03zu.", kind, index);
    return prefix + sanitize(name) + "." + std::string(ext);
}

void write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("failed writing '" + path.string() + "'");
}

std::vector<std::uint8_t> read_file(const fs::path& path, const std::string& entry) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("entry '" + entry + "': missing payload file '" + path.filename().string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::uint8_t> encode_f32(std::span<const float> values) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(values.size() * 4);
    for (float v : values) {
        const auto bits = std::bit_cast<std::uint32_t>(v);
        for (int s = 0; s < 32; s += 8) bytes.push_back(static_cast<std::uint8_t>(bits >> s));
    }
    return bytes;
}

std::vector<float> decode_f32(const std::vector<std::uint8_t>& bytes, std::size_t expected,
                              const std::string& entry) {
    if (bytes.size() != expected * 4)
        throw FormatError("entry '" + entry + "': f32 payload has " + std::to_string(bytes.size()) +
                          " bytes, expected " + std::to_string(expected * 4));
    std::vector<float> out(expected);
    for (std::size_t i = 0; i < expected; ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[4 * i + b]) << (8 * b);
        out[i] = std::bit_cast<float>(bits);
    }
    return out;
}

template <typename T>
std::vector<std::uint8_t> encode_bytes(const std::vector<T>& v) {
    static_assert(sizeof(T) == 1);
    std::vector<std::uint8_t> out(v.size());
    std::memcpy(out.data(), v.data(), v.size());
    return out;
}

template <typename T>
std::vector<T> decode_bytes(const std::vector<std::uint8_t>& bytes, std::size_t expected,
                            const std::string& entry, const char* what) {
    static_assert(sizeof(T) == 1);
    if (bytes.size() != expected)
        throw FormatError("entry '" + entry + "': " + what + " payload has " + std::to_string(bytes.size()) +
                          " bytes, expected " + std::to_string(expected));
    std::vector<T> out(expected);
    std::memcpy(out.data(), bytes.data(), expected);
    return out;
}

json roles_json(const std::vector<Axis>& roles) {
    json j = json::array();
    for (Axis a : roles) j.push_back(std::string(to_string(a)));
    return j;
}

json mean_json(const MeanCoding& m) {
    return {{"channel", m.channel}, {"a", m.a}, {"b", m.b}, {"r2", m.r2}, {"predicted", m.predicted}};
}

MeanCoding mean_from_json(const json& j) {
    MeanCoding m;
    m.channel = j.at("channel").get<std::int64_t>();
    m.a = j.at("a").get<double>();
    m.b = j.at("b").get<double>();
    m.r2 = j.at("r2").get<double>();
    m.predicted = j.at("predicted").get<std::int32_t>();
    return m;
}

struct Payload {
    std::string file;
    std::vector<std::uint8_t> bytes;
};

json build_manifest(const TensorBundle& b, std::vector<Payload>* payloads) {
    json entries = json::array();
    for (std::size_t i = 0; i < b.entries.size(); ++i) {
        const BundleEntry& e = b.entries[i];
        json je;
        je["name"] = e.name;
        if (!e.attrs.empty()) je["attrs"] = e.attrs;
        auto emit = [&](const char* key, std::string_view ext, std::vector<std::uint8_t> bytes) {
            std::string file = payload_name('e', i, e.name, ext);
            je[key] = file;
            if (payloads) payloads->push_back({std::move(file), std::move(bytes)});
        };
        if (!e.is_quantized()) {
            const Tensor& t = e.tensor();
            je["dtype"] = "f32";
            je["shape"] = t.shape();
            je["axis_roles"] = roles_json(t.roles());
            emit("data_file", "f32", encode_f32(t.data()));
        } else {
            const QuantizedTensor& q = e.quantized();
            q.validate();
            je["dtype"] = "q8";
            je["shape"] = q.shape;
            je["axis_roles"] = roles_json(q.roles);
            je["scheme"] = std::string(to_string(q.scheme));
            je["codebook_id"] = q.codebook_id;
            emit("data_file", "q8", q.levels);
            emit("sf_file", "sf", encode_bytes(q.sf_exponents));
            if (!q.mux.empty()) emit("mux_file", "mux", q.mux);
            if (!q.lut.empty()) emit("lut_file", "lut", encode_f32(q.lut));
            if (q.mean) je["mean_params"] = mean_json(*q.mean);
        }
        entries.push_back(std::move(je));
    }

    json profiles = json::array();
    for (std::size_t i = 0; i < b.profiles.size(); ++i) {
        const ProfileRecord& p = b.profiles[i];
        json jp;
        jp["name"] = p.name;
        jp["channels"] = p.sf_exponents.size();
        jp["max_abs"] = p.max_abs;
        if (!p.attrs.empty()) jp["attrs"] = p.attrs;
        if (p.mean) jp["mean_params"] = mean_json(*p.mean);
        std::string sf = payload_name('p', i, p.name, "sf");
        jp["sf_file"] = sf;
        if (payloads) payloads->push_back({sf, encode_bytes(p.sf_exponents)});
        if (!p.mux.empty()) {
            std::string mux = payload_name('p', i, p.name, "mux");
            jp["mux_file"] = mux;
            if (payloads) payloads->push_back({mux, p.mux});
        }
        profiles.push_back(std::move(jp));
    }

    json m;
    m["format"] = "fixq-bundle";
    m["version"] = kFormatVersion;
    m["entries"] = std::move(entries);
    m["profiles"] = std::move(profiles);
    if (!b.attrs.empty()) m["attrs"] = b.attrs;
    return m;
}

std::vector<std::int64_t> read_shape(const json& je, const std::string& name) {
    auto shape = je.at("shape").get<std::vector<std::int64_t>>();
    for (auto d : shape)
        if (d < 1) throw FormatError("entry '" + name + "': non-positive dimension");
    return shape;
}

std::vector<Axis> read_roles(const json& je) {
    std::vector<Axis> roles;
    for (const auto& r : je.at("axis_roles")) roles.push_back(axis_from_string(r.get<std::string>()));
    return roles;
}

BundleEntry read_entry(const json& je, const fs::path& dir) {
    const std::string name = je.at("name").get<std::string>();
    BundleEntry e;
    e.name = name;
    if (je.contains("attrs")) e.attrs = je.at("attrs").get<Attributes>();
    const std::string dtype = je.at("dtype").get<std::string>();
    const auto shape = read_shape(je, name);
    const auto roles = read_roles(je);
    const std::size_t n = element_count(shape);
    auto payload = [&](const char* key) { return read_file(dir / je.at(key).get<std::string>(), name); };

    if (dtype == "f32") {
        auto data = decode_f32(payload("data_file"), n, name);
        try {
            e.value = Tensor(shape, roles, std::move(data));
        } catch (const ContractError& err) {
            throw FormatError("entry '" + name + "': " + err.what());
        }
        return e;
    }
    if (dtype != "q8") throw FormatError("entry '" + name + "': unknown dtype '" + dtype + "'");
    if (!je.contains("sf_file")) throw FormatError("entry '" + name + "': q8 entry without sf_file");
    if (!je.contains("codebook_id")) throw FormatError("entry '" + name + "': q8 entry without codebook_id");

    QuantizedTensor q;
    q.shape = shape;
    q.roles = roles;
    q.scheme = scheme_from_string(je.value("scheme", std::string("cw")));
    q.codebook_id = je.at("codebook_id").get<std::string>();
    q.levels = decode_bytes<std::uint8_t>(payload("data_file"), n, name, "q8");
    const std::size_t groups = q.scheme == GroupScheme::LayerWise ? 1 : static_cast<std::size_t>(shape.back());
    q.sf_exponents = decode_bytes<std::int8_t>(payload("sf_file"), groups, name, "sf");
    if (je.contains("mux_file"))
        q.mux = decode_bytes<std::uint8_t>(payload("mux_file"), static_cast<std::size_t>(shape.back()), name, "mux");
    if (je.contains("lut_file")) {
        const auto bytes = payload("lut_file");
        if (bytes.size() % 4 != 0) throw FormatError("entry '" + name + "': lut payload not a multiple of 4 bytes");
        q.lut = decode_f32(bytes, bytes.size() / 4, name);
    }
    if (je.contains("mean_params")) q.mean = mean_from_json(je.at("mean_params"));
    if (q.codebook_id != codebook_ids::kLloydLut && !is_mux_family(q.codebook_id)) {
        try {
            codebook(q.codebook_id);
        } catch (const ContractError& err) {
            throw FormatError("entry '" + name + "': " + err.what());
        }
    }
    if (is_mux_family(q.codebook_id) && q.mux.empty())
        throw FormatError("entry '" + name + "': multiplexed activation without mux_file");
    try {
        q.validate();
    } catch (const FormatError& err) {
        throw FormatError("entry '" + name + "': " + err.what());
    }
    e.value = std::move(q);
    return e;
}

ProfileRecord read_profile(const json& jp, const fs::path& dir) {
    ProfileRecord p;
    p.name = jp.at("name").get<std::string>();
    const auto channels = jp.at("channels").get<std::size_t>();
    p.max_abs = jp.at("max_abs").get<std::vector<double>>();
    if (p.max_abs.size() != channels)
        throw FormatError("profile '" + p.name + "': max_abs count does not match channels");
    if (jp.contains("attrs")) p.attrs = jp.at("attrs").get<Attributes>();
    if (jp.contains("mean_params")) p.mean = mean_from_json(jp.at("mean_params"));
    p.sf_exponents = decode_bytes<std::int8_t>(read_file(dir / jp.at("sf_file").get<std::string>(), p.name),
                                               channels, p.name, "sf");
    if (jp.contains("mux_file")) {
        p.mux = decode_bytes<std::uint8_t>(read_file(dir / jp.at("mux_file").get<std::string>(), p.name),
                                           channels, p.name, "mux");
        for (auto s : p.mux)
            if (s > 3) throw FormatError("profile '" + p.name + "': mux selection out of range");
    }
    return p;
}

}  // namespace

const Tensor& BundleEntry::tensor() const {
    if (const auto* t = std::get_if<Tensor>(&value)) return *t;
    throw ContractError("entry '" + name + "' is not an f32 tensor");
}

const QuantizedTensor& BundleEntry::quantized() const {
    if (const auto* q = std::get_if<QuantizedTensor>(&value)) return *q;
    throw ContractError("entry '" + name + "' is not a q8 tensor");
}

const BundleEntry* TensorBundle::find(std::string_view name) const noexcept {
    for (const auto& e : entries)
        if (e.name == name) return &e;
    return nullptr;
}

const ProfileRecord* TensorBundle::find_profile(std::string_view name) const noexcept {
    for (const auto& p : profiles)
        if (p.name == name) return &p;
    return nullptr;
}

BundleEntry& TensorBundle::add(std::string name, Tensor t, Attributes attrs) {
    return entries.emplace_back(BundleEntry{std::move(name), std::move(t), std::move(attrs)});
}

BundleEntry& TensorBundle::add(std::string name, QuantizedTensor q, Attributes attrs) {
    return entries.emplace_back(BundleEntry{std::move(name), std::move(q), std::move(attrs)});
}

std::string manifest_text(const TensorBundle& b) { return build_manifest(b, nullptr).dump(2) + "\n"; }

void write_bundle(const TensorBundle& b, const fs::path& dir) {
    std::vector<Payload> payloads;
    const json manifest = build_manifest(b, &payloads);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw FormatError("cannot create bundle directory '" + dir.string() + "': " + ec.message());
    for (const auto& p : payloads) write_file(dir / p.file, p.bytes);
    const std::string text = manifest.dump(2) + "\n";
    write_file(dir / kManifestName, {text.begin(), text.end()});
}

TensorBundle read_bundle(const fs::path& dir) {
    const auto path = dir / kManifestName;
    std::ifstream in(path);
    if (!in) throw FormatError("no manifest at '" + path.string() + "'");
    json m;
    try {
        m = json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError("manifest '" + path.string() + "' does not parse: " + e.what());
    }
    TensorBundle b;
    try {
        if (m.value("format", std::string()) != "fixq-bundle")
            throw FormatError("manifest '" + path.string() + "' is not a fixq bundle");
        if (m.value("version", 0) != kFormatVersion)
            throw FormatError("unsupported bundle version in '" + path.string() + "'");
        for (const auto& je : m.at("entries")) b.entries.push_back(read_entry(je, dir));
        for (const auto& jp : m.value("profiles", json::array())) b.profiles.push_back(read_profile(jp, dir));
        if (m.contains("attrs")) b.attrs = m.at("attrs").get<Attributes>();
    } catch (const json::exception& e) {
        throw FormatError("manifest '" + path.string() + "': " + e.what());
    }
    return b;
}

}  // namespace fixq
