#include "grasp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

namespace grasp::trainkit {

namespace {

static_assert(std::endian::native == std::endian::little,
              "container payload is little-endian; big-endian hosts need swaps");

using nlohmann::json;

constexpr const char* kMagic = "GRASP-CONTAINER v1\n";
constexpr int kFormatVersion = 1;

struct Block {
    std::string name;
    int rows = 0;
    int cols = 0;
    const double* src = nullptr;  // writer side
};

class ContainerWriter {
public:
    void add(std::string name, int rows, int cols, const double* src) {
        blocks_.push_back(Block{std::move(name), rows, cols, src});
    }

    void add(std::string name, const linalg::Matrix& m) {
        add(std::move(name), m.rows(), m.cols(), m.data().data());
    }

    void write(json manifest, const std::filesystem::path& path, bool force) const {
        if (!force && std::filesystem::exists(path)) {
            throw IoError("refusing to overwrite existing file " + path.string() +
                          " (pass force to allow)");
        }

        json block_list = json::array();
        std::uint64_t offset = 0;
        for (const auto& b : blocks_) {
            block_list.push_back(json{{"cols", b.cols},
                                      {"name", b.name},
                                      {"offset", offset},
                                      {"rows", b.rows}});
            offset += static_cast<std::uint64_t>(b.rows) * b.cols * sizeof(double);
        }
        manifest["blocks"] = std::move(block_list);
        manifest["version"] = kFormatVersion;

        const std::string text = manifest.dump();

        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open " + path.string() + " for writing");
        }
        out << kMagic << text.size() << '\n' << text << '\n';
        for (const auto& b : blocks_) {
            const auto bytes = static_cast<std::streamsize>(
                static_cast<std::size_t>(b.rows) * b.cols * sizeof(double));
            out.write(reinterpret_cast<const char*>(b.src), bytes);
        }
        if (!out) {
            throw IoError("write failed for " + path.string());
        }
    }

private:
    std::vector<Block> blocks_;
};

struct ParsedContainer {
    json manifest;
    std::vector<char> payload;
    std::size_t payload_offset = 0;  // byte offset of payload start in the file

    const json& block(const std::string& name) const {
        for (const auto& b : manifest.at("blocks")) {
            if (b.at("name").get<std::string>() == name) {
                return b;
            }
        }
        throw IoError("container missing block '" + name + "'");
    }

    std::vector<double> read_block(const json& b) const {
        const auto rows = b.at("rows").get<std::size_t>();
        const auto cols = b.at("cols").get<std::size_t>();
        const auto offset = b.at("offset").get<std::size_t>();
        const std::size_t bytes = rows * cols * sizeof(double);
        if (offset + bytes > payload.size()) {
            throw IoError("container block '" + b.at("name").get<std::string>() +
                              "' overruns payload",
                          static_cast<long long>(payload_offset + offset));
        }
        std::vector<double> values(rows * cols);
        std::memcpy(values.data(), payload.data() + offset, bytes);
        return values;
    }

    linalg::Matrix read_matrix(const std::string& name) const {
        const auto& b = block(name);
        return linalg::Matrix(b.at("rows").get<int>(), b.at("cols").get<int>(),
                              read_block(b));
    }

    std::vector<double> read_vector(const std::string& name) const {
        return read_block(block(name));
    }
};

ParsedContainer parse_container(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());

    const std::size_t magic_len = std::strlen(kMagic);
    if (bytes.size() < magic_len ||
        std::memcmp(bytes.data(), kMagic, magic_len) != 0) {
        throw IoError("not a GRASP container: " + path.string(), 0);
    }

    std::size_t pos = magic_len;
    std::size_t manifest_len = 0;
    bool any_digit = false;
    while (pos < bytes.size() && bytes[pos] != '\n') {
        const char c = bytes[pos];
        if (c < '0' || c > '9') {
            throw IoError("malformed manifest length in " + path.string(),
                          static_cast<long long>(pos));
        }
        manifest_len = manifest_len * 10 + static_cast<std::size_t>(c - '0');
        any_digit = true;
        ++pos;
    }
    if (!any_digit || pos >= bytes.size()) {
        throw IoError("truncated manifest length in " + path.string(),
                      static_cast<long long>(pos));
    }
    ++pos;  // consume '\n'

    if (pos + manifest_len + 1 > bytes.size()) {
        throw IoError("truncated manifest in " + path.string(),
                      static_cast<long long>(bytes.size()));
    }

    ParsedContainer parsed;
    try {
        parsed.manifest = json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                      bytes.begin() +
                                          static_cast<std::ptrdiff_t>(pos + manifest_len));
    } catch (const json::parse_error& e) {
        throw IoError("malformed manifest in " + path.string() + ": " + e.what(),
                      static_cast<long long>(pos) + static_cast<long long>(e.byte) - 1);
    }

    const std::size_t payload_start = pos + manifest_len + 1;  // trailing '\n'
    parsed.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(payload_start),
                          bytes.end());
    parsed.payload_offset = payload_start;
    return parsed;
}

std::string stage_to_string(StageTag s) { return to_string(s); }

StageTag stage_from_string(const std::string& s) {
    if (s == "naive") return StageTag::naive;
    if (s == "projected") return StageTag::projected;
    throw IoError("unknown stage tag '" + s + "'");
}

AdapterMode mode_from_string(const std::string& s) {
    if (s == "joint") return AdapterMode::joint;
    if (s == "factored") return AdapterMode::factored;
    throw IoError("unknown adapter mode '" + s + "'");
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path,
                     bool force) {
    if (ckpt.stage == StageTag::projected &&
        ckpt.probes.size() != ckpt.sites.size()) {
        throw ParameterError("save_checkpoint: projected checkpoint needs exactly one "
                             "probe per site");
    }
    if (ckpt.stage == StageTag::naive && !ckpt.probes.empty()) {
        throw ParameterError("save_checkpoint: naive checkpoint carries no probes");
    }

    ContainerWriter writer;
    json sites = json::array();
    for (std::size_t l = 0; l < ckpt.sites.size(); ++l) {
        const auto& s = ckpt.sites[l];
        sites.push_back(json{{"d_in", s.d_in}, {"d_out", s.d_out}});
        const std::string prefix = "site" + std::to_string(l) + "/";
        if (ckpt.mode == AdapterMode::joint) {
            writer.add(prefix + "delta_w", s.delta_w);
        } else {
            writer.add(prefix + "adapter_a", s.a);
            writer.add(prefix + "adapter_b", s.b);
        }
    }
    std::vector<double> sigmas;
    sigmas.reserve(ckpt.probes.size());
    for (std::size_t l = 0; l < ckpt.probes.size(); ++l) {
        const auto& p = ckpt.probes[l];
        const std::string prefix = "site" + std::to_string(l) + "/";
        writer.add(prefix + "probe_u", p.u.dim(), 1, p.u.data().data());
        writer.add(prefix + "probe_v", p.v.dim(), 1, p.v.data().data());
        sigmas.push_back(p.sigma);
    }
    if (!sigmas.empty()) {
        writer.add("probe_sigmas", static_cast<int>(sigmas.size()), 1, sigmas.data());
    }

    json manifest{
        {"adapter_mode", to_string(ckpt.mode)},
        {"adapter_rank", ckpt.adapter_rank},
        {"config_fingerprint", ckpt.config_fingerprint},
        {"kind", "checkpoint"},
        {"lora_scale", ckpt.lora_scale},
        {"probes", ckpt.probes.empty() ? "absent" : "present"},
        {"site_count", ckpt.sites.size()},
        {"sites", std::move(sites)},
        {"stage", stage_to_string(ckpt.stage)},
        {"step_count", ckpt.step_count},
    };
    writer.write(std::move(manifest), path, force);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const auto parsed = parse_container(path);
    const auto& m = parsed.manifest;
    try {
        if (m.at("kind").get<std::string>() != "checkpoint") {
            throw IoError(path.string() + " is not a checkpoint container");
        }
        Checkpoint ckpt;
        ckpt.stage = stage_from_string(m.at("stage").get<std::string>());
        ckpt.mode = mode_from_string(m.at("adapter_mode").get<std::string>());
        ckpt.adapter_rank = m.at("adapter_rank").get<int>();
        ckpt.lora_scale = m.at("lora_scale").get<double>();
        ckpt.step_count = m.at("step_count").get<std::int64_t>();
        ckpt.config_fingerprint = m.at("config_fingerprint").get<std::string>();

        const auto site_count = m.at("site_count").get<std::size_t>();
        const bool probes_present = m.at("probes").get<std::string>() == "present";
        for (std::size_t l = 0; l < site_count; ++l) {
            const auto& meta = m.at("sites").at(l);
            CheckpointSite site;
            site.d_out = meta.at("d_out").get<int>();
            site.d_in = meta.at("d_in").get<int>();
            const std::string prefix = "site" + std::to_string(l) + "/";
            if (ckpt.mode == AdapterMode::joint) {
                site.delta_w = parsed.read_matrix(prefix + "delta_w");
            } else {
                site.a = parsed.read_matrix(prefix + "adapter_a");
                site.b = parsed.read_matrix(prefix + "adapter_b");
            }
            ckpt.sites.push_back(std::move(site));
        }
        if (probes_present) {
            const auto sigmas = parsed.read_vector("probe_sigmas");
            if (sigmas.size() != site_count) {
                throw IoError("probe_sigmas length mismatch in " + path.string());
            }
            for (std::size_t l = 0; l < site_count; ++l) {
                const std::string prefix = "site" + std::to_string(l) + "/";
                ckpt.probes.push_back(project::ProbePair{
                    linalg::UnitVector::checked(parsed.read_vector(prefix + "probe_u")),
                    linalg::UnitVector::checked(parsed.read_vector(prefix + "probe_v")),
                    sigmas[l], static_cast<int>(l)});
            }
        }
        return ckpt;
    } catch (const json::exception& e) {
        throw IoError("malformed checkpoint manifest in " + path.string() + ": " +
                          e.what(),
                      static_cast<long long>(std::strlen(kMagic)));
    }
}

linalg::Matrix GradientStream::accumulated() const {
    if (gradients.empty()) {
        throw ParameterError("GradientStream: no samples to accumulate");
    }
    linalg::Matrix sum = gradients.front();
    for (std::size_t i = 1; i < gradients.size(); ++i) {
        sum += gradients[i];
    }
    return sum;
}

void save_stream(const GradientStream& stream, const std::filesystem::path& path,
                 bool force) {
    if (stream.gradients.empty() ||
        stream.gradients.size() != stream.alphas.size() ||
        static_cast<std::int64_t>(stream.gradients.size()) != stream.n) {
        throw ParameterError("save_stream: inconsistent stream contents");
    }

    ContainerWriter writer;
    writer.add("alphas", static_cast<int>(stream.alphas.size()), 1, stream.alphas.data());
    for (std::size_t i = 0; i < stream.gradients.size(); ++i) {
        writer.add("sample" + std::to_string(i) + "/g", stream.gradients[i]);
    }

    json manifest{
        {"config_fingerprint", stream.config_fingerprint},
        {"d_in", stream.d_in},
        {"d_out", stream.d_out},
        {"kind", "gradient-stream"},
        {"n", stream.n},
        {"seed", stream.seed},
        {"truth", stream.truth ? "present" : "absent"},
    };
    if (stream.truth) {
        const auto& t = *stream.truth;
        writer.add("truth/u_s", t.u_s.dim(), 1, t.u_s.data().data());
        writer.add("truth/v_s", t.v_s.dim(), 1, t.v_s.data().data());
        manifest["truth_params"] = json{{"alpha_jitter", t.alpha_jitter},
                                        {"alpha_mean", t.alpha_mean},
                                        {"mu_frob", t.mu_frob},
                                        {"r_t", t.r_t},
                                        {"tau", t.tau}};
    }
    writer.write(std::move(manifest), path, force);
}

GradientStream load_stream(const std::filesystem::path& path) {
    const auto parsed = parse_container(path);
    const auto& m = parsed.manifest;
    try {
        if (m.at("kind").get<std::string>() != "gradient-stream") {
            throw IoError(path.string() + " is not a gradient-stream container");
        }
        GradientStream stream;
        stream.seed = m.at("seed").get<std::uint64_t>();
        stream.n = m.at("n").get<std::int64_t>();
        stream.d_out = m.at("d_out").get<int>();
        stream.d_in = m.at("d_in").get<int>();
        stream.config_fingerprint = m.at("config_fingerprint").get<std::string>();
        stream.alphas = parsed.read_vector("alphas");
        for (std::int64_t i = 0; i < stream.n; ++i) {
            stream.gradients.push_back(
                parsed.read_matrix("sample" + std::to_string(i) + "/g"));
        }
        if (m.at("truth").get<std::string>() == "present") {
            const auto& tp = m.at("truth_params");
            stream.truth.emplace(GradientStream::Truth{
                linalg::UnitVector::checked(parsed.read_vector("truth/u_s")),
                linalg::UnitVector::checked(parsed.read_vector("truth/v_s")),
                tp.at("alpha_mean").get<double>(),
                tp.at("alpha_jitter").get<double>(),
                tp.at("mu_frob").get<double>(),
                tp.at("tau").get<double>(),
                tp.at("r_t").get<int>(),
            });
        }
        return stream;
    } catch (const json::exception& e) {
        throw IoError("malformed stream manifest in " + path.string() + ": " + e.what(),
                      static_cast<long long>(std::strlen(kMagic)));
    }
}

std::string container_kind(const std::filesystem::path& path) {
    const auto parsed = parse_container(path);
    try {
        return parsed.manifest.at("kind").get<std::string>();
    } catch (const json::exception& e) {
        throw IoError("container manifest missing kind in " + path.string() + ": " +
                          e.what(),
                      static_cast<long long>(std::strlen(kMagic)));
    }
}

}  // namespace grasp::trainkit
