#include "checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

using nlohmann::json;

namespace voxfuse {

int64_t TensorBlob::numel() const {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    return n;
}

void TrainSettings::validate() const {
    scale(); // side range check
    require(train_output_side >= 8 && train_output_side % scale().num() == 0,
            Errc::invalid_argument,
            "training cube side " + std::to_string(train_output_side) +
                " is not a multiple of the scale numerator");
    require(crop_layers >= 0 && train_output_side - 2 * crop_layers >= 4,
            Errc::invalid_argument, "crop layers leave no room for critic patches");
    require(vw_threshold > 0.0, Errc::invalid_argument, "voxel-wise threshold must be positive");
    require(vw_coefficient > 0.0, Errc::invalid_argument,
            "voxel-wise coefficient must be positive");
    require(critic_iters_per_g >= 1, Errc::invalid_argument,
            "critic iterations per generator update must be at least 1");
    require(gp_lambda >= 0.0, Errc::invalid_argument, "gradient penalty weight cannot be negative");
    require(learning_rate > 0.0, Errc::invalid_argument, "learning rate must be positive");
    require(batch_size >= 1, Errc::invalid_argument, "batch size must be at least 1");
    require(noise_channels >= 0, Errc::invalid_argument, "noise channels cannot be negative");
    require(temperature > 0.0, Errc::invalid_argument, "softmax temperature must be positive");
    require(iterations >= 1, Errc::invalid_argument, "iteration budget must be positive");
    require(monitor_interval >= 1 && checkpoint_interval >= 1, Errc::invalid_argument,
            "monitor/checkpoint intervals must be positive");
}

uint64_t Checkpoint::spec_hash() const { return fnv1a64(spec_signature(gen, critics)); }

namespace {

constexpr const char* k_magic = "VFCK0001";

json layer_to_json(const LayerSpec& l) {
    return json{{"kind", l.kind == LayerKind::conv ? "conv" : "tconv"},
                {"in", l.in_channels},
                {"out", l.out_channels},
                {"kernel", l.kernel},
                {"stride", l.stride},
                {"padding", l.padding},
                {"activation", int(l.activation)}};
}

LayerSpec layer_from_json(const json& j) {
    LayerSpec l;
    const std::string kind = j.at("kind").get<std::string>();
    require(kind == "conv" || kind == "tconv", Errc::format, "unknown layer kind " + kind);
    l.kind = kind == "conv" ? LayerKind::conv : LayerKind::transposed_conv;
    l.in_channels = j.at("in").get<int64_t>();
    l.out_channels = j.at("out").get<int64_t>();
    l.kernel = j.at("kernel").get<int64_t>();
    l.stride = j.at("stride").get<int64_t>();
    l.padding = j.at("padding").get<int64_t>();
    const int act = j.at("activation").get<int>();
    require(act >= 0 && act <= int(Activation::softmax), Errc::format, "bad activation id");
    l.activation = Activation(act);
    return l;
}

json gen_to_json(const GeneratorSpec& g) {
    json layers = json::array();
    for (const auto& l : g.layers) layers.push_back(layer_to_json(l));
    return json{{"input_side", g.scale.input_side()},
                {"variant", g.variant == GenVariant::A ? "A" : g.variant == GenVariant::B ? "B" : "C"},
                {"lr_channels", g.lr_channels},
                {"noise_channels", g.noise_channels},
                {"out_channels", g.out_channels},
                {"layers", layers}};
}

GeneratorSpec gen_from_json(const json& j) {
    GeneratorSpec g;
    g.scale = ScaleFactor::from_input_side(j.at("input_side").get<int64_t>());
    const std::string v = j.at("variant").get<std::string>();
    require(v == "A" || v == "B" || v == "C", Errc::format, "unknown generator variant " + v);
    g.variant = v == "A" ? GenVariant::A : v == "B" ? GenVariant::B : GenVariant::C;
    g.lr_channels = j.at("lr_channels").get<int64_t>();
    g.noise_channels = j.at("noise_channels").get<int64_t>();
    g.out_channels = j.at("out_channels").get<int64_t>();
    for (const auto& lj : j.at("layers")) g.layers.push_back(layer_from_json(lj));
    return g;
}

json critic_to_json(const CriticSpec& c) {
    json layers = json::array();
    for (const auto& l : c.layers) layers.push_back(layer_to_json(l));
    return json{{"orientation", orientation_name(c.orientation)},
                {"in_channels", c.in_channels},
                {"input_side", c.input_side},
                {"layers", layers}};
}

CriticSpec critic_from_json(const json& j) {
    CriticSpec c;
    c.orientation = orientation_from_name(j.at("orientation").get<std::string>());
    c.in_channels = j.at("in_channels").get<int64_t>();
    c.input_side = j.at("input_side").get<int64_t>();
    for (const auto& lj : j.at("layers")) c.layers.push_back(layer_from_json(lj));
    return c;
}

json settings_to_json(const TrainSettings& s) {
    return json{{"input_side", s.input_side},
                {"train_output_side", s.train_output_side},
                {"crop_layers", s.crop_layers},
                {"vw_threshold", s.vw_threshold},
                {"vw_coefficient", s.vw_coefficient},
                {"critic_iters_per_g", s.critic_iters_per_g},
                {"gp_lambda", s.gp_lambda},
                {"learning_rate", s.learning_rate},
                {"adam_beta1", s.adam_beta1},
                {"adam_beta2", s.adam_beta2},
                {"adam_eps", s.adam_eps},
                {"batch_size", s.batch_size},
                {"noise_channels", s.noise_channels},
                {"temperature", s.temperature},
                {"iterations", s.iterations},
                {"monitor_interval", s.monitor_interval},
                {"checkpoint_interval", s.checkpoint_interval},
                {"anisotropic", s.anisotropic},
                {"mode", s.mode == DegradeMode::under_resolved ? "under_resolved" : "under_sampled"},
                {"merge_map", s.merge_map},
                {"gen_widths", s.gen_widths},
                {"critic_widths", s.critic_widths}};
}

TrainSettings settings_from_json(const json& j) {
    TrainSettings s;
    s.input_side = j.at("input_side").get<int64_t>();
    s.train_output_side = j.at("train_output_side").get<int64_t>();
    s.crop_layers = j.at("crop_layers").get<int64_t>();
    s.vw_threshold = j.at("vw_threshold").get<double>();
    s.vw_coefficient = j.at("vw_coefficient").get<double>();
    s.critic_iters_per_g = j.at("critic_iters_per_g").get<int64_t>();
    s.gp_lambda = j.at("gp_lambda").get<double>();
    s.learning_rate = j.at("learning_rate").get<double>();
    s.adam_beta1 = j.at("adam_beta1").get<double>();
    s.adam_beta2 = j.at("adam_beta2").get<double>();
    s.adam_eps = j.at("adam_eps").get<double>();
    s.batch_size = j.at("batch_size").get<int64_t>();
    s.noise_channels = j.at("noise_channels").get<int64_t>();
    s.temperature = j.at("temperature").get<double>();
    s.iterations = j.at("iterations").get<int64_t>();
    s.monitor_interval = j.at("monitor_interval").get<int64_t>();
    s.checkpoint_interval = j.at("checkpoint_interval").get<int64_t>();
    s.anisotropic = j.at("anisotropic").get<bool>();
    const std::string mode = j.at("mode").get<std::string>();
    require(mode == "under_resolved" || mode == "under_sampled", Errc::format,
            "unknown degrade mode " + mode);
    s.mode = mode == "under_resolved" ? DegradeMode::under_resolved : DegradeMode::under_sampled;
    s.merge_map = j.at("merge_map").get<std::vector<int>>();
    s.gen_widths = j.at("gen_widths").get<std::vector<int64_t>>();
    s.critic_widths = j.at("critic_widths").get<std::vector<int64_t>>();
    return s;
}

json blob_meta(const TensorBlob& b) { return json{{"name", b.name}, {"shape", b.shape}}; }

// Canonical payload order: generator params, critic params per critic, then
// Adam first/second moments in the same parameter order.
template <typename CP, typename Fn>
void for_each_blob(CP& cp, Fn&& fn) {
    for (auto& b : cp.gen_params) fn(b);
    for (auto& critic : cp.critic_params)
        for (auto& b : critic) fn(b);
    for (auto& b : cp.gen_opt.first_moment) fn(b);
    for (auto& b : cp.gen_opt.second_moment) fn(b);
    for (auto& opt : cp.critic_opts) {
        for (auto& b : opt.first_moment) fn(b);
        for (auto& b : opt.second_moment) fn(b);
    }
}

void append_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

uint64_t read_u64(const char* p) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(uint8_t(p[i])) << (8 * i);
    return v;
}

} // namespace

void save_checkpoint(const Checkpoint& cp, const std::string& path) {
    json blobs = json::array();
    int64_t payload_floats = 0;
    for_each_blob(cp, [&](const TensorBlob& b) {
        require(int64_t(b.data.size()) == b.numel(), Errc::internal,
                "blob '" + b.name + "' size does not match its shape");
        blobs.push_back(blob_meta(b));
        payload_floats += b.numel();
    });

    json critics = json::array();
    for (const auto& c : cp.critics) critics.push_back(critic_to_json(c));
    json history = json::array();
    for (const auto& row : cp.history)
        history.push_back(json::array({row.iteration, row.name, row.value}));

    char hash_hex[17];
    std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                  (unsigned long long)cp.spec_hash());

    json header{{"generator", gen_to_json(cp.gen)},
                {"critics", critics},
                {"settings", settings_to_json(cp.settings)},
                {"lr_palette", cp.lr_palette},
                {"hr_palette", cp.hr_palette},
                {"lr_pitch_nm", cp.lr_pitch_nm},
                {"iteration", cp.iteration},
                {"rng_state", cp.rng_state},
                {"spec_hash", std::string(hash_hex)},
                {"gen_opt_step", cp.gen_opt.step},
                {"critic_opt_steps", [&] {
                     std::vector<int64_t> steps;
                     for (const auto& o : cp.critic_opts) steps.push_back(o.step);
                     return steps;
                 }()},
                {"blobs", blobs},
                {"history", history}};

    std::string head = header.dump();
    std::string prefix = std::string(k_magic) + "\n";
    append_u64(prefix, head.size());

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(out.good(), Errc::io, "cannot open '" + tmp + "' for writing");
        out.write(prefix.data(), std::streamsize(prefix.size()));
        out.write(head.data(), std::streamsize(head.size()));
        for_each_blob(cp, [&](const TensorBlob& b) {
            out.write(reinterpret_cast<const char*>(b.data.data()),
                      std::streamsize(b.data.size() * sizeof(float)));
        });
        out.flush();
        require(out.good(), Errc::io, "short write to '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    require(!ec, Errc::io, "cannot move checkpoint into place at '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), Errc::io, "cannot open checkpoint '" + path + "'");
    std::string magic;
    std::getline(in, magic);
    require(in.good() && magic == k_magic, Errc::format,
            "'" + path + "' is not a voxfuse checkpoint (bad magic)");
    char lenbuf[8];
    in.read(lenbuf, 8);
    require(in.good(), Errc::format, "'" + path + "': truncated checkpoint header");
    const uint64_t head_len = read_u64(lenbuf);
    require(head_len > 0 && head_len < (1ull << 31), Errc::format,
            "'" + path + "': implausible header length");
    std::string head(head_len, '\0');
    in.read(head.data(), std::streamsize(head_len));
    require(in.good(), Errc::format, "'" + path + "': truncated checkpoint header");
    json header = json::parse(head, nullptr, false);
    require(!header.is_discarded(), Errc::format, "'" + path + "': malformed checkpoint header");

    Checkpoint cp;
    cp.gen = gen_from_json(header.at("generator"));
    for (const auto& cj : header.at("critics")) cp.critics.push_back(critic_from_json(cj));
    cp.settings = settings_from_json(header.at("settings"));
    cp.lr_palette = header.at("lr_palette").get<std::vector<std::string>>();
    cp.hr_palette = header.at("hr_palette").get<std::vector<std::string>>();
    cp.lr_pitch_nm = header.at("lr_pitch_nm").get<double>();
    cp.iteration = header.at("iteration").get<int64_t>();
    cp.rng_state = header.at("rng_state").get<std::string>();
    cp.gen_opt.step = header.at("gen_opt_step").get<int64_t>();
    const auto critic_steps = header.at("critic_opt_steps").get<std::vector<int64_t>>();
    require(critic_steps.size() == cp.critics.size(), Errc::format,
            "'" + path + "': critic optimizer count mismatch");

    char hash_hex[17];
    std::snprintf(hash_hex, sizeof hash_hex, "%016llx", (unsigned long long)cp.spec_hash());
    require(header.at("spec_hash").get<std::string>() == hash_hex, Errc::format,
            "'" + path + "': architecture hash mismatch — checkpoint belongs to a different model");

    for (const auto& row : header.at("history")) {
        require(row.is_array() && row.size() == 3, Errc::format,
                "'" + path + "': malformed history row");
        cp.history.push_back({row[0].get<int64_t>(), row[1].get<std::string>(),
                              row[2].get<double>()});
    }

    // Rebuild the blob skeletons in canonical order, then fill from payload.
    const auto& metas = header.at("blobs");
    size_t meta_idx = 0;
    auto next_blob = [&]() -> TensorBlob {
        require(meta_idx < metas.size(), Errc::format, "'" + path + "': missing blob metadata");
        const auto& m = metas[meta_idx++];
        TensorBlob b;
        b.name = m.at("name").get<std::string>();
        b.shape = m.at("shape").get<std::vector<int64_t>>();
        b.data.resize(size_t(b.numel()));
        return b;
    };
    auto read_blob_list = [&](size_t count, std::vector<TensorBlob>& dst) {
        for (size_t i = 0; i < count; ++i) dst.push_back(next_blob());
    };

    const size_t gen_n = cp.gen.layers.size() * 2; // weight + bias per layer
    read_blob_list(gen_n, cp.gen_params);
    cp.critic_params.resize(cp.critics.size());
    for (size_t c = 0; c < cp.critics.size(); ++c)
        read_blob_list(cp.critics[c].layers.size() * 2, cp.critic_params[c]);
    read_blob_list(gen_n, cp.gen_opt.first_moment);
    read_blob_list(gen_n, cp.gen_opt.second_moment);
    cp.critic_opts.resize(cp.critics.size());
    for (size_t c = 0; c < cp.critics.size(); ++c) {
        cp.critic_opts[c].step = critic_steps[c];
        read_blob_list(cp.critics[c].layers.size() * 2, cp.critic_opts[c].first_moment);
        read_blob_list(cp.critics[c].layers.size() * 2, cp.critic_opts[c].second_moment);
    }
    require(meta_idx == metas.size(), Errc::format, "'" + path + "': surplus blob metadata");

    for_each_blob(cp, [&](TensorBlob& b) {
        in.read(reinterpret_cast<char*>(b.data.data()),
                std::streamsize(b.data.size() * sizeof(float)));
        require(in.good(), Errc::format, "'" + path + "': truncated checkpoint payload");
    });
    in.peek();
    require(in.eof(), Errc::format, "'" + path + "': trailing bytes after checkpoint payload");
    return cp;
}

void write_history_csv(const std::vector<MetricRow>& history, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), Errc::io, "cannot open '" + path + "' for writing");
    out << "iteration,metric,value\n";
    char buf[64];
    auto field = [](const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string quoted = "\"";
        for (char c : s) {
            if (c == '"') quoted += '"';
            quoted += c;
        }
        return quoted += '"';
    };
    for (const auto& row : history) {
        std::snprintf(buf, sizeof buf, "%.17g", row.value);
        out << row.iteration << ',' << field(row.name) << ',' << buf << '\n';
    }
    require(out.good(), Errc::io, "short write to '" + path + "'");
}

} // namespace voxfuse
