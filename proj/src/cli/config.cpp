#include "facecloak/config.hpp"

#include <set>

#include "facecloak/error.hpp"
#include "facecloak/sha256.hpp"
#include "facecloak/toml.hpp"

namespace facecloak {

using nlohmann::ordered_json;

double parse_real(const ordered_json& value, const std::string& context) {
    if (value.is_number()) return value.get<double>();
    if (value.is_string()) {
        const std::string s = value.get<std::string>();
        const std::size_t slash = s.find('/');
        try {
            if (slash == std::string::npos) return std::stod(s);
            const double numerator = std::stod(s.substr(0, slash));
            const double denominator = std::stod(s.substr(slash + 1));
            if (denominator == 0.0) throw std::invalid_argument("zero denominator");
            return numerator / denominator;
        } catch (const std::exception&) {
            raise(ErrorKind::ConfigInvalid, "cli",
                  context + ": cannot parse real value '" + s + "'");
        }
    }
    raise(ErrorKind::ConfigInvalid, "cli", context + ": expected a number or fraction string");
}

namespace {

void reject_unknown_keys(const ordered_json& section, const std::set<std::string>& known,
                         const std::string& name) {
    for (const auto& [key, value] : section.items()) {
        (void)value;
        if (!known.count(key)) {
            raise(ErrorKind::ConfigInvalid, "cli",
                  "unknown key '" + key + "' in [" + name + "]");
        }
    }
}

TransformSpec transform_from_string(const std::string& text) {
    const std::size_t colon = text.find(':');
    if (colon == std::string::npos) {
        raise(ErrorKind::ConfigInvalid, "cli",
              "transform '" + text + "' must be kind:strength");
    }
    TransformSpec spec;
    spec.kind = transform_kind_from_string(text.substr(0, colon));
    try {
        spec.strength = std::stod(text.substr(colon + 1));
    } catch (const std::exception&) {
        raise(ErrorKind::ConfigInvalid, "cli", "bad transform strength in '" + text + "'");
    }
    validate_transform_spec(spec);
    return spec;
}

}  // namespace

RunConfig run_config_from_toml(const ordered_json& doc) {
    RunConfig cfg;
    reject_unknown_keys(doc, {"rng_seed", "jobs", "backend", "dataset", "optimizer", "synthgen",
                              "focusing", "eval", "output"},
                        "root");

    if (doc.contains("rng_seed")) cfg.rng_seed = doc["rng_seed"].get<std::uint64_t>();
    if (doc.contains("jobs")) cfg.jobs = doc["jobs"].get<int>();

    if (doc.contains("backend")) {
        const auto& b = doc["backend"];
        reject_unknown_keys(b,
                            {"kind", "weights", "id", "train_if_missing", "input_height",
                             "input_width", "train_epochs", "train_holdout", "train_learning_rate"},
                            "backend");
        if (b.contains("kind")) cfg.backend.kind = b["kind"].get<std::string>();
        if (b.contains("weights")) cfg.backend.weights_path = b["weights"].get<std::string>();
        if (b.contains("id")) cfg.backend.backend_id = b["id"].get<std::string>();
        if (b.contains("train_if_missing"))
            cfg.backend.train_if_missing = b["train_if_missing"].get<bool>();
        if (b.contains("input_height")) cfg.backend.input_height = b["input_height"].get<int>();
        if (b.contains("input_width")) cfg.backend.input_width = b["input_width"].get<int>();
        if (b.contains("train_epochs")) cfg.backend.train_epochs = b["train_epochs"].get<int>();
        if (b.contains("train_holdout")) cfg.backend.train_holdout = b["train_holdout"].get<int>();
        if (b.contains("train_learning_rate"))
            cfg.backend.train_learning_rate = parse_real(b["train_learning_rate"], "backend.train_learning_rate");
    }

    if (doc.contains("dataset")) {
        const auto& d = doc["dataset"];
        reject_unknown_keys(d, {"root", "probe_per_identity"}, "dataset");
        if (d.contains("root")) cfg.dataset_root = d["root"].get<std::string>();
        if (d.contains("probe_per_identity"))
            cfg.probe_per_identity = d["probe_per_identity"].get<int>();
    }

    if (doc.contains("optimizer")) {
        const auto& o = doc["optimizer"];
        reject_unknown_keys(o, {"eps", "eps_boosted", "step", "iterations"}, "optimizer");
        if (o.contains("eps")) cfg.optimizer.eps = parse_real(o["eps"], "optimizer.eps");
        if (o.contains("eps_boosted"))
            cfg.optimizer.eps_boosted = parse_real(o["eps_boosted"], "optimizer.eps_boosted");
        if (o.contains("step")) cfg.optimizer.step = parse_real(o["step"], "optimizer.step");
        if (o.contains("iterations")) cfg.optimizer.iterations = o["iterations"].get<int>();
    }

    if (doc.contains("synthgen")) {
        const auto& s = doc["synthgen"];
        reject_unknown_keys(s,
                            {"generator", "n_variants", "endpoint_host", "endpoint_port",
                             "endpoint_path", "auth_token", "timeout_seconds", "retries"},
                            "synthgen");
        if (s.contains("generator")) {
            const std::string g = s["generator"].get<std::string>();
            if (g == "identity") cfg.synthgen.kind = GeneratorKind::Identity;
            else if (g == "augment") cfg.synthgen.kind = GeneratorKind::Augmentation;
            else if (g == "external") cfg.synthgen.kind = GeneratorKind::External;
            else raise(ErrorKind::ConfigInvalid, "cli", "unknown generator '" + g + "'");
        }
        if (s.contains("n_variants")) cfg.optimizer.n_variants = s["n_variants"].get<int>();
        if (s.contains("endpoint_host")) cfg.synthgen.http.host = s["endpoint_host"].get<std::string>();
        if (s.contains("endpoint_port")) cfg.synthgen.http.port = s["endpoint_port"].get<int>();
        if (s.contains("endpoint_path")) cfg.synthgen.http.path = s["endpoint_path"].get<std::string>();
        if (s.contains("auth_token")) cfg.synthgen.http.auth_token = s["auth_token"].get<std::string>();
        if (s.contains("timeout_seconds")) cfg.synthgen.http.timeout_seconds = s["timeout_seconds"].get<int>();
        if (s.contains("retries")) cfg.synthgen.http.retries = s["retries"].get<int>();
    }

    if (doc.contains("focusing")) {
        const auto& f = doc["focusing"];
        reject_unknown_keys(f,
                            {"use_sticker", "use_highpass", "use_attention", "sticker_eye",
                             "sticker_nose", "sticker_mouth", "highpass_sigma", "highpass_mu",
                             "highpass_radius", "attention_z", "attention_init", "attention_clamp"},
                            "focusing");
        if (f.contains("use_sticker")) cfg.optimizer.use_sticker = f["use_sticker"].get<bool>();
        if (f.contains("use_highpass")) cfg.optimizer.use_highpass = f["use_highpass"].get<bool>();
        if (f.contains("use_attention")) cfg.optimizer.use_attention = f["use_attention"].get<bool>();
        auto box = [&](const char* key, BoxFraction& out) {
            if (!f.contains(key)) return;
            const auto& arr = f[key];
            if (!arr.is_array() || arr.size() != 2) {
                raise(ErrorKind::ConfigInvalid, "cli",
                      std::string(key) + " must be [width_frac, height_frac]");
            }
            out.width_frac = parse_real(arr[0], key);
            out.height_frac = parse_real(arr[1], key);
        };
        box("sticker_eye", cfg.optimizer.sticker.eye);
        box("sticker_nose", cfg.optimizer.sticker.nose);
        box("sticker_mouth", cfg.optimizer.sticker.mouth);
        if (f.contains("highpass_sigma"))
            cfg.optimizer.highpass.sigma = parse_real(f["highpass_sigma"], "highpass_sigma");
        if (f.contains("highpass_mu"))
            cfg.optimizer.highpass.mu = parse_real(f["highpass_mu"], "highpass_mu");
        if (f.contains("highpass_radius"))
            cfg.optimizer.highpass.kernel_radius = f["highpass_radius"].get<int>();
        if (f.contains("attention_z"))
            cfg.optimizer.attention.z_alpha = parse_real(f["attention_z"], "attention_z");
        auto bounds = [&](const char* key, double& lo, double& hi) {
            if (!f.contains(key)) return;
            const auto& arr = f[key];
            if (!arr.is_array() || arr.size() != 2) {
                raise(ErrorKind::ConfigInvalid, "cli", std::string(key) + " must be [low, high]");
            }
            lo = parse_real(arr[0], key);
            hi = parse_real(arr[1], key);
        };
        bounds("attention_init", cfg.optimizer.attention.init_low,
               cfg.optimizer.attention.init_high);
        bounds("attention_clamp", cfg.optimizer.attention.clamp_low,
               cfg.optimizer.attention.clamp_high);
    }

    if (doc.contains("eval")) {
        const auto& e = doc["eval"];
        reject_unknown_keys(e, {"top_n", "verification", "target_far", "transforms"}, "eval");
        if (e.contains("top_n")) {
            cfg.eval.top_n.clear();
            for (const auto& v : e["top_n"]) cfg.eval.top_n.push_back(v.get<int>());
        }
        if (e.contains("verification")) cfg.eval.verification = e["verification"].get<bool>();
        if (e.contains("target_far")) cfg.eval.target_far = parse_real(e["target_far"], "target_far");
        if (e.contains("transforms")) {
            for (const auto& t : e["transforms"]) {
                cfg.eval.transforms.push_back(transform_from_string(t.get<std::string>()));
            }
        }
    }

    if (doc.contains("output")) {
        const auto& o = doc["output"];
        reject_unknown_keys(o, {"dir"}, "output");
        if (o.contains("dir")) cfg.output_dir = o["dir"].get<std::string>();
    }

    cfg.optimizer.rng_seed = cfg.rng_seed;
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    return run_config_from_toml(parse_toml_file(path.string()));
}

void RunConfig::validate() const {
    if (backend.kind != "toy" && backend.kind != "onnx") {
        raise(ErrorKind::ConfigInvalid, "cli", "backend.kind must be 'toy' or 'onnx'");
    }
    if (backend.kind == "onnx" && backend.weights_path.empty()) {
        raise(ErrorKind::ConfigInvalid, "cli", "backend.weights is required for onnx backends");
    }
    if (backend.input_height < ImagePlane::kMinSide || backend.input_width < ImagePlane::kMinSide) {
        raise(ErrorKind::ConfigInvalid, "cli", "backend input size below minimum");
    }
    if (probe_per_identity < 1) {
        raise(ErrorKind::ConfigInvalid, "cli", "dataset.probe_per_identity must be at least 1");
    }
    if (jobs < 1) {
        raise(ErrorKind::ConfigInvalid, "cli", "jobs must be at least 1");
    }
    for (int n : eval.top_n) {
        if (n < 1) raise(ErrorKind::ConfigInvalid, "cli", "eval.top_n entries must be ≥ 1");
    }
    if (eval.target_far < 0.0 || eval.target_far > 1.0) {
        raise(ErrorKind::ConfigInvalid, "cli", "eval.target_far must lie in [0, 1]");
    }
    optimizer.validate();  // full invariant, including 0 < step ≤ eps ≤ eps_A ≤ 0.5
    if (synthgen.kind == GeneratorKind::External && synthgen.http.host.empty()) {
        raise(ErrorKind::ConfigInvalid, "cli", "external generator needs synthgen.endpoint_host");
    }
    if (synthgen.kind == GeneratorKind::Identity && optimizer.n_variants != 1) {
        raise(ErrorKind::ConfigInvalid, "cli", "identity generator requires n_variants = 1");
    }
}

nlohmann::ordered_json RunConfig::to_canonical_json() const {
    nlohmann::ordered_json doc;
    doc["rng_seed"] = rng_seed;
    doc["backend"] = {{"kind", backend.kind},
                      {"weights", backend.weights_path.string()},
                      {"id", backend.backend_id},
                      {"input_height", backend.input_height},
                      {"input_width", backend.input_width},
                      {"train_if_missing", backend.train_if_missing},
                      {"train_epochs", backend.train_epochs},
                      {"train_holdout", backend.train_holdout},
                      {"train_learning_rate", backend.train_learning_rate}};
    doc["dataset"] = {{"root", dataset_root.string()},
                      {"probe_per_identity", probe_per_identity}};
    doc["optimizer"] = {{"eps", optimizer.eps},
                        {"eps_boosted", optimizer.eps_boosted},
                        {"step", optimizer.step},
                        {"iterations", optimizer.iterations},
                        {"n_variants", optimizer.n_variants}};
    const char* generator = synthgen.kind == GeneratorKind::Identity ? "identity"
                            : synthgen.kind == GeneratorKind::Augmentation ? "augment"
                                                                           : "external";
    doc["synthgen"] = {{"generator", generator},
                       {"endpoint_host", synthgen.http.host},
                       {"endpoint_port", synthgen.http.port},
                       {"endpoint_path", synthgen.http.path}};
    doc["focusing"] = {{"use_sticker", optimizer.use_sticker},
                       {"use_highpass", optimizer.use_highpass},
                       {"use_attention", optimizer.use_attention},
                       {"sticker_eye", {optimizer.sticker.eye.width_frac, optimizer.sticker.eye.height_frac}},
                       {"sticker_nose", {optimizer.sticker.nose.width_frac, optimizer.sticker.nose.height_frac}},
                       {"sticker_mouth", {optimizer.sticker.mouth.width_frac, optimizer.sticker.mouth.height_frac}},
                       {"highpass_sigma", optimizer.highpass.sigma},
                       {"highpass_mu", optimizer.highpass.mu},
                       {"highpass_radius", optimizer.highpass.kernel_radius},
                       {"attention_z", optimizer.attention.z_alpha},
                       {"attention_init", {optimizer.attention.init_low, optimizer.attention.init_high}},
                       {"attention_clamp", {optimizer.attention.clamp_low, optimizer.attention.clamp_high}}};
    nlohmann::ordered_json transforms = nlohmann::ordered_json::array();
    for (const TransformSpec& t : eval.transforms) transforms.push_back(t.label());
    doc["eval"] = {{"top_n", eval.top_n},
                   {"verification", eval.verification},
                   {"target_far", eval.target_far},
                   {"transforms", transforms}};
    return doc;
}

std::string RunConfig::digest() const { return sha256_hex(to_canonical_json().dump()); }

}  // namespace facecloak
