#include "pointprompt/config.hpp"

#include "pointprompt/errors.hpp"
#include "pointprompt/hash.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace pointprompt {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string format_scalar(Scalar v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct Field {
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field make_int_field(T RunConfig::* member) {
    return Field{
        [member](RunConfig& cfg, const std::string& raw) {
            long long v = 0;
            const auto res = std::from_chars(raw.data(), raw.data() + raw.size(), v);
            if (res.ec != std::errc{} || res.ptr != raw.data() + raw.size()) {
                throw ConfigError("expected an integer, got '" + raw + "'");
            }
            cfg.*member = static_cast<T>(v);
        },
        [member](const RunConfig& cfg) { return std::to_string(cfg.*member); },
    };
}

Field make_scalar_field(Scalar RunConfig::* member) {
    return Field{
        [member](RunConfig& cfg, const std::string& raw) {
            try {
                std::size_t used = 0;
                cfg.*member = std::stod(raw, &used);
                if (used != raw.size()) throw std::invalid_argument(raw);
            } catch (const std::exception&) {
                throw ConfigError("expected a real number, got '" + raw + "'");
            }
        },
        [member](const RunConfig& cfg) { return format_scalar(cfg.*member); },
    };
}

Field make_string_field(std::string RunConfig::* member) {
    return Field{
        [member](RunConfig& cfg, const std::string& raw) { cfg.*member = raw; },
        [member](const RunConfig& cfg) { return cfg.*member; },
    };
}

const std::map<std::string, Field>& schema() {
    static const std::map<std::string, Field> fields = {
        {"mode", make_string_field(&RunConfig::mode)},
        {"shared_dim", make_int_field(&RunConfig::shared_dim)},
        {"point_dim", make_int_field(&RunConfig::point_dim)},
        {"image_dim", make_int_field(&RunConfig::image_dim)},
        {"text_heads", make_int_field(&RunConfig::text_heads)},
        {"point_heads", make_int_field(&RunConfig::point_heads)},
        {"image_heads", make_int_field(&RunConfig::image_heads)},
        {"text_blocks", make_int_field(&RunConfig::text_blocks)},
        {"point_blocks", make_int_field(&RunConfig::point_blocks)},
        {"image_blocks", make_int_field(&RunConfig::image_blocks)},
        {"mlp_ratio", make_int_field(&RunConfig::mlp_ratio)},
        {"max_seq", make_int_field(&RunConfig::max_seq)},
        {"patches", make_int_field(&RunConfig::patches)},
        {"neighbors", make_int_field(&RunConfig::neighbors)},
        {"points", make_int_field(&RunConfig::points)},
        {"image_size", make_int_field(&RunConfig::image_size)},
        {"image_patch", make_int_field(&RunConfig::image_patch)},
        {"gelu", make_string_field(&RunConfig::gelu)},
        {"vocab_file", make_string_field(&RunConfig::vocab_file)},
        {"adapter", make_string_field(&RunConfig::adapter)},
        {"context_length", make_int_field(&RunConfig::context_length)},
        {"insert_position", make_string_field(&RunConfig::insert_position)},
        {"init_mode", make_string_field(&RunConfig::init_mode)},
        {"init_template", make_string_field(&RunConfig::init_template)},
        {"loss_form", make_string_field(&RunConfig::loss_form)},
        {"tau_cls", make_scalar_field(&RunConfig::tau_cls)},
        {"tau_contrastive", make_scalar_field(&RunConfig::tau_contrastive)},
        {"alpha", make_scalar_field(&RunConfig::alpha)},
        {"beta", make_scalar_field(&RunConfig::beta)},
        {"theta", make_scalar_field(&RunConfig::theta)},
        {"batch_size", make_int_field(&RunConfig::batch_size)},
        {"steps", make_int_field(&RunConfig::steps)},
        {"lr", make_scalar_field(&RunConfig::lr)},
        {"weight_decay", make_scalar_field(&RunConfig::weight_decay)},
        {"warmup_fraction", make_scalar_field(&RunConfig::warmup_fraction)},
        {"grad_clip", make_scalar_field(&RunConfig::grad_clip)},
        {"adam_beta1", make_scalar_field(&RunConfig::adam_beta1)},
        {"adam_beta2", make_scalar_field(&RunConfig::adam_beta2)},
        {"adam_eps", make_scalar_field(&RunConfig::adam_eps)},
        {"seed_init", make_int_field(&RunConfig::seed_init)},
        {"seed_data", make_int_field(&RunConfig::seed_data)},
        {"dataset", make_string_field(&RunConfig::dataset)},
        {"data_root", make_string_field(&RunConfig::data_root)},
        {"classes", make_string_field(&RunConfig::classes)},
        {"train_per_class", make_int_field(&RunConfig::train_per_class)},
        {"test_per_class", make_int_field(&RunConfig::test_per_class)},
        {"noise_sigma", make_scalar_field(&RunConfig::noise_sigma)},
        {"fraction", make_scalar_field(&RunConfig::fraction)},
        {"shots", make_int_field(&RunConfig::shots)},
        {"eval_template", make_int_field(&RunConfig::eval_template)},
        {"log_every", make_int_field(&RunConfig::log_every)},
    };
    return fields;
}

void require(bool cond, const std::string& message) {
    if (!cond) throw ConfigError(message);
}

}  // namespace

std::vector<std::string> RunConfig::class_list() const {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(classes);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

GeluMode RunConfig::gelu_mode() const {
    return gelu == "exact" ? GeluMode::kExact : GeluMode::kTanh;
}

std::vector<std::string> RunConfig::architecture_mismatches(const RunConfig& other) const {
    static const char* arch_keys[] = {
        "shared_dim", "point_dim",  "image_dim",  "text_heads",  "point_heads",
        "image_heads", "text_blocks", "point_blocks", "image_blocks", "mlp_ratio",
        "max_seq",    "patches",    "neighbors",  "points",      "image_size",
        "image_patch", "gelu",      "vocab_file", "classes",
    };
    std::vector<std::string> bad;
    for (const char* key : arch_keys) {
        const Field& f = schema().at(key);
        if (f.get(*this) != f.get(other)) bad.emplace_back(key);
    }
    return bad;
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected 'key = value', got '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = schema().find(key);
        if (it == schema().end()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" +
                              key + "'");
        }
        try {
            it->second.set(cfg, value);
        } catch (const ConfigError& e) {
            throw ConfigError("config key '" + key + "': " + e.what());
        }
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

RunConfig resolve_config(RunConfig cfg) {
    require(cfg.mode == "pretrain" || cfg.mode == "tune",
            "mode: must be 'pretrain' or 'tune', got '" + cfg.mode + "'");
    require(cfg.shared_dim > 0 && cfg.point_dim > 0 && cfg.image_dim > 0,
            "encoder widths must be positive");
    require(cfg.text_heads > 0 && cfg.shared_dim % cfg.text_heads == 0,
            "shared_dim must divide by text_heads");
    require(cfg.point_heads > 0 && cfg.point_dim % cfg.point_heads == 0,
            "point_dim must divide by point_heads");
    require(cfg.image_heads > 0 && cfg.image_dim % cfg.image_heads == 0,
            "image_dim must divide by image_heads");
    require(cfg.text_blocks > 0 && cfg.point_blocks > 0 && cfg.image_blocks > 0,
            "block counts must be positive");
    require(cfg.mlp_ratio > 0, "mlp_ratio must be positive");
    require(cfg.image_size > 0 && cfg.image_patch > 0 &&
                cfg.image_size % cfg.image_patch == 0,
            "image_size must divide by image_patch");
    require(cfg.patches > 0 && cfg.neighbors > 0 && cfg.points >= cfg.patches &&
                cfg.points >= cfg.neighbors,
            "points must cover patches and neighbors");
    require(cfg.gelu == "tanh" || cfg.gelu == "exact", "gelu: must be 'tanh' or 'exact'");
    require(cfg.batch_size > 0, "batch_size: required and positive");
    require(cfg.steps > 0, "steps: required and positive");
    require(cfg.warmup_fraction >= 0.0 && cfg.warmup_fraction < 1.0,
            "warmup_fraction must lie in [0, 1)");
    require(cfg.weight_decay >= 0.0, "weight_decay must be >= 0");
    require(cfg.grad_clip >= 0.0, "grad_clip must be >= 0 (0 disables)");
    require(cfg.tau_contrastive > 0.0, "tau_contrastive must be > 0");
    require(cfg.tau_cls > 0.0, "tau_cls must be > 0");
    require(cfg.alpha >= 0.0 && cfg.beta >= 0.0 && cfg.theta >= 0.0 &&
                cfg.alpha + cfg.beta + cfg.theta > 0.0,
            "contrastive weights must be non-negative with at least one positive");
    require(cfg.dataset == "synthetic" || cfg.dataset == "off",
            "dataset: must be 'synthetic' or 'off'");
    if (cfg.dataset == "off") require(!cfg.data_root.empty(), "data_root: required for off data");
    if (cfg.dataset == "synthetic") {
        require(cfg.train_per_class > 0 && cfg.test_per_class > 0,
                "synthetic per-class counts must be positive");
    }
    require(cfg.fraction > 0.0 && cfg.fraction <= 1.0, "fraction must lie in (0, 1]");
    require(cfg.shots >= 0, "shots must be >= 0");
    require(cfg.eval_template >= 0 &&
                cfg.eval_template < static_cast<Index>(4),
            "eval_template out of range");
    require(cfg.log_every > 0, "log_every must be positive");

    if (cfg.mode == "tune") {
        // The keys that define the objective are stated, never defaulted.
        require(!cfg.adapter.empty(), "adapter: required in tune mode (none|ffn|ptb)");
        require(cfg.adapter == "none" || cfg.adapter == "ffn" || cfg.adapter == "ptb",
                "adapter: must be none|ffn|ptb, got '" + cfg.adapter + "'");
        require(cfg.context_length > 0, "context_length: required in tune mode");
        require(cfg.context_length + 3 <= cfg.max_seq,
                "context_length + specials exceed max_seq");
        require(!cfg.loss_form.empty(), "loss_form: required in tune mode (categorical|bce)");
        require(cfg.loss_form == "categorical" || cfg.loss_form == "bce",
                "loss_form: must be categorical|bce");
        require(cfg.insert_position == "front" || cfg.insert_position == "middle" ||
                    cfg.insert_position == "end",
                "insert_position: must be front|middle|end");
        require(cfg.init_mode == "random" || cfg.init_mode == "template",
                "init_mode: must be random|template");
    }
    if (cfg.lr == 0.0) cfg.lr = (cfg.mode == "pretrain") ? 1e-3 : 5e-4;
    require(cfg.lr > 0.0, "lr must be positive");
    return cfg;
}

std::string canonical_config_text(const RunConfig& cfg) {
    std::ostringstream out;
    for (const auto& [key, field] : schema()) {  // std::map iterates sorted
        out << key << " = " << field.get(cfg) << "\n";
    }
    return out.str();
}

std::string config_hash(const RunConfig& cfg) { return sha256_hex(canonical_config_text(cfg)); }

}  // namespace pointprompt
