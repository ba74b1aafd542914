#pragma once

#include "pointprompt/tensor.hpp"
#include "pointprompt/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pointprompt {

/// Every knob of a run. Parsed from flat `key = value` text with explicit
/// schema validation; keys that matter for the objective (context length,
/// adapter, loss form) have no silent defaults in tune mode.
struct RunConfig {
    // mode
    std::string mode;  // pretrain | tune

    // encoder architecture
    Index shared_dim = 512;
    Index point_dim = 384;
    Index image_dim = 256;
    Index text_heads = 8;
    Index point_heads = 6;
    Index image_heads = 4;
    Index text_blocks = 2;
    Index point_blocks = 2;
    Index image_blocks = 2;
    Index mlp_ratio = 4;
    Index max_seq = 80;
    Index patches = 16;
    Index neighbors = 8;
    Index points = 256;
    Index image_size = 32;
    Index image_patch = 8;
    std::string gelu = "tanh";  // tanh | exact
    std::string vocab_file;     // empty = built-in word list

    // prompt + adapter (tune mode)
    std::string adapter;              // none | ffn | ptb (required in tune)
    Index context_length = 0;         // M (required in tune)
    std::string insert_position = "middle";
    std::string init_mode = "random";  // random | template
    std::string init_template = "a point cloud model of a";
    std::string loss_form;            // categorical | bce (required in tune)
    Scalar tau_cls = 1.0;

    // contrastive pre-training
    Scalar tau_contrastive = 0.07;
    Scalar alpha = 1.0;
    Scalar beta = 1.0;
    Scalar theta = 1.0;

    // optimization
    Index batch_size = 0;  // required
    Index steps = 0;       // required
    Scalar lr = 0.0;       // 0 resolves to the mode default (1e-3 / 5e-4)
    Scalar weight_decay = 0.05;
    Scalar warmup_fraction = 0.1;
    Scalar grad_clip = 1.0;
    Scalar adam_beta1 = 0.9;
    Scalar adam_beta2 = 0.999;
    Scalar adam_eps = 1e-8;

    // seeds
    std::uint64_t seed_init = 1;
    std::uint64_t seed_data = 2;

    // data
    std::string dataset = "synthetic";  // synthetic | off
    std::string data_root;              // required when dataset = off
    std::string classes;                // comma-separated; resolved from data
    Index train_per_class = 64;
    Index test_per_class = 32;
    Scalar noise_sigma = 0.02;
    Scalar fraction = 1.0;
    Index shots = 0;  // 0 = off
    Index eval_template = 0;
    Index log_every = 25;

    std::vector<std::string> class_list() const;
    GeluMode gelu_mode() const;

    // Architecture keys that a tuning run must share with its backbone
    // checkpoint. Returns mismatched key names.
    std::vector<std::string> architecture_mismatches(const RunConfig& other) const;
};

// `key = value` per line; '#' comments; unknown keys and type errors throw
// ConfigError naming the key.
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

// Field-level validation plus mode-conditional required keys; fills the lr
// default. The returned config is resolved: canonical_config_text on it is
// stable.
RunConfig resolve_config(RunConfig cfg);

// Sorted `key = value` lines of the resolved config; doubles in %.17g.
std::string canonical_config_text(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);  // sha256 of canonical text

}  // namespace pointprompt
