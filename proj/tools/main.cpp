// Command-line surface: pretrain, tune, eval, sweep, interpret.
//
// Exit codes: 0 success, 2 configuration/validation error, 3 runtime numeric
// error, 1 anything else.

#include "pointprompt/checkpoint.hpp"
#include "pointprompt/hash.hpp"
#include "pointprompt/prompt.hpp"
#include "pointprompt/sweep.hpp"
#include "pointprompt/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

namespace fs = std::filesystem;
using namespace pointprompt;

namespace {

struct GlobalOptions {
    std::string config_path;
    std::string out_dir = "runs";
    std::string checkpoint;
    std::string data_root;
    bool synthetic = false;
    bool dry_run = false;
    long long seed = -1;  // overrides both seed keys when >= 0
};

void apply_overrides(RunConfig& cfg, const GlobalOptions& opt) {
    if (opt.seed >= 0) {
        cfg.seed_init = static_cast<std::uint64_t>(opt.seed);
        cfg.seed_data = static_cast<std::uint64_t>(opt.seed);
    }
    if (!opt.data_root.empty()) {
        cfg.dataset = "off";
        cfg.data_root = opt.data_root;
    }
    if (opt.synthetic) {
        cfg.dataset = "synthetic";
        cfg.data_root.clear();
    }
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

// Deterministic summary (no wall clock): the determinism criterion compares
// these files byte for byte.
void write_final_metrics(const std::string& path, const nlohmann::json& payload) {
    std::ofstream out(path);
    out << payload.dump(2) << "\n";
}

nlohmann::json eval_json(const EvalMetrics& m, const std::vector<std::string>& class_names) {
    nlohmann::json per_class = nlohmann::json::object();
    for (std::size_t c = 0; c < class_names.size(); ++c) {
        per_class[class_names[c]] = m.per_class_accuracy[c];
    }
    return {
        {"overall_accuracy", m.overall_accuracy},
        {"mean_class_accuracy", m.mean_class_accuracy},
        {"per_class_accuracy", per_class},
        {"confusion", m.confusion},
        {"total", m.total},
    };
}

void print_eval(const EvalMetrics& m, const std::vector<std::string>& class_names) {
    std::cout << std::fixed << std::setprecision(4);
    std::cout << "overall accuracy:    " << m.overall_accuracy << "\n";
    std::cout << "mean class accuracy: " << m.mean_class_accuracy << "\n";
    std::cout << "per-class accuracy:\n";
    for (std::size_t c = 0; c < class_names.size(); ++c) {
        std::cout << "  " << std::left << std::setw(14) << class_names[c] << std::right
                  << m.per_class_accuracy[c] << "\n";
    }
}

AdamWConfig optimizer_config(const RunConfig& cfg) {
    return AdamWConfig{cfg.lr,        cfg.adam_beta1,      cfg.adam_beta2, cfg.adam_eps,
                       cfg.weight_decay, cfg.grad_clip, cfg.steps,      cfg.warmup_fraction};
}

void print_learnable_breakdown(Model& model) {
    std::map<std::string, Index> breakdown;
    const Index total = model.count_learnable(&breakdown);
    std::cout << "learnable parameters: " << total << "\n";
    for (const auto& [group, count] : breakdown) {
        std::cout << "  " << std::left << std::setw(10) << group << std::right << count << "\n";
    }
}

int cmd_pretrain(const GlobalOptions& opt) {
    RunConfig cfg = load_config(opt.config_path);
    apply_overrides(cfg, opt);
    if (cfg.mode.empty()) cfg.mode = "pretrain";
    if (cfg.mode != "pretrain") throw ConfigError("pretrain: config mode must be 'pretrain'");

    Dataset ds = prepare_dataset(cfg);
    fill_classes(cfg, ds);
    cfg = resolve_config(cfg);
    Model model = Model::build(cfg);

    if (opt.dry_run) {
        std::cout << "config ok: " << config_hash(cfg) << "\n";
        print_learnable_breakdown(model);
        return 0;
    }

    fs::create_directories(opt.out_dir);
    const std::string hash = config_hash(cfg);
    write_text(opt.out_dir + "/config_resolved.txt", canonical_config_text(cfg));
    write_manifest(ds, opt.out_dir + "/manifest.jsonl");
    MetricsWriter metrics(opt.out_dir + "/metrics.jsonl", "pretrain-" + hash.substr(0, 12),
                          hash, cfg.seed_init, cfg.seed_data);

    AdamW optimizer(optimizer_config(cfg));
    TrainLog log = run_pretrain(model, ds, optimizer, &metrics);

    const std::string ckpt = opt.out_dir + "/backbone.ckpt";
    save_checkpoint(model, &optimizer, cfg.steps, ckpt);
    write_final_metrics(opt.out_dir + "/metrics_final.json",
                        {{"first_loss", log.losses.front()},
                         {"final_loss", log.losses.back()},
                         {"steps", cfg.steps},
                         {"config_hash", hash}});
    std::cout << "pretrain done: loss " << log.losses.front() << " -> " << log.losses.back()
              << "\ncheckpoint: " << ckpt << "\n";
    return 0;
}

int cmd_tune(const GlobalOptions& opt) {
    RunConfig cfg = load_config(opt.config_path);
    apply_overrides(cfg, opt);
    if (cfg.mode.empty()) cfg.mode = "tune";
    if (cfg.mode != "tune") throw ConfigError("tune: config mode must be 'tune'");
    if (opt.checkpoint.empty()) throw ConfigError("tune: --checkpoint (backbone) is required");

    const RunConfig backbone_cfg = read_checkpoint_config(opt.checkpoint);
    Dataset ds = prepare_dataset(cfg);
    fill_classes(cfg, ds);
    cfg = resolve_config(cfg);
    {
        const auto mismatches = cfg.architecture_mismatches(backbone_cfg);
        if (!mismatches.empty()) {
            std::string keys;
            for (const auto& k : mismatches) keys += (keys.empty() ? "" : ", ") + k;
            throw ConfigError("tune: architecture keys differ from backbone checkpoint: " +
                              keys);
        }
    }

    Model model = Model::build(cfg);
    load_backbone_into(model, opt.checkpoint);

    if (opt.dry_run) {
        std::cout << "config ok: " << config_hash(cfg) << "\n";
        print_learnable_breakdown(model);
        return 0;
    }

    fs::create_directories(opt.out_dir);
    const std::string hash = config_hash(cfg);
    write_text(opt.out_dir + "/config_resolved.txt", canonical_config_text(cfg));
    write_manifest(ds, opt.out_dir + "/manifest.jsonl");
    MetricsWriter metrics(opt.out_dir + "/metrics.jsonl", "tune-" + hash.substr(0, 12), hash,
                          cfg.seed_init, cfg.seed_data);

    AdamW optimizer(optimizer_config(cfg));
    PooledCache cache;
    TrainLog log = run_tune(model, ds, optimizer, &metrics, &cache);
    EvalMetrics eval = evaluate_model(model, ds, &cache);

    const std::string ckpt = opt.out_dir + "/tuned.ckpt";
    save_checkpoint(model, &optimizer, cfg.steps, ckpt);
    nlohmann::json final_payload = eval_json(eval, model.class_names());
    final_payload["final_loss"] = log.losses.back();
    final_payload["learnable_parameters"] = model.count_learnable();
    final_payload["config_hash"] = hash;
    write_final_metrics(opt.out_dir + "/metrics_final.json", final_payload);
    metrics.emit(cfg.steps, {{"overall_accuracy", eval.overall_accuracy},
                             {"mean_class_accuracy", eval.mean_class_accuracy},
                             {"learnable", static_cast<Scalar>(model.count_learnable())}});

    print_learnable_breakdown(model);
    print_eval(eval, model.class_names());
    std::cout << "checkpoint: " << ckpt << "\n";
    return 0;
}

int cmd_eval(const GlobalOptions& opt, std::size_t template_id) {
    if (opt.checkpoint.empty()) throw ConfigError("eval: --checkpoint is required");
    RunConfig cfg = read_checkpoint_config(opt.checkpoint);
    const std::string stored_classes = cfg.classes;
    apply_overrides(cfg, opt);
    cfg.classes = stored_classes;

    Dataset ds = prepare_dataset(cfg);
    // Class-set mismatch between checkpoint and data is a config error.
    fill_classes(cfg, ds);
    cfg = resolve_config(cfg);

    Model model = Model::build(cfg);
    load_checkpoint_into(model, nullptr, opt.checkpoint);

    EvalMetrics m;
    if (model.prompt) {
        m = evaluate_model(model, ds);
    } else {
        std::cout << "(backbone checkpoint: zero-shot evaluation with template " << template_id
                  << ")\n";
        m = zero_shot_evaluate(model, ds, template_id);
    }
    print_eval(m, model.class_names());

    if (!opt.out_dir.empty()) {
        fs::create_directories(opt.out_dir);
        const std::string hash = config_hash(cfg);
        MetricsWriter metrics(opt.out_dir + "/metrics.jsonl", "eval-" + hash.substr(0, 12),
                              hash, cfg.seed_init, cfg.seed_data);
        metrics.emit(0, {{"overall_accuracy", m.overall_accuracy},
                         {"mean_class_accuracy", m.mean_class_accuracy}});
        write_final_metrics(opt.out_dir + "/metrics_final.json",
                            eval_json(m, model.class_names()));
    }
    return 0;
}

int cmd_sweep(const GlobalOptions& opt, const std::string& axis_name) {
    RunConfig cfg = load_config(opt.config_path);
    apply_overrides(cfg, opt);
    if (cfg.mode.empty()) cfg.mode = "tune";
    if (cfg.mode != "tune") throw ConfigError("sweep: config mode must be 'tune'");
    if (opt.checkpoint.empty()) throw ConfigError("sweep: --checkpoint (backbone) is required");
    const SweepAxis axis = parse_sweep_axis(axis_name);

    fs::create_directories(opt.out_dir);
    MetricsWriter metrics(opt.out_dir + "/metrics.jsonl", "sweep-" + axis_name, "", cfg.seed_init,
                          cfg.seed_data);
    std::vector<SweepCell> cells = run_sweep(cfg, opt.checkpoint, axis, &metrics);

    const std::string table = sweep_table_json(axis, cells);
    write_text(opt.out_dir + "/sweep_" + axis_name + ".json", table);
    std::cout << sweep_table_text(axis, cells);

    for (const auto& cell : cells) {
        if (!cell.ok) return 1;
    }
    return 0;
}

int cmd_interpret(const GlobalOptions& opt) {
    if (opt.checkpoint.empty()) throw ConfigError("interpret: --checkpoint is required");
    RunConfig cfg = read_checkpoint_config(opt.checkpoint);
    if (cfg.mode != "tune") {
        throw ConfigError("interpret: checkpoint has no prompt state (mode=" + cfg.mode + ")");
    }
    Model model = Model::build(cfg);
    load_checkpoint_into(model, nullptr, opt.checkpoint);

    const Vocabulary& vocab = model.backbone->text->vocab();
    auto rows = nearest_words(model.prompt->context().tensor, vocab);
    std::cout << std::left << std::setw(6) << "No." << std::setw(16) << "nearest word"
              << "distance\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::cout << std::left << std::setw(6) << (i + 1) << std::setw(16) << rows[i].first
                  << std::fixed << std::setprecision(4) << rows[i].second << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Prompt tuning for point-cloud recognition over a frozen tri-modal backbone"};
    app.require_subcommand(1);

    GlobalOptions opt;
    std::string axis;
    std::size_t template_id = 0;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        auto* config_opt = cmd->add_option("--config", opt.config_path, "run configuration file");
        if (needs_config) config_opt->required()->check(CLI::ExistingFile);
        cmd->add_option("--out-dir", opt.out_dir, "output directory");
        cmd->add_option("--seed", opt.seed, "override both seed_init and seed_data");
        cmd->add_option("--data-root", opt.data_root, "OFF dataset root directory");
        cmd->add_flag("--synthetic", opt.synthetic, "use the procedural shape dataset");
        cmd->add_flag("--dry-run", opt.dry_run,
                      "validate config, print the learnable breakdown, do not train");
    };

    CLI::App* pretrain = app.add_subcommand("pretrain", "tri-modal contrastive pre-training");
    add_common(pretrain, true);

    CLI::App* tune = app.add_subcommand("tune", "prompt + adapter tuning on a frozen backbone");
    add_common(tune, true);
    tune->add_option("--checkpoint", opt.checkpoint, "backbone checkpoint")
        ->required()
        ->check(CLI::ExistingFile);

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    add_common(eval, false);
    eval->add_option("--checkpoint", opt.checkpoint, "model checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--template", template_id, "caption template id for zero-shot eval");

    CLI::App* sweep = app.add_subcommand("sweep", "run an ablation axis");
    add_common(sweep, true);
    sweep->add_option("--checkpoint", opt.checkpoint, "backbone checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    sweep->add_option("--axis", axis, "context_length|data_fraction|few_shot|insert_position|init_mode")
        ->required();

    CLI::App* interpret = app.add_subcommand("interpret", "nearest words for learned contexts");
    interpret->add_option("--checkpoint", opt.checkpoint, "tuned checkpoint")
        ->required()
        ->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(pretrain)) return cmd_pretrain(opt);
        if (app.got_subcommand(tune)) return cmd_tune(opt);
        if (app.got_subcommand(eval)) return cmd_eval(opt, template_id);
        if (app.got_subcommand(sweep)) return cmd_sweep(opt, axis);
        if (app.got_subcommand(interpret)) return cmd_interpret(opt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ArgumentError& e) {
        std::cerr << "argument error: " << e.what() << "\n";
        return 2;
    } catch (const CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
