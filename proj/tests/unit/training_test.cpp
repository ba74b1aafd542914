#include "pointprompt/training.hpp"

#include "pointprompt/errors.hpp"
#include "pointprompt/hash.hpp"
#include "pointprompt/sweep.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <map>
#include <string>

using namespace pointprompt;

namespace {

// Desk-scale config that trains in well under a second per run.
RunConfig tiny_config(const std::string& mode) {
    RunConfig cfg;
    cfg.mode = mode;
    cfg.shared_dim = 16;
    cfg.point_dim = 12;
    cfg.image_dim = 8;
    cfg.text_heads = 4;
    cfg.point_heads = 3;
    cfg.image_heads = 2;
    cfg.text_blocks = 1;
    cfg.point_blocks = 1;
    cfg.image_blocks = 1;
    cfg.mlp_ratio = 2;
    cfg.max_seq = 24;
    cfg.patches = 4;
    cfg.neighbors = 3;
    cfg.points = 24;
    cfg.image_size = 8;
    cfg.image_patch = 4;
    cfg.train_per_class = 3;
    cfg.test_per_class = 2;
    cfg.batch_size = 6;
    cfg.steps = 8;
    cfg.log_every = 4;
    if (mode == "tune") {
        cfg.adapter = "ffn";
        cfg.context_length = 4;
        cfg.loss_form = "categorical";
    }
    return cfg;
}

struct Setup {
    Dataset ds;
    RunConfig cfg;
    Model model;
};

Setup make_setup(const std::string& mode, const std::string& adapter = "ffn") {
    RunConfig cfg = tiny_config(mode);
    if (mode == "tune") cfg.adapter = adapter;
    Dataset ds = prepare_dataset(cfg);
    fill_classes(cfg, ds);
    cfg = resolve_config(cfg);
    Model model = Model::build(cfg);
    return Setup{std::move(ds), cfg, std::move(model)};
}

AdamWConfig opt_config(const RunConfig& cfg) {
    return AdamWConfig{cfg.lr,        cfg.adam_beta1,  cfg.adam_beta2, cfg.adam_eps,
                       cfg.weight_decay, cfg.grad_clip, cfg.steps,      cfg.warmup_fraction};
}

std::map<std::string, std::string> digest_all(Model& model) {
    std::map<std::string, std::string> out;
    model.visit([&](Parameter& p) { out[p.name] = parameter_digest(p); });
    return out;
}

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("optimizer: schedule shape and zero-gradient behavior") {
    AdamWConfig cfg;
    cfg.lr = 1.0;
    cfg.total_steps = 100;
    cfg.warmup_fraction = 0.1;
    cfg.weight_decay = 0.0;
    AdamW opt(cfg);

    // Linear warmup to the base rate, cosine decay towards zero.
    CHECK(opt.learning_rate_at(1) == doctest::Approx(0.1));
    CHECK(opt.learning_rate_at(10) == doctest::Approx(1.0));
    CHECK(opt.learning_rate_at(55) == doctest::Approx(0.5).epsilon(0.01));
    CHECK(opt.learning_rate_at(100) < 0.001);

    // Zero gradient + zero decay: parameters unchanged.
    Parameter p("p", Tensor::vector({1.0, -2.0, 3.0}));
    ArrayX before = p.tensor.values();
    std::vector<Parameter*> params = {&p};
    opt.step(params);
    CHECK((p.tensor.values() == before).all());

    // Frozen parameters rejected.
    p.set_trainable(false);
    CHECK_THROWS_AS(opt.step(params), ContractError);
}

TEST_CASE("optimizer: descends a quadratic") {
    AdamWConfig cfg;
    cfg.lr = 0.1;
    cfg.total_steps = 200;
    cfg.weight_decay = 0.0;
    cfg.grad_clip = 0.0;
    AdamW opt(cfg);
    Parameter p("p", Tensor::vector({5.0, -4.0}));
    std::vector<Parameter*> params = {&p};
    for (int i = 0; i < 200; ++i) {
        p.tensor.zero_grad();
        Tensor loss = dot(p.tensor, p.tensor);
        loss.backward();
        opt.step(params);
    }
    // The cosine schedule parks the iterate close to, not exactly at, zero.
    CHECK(p.tensor.values().abs().maxCoeff() < 0.1);
    CHECK(opt.step_count() == 200);
}

TEST_CASE("pretrain: freezes text/image, trains point, loss drops") {
    Setup s = make_setup("pretrain");
    auto before = digest_all(s.model);

    AdamW opt(opt_config(s.cfg));
    TrainLog log = run_pretrain(s.model, s.ds, opt, nullptr);
    CHECK(log.losses.size() == 8);

    auto after = digest_all(s.model);
    bool point_changed = false;
    for (const auto& [name, digest] : before) {
        if (name.rfind("text.", 0) == 0 || name.rfind("image.", 0) == 0) {
            CHECK_MESSAGE(after.at(name) == digest, name, " must stay frozen");
        } else if (after.at(name) != digest) {
            point_changed = true;
        }
    }
    CHECK(point_changed);

    // Unfreezing a text parameter violates the contract check.
    s.model.backbone->text->visit([](Parameter& p) {
        if (p.name == "text.projection") p.set_trainable(true);
    });
    AdamW opt2(opt_config(s.cfg));
    CHECK_THROWS_AS(run_pretrain(s.model, s.ds, opt2, nullptr), ConfigError);
}

TEST_CASE("pretrain: B=1 contrastive batch is a no-op with decay off") {
    Setup s = make_setup("pretrain");
    s.cfg.batch_size = 1;
    s.cfg.steps = 3;
    s.cfg.weight_decay = 0.0;
    Model model = Model::build(s.cfg);
    auto before = digest_all(model);
    AdamW opt(opt_config(s.cfg));
    TrainLog log = run_pretrain(model, s.ds, opt, nullptr);
    for (Scalar l : log.losses) CHECK(l == 0.0);
    CHECK(digest_all(model) == before);
}

TEST_CASE("tune: freezes the whole backbone, counts match closed form") {
    for (const std::string adapter : {"none", "ffn", "ptb"}) {
        Setup s = make_setup("tune", adapter);
        auto before = digest_all(s.model);

        AdamW opt(opt_config(s.cfg));
        PooledCache cache;
        TrainLog log = run_tune(s.model, s.ds, opt, nullptr, &cache);
        CHECK(log.losses.size() == static_cast<std::size_t>(s.cfg.steps));

        // Backbone and class embeddings bit-identical; context changed.
        auto after = digest_all(s.model);
        for (const auto& [name, digest] : before) {
            if (name.rfind("prompt.context", 0) == 0 || name.rfind("adapter.", 0) == 0) continue;
            CHECK_MESSAGE(after.at(name) == digest, name, " must stay frozen in tuning");
        }
        CHECK(after.at("prompt.context") != before.at("prompt.context"));

        // Trainable enumeration equals M*D + adapter closed form.
        const Index expected =
            s.cfg.context_length * s.cfg.shared_dim +
            adapter_param_count(parse_adapter_kind(adapter), s.cfg.point_dim, s.cfg.point_heads,
                                s.cfg.mlp_ratio);
        CHECK(s.model.count_learnable() == expected);

        // Per-group breakdown covers prompt (and adapter when present).
        std::map<std::string, Index> breakdown;
        (void)s.model.count_learnable(&breakdown);
        CHECK(breakdown.at("prompt") == s.cfg.context_length * s.cfg.shared_dim);
        if (adapter != "none") CHECK(breakdown.at("adapter") > 0);
    }
}

TEST_CASE("tune: zero learning rate leaves the context untouched") {
    Setup s = make_setup("tune");
    s.cfg.lr = 1e-30;  // effectively zero while staying a valid config
    Model model = Model::build(s.cfg);
    ArrayX before = model.prompt->context().tensor.values();
    AdamWConfig oc = opt_config(s.cfg);
    oc.lr = 0.0;
    oc.weight_decay = 0.0;
    AdamW opt(oc);
    run_tune(model, s.ds, opt, nullptr);
    CHECK((model.prompt->context().tensor.values() == before).all());
}

TEST_CASE("tune: trainable backbone parameter is rejected") {
    Setup s = make_setup("tune");
    s.model.backbone->point->visit([](Parameter& p) {
        if (p.name == "point.projection") p.set_trainable(true);
    });
    AdamW opt(opt_config(s.cfg));
    CHECK_THROWS_AS(run_tune(s.model, s.ds, opt, nullptr), ConfigError);
}

TEST_CASE("evaluate_predictions: oracle, chance level, accounting") {
    // Oracle predictions: OA = 1.
    std::vector<Index> labels(40);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<Index>(i % 4);
    EvalMetrics perfect = evaluate_predictions(labels, labels, 4);
    CHECK(perfect.overall_accuracy == 1.0);
    CHECK(perfect.mean_class_accuracy == 1.0);

    // Uniform-random predictions on S=8: OA within 0.125 +- 0.05.
    Rng rng(7);
    std::vector<Index> big_labels(1000), preds(1000);
    for (std::size_t i = 0; i < big_labels.size(); ++i) {
        big_labels[i] = static_cast<Index>(rng.uniform_index(8));
        preds[i] = static_cast<Index>(rng.uniform_index(8));
    }
    EvalMetrics chance = evaluate_predictions(big_labels, preds, 8);
    CHECK(chance.overall_accuracy > 0.125 - 0.05);
    CHECK(chance.overall_accuracy < 0.125 + 0.05);

    // Confusion totals equal the dataset size; row sums equal class counts.
    int total = 0;
    for (const auto& row : chance.confusion)
        for (int v : row) total += v;
    CHECK(total == 1000);

    CHECK_THROWS_AS(evaluate_predictions({9}, {0}, 4), DataError);
}

TEST_CASE("checkpoint: save -> load -> save byte-identical, metrics identical") {
    Setup s = make_setup("tune");
    AdamW opt(opt_config(s.cfg));
    run_tune(s.model, s.ds, opt, nullptr);
    EvalMetrics before = evaluate_model(s.model, s.ds);

    const std::string path1 = temp_path("pp_ckpt_a.bin");
    const std::string path2 = temp_path("pp_ckpt_b.bin");
    save_checkpoint(s.model, &opt, s.cfg.steps, path1);

    // Rebuild from the embedded config and reload.
    RunConfig loaded_cfg = read_checkpoint_config(path1);
    CHECK(config_hash(loaded_cfg) == config_hash(s.cfg));
    Model reloaded = Model::build(loaded_cfg);
    AdamW opt2(opt_config(loaded_cfg));
    const Index step = load_checkpoint_into(reloaded, &opt2, path1);
    CHECK(step == s.cfg.steps);
    CHECK(opt2.step_count() == opt.step_count());

    EvalMetrics after = evaluate_model(reloaded, s.ds);
    CHECK(after.overall_accuracy == before.overall_accuracy);
    CHECK(after.confusion == before.confusion);

    save_checkpoint(reloaded, &opt2, step, path2);
    // Byte-identical round trip.
    std::ifstream f1(path1, std::ios::binary), f2(path2, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
    CHECK(sha256_hex(b1) == sha256_hex(b2));

    std::remove(path1.c_str());
    std::remove(path2.c_str());
}

TEST_CASE("checkpoint: mismatched context length names prompt.context") {
    Setup s = make_setup("tune");
    const std::string path = temp_path("pp_ckpt_m.bin");
    save_checkpoint(s.model, nullptr, 0, path);

    RunConfig other = s.cfg;
    other.context_length = 6;  // different M
    Model wrong = Model::build(resolve_config(other));
    CHECK_THROWS_WITH_AS(load_checkpoint_into(wrong, nullptr, path),
                         doctest::Contains("prompt.context"), CheckpointError);
    std::remove(path.c_str());
}

TEST_CASE("checkpoint: corruption and truncation detected") {
    Setup s = make_setup("pretrain");
    const std::string path = temp_path("pp_ckpt_c.bin");
    save_checkpoint(s.model, nullptr, 0, path);

    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();

    // Flip one payload byte.
    std::string corrupted = bytes;
    corrupted[bytes.size() / 2] = static_cast<char>(corrupted[bytes.size() / 2] ^ 0x5a);
    std::ofstream(path, std::ios::binary).write(corrupted.data(),
                                                static_cast<std::streamsize>(corrupted.size()));
    CHECK_THROWS_AS(read_checkpoint_config(path), CheckpointError);

    // Truncate.
    std::ofstream(path, std::ios::binary)
        .write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 3));
    CHECK_THROWS_AS(read_checkpoint_config(path), CheckpointError);

    // Bad magic.
    std::string bad = bytes;
    bad[0] = 'X';
    std::ofstream(path, std::ios::binary).write(bad.data(),
                                                static_cast<std::streamsize>(bad.size()));
    CHECK_THROWS_AS(read_checkpoint_config(path), CheckpointError);
    std::remove(path.c_str());
}

TEST_CASE("determinism: identical config and seeds give identical runs") {
    auto run_once = [] {
        Setup s = make_setup("tune");
        AdamW opt(opt_config(s.cfg));
        TrainLog log = run_tune(s.model, s.ds, opt, nullptr);
        EvalMetrics m = evaluate_model(s.model, s.ds);
        return std::make_tuple(log.losses, m.overall_accuracy,
                               parameter_digest(s.model.prompt->context()));
    };
    auto a = run_once();
    auto b = run_once();
    CHECK(std::get<0>(a) == std::get<0>(b));
    CHECK(std::get<1>(a) == std::get<1>(b));
    CHECK(std::get<2>(a) == std::get<2>(b));
}

TEST_CASE("zero-shot evaluation runs on a pretrain model") {
    Setup s = make_setup("pretrain");
    EvalMetrics m = zero_shot_evaluate(s.model, s.ds, 0);
    CHECK(m.total == static_cast<Index>(s.ds.test_indices().size()));
    CHECK(m.overall_accuracy >= 0.0);
    CHECK(m.overall_accuracy <= 1.0);
}

TEST_CASE("sweep machinery emits a parseable consolidated table") {
    // Pretrain a tiny backbone to disk.
    Setup pre = make_setup("pretrain");
    AdamW opt(opt_config(pre.cfg));
    run_pretrain(pre.model, pre.ds, opt, nullptr);
    const std::string ckpt = temp_path("pp_sweep_backbone.bin");
    save_checkpoint(pre.model, nullptr, pre.cfg.steps, ckpt);

    RunConfig base = tiny_config("tune");
    base.steps = 2;

    std::vector<SweepCell> cells = run_sweep(base, ckpt, SweepAxis::kInsertPosition, nullptr);
    REQUIRE(cells.size() == 3);
    for (const auto& cell : cells) {
        CHECK_MESSAGE(cell.ok, cell.value, ": ", cell.error);
        CHECK(cell.learnable > 0);
    }

    // Monotone parameter counts along the context-length axis come straight
    // from M * D; check the table arithmetic on the first two cells only to
    // keep the test quick.
    const std::string json_text = sweep_table_json(SweepAxis::kInsertPosition, cells);
    auto parsed = nlohmann::json::parse(json_text);
    REQUIRE(parsed.is_array());
    CHECK(parsed.size() == 3);
    CHECK(parsed[0]["axis"] == "insert_position");
    CHECK(parsed[0]["ok"].get<bool>());
    CHECK(parsed[0].contains("overall_accuracy"));

    std::remove(ckpt.c_str());
}

TEST_CASE("few-shot sweep uses exactly k*S training samples") {
    RunConfig cfg = tiny_config("tune");
    cfg.shots = 2;
    Dataset ds = prepare_dataset(cfg);
    CHECK(ds.train_indices().size() == static_cast<std::size_t>(2 * ds.class_count()));
}
