#include "pointprompt/config.hpp"

#include "pointprompt/errors.hpp"

#include <doctest.h>

using namespace pointprompt;

namespace {

const char* kTuneConfig = R"(
# minimal tune config
mode = tune
adapter = ffn
context_length = 8
loss_form = categorical
batch_size = 4
steps = 10
classes = a,b
)";

}  // namespace

TEST_CASE("config parses, resolves, and round-trips canonically") {
    RunConfig cfg = resolve_config(parse_config_text(kTuneConfig));
    CHECK(cfg.mode == "tune");
    CHECK(cfg.adapter == "ffn");
    CHECK(cfg.context_length == 8);
    CHECK(cfg.lr == doctest::Approx(5e-4));  // tune default
    CHECK(cfg.insert_position == "middle");  // paper default
    CHECK(cfg.init_mode == "random");

    // Canonical text re-parses to the same config and the same hash.
    const std::string canon = canonical_config_text(cfg);
    RunConfig reparsed = resolve_config(parse_config_text(canon));
    CHECK(canonical_config_text(reparsed) == canon);
    CHECK(config_hash(reparsed) == config_hash(cfg));

    // Pretrain picks its own lr default.
    RunConfig pre = resolve_config(parse_config_text("mode = pretrain\nbatch_size = 2\nsteps = 5"));
    CHECK(pre.lr == doctest::Approx(1e-3));
}

TEST_CASE("config rejects unknown keys, bad types, missing requirements") {
    CHECK_THROWS_WITH_AS(parse_config_text("bogus_key = 1"), doctest::Contains("bogus_key"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("steps = abc"), doctest::Contains("steps"),
                         ConfigError);
    CHECK_THROWS_AS(parse_config_text("no equals sign here"), ConfigError);

    // Objective-defining keys have no silent defaults in tune mode.
    CHECK_THROWS_WITH_AS(
        resolve_config(parse_config_text("mode = tune\nbatch_size = 2\nsteps = 5\n"
                                         "context_length = 4\nloss_form = categorical")),
        doctest::Contains("adapter"), ConfigError);
    CHECK_THROWS_WITH_AS(
        resolve_config(parse_config_text("mode = tune\nbatch_size = 2\nsteps = 5\n"
                                         "adapter = none\nloss_form = categorical")),
        doctest::Contains("context_length"), ConfigError);
    CHECK_THROWS_WITH_AS(
        resolve_config(parse_config_text("mode = tune\nbatch_size = 2\nsteps = 5\n"
                                         "adapter = none\ncontext_length = 4")),
        doctest::Contains("loss_form"), ConfigError);

    // Mode is always required.
    CHECK_THROWS_WITH_AS(resolve_config(parse_config_text("batch_size = 2\nsteps = 5")),
                         doctest::Contains("mode"), ConfigError);

    // Field-level validation.
    CHECK_THROWS_AS(
        resolve_config(parse_config_text("mode = pretrain\nbatch_size = 0\nsteps = 5")),
        ConfigError);
    CHECK_THROWS_AS(resolve_config(parse_config_text(
                        "mode = pretrain\nbatch_size = 2\nsteps = 5\nshared_dim = 30\n"
                        "text_heads = 7")),
                    ConfigError);
}

TEST_CASE("architecture mismatch detection") {
    RunConfig a = resolve_config(parse_config_text(kTuneConfig));
    RunConfig b = a;
    CHECK(a.architecture_mismatches(b).empty());
    b.point_dim = 192;
    b.point_heads = 6;
    auto bad = a.architecture_mismatches(b);
    REQUIRE(bad.size() == 1);
    CHECK(bad[0] == "point_dim");
}
