#include "pointprompt/prompt.hpp"

#include "pointprompt/errors.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace pointprompt;

namespace {

EncoderConfig tiny_config() {
    EncoderConfig cfg;
    cfg.shared_dim = 16;
    cfg.text_heads = 4;
    cfg.text_blocks = 1;
    cfg.mlp_ratio = 2;
    cfg.max_seq = 24;
    return cfg;
}

std::vector<std::string> words() {
    return {"a", "point", "cloud", "model", "of", "chair", "table", "lamp"};
}

}  // namespace

TEST_CASE("init_context: random statistics, template copy, determinism") {
    Rng vr(3);
    Vocabulary vocab(words(), 512, vr);

    // Gaussian(0, 0.02^2): sample statistics over 32*512 = 16384 draws.
    Rng rng(5);
    Tensor e = init_context(32, 512, InitMode::kRandom, "", vocab, rng);
    const Scalar mean = e.values().mean();
    const Scalar std = std::sqrt((e.values() - mean).square().sum() / (e.size() - 1.0));
    CHECK(mean > -0.002);
    CHECK(mean < 0.002);
    CHECK(std > 0.018);
    CHECK(std < 0.022);

    // Template rows copy exactly.
    Rng rng2(5);
    Tensor t = init_context(6, 512, InitMode::kTemplate, "a point cloud model of a", vocab, rng2);
    std::vector<Index> ids = {vocab.lookup("a"), vocab.lookup("point"), vocab.lookup("cloud"),
                              vocab.lookup("model"), vocab.lookup("of"), vocab.lookup("a")};
    Tensor expect = vocab.embed_rows(ids);
    CHECK((t.values() == expect.values()).all());

    // Same seed twice: bit-identical.
    Rng ra(7), rb(7);
    Tensor ea = init_context(8, 512, InitMode::kRandom, "", vocab, ra);
    Tensor eb = init_context(8, 512, InitMode::kRandom, "", vocab, rb);
    CHECK((ea.values() == eb.values()).all());

    // Template longer than M rejected.
    Rng rc(9);
    CHECK_THROWS_AS(
        init_context(2, 512, InitMode::kTemplate, "a point cloud model of a", vocab, rc),
        ArgumentError);
}

TEST_CASE("compose_prompt places the class token per position") {
    Rng rng(11);
    EncoderConfig cfg = tiny_config();
    TextEncoder enc(cfg, words(), rng);
    std::vector<std::string> classes = {"chair", "table", "lamp"};

    auto check_layout = [&](Index m, InsertPosition pos, Index expected_slot) {
        Rng pr(13);
        PromptLearner prompt(m, pos, InitMode::kRandom, "", classes, enc.vocab(), pr);
        CHECK(prompt.class_slot() == expected_slot);
        TokenSequence seq = prompt.compose(1, enc.vocab());
        // Length M+1 content plus <start>/<end>.
        CHECK(seq.embeddings.rows() == m + 3);
        CHECK(seq.class_pos == expected_slot);
        CHECK(seq.end_pos == m + 2);
        // Row at the slot equals the frozen class embedding (offset by <start>).
        const Index d = cfg.shared_dim;
        ArrayX cls_row =
            seq.embeddings.values().segment((expected_slot + 1) * d, d);
        ArrayX expect =
            prompt.class_embeddings().tensor.values().segment(1 * d, d);
        CHECK((cls_row == expect).all());
    };

    check_layout(6, InsertPosition::kEnd, 6);
    check_layout(6, InsertPosition::kFront, 0);
    check_layout(32, InsertPosition::kMiddle, 16);
    check_layout(7, InsertPosition::kMiddle, 3);
}

TEST_CASE("class_text_features: consistency, freezing, shared context") {
    Rng rng(17);
    EncoderConfig cfg = tiny_config();
    TextEncoder enc(cfg, words(), rng);

    // S = 1 equals a single encode call.
    Rng pr(19);
    PromptLearner single(4, InsertPosition::kEnd, InitMode::kRandom, "", {"chair"}, enc.vocab(),
                         pr);
    Tensor matrix = single.class_text_features(enc);
    Tensor one = enc.encode(single.compose(0, enc.vocab()));
    CHECK(matrix.rows() == 1);
    CHECK((matrix.values() == one.values()).all());

    // Perturbing one shared context row moves every class feature.
    Rng pr2(23);
    std::vector<std::string> classes = {"chair", "table", "lamp"};
    PromptLearner prompt(4, InsertPosition::kMiddle, InitMode::kRandom, "", classes, enc.vocab(),
                         pr2);
    Tensor before = prompt.class_text_features(enc).detach();
    prompt.context().tensor.values_mut()[0] += 0.05;
    Tensor after = prompt.class_text_features(enc).detach();
    for (Index j = 0; j < 3; ++j) {
        const Index d = cfg.shared_dim;
        const Scalar delta =
            (after.values().segment(j * d, d) - before.values().segment(j * d, d))
                .abs()
                .maxCoeff();
        CHECK(delta > 0.0);
    }

    // Gradients reach the context and not the class embeddings.
    auto loss = [&] {
        Tensor f = prompt.class_text_features(enc);
        return sum(mul(f, f));
    };
    prompt.context().tensor.zero_grad();
    loss().backward();
    CHECK(prompt.context().tensor.has_grad());
    CHECK_FALSE(prompt.class_embeddings().tensor.has_grad());

    // Gradient against finite differences.
    Parameter& ctx = prompt.context();
    CHECK(testing::param_grad_check(loss, ctx) <= 1e-4);
}

TEST_CASE("nearest_words") {
    Rng rng(29);
    Vocabulary vocab(words(), 8, rng);

    // Exact match: distance 0.
    Tensor chair = vocab.embed_rows({vocab.lookup("chair")}).detach();
    auto hits = nearest_words(chair, vocab);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].first == "chair");
    CHECK(hits[0].second == doctest::Approx(0.0));

    // Distances are finite and non-negative for arbitrary vectors.
    Rng er(31);
    Tensor e = Tensor::randn({5, 8}, er, 0.0, 1.0);
    for (const auto& [word, dist] : nearest_words(e, vocab)) {
        CHECK(std::isfinite(dist));
        CHECK(dist >= 0.0);
        CHECK_FALSE(word.empty());
        // Specials never surface.
        CHECK(word.front() != '<');
    }

    // Two-candidate brute force on a crafted table.
    Rng tr(37);
    Vocabulary two({"east", "west"}, 4, tr);
    ArrayX table = two.embedding().tensor.values();
    table.setZero();
    const Index east = two.lookup("east");
    const Index west = two.lookup("west");
    table[west * 4 + 0] = 1.0;  // west at (1,0,0,0), east at origin
    two.embedding().tensor.values_mut() = table;
    ArrayX probe = ArrayX::Zero(4);
    probe[0] = 0.4;
    auto near = nearest_words(Tensor::from_values({1, 4}, std::move(probe)), two);
    CHECK(near[0].first == "east");
    CHECK(near[0].second == doctest::Approx(0.4));
}

TEST_CASE("template-initialized prompt reproduces the manual caption exactly") {
    Rng rng(41);
    EncoderConfig cfg = tiny_config();
    TextEncoder enc(cfg, words(), rng);
    std::vector<std::string> classes = {"chair", "table"};

    const std::string tmpl = "a point cloud model of a";
    Rng pr(43);
    PromptLearner prompt(6, InsertPosition::kEnd, InitMode::kTemplate, tmpl, classes,
                         enc.vocab(), pr);

    for (Index j = 0; j < 2; ++j) {
        Tensor from_prompt = enc.encode(prompt.compose(j, enc.vocab()));
        TokenSequence manual = enc.embed_text(tmpl + " " + classes[static_cast<std::size_t>(j)],
                                              /*pad_to=*/6 + 3);
        Tensor from_caption = enc.encode(manual);
        CHECK((from_prompt.values() - from_caption.values()).abs().maxCoeff() <= 1e-12);
    }
}
