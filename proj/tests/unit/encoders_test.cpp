#include "pointprompt/encoders.hpp"

#include "pointprompt/errors.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace pointprompt;

namespace {

// Small everything: tests exercise structure, not capacity.
EncoderConfig tiny_config() {
    EncoderConfig cfg;
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
    cfg.max_seq = 16;
    cfg.patches = 4;
    cfg.neighbors = 3;
    cfg.image_size = 8;
    cfg.image_patch = 4;
    return cfg;
}

std::vector<std::string> tiny_vocab_words() {
    return {"a", "point", "cloud", "of", "chair", "table", "model"};
}

PointCloud random_cloud(Index n, std::uint64_t seed) {
    Rng rng(seed);
    PointCloud pc;
    pc.points.resize(n, 3);
    for (Index i = 0; i < n; ++i)
        for (Index c = 0; c < 3; ++c) pc.points(i, c) = rng.gaussian();
    normalize_cloud(pc);
    return pc;
}

}  // namespace

TEST_CASE("tokenize contract") {
    Rng rng(1);
    Vocabulary vocab(tiny_vocab_words(), 8, rng);

    // Empty input: <start> <end> <pad> ...
    TokenIds empty = tokenize("", vocab, 6);
    CHECK(empty.ids == std::vector<Index>{kStartToken, kEndToken, kPadToken, kPadToken,
                                          kPadToken, kPadToken});
    CHECK(empty.end_pos == 1);

    // Case folding.
    TokenIds upper = tokenize("Chair", vocab, 6);
    TokenIds lower = tokenize("chair", vocab, 6);
    CHECK(upper.ids == lower.ids);

    // Known words land in vocabulary, unknown map to <unk>.
    TokenIds known = tokenize("a point cloud of a chair", vocab, 10);
    CHECK(known.ids[0] == kStartToken);
    int content = 0;
    for (std::size_t i = 1; i < known.ids.size() && known.ids[i] != kEndToken; ++i) {
        CHECK(known.ids[i] != kUnkToken);
        ++content;
    }
    CHECK(content == 6);

    TokenIds unk = tokenize("zebra", vocab, 6);
    CHECK(unk.ids[1] == kUnkToken);

    // Punctuation strips; truncation keeps start/end.
    TokenIds punct = tokenize("a, point; cloud!", vocab, 6);
    CHECK(punct.ids[1] == vocab.lookup("a"));
    TokenIds truncated = tokenize("a point cloud of a chair", vocab, 4);
    CHECK(truncated.ids.size() == 4);
    CHECK(truncated.ids[3] == kEndToken);
}

TEST_CASE("text_encode: mask invariance, determinism, position sensitivity") {
    Rng rng(7);
    TextEncoder enc(tiny_config(), tiny_vocab_words(), rng);

    // Two sequences differing only beyond <end> give identical outputs.
    TokenSequence a = enc.embed_text("a chair", 10);
    TokenSequence b = enc.embed_text("a chair", 10);
    // Overwrite b's pad rows with junk.
    ArrayX vals = b.embeddings.values();
    const Index d = enc.dim();
    for (Index r = a.end_pos + 1; r < 10; ++r)
        for (Index c = 0; c < d; ++c) vals[r * d + c] = 42.0 + static_cast<Scalar>(r + c);
    TokenSequence b_junk;
    b_junk.embeddings = Tensor::from_values({10, d}, std::move(vals));
    b_junk.mask = b.mask;
    b_junk.end_pos = b.end_pos;
    Tensor fa = enc.encode(a);
    Tensor fb = enc.encode(b_junk);
    CHECK((fa.values() == fb.values()).all());

    // Determinism.
    Tensor fa2 = enc.encode(enc.embed_text("a chair", 10));
    CHECK((fa.values() == fa2.values()).all());

    // Swapping two content tokens moves the output (position embeddings).
    Tensor fc = enc.encode(enc.embed_text("chair a", 10));
    CHECK((fa.values() - fc.values()).abs().maxCoeff() > 1e-6);

    // Length above capacity rejected.
    TokenSequence too_long;
    too_long.embeddings = Tensor::zeros({32, d});
    too_long.mask.assign(32, true);
    too_long.end_pos = 31;
    CHECK_THROWS_AS(enc.encode(too_long), ShapeError);
}

TEST_CASE("fps picks spread points deterministically") {
    // G = N returns everything.
    PointCloud pc = random_cloud(6, 3);
    auto all = fps(pc.points, 6);
    CHECK(all.size() == 6);
    std::vector<Index> sorted = all;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<Index>{0, 1, 2, 3, 4, 5});

    // G = 1 is the seed.
    CHECK(fps(pc.points, 1) == std::vector<Index>{0});

    // Square corners: second pick is the diagonal.
    MatrixR square(4, 3);
    square << 0, 0, 0,
              1, 0, 0,
              0, 1, 0,
              1, 1, 0;
    auto picks = fps(square, 2, 0);
    CHECK(picks[0] == 0);
    CHECK(picks[1] == 3);

    // Brute-force check of the min-distance rule on a random cloud.
    PointCloud rc = random_cloud(20, 5);
    auto chosen = fps(rc.points, 5);
    for (std::size_t step = 1; step < chosen.size(); ++step) {
        Scalar best_dist = -1.0;
        Index best_idx = -1;
        for (Index i = 0; i < rc.points.rows(); ++i) {
            Scalar min_d = 1e300;
            for (std::size_t s = 0; s < step; ++s)
                min_d = std::min(min_d, (rc.points.row(i) - rc.points.row(chosen[s])).norm());
            if (min_d > best_dist) {
                best_dist = min_d;
                best_idx = i;
            }
        }
        CHECK(chosen[step] == best_idx);
    }

    CHECK_THROWS_AS(fps(square, 5), ArgumentError);
}

TEST_CASE("knn_group gathers and re-centers") {
    // k = 1: each patch is the center, re-centered to zero.
    PointCloud pc = random_cloud(8, 11);
    auto patches = knn_group(pc.points, {0, 3, 7}, 1);
    for (const auto& p : patches) CHECK(p.norm() == doctest::Approx(0.0));

    // Coincident points: all-zero patches.
    MatrixR same = MatrixR::Zero(5, 3);
    same.rowwise() = Eigen::RowVector3d(0.3, -0.2, 0.9);
    auto zero_patches = knn_group(same, {2}, 4);
    CHECK(zero_patches[0].norm() == doctest::Approx(0.0));

    // Five collinear points, center in the middle, k = 3: middle + both
    // adjacent, sorted by (distance, index).
    MatrixR line(5, 3);
    line << 0, 0, 0,
            1, 0, 0,
            2, 0, 0,
            3, 0, 0,
            4, 0, 0;
    auto mid = knn_group(line, {2}, 3);
    CHECK(mid[0](0, 0) == 0.0);   // the center itself
    CHECK(mid[0](1, 0) == -1.0);  // index 1 (tie broken to lower index)
    CHECK(mid[0](2, 0) == 1.0);   // index 3

    CHECK_THROWS_AS(knn_group(line, {0}, 6), ArgumentError);
}

TEST_CASE("point_encode: determinism, permutation invariance, shape") {
    Rng rng(13);
    EncoderConfig cfg = tiny_config();
    PointEncoder enc(cfg, rng);

    PointCloud pc = random_cloud(24, 17);
    Tensor f1 = enc.encode(pc);
    Tensor f2 = enc.encode(pc);
    CHECK((f1.values() == f2.values()).all());
    CHECK(f1.size() == cfg.shared_dim);

    // Permuting the input point order changes nothing (canonical sort).
    PointCloud shuffled = pc;
    Rng perm(23);
    std::vector<Index> order(static_cast<std::size_t>(pc.count()));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Index>(i);
    perm.shuffle(order);
    for (Index i = 0; i < pc.count(); ++i)
        shuffled.points.row(i) = pc.points.row(order[static_cast<std::size_t>(i)]);
    Tensor f3 = enc.encode(shuffled);
    CHECK((f1.values() == f3.values()).all());

    // Too-small clouds rejected.
    PointCloud tiny = random_cloud(2, 19);
    CHECK_THROWS_AS(enc.encode(tiny), ArgumentError);
}

TEST_CASE("image_encode: shape, determinism, sensitivity") {
    Rng rng(29);
    EncoderConfig cfg = tiny_config();
    ImageEncoder enc(cfg, rng);

    MatrixR zero = MatrixR::Zero(cfg.image_size, cfg.image_size);
    Tensor f0 = enc.encode(zero);
    CHECK(f0.size() == cfg.shared_dim);
    CHECK(f0.values().isFinite().all());

    Rng ir(31);
    MatrixR img(cfg.image_size, cfg.image_size);
    for (Index r = 0; r < img.rows(); ++r)
        for (Index c = 0; c < img.cols(); ++c) img(r, c) = ir.uniform();
    Tensor fa = enc.encode(img);
    Tensor fb = enc.encode(img);
    CHECK((fa.values() == fb.values()).all());

    MatrixR img2 = img;
    img2(3, 5) += 0.25;
    Tensor fc = enc.encode(img2);
    CHECK((fa.values() - fc.values()).abs().maxCoeff() > 0.0);

    CHECK_THROWS_AS(enc.encode(MatrixR::Zero(4, 4)), ShapeError);
}

TEST_CASE("set_frozen flips every parameter") {
    Rng rng(37);
    EncoderStack stack(tiny_config(), tiny_vocab_words(), rng);

    // Stacks start frozen.
    int params = 0, trainable = 0;
    stack.visit([&](Parameter& p) {
        ++params;
        if (p.trainable) ++trainable;
    });
    CHECK(params > 0);
    CHECK(trainable == 0);

    set_frozen(stack, false);
    stack.visit([&](Parameter& p) { CHECK(p.trainable); });
    set_frozen(stack, true);
    stack.visit([&](Parameter& p) { CHECK_FALSE(p.trainable); });
}

TEST_CASE("encoder forwards pass grad_check against their own weights") {
    Rng rng(41);
    EncoderConfig cfg = tiny_config();
    EncoderStack stack(cfg, tiny_vocab_words(), rng);
    set_frozen(stack, false);

    PointCloud pc = random_cloud(16, 43);
    MatrixR img(cfg.image_size, cfg.image_size);
    Rng ir(47);
    for (Index r = 0; r < img.rows(); ++r)
        for (Index c = 0; c < img.cols(); ++c) img(r, c) = ir.uniform();

    // Reduce each encoder output to a scalar and differentiate w.r.t. a
    // chosen weight tensor.
    auto check_param = [&](Parameter& p, const std::function<Tensor()>& forward) {
        auto scalar_forward = [&] {
            Tensor out = forward();
            return sum(mul(out, out));
        };
        const Scalar err = testing::param_grad_check(scalar_forward, p);
        CHECK_MESSAGE(err <= 1e-4, p.name, " rel err ", err);
    };

    // A sample of weights across all three encoders, including embeddings.
    std::vector<std::string> targets = {
        "text.token_embedding", "text.block0.attn.qkv.w", "text.block0.mlp_in.w",
        "text.projection",      "image.patch_embed.w",    "image.block0.attn.out.w",
        "point.patch_embed.in.w", "point.class_token",    "point.block0.attn.qkv.w",
        "point.projection",     "text.final_ln.gamma",    "point.center_embed.w",
    };
    stack.visit([&](Parameter& p) {
        if (std::find(targets.begin(), targets.end(), p.name) == targets.end()) return;
        if (p.name.rfind("text.", 0) == 0) {
            check_param(p, [&] { return stack.text->encode(stack.text->embed_text("a chair", 8)); });
        } else if (p.name.rfind("image.", 0) == 0) {
            check_param(p, [&] { return stack.image->encode(img); });
        } else {
            check_param(p, [&] { return stack.point->encode(pc); });
        }
    });
}
