#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "argbd/dataset.hpp"
#include "argbd/train.hpp"
#include "support/oracles.hpp"

using namespace argbd;

namespace {

std::string temp_file(const char* tag) {
    static int counter = 0;
    auto dir = std::filesystem::temp_directory_path() / "argbd_tests";
    std::filesystem::create_directories(dir);
    return (dir / (std::string(tag) + std::to_string(counter++) + ".bin")).string();
}

} // namespace

TEST_CASE("adam first step moves by the learning rate against the gradient sign") {
    TrainConfig cfg;
    cfg.learning_rate = 0.01;
    float param = 1.0f, grad = 0.37f;
    std::vector<ParamRef<float>> refs{{"p", Shape{1, 1, 1, 1}, &param, &grad, 1}};
    AdamState<float> st;
    st.init_like(refs);
    adam_step(refs, st, cfg);
    CHECK(param == Catch::Approx(1.0 - 0.01).margin(1e-6));

    param = 1.0f;
    grad = -0.0004f;
    AdamState<float> st2;
    st2.init_like(refs);
    adam_step(refs, st2, cfg);
    CHECK(param == Catch::Approx(1.0 + 0.01).margin(1e-4));
}

TEST_CASE("adam leaves parameters unchanged on zero gradients") {
    TrainConfig cfg;
    float param = 2.5f, grad = 0.0f;
    std::vector<ParamRef<float>> refs{{"p", Shape{1, 1, 1, 1}, &param, &grad, 1}};
    AdamState<float> st;
    st.init_like(refs);
    for (int i = 0; i < 10; ++i) adam_step(refs, st, cfg);
    CHECK(param == 2.5f);
}

TEST_CASE("adam drives a quadratic toward its minimum") {
    // independent simulation of the update rule on f(p) = p^2
    auto simulate = [](int steps, double lr) {
        double p = 1.0, m = 0.0, v = 0.0;
        for (int t = 1; t <= steps; ++t) {
            const double g = 2.0 * p;
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            const double mh = m / (1.0 - std::pow(0.9, t));
            const double vh = v / (1.0 - std::pow(0.999, t));
            p -= lr * mh / (std::sqrt(vh) + 1e-8);
        }
        return p;
    };
    const double expected = simulate(100, 0.1);
    REQUIRE(std::abs(expected) < 0.1); // the oracle itself lands near 0

    TrainConfig cfg;
    cfg.learning_rate = 0.1;
    double param = 1.0, grad = 0.0;
    std::vector<ParamRef<double>> refs{{"p", Shape{1, 1, 1, 1}, &param, &grad, 1}};
    AdamState<double> st;
    st.init_like(refs);
    for (int t = 0; t < 100; ++t) {
        grad = 2.0 * param;
        adam_step(refs, st, cfg);
    }
    CHECK(std::abs(param) < 0.1);
    CHECK(param == Catch::Approx(expected).margin(1e-9));
}

TEST_CASE("adam rejects mismatched state") {
    TrainConfig cfg;
    float param = 0.0f, grad = 0.0f;
    std::vector<ParamRef<float>> refs{{"p", Shape{1, 1, 1, 1}, &param, &grad, 1}};
    AdamState<float> st; // never initialized
    CHECK_THROWS_AS(adam_step(refs, st, cfg), ShapeError);
}

TEST_CASE("checkpoint save/load round-trips bitwise") {
    CompletionNet<float> net(99);
    Checkpoint ckpt = checkpoint_from_network<float>(net, NetworkKind::completion, 0, 17,
                                                     {0.5f, 0.25f, 0.125f});
    const std::string path1 = temp_file("ckpt");
    const std::string path2 = temp_file("ckpt");
    save_checkpoint(path1, ckpt);
    Checkpoint loaded = load_checkpoint(path1);
    save_checkpoint(path2, loaded);

    std::ifstream a(path1, std::ios::binary), b(path2, std::ios::binary);
    std::vector<char> ba((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::vector<char> bb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(ba == bb);
    CHECK(loaded.epoch == 17);
    REQUIRE(loaded.loss_history.size() == 3);
    CHECK(loaded.loss_history[1] == 0.25f);

    // weights survive a round trip through the file exactly
    CompletionNet<float> restored(1);
    network_from_checkpoint<float>(restored, loaded, NetworkKind::completion);
    auto sa = net.named_state();
    auto sb = restored.named_state();
    REQUIRE(sa.size() == sb.size());
    for (std::size_t i = 0; i < sa.size(); ++i) {
        REQUIRE(sa[i].count == sb[i].count);
        for (index_t j = 0; j < sa[i].count; ++j) CHECK(sa[i].data[j] == sb[i].data[j]);
    }
}

TEST_CASE("checkpoint rejects truncated files with a typed error") {
    CompletionNet<float> net(3);
    Checkpoint ckpt = checkpoint_from_network<float>(net, NetworkKind::completion, 0, 1, {});
    const std::string path = temp_file("trunc");
    save_checkpoint(path, ckpt);
    const auto full_size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, full_size / 2);
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);

    std::filesystem::resize_file(path, 3); // not even a magic
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
}

TEST_CASE("checkpoint rejects a mismatched network kind") {
    SrNet<float> sr(2, 3);
    Checkpoint ckpt = checkpoint_from_network<float>(sr, NetworkKind::super_resolution, 2, 1, {});
    const std::string path = temp_file("kind");
    save_checkpoint(path, ckpt);
    CompletionNet<float> completion(1);
    CHECK_THROWS_AS(network_from_checkpoint<float>(completion, load_checkpoint(path),
                                                   NetworkKind::completion),
                    CheckpointError);
}

TEST_CASE("checkpoint rejects unknown bytes and bad magic") {
    const std::string path = temp_file("magic");
    std::ofstream os(path, std::ios::binary);
    os << "NOTHDR" << std::string(64, '\0');
    os.close();
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/road/x.bin"), IoError);
}

TEST_CASE("short completion training reduces the loss and is reproducible") {
    auto dataset = make_completion_dataset<float>(5, 6, 32);
    REQUIRE(dataset.size() == 6);

    TrainConfig cfg;
    cfg.epochs = 8;
    cfg.batch_size = 2;
    cfg.learning_rate = 2e-3;
    cfg.seed = 11;
    cfg.deterministic = true;

    CompletionNet<float> net(cfg.seed);
    TrainResult a = train_completion(net, dataset, cfg);
    REQUIRE(a.log.size() == 8);
    CHECK(a.log.back().train_loss < a.log.front().train_loss);
    CHECK(a.best_val_loss <= a.initial_val_loss);

    CompletionNet<float> net2(cfg.seed);
    RunContext threaded;
    threaded.threads = 3;
    TrainResult b = train_completion(net2, dataset, cfg, {}, threaded);
    REQUIRE(b.log.size() == a.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) {
        CHECK(a.log[i].train_loss == b.log[i].train_loss);
    }
    REQUIRE(a.best.tensors.size() == b.best.tensors.size());
    for (std::size_t i = 0; i < a.best.tensors.size(); ++i) {
        CHECK(a.best.tensors[i].data == b.best.tensors[i].data);
    }
}

TEST_CASE("short super-resolution training reduces the loss") {
    auto dataset = make_sr_dataset<float>(9, 6, 32, 2);
    TrainConfig cfg;
    cfg.epochs = 6;
    cfg.batch_size = 2;
    cfg.learning_rate = 1e-3;
    cfg.seed = 21;

    SrNet<float> net(2, cfg.seed);
    TrainResult r = train_sr(net, dataset, cfg);
    CHECK(r.log.back().train_loss < r.log.front().train_loss);
    CHECK(r.best.kind == NetworkKind::super_resolution);
    CHECK(r.best.aux == 2);
}

TEST_CASE("training aborts loudly on non-finite losses") {
    auto dataset = make_completion_dataset<float>(5, 2, 32);
    dataset[0].target(0, 0, 3, 3) = std::numeric_limits<float>::quiet_NaN();
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 2;
    CompletionNet<float> net(1);
    CHECK_THROWS_WITH(train_completion(net, dataset, cfg),
                      Catch::Matchers::ContainsSubstring("non-finite"));
}

TEST_CASE("training rejects an empty dataset") {
    TrainConfig cfg;
    CompletionNet<float> net(1);
    std::vector<CompletionSample<float>> empty;
    CHECK_THROWS_AS(train_completion(net, empty, cfg), ConfigError);
}
