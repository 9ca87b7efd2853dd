#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "fedchain/central.hpp"
#include "fedchain/dataset.hpp"
#include "fedchain/logistic.hpp"
#include "fedchain/partition.hpp"
#include "fedchain/rng.hpp"
#include "fedchain/sha256.hpp"
#include "fedchain/stats.hpp"
#include "fedchain/taxonomy.hpp"
#include "fedchain/util.hpp"

using namespace fedchain;

TEST_CASE("format_double round-trips exactly") {
    for (double v : {0.1, -0.0, 1.0 / 3.0, 1e-300, 12345.6789, 2.2250738585072014e-308}) {
        std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(1.0) == "1");
}

TEST_CASE("sha256 known vectors") {
    CHECK(digest_hex(sha256(std::string{})) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(digest_hex(sha256(std::string{"abc"})) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("digest hex round trip and rejection") {
    Digest d = sha256(std::string{"x"});
    Digest back{};
    REQUIRE(digest_from_hex(digest_hex(d), back));
    CHECK(back == d);
    CHECK_FALSE(digest_from_hex("abc", back));
    CHECK_FALSE(digest_from_hex(std::string(64, 'g'), back));
}

TEST_CASE("byte writer is big-endian and type-stable") {
    ByteWriter w;
    w.u32(1);
    w.f64(1.0);
    auto b = w.data();
    REQUIRE(b.size() == 12);
    CHECK(b[0] == 0x00);
    CHECK(b[3] == 0x01);
    CHECK(b[4] == 0x3f);
    CHECK(b[5] == 0xf0);
    CHECK(b[11] == 0x00);
}

TEST_CASE("rng determinism and stream separation") {
    Rng a(derive_seed(7, Stream::noise, 1, 2));
    Rng b(derive_seed(7, Stream::noise, 1, 2));
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    std::set<std::uint64_t> seeds;
    for (std::uint64_t tag = 1; tag <= 14; ++tag)
        for (std::uint64_t arg = 0; arg < 20; ++arg)
            seeds.insert(derive_seed(7, static_cast<Stream>(tag), arg, 0));
    CHECK(seeds.size() == 14u * 20u);
}

TEST_CASE("uniform01 range and mean") {
    Rng r(1);
    double sum = 0;
    for (int i = 0; i < 100000; ++i) {
        double u = r.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
    }
    CHECK(std::fabs(sum / 100000 - 0.5) < 0.01);
}

TEST_CASE("uniform_below is unbiased over a small modulus") {
    Rng r(2);
    std::vector<int> counts(5, 0);
    for (int i = 0; i < 50000; ++i) counts[r.uniform_below(5)]++;
    for (int c : counts) CHECK(std::fabs(c - 10000.0) < 400);
    CHECK_THROWS(r.uniform_below(0));
}

TEST_CASE("laplace scale statistics") {
    Rng r(3);
    double abs_sum = 0;
    for (int i = 0; i < 200000; ++i) abs_sum += std::fabs(r.laplace(2.0));
    // E|X| = scale for Laplace
    CHECK(std::fabs(abs_sum / 200000 - 2.0) < 0.05);
}

TEST_CASE("shuffle produces a permutation") {
    Rng r(4);
    auto p = r.permutation(257);
    std::set<std::uint32_t> s(p.begin(), p.end());
    CHECK(s.size() == 257);
    CHECK(*s.begin() == 0);
    CHECK(*s.rbegin() == 256);
}

TEST_CASE("synthetic generator shape and determinism") {
    SyntheticConfig cfg;
    cfg.n = 4;
    cfg.d = 2;
    cfg.sparsity = 1.0;
    cfg.seed = 7;
    auto ds = generate_synthetic(cfg);
    ds.validate();
    REQUIRE(ds.rows.size() == 4);
    for (const auto& row : ds.rows) CHECK(row.size() == 2);
    for (auto y : ds.labels) CHECK((y == 1 || y == -1));

    auto ds2 = generate_synthetic(cfg);
    REQUIRE(ds2.rows.size() == ds.rows.size());
    for (std::size_t i = 0; i < ds.rows.size(); ++i) {
        CHECK(ds.labels[i] == ds2.labels[i]);
        REQUIRE(ds.rows[i].size() == ds2.rows[i].size());
        for (std::size_t e = 0; e < ds.rows[i].size(); ++e) {
            CHECK(ds.rows[i][e].index == ds2.rows[i][e].index);
            CHECK(ds.rows[i][e].value == ds2.rows[i][e].value);
        }
    }
}

TEST_CASE("separable synthetic task is learnable centrally") {
    SyntheticConfig cfg;
    cfg.n = 1000;
    cfg.d = 50;
    cfg.sparsity = 0.2;
    cfg.separation = 5.0;
    cfg.seed = 11;
    auto ds = generate_synthetic(cfg);
    CentralConfig cc;
    cc.seed = 11;
    auto w = train_centralized(ds, cc);
    CHECK(accuracy(w, ds) >= 0.9);
}

TEST_CASE("dataset jsonl round trip") {
    SyntheticConfig cfg;
    cfg.n = 25;
    cfg.d = 8;
    cfg.sparsity = 0.4;
    cfg.seed = 3;
    auto ds = generate_synthetic(cfg);
    auto path = std::filesystem::temp_directory_path() / "fedchain_ds_roundtrip.jsonl";
    save_dataset_jsonl(ds, path.string());
    auto back = load_dataset_jsonl(path.string());
    std::filesystem::remove(path);
    REQUIRE(back.rows.size() == ds.rows.size());
    CHECK(back.dim == ds.dim);
    CHECK(back.feature_ids == ds.feature_ids);
    CHECK(back.sample_ids == ds.sample_ids);
    for (std::size_t i = 0; i < ds.rows.size(); ++i) {
        CHECK(back.labels[i] == ds.labels[i]);
        REQUIRE(back.rows[i].size() == ds.rows[i].size());
        for (std::size_t e = 0; e < ds.rows[i].size(); ++e) {
            CHECK(back.rows[i][e].index == ds.rows[i][e].index);
            CHECK(back.rows[i][e].value == ds.rows[i][e].value);
        }
    }
}

namespace {

SparseDataset tiny_labeled(const std::vector<int8_t>& labels) {
    SparseDataset ds;
    ds.dim = 1;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        ds.rows.push_back({FeatureEntry{0, 1.0}});
        ds.labels.push_back(labels[i]);
        ds.sample_ids.push_back("s" + std::to_string(i));
    }
    ds.feature_ids = {"f0"};
    return ds;
}

}  // namespace

TEST_CASE("partition sizes, disjointness, determinism") {
    auto ds = tiny_labeled({1, 1, 1, 1, 1, -1, -1, -1, -1, -1});
    PartitionConfig cfg;
    cfg.devices = 2;
    cfg.seed = 5;
    auto p = make_partition(ds, cfg);
    p.validate(10);
    CHECK(p.assignments[0].size() == 5);
    CHECK(p.assignments[1].size() == 5);

    cfg.skew = 1.0;
    auto ps = make_partition(ds, cfg);
    for (const auto& shard : ps.assignments) {
        std::set<int> lbls;
        for (auto i : shard) lbls.insert(ds.labels[i]);
        CHECK(lbls.size() == 1);  // fully sorted shards hold one label each
    }
    CHECK(label_emd(ps, ds) > label_emd(p, ds));
    CHECK(label_emd(ps, ds) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("partition rejects more devices than rows") {
    auto ds = tiny_labeled({1, -1});
    PartitionConfig cfg;
    cfg.devices = 3;
    CHECK_THROWS(make_partition(ds, cfg));
}

TEST_CASE("balance skews shard sizes geometrically") {
    auto ds = tiny_labeled(std::vector<int8_t>(12, 1));
    PartitionConfig cfg;
    cfg.devices = 3;
    cfg.balance = 0.5;
    auto p = make_partition(ds, cfg);
    CHECK(p.assignments[0].size() > p.assignments[2].size());
    std::size_t total = 0;
    for (const auto& s : p.assignments) total += s.size();
    CHECK(total == 12);
}

TEST_CASE("sparsity stats hand-counted instance") {
    // device0 rows {j0}, {j0, j1}; device1 rows {j1}, {j1}
    SparseDataset ds;
    ds.dim = 2;
    ds.rows = {{FeatureEntry{0, 1.0}},
               {FeatureEntry{0, 2.0}, FeatureEntry{1, 1.0}},
               {FeatureEntry{1, 3.0}},
               {FeatureEntry{1, 4.0}}};
    ds.labels = {1, -1, 1, -1};
    ds.sample_ids = {"a", "b", "c", "d"};
    ds.feature_ids = {"f0", "f1"};
    Partition p;
    p.assignments = {{0, 1}, {2, 3}};
    auto st = sparsity_stats(ds, p);
    CHECK(st.feature_count[0] == 2);
    CHECK(st.feature_count[1] == 3);
    CHECK(st.device_feature_count[0][1] == 1);
    CHECK(st.device_feature_count[1][1] == 2);
    CHECK(st.omega[0] == 1);
    CHECK(st.omega[1] == 2);
    CHECK(st.a[0] == 2.0);
    CHECK(st.a[1] == 1.0);
    // conservation of per-feature counts across devices
    for (std::size_t j = 0; j < 2; ++j)
        CHECK(st.device_feature_count[0][j] + st.device_feature_count[1][j] ==
              st.feature_count[j]);
}

TEST_CASE("dense-everywhere stats collapse to identity scaling") {
    SyntheticConfig cfg;
    cfg.n = 8;
    cfg.d = 3;
    cfg.sparsity = 1.0;
    cfg.seed = 9;
    auto ds = generate_synthetic(cfg);
    Partition p;
    p.assignments = {{0, 1, 2, 3}, {4, 5, 6, 7}};
    auto st = sparsity_stats(ds, p);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(st.phi[j] == 1.0);
        CHECK(st.omega[j] == 2);
        CHECK(st.a[j] == 1.0);
    }
}

TEST_CASE("loss at zero weights is log 2") {
    auto ds = tiny_labeled({1, -1, 1});
    std::vector<double> w(1, 0.0);
    CHECK(logistic_loss(w, ds, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("gradient matches central finite differences") {
    SyntheticConfig cfg;
    cfg.n = 40;
    cfg.d = 6;
    cfg.sparsity = 0.5;
    cfg.seed = 13;
    auto ds = generate_synthetic(cfg);
    Rng r(99);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> w(6);
        for (auto& x : w) x = r.uniform(-1.0, 1.0);
        auto g = logistic_gradient(w, ds, 1e-4);
        for (std::size_t j = 0; j < w.size(); ++j) {
            double eps = 1e-6;
            auto wp = w, wm = w;
            wp[j] += eps;
            wm[j] -= eps;
            double fd = (logistic_loss(wp, ds, 1e-4) - logistic_loss(wm, ds, 1e-4)) / (2 * eps);
            CHECK(g[j] == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("full-set gradient equals mean of per-sample gradients") {
    SyntheticConfig cfg;
    cfg.n = 12;
    cfg.d = 4;
    cfg.sparsity = 0.5;
    cfg.seed = 17;
    auto ds = generate_synthetic(cfg);
    std::vector<double> w = {0.3, -0.2, 0.1, 0.4};
    auto g = logistic_gradient(w, ds, 0.05);
    std::vector<double> mean(4, 0.0);
    for (std::uint32_t i = 0; i < 12; ++i) {
        auto gi = sample_gradient(w, ds, i, 0.05);
        for (std::size_t j = 0; j < 4; ++j) mean[j] += gi[j] / 12.0;
    }
    for (std::size_t j = 0; j < 4; ++j) CHECK(g[j] == doctest::Approx(mean[j]).epsilon(1e-12));
}

TEST_CASE("loss stays finite at extreme margins") {
    SparseDataset ds;
    ds.dim = 1;
    ds.rows = {{FeatureEntry{0, 1.0}}};
    ds.labels = {1};
    ds.sample_ids = {"s"};
    ds.feature_ids = {"f"};
    CHECK(std::isfinite(logistic_loss({1000.0}, ds, 0.0)));
    CHECK(std::isfinite(logistic_loss({-1000.0}, ds, 0.0)));
    CHECK(logistic_loss({-1000.0}, ds, 0.0) == doctest::Approx(1000.0).epsilon(1e-12));
}

TEST_CASE("taxonomy settings from set overlap") {
    auto mk = [](std::initializer_list<const char*> v) {
        std::unordered_set<std::string> s;
        for (auto* x : v) s.insert(x);
        return s;
    };
    TaxonomyInput horizontal{mk({"f1", "f2"}), mk({"a", "b"}), mk({"f1", "f2"}), mk({"c", "d"})};
    CHECK(classify_fl_setting(horizontal) == FlSetting::Horizontal);
    TaxonomyInput vertical{mk({"f1"}), mk({"a", "b"}), mk({"f2"}), mk({"a", "b"})};
    CHECK(classify_fl_setting(vertical) == FlSetting::Vertical);
    TaxonomyInput transfer{mk({"f1"}), mk({"a"}), mk({"f2"}), mk({"b"})};
    CHECK(classify_fl_setting(transfer) == FlSetting::FederatedTransfer);
    TaxonomyInput empty{mk({}), mk({"a"}), mk({"f"}), mk({"b"})};
    CHECK_THROWS(classify_fl_setting(empty));
}

TEST_CASE("uniform label split has zero emd") {
    auto ds = tiny_labeled({1, -1, 1, -1});
    Partition p;
    p.assignments = {{0, 1}, {2, 3}};
    CHECK(label_emd(p, ds) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("centralized trainer basics") {
    // separable two-point set
    SparseDataset ds;
    ds.dim = 1;
    ds.rows = {{FeatureEntry{0, 1.0}}, {FeatureEntry{0, -1.0}}};
    ds.labels = {1, -1};
    ds.sample_ids = {"a", "b"};
    ds.feature_ids = {"f"};
    CentralConfig cc;
    cc.epochs = 50;
    auto w = train_centralized(ds, cc);
    CHECK(accuracy(w, ds) == 1.0);

    auto w2 = train_centralized(ds, cc);
    CHECK(w == w2);
}

TEST_CASE("full-batch loss trace is non-increasing") {
    SyntheticConfig cfg;
    cfg.n = 60;
    cfg.d = 5;
    cfg.sparsity = 0.6;
    cfg.seed = 23;
    auto ds = generate_synthetic(cfg);
    CentralConfig cc;
    cc.mode = CentralMode::full_batch;
    cc.lr = 0.2;
    cc.epochs = 30;
    std::vector<double> trace;
    train_centralized(ds, cc, &trace);
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-12);
}

TEST_CASE("divergence raises a numeric error") {
    SyntheticConfig cfg;
    cfg.n = 30;
    cfg.d = 4;
    cfg.sparsity = 1.0;
    cfg.seed = 29;
    auto ds = generate_synthetic(cfg);
    CentralConfig cc;
    cc.lr = 1e12;
    CHECK_THROWS_AS(train_centralized(ds, cc), NumericError);
}

TEST_CASE("delta accuracy loss identities") {
    SyntheticConfig cfg;
    cfg.n = 50;
    cfg.d = 5;
    cfg.sparsity = 0.5;
    cfg.separation = 4.0;
    cfg.seed = 31;
    auto ds = generate_synthetic(cfg);
    CentralConfig cc;
    cc.seed = 31;
    auto m = train_centralized(ds, cc);
    CHECK(delta_accuracy_loss(m, m, ds) == 0.0);
    std::vector<double> junk(5, -0.7);
    CHECK(delta_accuracy_loss(m, junk, ds) == delta_accuracy_loss(junk, m, ds));
}
