#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "rbmlearn/dataset.hpp"
#include "rbmlearn/enumerate.hpp"
#include "rbmlearn/experiment.hpp"
#include "rbmlearn/generators.hpp"
#include "rbmlearn/idx.hpp"
#include "rbmlearn/serialize.hpp"
#include "support.hpp"

using namespace rbmlearn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rbmlearn_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ExperimentOptions options_in(const fs::path& dir, std::uint64_t seed = 7) {
  ExperimentOptions o;
  o.seed = seed;
  o.out_dir = dir.string();
  return o;
}

}  // namespace

TEST_SUITE("harness-io") {

TEST_CASE("generator is deterministic") {
  GeneratorSpec s;
  s.topology = Topology::kRandomBipartite;
  s.n_visible = 6;
  s.n_hidden = 4;
  s.sign_mode = SignMode::kMixed;
  s.weight_scale = 1.0;
  s.visible_bias_scale = 0.5;
  s.seed = 42;
  const GeneratedModel a = generate_model(s), b = generate_model(s);
  CHECK(a.model.base.weights == b.model.base.weights);
  CHECK(a.model.base.visible_bias == b.model.base.visible_bias);
  s.seed = 43;
  CHECK(generate_model(s).model.base.weights != a.model.base.weights);
}

TEST_CASE("chain marginal is the Ising chain") {
  GeneratorSpec s;
  s.n_visible = 5;
  s.weight_scale = 0.4;
  const GeneratedModel g = generate_model(s);
  CHECK(g.model.n_hidden() == 4);
  CHECK(g.edges.size() == 4);
  for (double j : g.couplings) CHECK(j == doctest::Approx(0.4).epsilon(1e-12));
  const Vector<double> ising = testsupport::ising_pmf(5, g.edges, g.couplings);
  CHECK((exact_visible_pmf(g.model.base) - ising).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("edge topologies") {
  GeneratorSpec s;
  s.topology = Topology::kCycle;
  s.n_visible = 12;
  CHECK(generate_model(s).edges.size() == 12);
  s.topology = Topology::kGrid;
  s.n_visible = 9;
  const GeneratedModel g = generate_model(s);
  CHECK(g.edges.size() == 12);
  CHECK(two_hop_graph(g.model.base)[4] == Subset{1, 3, 5, 7});
  s.n_visible = 10;
  s.grid_cols = 3;
  CHECK_THROWS(generate_model(s));
  s.topology = Topology::kStar;
  s.n_visible = 6;
  s.n_hidden = 2;
  s.grid_cols = 0;
  CHECK(two_hop_graph(generate_model(s).model.base)[0] == Subset{2, 4});
}

TEST_CASE("ferromagnetic mode respects the weight floor") {
  GeneratorSpec s;
  s.topology = Topology::kRandomBipartite;
  s.n_visible = 8;
  s.n_hidden = 5;
  s.alpha = 0.3;
  s.weight_scale = 0.6;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    s.seed = seed;
    const Matrix<double>& w = generate_model(s).model.base.weights;
    for (Eigen::Index k = 0; k < w.size(); ++k)
      if (w.data()[k] != 0.0) CHECK(w.data()[k] >= 0.3);
  }
  s.topology = Topology::kChain;
  s.weight_scale = 0.01;
  CHECK(generate_model(s).model.base.weights.maxCoeff() >= 0.3);
}

TEST_CASE("Dobrushin scaling") {
  GeneratorSpec s;
  s.topology = Topology::kRandomBipartite;
  s.n_visible = 8;
  s.n_hidden = 6;
  s.weight_scale = 2.0;
  s.sign_mode = SignMode::kMixed;
  s.visible_bias_scale = 1.0;
  s.dobrushin_scale = true;
  const NormBounds b = norm_bounds(generate_model(s).model.base);
  CHECK(b.lambda1 <= 1.0 + 1e-12);
  CHECK(b.lambda2 <= 1.0 + 1e-12);
  CHECK(std::max(b.lambda1, b.lambda2) >= 1.0 - 1e-9);
}

TEST_CASE("label coupling") {
  GeneratorSpec s;
  s.n_visible = 4;
  CHECK(!generate_model(s).supervised);
  s.label_coupling = LabelCouplingSpec{0.5, 0.2};
  const GeneratedModel g = generate_model(s);
  CHECK(g.supervised);
  CHECK(g.model.b_label == 0.2);
  CHECK(g.model.w_label.cwiseAbs().maxCoeff() <= 0.5);
}

TEST_CASE("binarization") {
  const SpinDataset zeros = binarize_images(Matrix<double>::Zero(3, 10), 1);
  CHECK(zeros.samples().cast<int>().sum() == -30);
  const SpinDataset ones = binarize_images(Matrix<double>::Ones(3, 10), 1);
  CHECK(ones.samples().cast<int>().sum() == 30);
  const int m = 40000;
  const SpinDataset half = binarize_images(Matrix<double>::Constant(m, 1, 0.5), 3);
  CHECK(std::abs(half.column_mean()[0]) <= 3.0 / std::sqrt(m));
  CHECK(binarize_images(Matrix<double>::Constant(50, 4, 0.3), 9).samples() ==
        binarize_images(Matrix<double>::Constant(50, 4, 0.3), 9).samples());
  CHECK_THROWS(binarize_images(Matrix<double>::Constant(1, 1, 1.5), 1));
}

TEST_CASE("IDX round trip") {
  const fs::path dir = scratch("idx");
  IdxImages im;
  im.count = 3;
  im.rows = 2;
  im.cols = 2;
  im.pixels = {0, 255, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  write_idx_images((dir / "img").string(), im);
  write_idx_labels((dir / "lab").string(), {3, 8, 3});
  const IdxImages back = read_idx_images((dir / "img").string());
  CHECK(back.count == 3);
  CHECK(back.rows == 2);
  CHECK(back.pixels == im.pixels);
  CHECK(read_idx_labels((dir / "lab").string()) == std::vector<std::uint8_t>{3, 8, 3});
  const Matrix<double> x = idx_intensities(back);
  CHECK(x.rows() == 3);
  CHECK(x(0, 1) == 1.0);
  CHECK_THROWS(read_idx_images((dir / "lab").string()));
  CHECK_THROWS(read_idx_labels((dir / "missing").string()));
}

TEST_CASE("area downsampling") {
  Matrix<double> x(1, 16);
  for (int p = 0; p < 16; ++p) x(0, p) = p / 15.0;
  const Matrix<double> half = downsample_images(x, 4, 4, 2, 2);
  CHECK(half(0, 0) == doctest::Approx((0 + 1 + 4 + 5) / 60.0));
  CHECK(half(0, 3) == doctest::Approx((10 + 11 + 14 + 15) / 60.0));
  CHECK(downsample_images(x, 4, 4, 4, 4) == x);
  const Matrix<double> odd = downsample_images(x, 4, 4, 3, 3);
  CHECK(odd.mean() == doctest::Approx(x.mean()));
  CHECK(odd(0, 0) == doctest::Approx((1.0 * 0 + (1.0 / 3) * (1 + 4) + (1.0 / 9) * 5) / (16.0 / 9) / 15.0));
  CHECK_THROWS(downsample_images(x, 4, 4, 5, 2));
  CHECK_THROWS(downsample_images(x, 3, 4, 2, 2));
}

TEST_CASE("dataset text round trip") {
  const fs::path dir = scratch("dataset");
  SpinMatrix s(3, 2);
  s << 1, -1, -1, -1, 1, 1;
  SpinVector y(3);
  y << -1, 1, 1;
  save_dataset((dir / "d.txt").string(), SpinDataset(s, y));
  const SpinDataset back = load_dataset((dir / "d.txt").string());
  CHECK(back.samples() == s);
  CHECK(back.labels() == y);
}

TEST_CASE("JSON round trips") {
  const Rbm m = testsupport::random_rbm(4, 3, 2);
  const Rbm m2 = rbm_from_json(rbm_to_json(m));
  CHECK(m2.weights == m.weights);
  CHECK(m2.hidden_bias == m.hidden_bias);

  GeneratorSpec spec;
  spec.topology = Topology::kGrid;
  spec.n_visible = 4;
  spec.label_coupling = LabelCouplingSpec{0.3, -0.1};
  spec.seed = 99;
  const GeneratedModel g = generate_model(spec);
  const SupervisedRbm s2 = supervised_from_json(supervised_to_json(g.model));
  CHECK(s2.w_label == g.model.w_label);
  CHECK(s2.b_label == g.model.b_label);
  const GeneratorSpec spec2 = generator_spec_from_json(generator_spec_to_json(spec));
  CHECK(generate_model(spec2).model.base.weights == g.model.base.weights);

  SparsePolynomial p(5);
  p.set({}, 0.1);
  p.set({0, 3}, -0.123456789012345);
  p.set({1, 2, 4}, 2.5);
  const SparsePolynomial p2 = polynomial_from_json(polynomial_to_json(p));
  CHECK(l1_distance(p, p2, true) == 0.0);

  LabelPredictor pred{5, p, SparsePolynomial(5), 0.25, std::nullopt};
  Vector<double> ext(5);
  ext << 1, 2, 3, 4, 5;
  pred.extended_coeffs = ext;
  const LabelPredictor back = label_predictor_from_json(label_predictor_to_json(pred, {{"seed", 3}}));
  CHECK(back.bias == 0.25);
  REQUIRE(back.extended_coeffs.has_value());
  CHECK(*back.extended_coeffs == ext);
  CHECK(l1_distance(back.f_plus, p, true) == 0.0);
  CHECK_THROWS(rbm_from_json(Json{{"weights", 3}}));
}

TEST_CASE("config errors carry JSON pointer paths") {
  const fs::path dir = scratch("config_error");
  const Json cfg = {{"generator", {{"topology", "blob"}, {"n_visible", -1}}}, {"sampling", {{"method", "psychic"}}}};
  try {
    run_experiment(ExperimentKind::kGenerate, cfg, options_in(dir));
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    std::vector<std::string> paths;
    for (const ConfigIssue& i : e.issues()) paths.push_back(i.path);
    auto has = [&](const std::string& p) { return std::find(paths.begin(), paths.end(), p) != paths.end(); };
    CHECK(has("/generator/topology"));
    CHECK(has("/generator/n_visible"));
    CHECK(has("/sampling/method"));
    const Json doc = error_document(e);
    CHECK(doc["status"] == "error");
    CHECK(doc["error"]["type"] == "config");
    CHECK(doc["error"]["issues"].size() == e.issues().size());
  }
  CHECK_THROWS_AS(run_experiment(ExperimentKind::kGenerate, Json::object(), options_in(dir)), ConfigError);
  CHECK(parse_experiment_kind("distill") == ExperimentKind::kDistribution);
  CHECK_THROWS(parse_experiment_kind("dance"));
}

TEST_CASE("generate writes a model and echoes defaults") {
  const fs::path dir = scratch("generate");
  const Json cfg = {{"generator", {{"topology", "cycle"}, {"n_visible", 6}}}, {"sampling", {{"m", 500}, {"method", "exact"}}}};
  const Json rep = run_experiment(ExperimentKind::kGenerate, cfg, options_in(dir));
  CHECK(rep["status"] == "ok");
  CHECK(rep["config"]["generator"]["weight_scale"] == 0.4);
  CHECK(rep["metrics"]["spin_freedom_holds"]["value"] == 1.0);
  CHECK(rep["metrics"]["lambda1"]["method"] == "exact");
  CHECK(fs::exists(dir / "model.json"));
  CHECK(load_dataset((dir / "data.txt").string()).m() == 500);
  for (const auto& [name, m] : rep["metrics"].items()) {
    CHECK(std::isfinite(m["value"].get<double>()));
    if (m["method"] == "sampled") CHECK(m.contains("stderr"));
  }
}

TEST_CASE("structure and distill runs are deterministic") {
  const Json cfg = {{"generator", {{"topology", "cycle"}, {"n_visible", 5}, {"weight_scale", 0.5}}},
                    {"sampling", {{"m", 8000}, {"method", "exact"}}},
                    {"trials", 2}};
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  ExperimentOptions oa = options_in(a), ob = options_in(b);
  ob.threads = 2;
  const Json ra = run_experiment(ExperimentKind::kStructure, cfg, oa);
  const Json rb = run_experiment(ExperimentKind::kStructure, cfg, ob);
  CHECK(ra["metrics"].dump() == rb["metrics"].dump());
  CHECK(ra["trials"].dump() == rb["trials"].dump());
  CHECK(ra["metrics"]["precision"]["value"] == 1.0);
  CHECK(ra["metrics"]["recall"]["value"] == 1.0);

  Json dcfg = cfg;
  dcfg["trials"] = 1;
  const Json da = run_experiment(ExperimentKind::kDistribution, dcfg, options_in(scratch("dist_a")));
  const Json db = run_experiment(ExperimentKind::kDistribution, dcfg, options_in(scratch("dist_b")));
  CHECK(da["metrics"].dump() == db["metrics"].dump());
  CHECK(da["metrics"]["skl"]["method"] == "exact");
  CHECK(da["metrics"]["tv"]["method"] == "exact");
  CHECK(da["metrics"]["skl"]["value"].get<double>() >= 0.0);
}

TEST_CASE("report aggregates run directories") {
  const fs::path root = scratch("report");
  const Json cfg = {{"generator", {{"n_visible", 4}}}, {"sampling", {{"m", 100}, {"method", "exact"}}}};
  run_experiment(ExperimentKind::kGenerate, cfg, options_in(root / "one", 1));
  run_experiment(ExperimentKind::kGenerate, cfg, options_in(root / "two", 2));
  const Json rep = run_experiment(ExperimentKind::kReport, Json::object(), options_in(root));
  CHECK(rep["metrics"]["reports"]["value"] == 2.0);
  std::ifstream csv(root / "summary.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "source,kind,metric,value,method,stderr");
  const Json summary = load_json((root / "summary.json").string());
  CHECK(summary.size() == 2);
  CHECK(summary[0]["kind"] == "generate");
}

}  // TEST_SUITE
