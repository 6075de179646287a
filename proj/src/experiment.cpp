#include "rbmlearn/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rbmlearn/enumerate.hpp"
#include "rbmlearn/gibbs.hpp"
#include "rbmlearn/idx.hpp"
#include "rbmlearn/parallel.hpp"
#include "rbmlearn/rng.hpp"

namespace fs = std::filesystem;

namespace rbmlearn {

// ---------------------------------------------------------------------------
// Config plumbing

ExperimentKind parse_experiment_kind(const std::string& name) {
  if (name == "generate") return ExperimentKind::kGenerate;
  if (name == "sample") return ExperimentKind::kSample;
  if (name == "structure") return ExperimentKind::kStructure;
  if (name == "distill" || name == "distribution") return ExperimentKind::kDistribution;
  if (name == "train-supervised") return ExperimentKind::kTrainSupervised;
  if (name == "eval-supervised") return ExperimentKind::kEvalSupervised;
  if (name == "report") return ExperimentKind::kReport;
  throw std::invalid_argument("unknown experiment kind '" + name + "'");
}

std::string experiment_kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kGenerate: return "generate";
    case ExperimentKind::kSample: return "sample";
    case ExperimentKind::kStructure: return "structure";
    case ExperimentKind::kDistribution: return "distill";
    case ExperimentKind::kTrainSupervised: return "train-supervised";
    case ExperimentKind::kEvalSupervised: return "eval-supervised";
    case ExperimentKind::kReport: return "report";
  }
  return "generate";
}

namespace {

std::string join_issues(const std::vector<ConfigIssue>& issues) {
  std::string out = "invalid config:";
  for (const ConfigIssue& i : issues) out += " " + (i.path.empty() ? "/" : i.path) + ": " + i.message + ";";
  return out;
}

const Json& empty_object() {
  static const Json obj = Json::object();
  return obj;
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues) : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

ConfigReader::ConfigReader(const Json& doc, std::vector<ConfigIssue>& issues, Json& echo, std::string path)
    : doc_(&doc), issues_(&issues), echo_(&echo), path_(std::move(path)) {
  if (!doc.is_object()) {
    issues.push_back({path_.empty() ? "/" : path_, "must be an object"});
    doc_ = &empty_object();
  }
}

bool ConfigReader::has(const std::string& key) const { return doc_->contains(key) && !(*doc_)[key].is_null(); }

const Json& ConfigReader::raw(const std::string& key) const { return has(key) ? (*doc_)[key] : empty_object(); }

void ConfigReader::fail(const std::string& key, const std::string& message) { issues_->push_back({path_of(key), message}); }

void ConfigReader::record(const std::string& key, Json value) { (*echo_)[Json::json_pointer(path_of(key))] = std::move(value); }

double ConfigReader::number(const std::string& key, double fallback, double lo, double hi, bool open_lo) {
  double v = fallback;
  if (has(key)) {
    const Json& j = (*doc_)[key];
    if (!j.is_number()) {
      fail(key, "must be a number");
      record(key, fallback);
      return fallback;
    }
    v = j.get<double>();
  }
  const bool below = open_lo ? !(v > lo) : !(v >= lo);
  if (below || !(v <= hi) || !std::isfinite(v)) {
    std::ostringstream msg;
    msg << "must lie in " << (open_lo ? "(" : "[") << lo << ", " << hi << "]";
    fail(key, msg.str());
  }
  record(key, v);
  return v;
}

int ConfigReader::integer(const std::string& key, int fallback, int lo, int hi) {
  int v = fallback;
  if (has(key)) {
    const Json& j = (*doc_)[key];
    if (!j.is_number_integer()) {
      fail(key, "must be an integer");
      record(key, fallback);
      return fallback;
    }
    v = j.get<int>();
  }
  if (v < lo || v > hi) fail(key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  record(key, v);
  return v;
}

bool ConfigReader::boolean(const std::string& key, bool fallback) {
  bool v = fallback;
  if (has(key)) {
    if (!(*doc_)[key].is_boolean()) fail(key, "must be true or false");
    else v = (*doc_)[key].get<bool>();
  }
  record(key, v);
  return v;
}

std::string ConfigReader::text(const std::string& key, const std::string& fallback) {
  std::string v = fallback;
  if (has(key)) {
    if (!(*doc_)[key].is_string()) fail(key, "must be a string");
    else v = (*doc_)[key].get<std::string>();
  }
  record(key, v);
  return v;
}

std::string ConfigReader::choice(const std::string& key, const std::string& fallback, const std::vector<std::string>& allowed) {
  const std::string v = text(key, fallback);
  if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    fail(key, "must be one of: " + list);
  }
  return v;
}

std::optional<std::string> ConfigReader::optional_text(const std::string& key) {
  if (!has(key)) return std::nullopt;
  return text(key, "");
}

ConfigReader ConfigReader::child(const std::string& key) {
  if (!has(key)) record(key, Json::object());
  return ConfigReader(raw(key), *issues_, *echo_, path_of(key));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 mix(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
  return mix.next();
}

Json error_document(const std::exception& e) {
  Json doc;
  doc["status"] = "error";
  Json err;
  if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) {
    err["type"] = "config";
    Json issues = Json::array();
    for (const ConfigIssue& i : ce->issues()) issues.push_back({{"path", i.path.empty() ? "/" : i.path}, {"message", i.message}});
    err["issues"] = std::move(issues);
  } else if (dynamic_cast<const CapExceeded*>(&e)) {
    err["type"] = "cap-exceeded";
  } else if (dynamic_cast<const DegenerateData*>(&e)) {
    err["type"] = "degenerate-data";
  } else {
    err["type"] = "runtime";
  }
  err["message"] = e.what();
  doc["error"] = std::move(err);
  return doc;
}

// ---------------------------------------------------------------------------
// Trial drivers

SpinDataset draw_samples(const Rbm& model, const SamplingPlan& plan, std::uint64_t seed, int threads) {
  if (plan.exact) return exact_sample(marginal_visible_pmf(model), plan.m, seed);
  GibbsOptions g;
  g.burn_in = plan.burn_in;
  g.n_samples = plan.m;
  g.thin = plan.thin;
  g.chains = plan.chains;
  g.threads = threads;
  return gibbs_sample(model, g, seed);
}

double min_conditional_mutual_information(const Vector<double>& pmf, const std::vector<Subset>& graph) {
  double best = INFINITY;
  for (std::size_t i = 0; i < graph.size(); ++i)
    for (int j : graph[i])
      if (static_cast<int>(i) < j) best = std::min(best, exact_conditional_mutual_information(pmf, static_cast<int>(i), j));
  return best;
}

StructureScore score_structure(const std::vector<Subset>& truth, const std::vector<Subset>& found) {
  if (truth.size() != found.size()) throw std::invalid_argument("score_structure: graphs differ in size");
  long long tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (int j : found[i]) {
      if (static_cast<int>(i) >= j) continue;
      (std::find(truth[i].begin(), truth[i].end(), j) != truth[i].end() ? tp : fp)++;
    }
    for (int j : truth[i])
      if (static_cast<int>(i) < j && std::find(found[i].begin(), found[i].end(), j) == found[i].end()) ++fn;
  }
  StructureScore s;
  s.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 1.0;
  s.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 1.0;
  s.exact_recovery = fp == 0 && fn == 0;
  return s;
}

DistributionScore score_distribution(const MrfPotential& truth, const Vector<double>& true_pmf, const MrfPotential& learned) {
  const int n = table_dimension(true_pmf);
  const Vector<double> learned_pmf = mrf_pmf(learned, n);
  DistributionScore s;
  s.coeff_error = l1_distance(truth, learned, false);
  s.skl = skl_divergence(truth, learned, exact_moments(true_pmf, learned_pmf));
  s.tv = tv_distance_exact(true_pmf, learned_pmf);
  const double slack = 1e-12;
  s.pinsker_ok = 2.0 * s.tv * s.tv <= s.skl + slack;
  s.holder_ok = s.skl <= 2.0 * s.coeff_error + slack;
  s.tight_ok = s.skl <= s.coeff_error + slack;
  return s;
}

SupervisedScore supervised_trial(const SpinDataset& data, const Vector<double>& joint, const NormBounds& bounds,
                                 const SupervisedConfig& cfg) {
  SupervisedScore out;
  out.nbhds = learn_all_nbhds(labeled_patterns(data), data.n(), cfg);
  std::vector<Subset> sets;
  for (const NeighborhoodResult& r : out.nbhds) sets.push_back(r.nbhd);
  const ConditionalMrfs mrfs = fit_conditional_mrfs(data, sets, bounds, cfg);
  BiasFitOptions bias;
  bias.bias_bound = cfg.bias_bound;
  out.predictor = fit_bias(data, mrfs.f_plus, mrfs.f_minus, bias);
  out.population_loss = population_label_loss(out.predictor, joint);
  out.bayes_loss = bayes_label_loss(joint);
  return out;
}

// ---------------------------------------------------------------------------
// Experiment kinds

namespace {

Json exact_metric(double v) { return {{"value", v}, {"method", "exact"}}; }
Json sampled_metric(double v, double stderr_) { return {{"value", v}, {"method", "sampled"}, {"stderr", stderr_}}; }

/// Mean and standard error of per-trial values.
Json trial_metric(const std::vector<double>& xs, const char* method) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0, sq = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  for (double x : xs) sq += (x - mean) * (x - mean);
  Json out = {{"value", mean}, {"method", method}};
  out["stderr"] = n > 1 ? std::sqrt(sq / (n - 1) / n) : 0.0;
  return out;
}

struct Context {
  const ExperimentOptions& options;
  std::vector<ConfigIssue> issues;
  Json echo = Json::object();
  Json metrics = Json::object();
  Json trials = Json::array();
  Json artifacts = Json::array();

  std::string resolve(const std::string& path) const {
    if (path.empty() || fs::path(path).is_absolute() || options.config_dir.empty()) return path;
    return (fs::path(options.config_dir) / path).string();
  }
  std::string out(const std::string& name) {
    artifacts.push_back(name);
    return (fs::path(options.out_dir) / name).string();
  }
  void check() const {
    if (!issues.empty()) throw ConfigError(issues);
  }
};

/// Validated choice; an invalid value is reported and the fallback returned.
std::string pick(ConfigReader& r, const std::string& key, const std::string& fallback, const std::vector<std::string>& allowed) {
  const std::string v = r.choice(key, fallback, allowed);
  return std::find(allowed.begin(), allowed.end(), v) == allowed.end() ? fallback : v;
}

GeneratorSpec read_generator(ConfigReader r, std::uint64_t seed) {
  GeneratorSpec s;
  s.topology = parse_topology(pick(r, "topology", "chain", {"chain", "cycle", "grid", "random-bipartite", "star"}));
  s.n_visible = r.integer("n_visible", 5, 1, 64);
  s.n_hidden = r.integer("n_hidden", 0, 0, 4096);
  s.grid_cols = r.integer("grid_cols", 0, 0, 64);
  s.weight_scale = r.number("weight_scale", 0.4, 0.0);
  const std::string sign = pick(r, "sign_mode", "ferromagnetic", {"ferromagnetic", "mixed"});
  s.sign_mode = sign == "mixed" ? SignMode::kMixed : SignMode::kFerromagnetic;
  s.alpha = r.number("alpha", 0.0, 0.0);
  s.edge_probability = r.number("edge_probability", 0.5, 0.0, 1.0);
  s.visible_bias_scale = r.number("visible_bias_scale", 0.0, 0.0);
  s.hidden_bias_scale = r.number("hidden_bias_scale", 0.0, 0.0);
  s.dobrushin_scale = r.boolean("dobrushin_scale", false);
  if (r.has("label_coupling")) {
    ConfigReader lc = r.child("label_coupling");
    s.label_coupling = LabelCouplingSpec{lc.number("scale", 0.5, 0.0), lc.number("bias", 0.0)};
  }
  s.seed = seed;
  return s;
}

/// Builds the generated model unless the generator section already has issues.
std::optional<GeneratedModel> build_generator(Context& ctx, ConfigReader r, std::uint64_t seed) {
  const std::size_t before = ctx.issues.size();
  const GeneratorSpec spec = read_generator(r, seed);
  if (ctx.issues.size() != before) return std::nullopt;
  try {
    return generate_model(spec);
  } catch (const std::invalid_argument& e) {
    ctx.issues.push_back({r.path(), e.what()});
    return std::nullopt;
  }
}

SamplingPlan read_sampling(ConfigReader r, int default_m, bool exact_default) {
  SamplingPlan p;
  p.m = r.integer("m", default_m, 0);
  p.exact = r.choice("method", exact_default ? "exact" : "gibbs", {"exact", "gibbs"}) == "exact";
  p.burn_in = r.integer("burn_in", 1000, 0);
  p.thin = r.integer("thin", 1, 1);
  p.chains = r.integer("chains", 4, 1);
  return p;
}

RegressionConfig read_regression(ConfigReader r, const std::optional<NormBounds>& bounds, bool* radius_ok) {
  RegressionConfig c;
  c.degree = r.integer("degree", 2, 0, 12);
  c.max_iters = r.integer("max_iters", c.max_iters, 1);
  c.tol = r.number("tol", c.tol, 0.0, INFINITY, true);
  c.solver = parse_solver(pick(r, "solver", "fista", {"fista", "eg"}));
  *radius_ok = true;
  if (r.raw("radius").is_string()) {
    const std::string mode = r.text("radius", "paper");
    if (mode != "paper") {
      r.fail("radius", "must be a number or \"paper\"");
    } else if (!bounds) {
      r.fail("radius", "\"paper\" needs norm bounds (a generator, or lambda1 and lambda2)");
      *radius_ok = false;
    } else {
      c.radius = radius_from_bounds(*bounds, c.degree);
    }
  } else {
    c.radius = r.number("radius", c.radius, 0.0);
  }
  return c;
}

/// Model and data shared by most kinds.
struct Source {
  std::optional<GeneratedModel> generated;
  std::optional<SpinDataset> data;
  std::optional<NormBounds> bounds;
  bool enumerable = false;
};

Source read_source(Context& ctx, ConfigReader& root, bool need_data_or_model) {
  Source src;
  const auto& opt = ctx.options;
  if (root.has("generator")) {
    src.generated = build_generator(ctx, root.child("generator"), derive_seed(opt.seed, 1));
  } else if (root.has("model")) {
    const std::string path = ctx.resolve(root.text("model", ""));
    GeneratedModel g;
    g.model = supervised_from_json(load_json(path));
    g.supervised = g.model.w_label.size() > 0 && g.model.w_label.cwiseAbs().sum() > 0.0;
    src.generated = std::move(g);
  }
  if (src.generated) {
    src.bounds = norm_bounds(src.generated->model.base);
    src.enumerable = src.generated->model.n_visible() + 1 <= kMaxJointEnumeration;
  }
  if (root.has("data")) src.data = load_dataset(ctx.resolve(root.text("data", "")));
  if (need_data_or_model && !root.has("generator") && !root.has("model") && !src.data) root.fail("data", "one of generator, model or data is required");
  return src;
}

std::optional<NormBounds> bounds_override(ConfigReader& r, std::optional<NormBounds> from_model) {
  if (r.has("lambda1") || r.has("lambda2")) {
    NormBounds b;
    b.lambda1 = r.number("lambda1", from_model ? from_model->lambda1 : 1.0, 0.0);
    b.lambda2 = r.number("lambda2", from_model ? from_model->lambda2 : 1.0, 0.0);
    if (from_model) b.field_bound = from_model->field_bound;
    return b;
  }
  return from_model;
}

// generate ------------------------------------------------------------------

void run_generate(Context& ctx, ConfigReader& root) {
  if (!root.has("generator")) root.fail("generator", "is required");
  ctx.check();
  const std::optional<GeneratedModel> built = build_generator(ctx, root.child("generator"), derive_seed(ctx.options.seed, 1));
  const SamplingPlan plan = read_sampling(root.child("sampling"), 10000, ctx.options.exact);
  ctx.check();
  const GeneratedModel& g = *built;
  save_json(ctx.out("model.json"), g.supervised ? supervised_to_json(g.model) : rbm_to_json(g.model.base));
  const NormBounds b = norm_bounds(g.model.base);
  const int n = g.model.n_visible();
  ctx.metrics["lambda1"] = exact_metric(b.lambda1);
  ctx.metrics["lambda2"] = exact_metric(b.lambda2);
  ctx.metrics["field_bound"] = exact_metric(b.field_bound);
  ctx.metrics["min_marginal_bound"] = exact_metric(min_marginal_bound(b, n));
  if (n <= kMaxJointEnumeration) {
    const Vector<double> pmf = marginal_visible_pmf(g.model.base);
    const double min_scaled = pmf.minCoeff() * std::ldexp(1.0, n);
    ctx.metrics["min_scaled_mass"] = exact_metric(min_scaled);
    ctx.metrics["spin_freedom_holds"] = exact_metric(min_scaled >= min_marginal_bound(b, n) ? 1.0 : 0.0);
  }
  if (plan.m > 0) {
    if (g.supervised) {
      const SpinDataset data = plan.exact ? exact_labeled_sample(exact_joint_pmf(g.model), plan.m, derive_seed(ctx.options.seed, 2))
                                          : gibbs_sample_supervised(g.model, plan.burn_in, plan.m, plan.chains,
                                                                    derive_seed(ctx.options.seed, 2), ctx.options.threads);
      save_dataset(ctx.out("data.txt"), data);
      double mean = 0.0;
      for (int r = 0; r < data.m(); ++r) mean += data.label(r);
      mean /= data.m();
      ctx.metrics["label_mean"] = sampled_metric(mean, std::sqrt(std::max(0.0, 1.0 - mean * mean) / data.m()));
    } else {
      const SpinDataset data = draw_samples(g.model.base, plan, derive_seed(ctx.options.seed, 2), ctx.options.threads);
      save_dataset(ctx.out("data.txt"), data);
      const std::vector<double> means = data.column_mean();
      double avg = 0.0;
      for (double x : means) avg += std::abs(x) / n;
      ctx.metrics["mean_abs_magnetization"] = sampled_metric(avg, 1.0 / std::sqrt(static_cast<double>(data.m())));
    }
  }
}

// sample --------------------------------------------------------------------

Matrix<double> tile_images(const Matrix<double>& rows, int h, int w, int grid_cols) {
  const int count = static_cast<int>(rows.rows());
  const int grid_rows = (count + grid_cols - 1) / grid_cols;
  Matrix<double> out = Matrix<double>::Zero(grid_rows * (h + 1) - 1, grid_cols * (w + 1) - 1);
  for (int k = 0; k < count; ++k) {
    const int gr = k / grid_cols, gc = k % grid_cols;
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) out(gr * (h + 1) + r, gc * (w + 1) + c) = rows(k, r * w + c);
  }
  return out;
}

void run_sample(Context& ctx, ConfigReader& root) {
  const auto& opt = ctx.options;
  if (root.has("predictor")) {
    const LabelPredictor pred = label_predictor_from_json(load_json(ctx.resolve(root.text("predictor", ""))));
    ConfigReader img = root.child("image");
    const int h = img.integer("rows", 8, 1), w = img.integer("cols", 8, 1);
    const int steps = root.integer("steps", 6000, 0);
    const int per_class = root.integer("per_class", 16, 1);
    const int grid_cols = root.integer("grid_cols", 4, 1);
    ctx.check();
    if (h * w != pred.n) throw ConfigError(std::vector<ConfigIssue>{{"/image", "rows * cols must equal the predictor's n = " + std::to_string(pred.n)}});
    for (int y : {1, -1}) {
      const std::string tag = y > 0 ? "plus" : "minus";
      const MrfSampleResult s =
          mrf_gibbs(y > 0 ? pred.f_plus : pred.f_minus, pred.n, steps, per_class, derive_seed(opt.seed, y > 0 ? 3 : 4), opt.threads);
      write_pgm(ctx.out("class_" + tag + ".pgm"), tile_images(s.probabilities, h, w, grid_cols));
      save_dataset(ctx.out("class_" + tag + ".txt"), SpinDataset(s.states));
      std::vector<double> per_chain(static_cast<std::size_t>(per_class));
      for (int c = 0; c < per_class; ++c) per_chain[c] = s.probabilities.row(c).mean();
      ctx.metrics["mean_on_probability_" + tag] = trial_metric(per_chain, "sampled");
    }
    return;
  }
  Source src = read_source(ctx, root, true);
  const SamplingPlan plan = read_sampling(root.child("sampling"), 1000, opt.exact);
  ctx.check();
  if (!src.generated) throw ConfigError(std::vector<ConfigIssue>{{"/model", "sampling needs a model or generator"}});
  const SpinDataset data = draw_samples(src.generated->model.base, plan, derive_seed(opt.seed, 2), opt.threads);
  save_dataset(ctx.out("samples.txt"), data);
  const std::vector<double> means = data.column_mean();
  if (src.generated->model.n_visible() <= kMaxJointEnumeration) {
    const Vector<double> pmf = marginal_visible_pmf(src.generated->model.base);
    double worst = 0.0;
    for (int k = 0; k < data.n(); ++k) worst = std::max(worst, std::abs(means[k] - exact_moment(pmf, std::uint64_t{1} << k)));
    ctx.metrics["max_mean_error"] = sampled_metric(worst, 1.0 / std::sqrt(std::max(1, data.m())));
  }
}

// structure -----------------------------------------------------------------

void run_structure(Context& ctx, ConfigReader& root) {
  const auto& opt = ctx.options;
  Source src = read_source(ctx, root, true);
  const SamplingPlan plan = read_sampling(root.child("sampling"), 50000, opt.exact);
  const int trials = root.integer("trials", 1, 1, 10000);
  ConfigReader sc = root.child("structure");
  const std::optional<NormBounds> bounds = bounds_override(sc, src.bounds);
  bool radius_ok = true;
  StructureConfig cfg;
  cfg.regression = read_regression(root.child("regression"), bounds, &radius_ok);
  cfg.delta = sc.number("delta", cfg.delta, 0.0, 1.0, true);
  cfg.holdout_fraction = sc.number("holdout_fraction", cfg.holdout_fraction, 0.0, 1.0, true);
  const bool population = sc.boolean("population", false);
  const bool eta_auto = sc.raw("eta").is_string() || !sc.has("eta");
  Vector<double> pmf;
  std::vector<Subset> truth;
  if (src.generated) truth = two_hop_graph(src.generated->model.base);
  if (eta_auto) {
    const std::string mode = sc.text("eta", "auto");
    if (mode != "auto") sc.fail("eta", "must be a positive number or \"auto\"");
    else if (!src.generated || !src.enumerable) sc.fail("eta", "\"auto\" needs an enumerable generator or model");
  } else {
    cfg.eta = sc.number("eta", cfg.eta, 0.0, INFINITY, true);
  }
  if (population && (!src.generated || !src.enumerable)) sc.fail("population", "needs an enumerable generator or model");
  ctx.check();
  if (src.generated && src.enumerable) pmf = marginal_visible_pmf(src.generated->model.base);
  if (eta_auto) {
    const double cmi = min_conditional_mutual_information(pmf, truth);
    if (!std::isfinite(cmi)) throw ConfigError(std::vector<ConfigIssue>{{sc.path_of("eta"), "\"auto\" needs a model with at least one edge"}});
    cfg.eta = 0.5 * cmi;
    ctx.metrics["min_conditional_mutual_information"] = exact_metric(cmi);
    ctx.echo[Json::json_pointer("/structure/eta")] = cfg.eta;
  }
  ctx.metrics["eta"] = exact_metric(cfg.eta);
  ctx.metrics["radius"] = exact_metric(cfg.regression.radius);
  if (src.generated) save_json(ctx.out("model.json"), rbm_to_json(src.generated->model.base));

  const int n_trials = src.data || population ? 1 : trials;
  std::vector<NeighborhoodMap> maps(static_cast<std::size_t>(n_trials));
  cfg.threads = n_trials == 1 ? opt.threads : 1;
  parallel_for(n_trials, n_trials == 1 ? 1 : opt.threads, [&](int t) {
    if (population) {
      maps[t] = recover_structure_exact(pmf, cfg);
    } else {
      SamplingPlan p = plan;
      const SpinDataset data =
          src.data ? *src.data : draw_samples(src.generated->model.base, p, derive_seed(opt.seed, 100 + t), cfg.threads);
      maps[t] = recover_structure(data, cfg);
    }
  });

  const char* method = population ? "exact" : "sampled";
  std::vector<double> precision, recall, success;
  for (int t = 0; t < n_trials; ++t) {
    Json tj = {{"trial", t}, {"borderline_pairs", maps[t].borderline_count()}, {"samples_sufficient", maps[t].samples.sufficient}};
    if (!truth.empty()) {
      const StructureScore s = score_structure(truth, maps[t].neighbors);
      precision.push_back(s.precision);
      recall.push_back(s.recall);
      success.push_back(s.exact_recovery ? 1.0 : 0.0);
      tj["precision"] = s.precision;
      tj["recall"] = s.recall;
      tj["exact_recovery"] = s.exact_recovery;
    }
    ctx.trials.push_back(std::move(tj));
  }
  if (!truth.empty()) {
    ctx.metrics["precision"] = trial_metric(precision, method);
    ctx.metrics["recall"] = trial_metric(recall, method);
    ctx.metrics["exact_recovery_rate"] = trial_metric(success, method);
    ctx.metrics["exact_recovery_count"] = {{"value", std::count(success.begin(), success.end(), 1.0)}, {"method", "count"}};
  }
  ctx.metrics["required_m"] = exact_metric(maps[0].samples.required_m);
  save_json(ctx.out("neighborhoods.json"), neighborhoods_to_json(maps[0]));
  std::ofstream csv(ctx.out("pairs.csv"));
  write_pair_csv(csv, maps[0]);
}

// distill -------------------------------------------------------------------

void run_distribution(Context& ctx, ConfigReader& root) {
  const auto& opt = ctx.options;
  Source src = read_source(ctx, root, true);
  const SamplingPlan plan = read_sampling(root.child("sampling"), 200000, opt.exact);
  const int trials = root.integer("trials", 1, 1, 10000);
  const std::optional<NormBounds> bounds = bounds_override(root, src.bounds);
  if (!bounds) root.fail("lambda1", "is required without a generator or model");
  const double tolerance = root.number("coeff_tolerance", 0.05, 0.0);
  const std::string nb_mode =
      root.has("neighborhoods") ? root.text("neighborhoods", "truth") : (src.generated ? "truth" : "learn");
  std::vector<Subset> fixed;
  StructureConfig scfg;
  if (nb_mode == "truth") {
    if (!src.generated) root.fail("neighborhoods", "\"truth\" needs a generator or model");
    ctx.echo[Json::json_pointer("/neighborhoods")] = "truth";
  } else if (nb_mode == "learn") {
    ConfigReader sc = root.child("structure");
    bool radius_ok = true;
    scfg.regression = read_regression(root.child("regression"), bounds, &radius_ok);
    scfg.eta = sc.number("eta", scfg.eta, 0.0, INFINITY, true);
    scfg.delta = sc.number("delta", scfg.delta, 0.0, 1.0, true);
    scfg.holdout_fraction = sc.number("holdout_fraction", scfg.holdout_fraction, 0.0, 1.0, true);
  } else {
    const Json doc = load_json(ctx.resolve(nb_mode));
    for (const Json& s : doc.at("neighbors")) fixed.push_back(s.get<Subset>());
  }
  ctx.check();
  const bool have_truth = src.generated && src.generated->model.n_visible() <= kMaxJointEnumeration;
  Vector<double> true_pmf;
  MrfPotential truth_potential;
  if (have_truth) {
    true_pmf = marginal_visible_pmf(src.generated->model.base);
    truth_potential = potential_from_pmf(true_pmf);
  }
  if (src.generated) fixed = nb_mode == "truth" ? two_hop_graph(src.generated->model.base) : fixed;
  ctx.metrics["lambda1"] = exact_metric(bounds->lambda1);
  ctx.metrics["clip_r"] = exact_metric(clip_level(*bounds));

  const int n_trials = src.data ? 1 : trials;
  std::vector<MrfPotential> learned(static_cast<std::size_t>(n_trials));
  const int inner = n_trials == 1 ? opt.threads : 1;
  parallel_for(n_trials, n_trials == 1 ? 1 : opt.threads, [&](int t) {
    const SpinDataset data =
        src.data ? *src.data : draw_samples(src.generated->model.base, plan, derive_seed(opt.seed, 200 + t), inner);
    std::vector<Subset> nb = fixed;
    if (nb_mode == "learn") {
      StructureConfig c = scfg;
      c.threads = inner;
      nb = recover_structure(data, c).neighbors;
    }
    learned[t] = distribution_from_structure(data, nb, *bounds, inner);
  });

  save_json(ctx.out("potential.json"), polynomial_to_json(learned[0]));
  ctx.metrics["terms"] = exact_metric(static_cast<double>(learned[0].size()));
  if (!have_truth) return;
  std::vector<double> err, skl, tv, success, tight;
  for (int t = 0; t < n_trials; ++t) {
    const DistributionScore s = score_distribution(truth_potential, true_pmf, learned[t]);
    const bool ok = s.coeff_error <= tolerance && s.tv <= std::sqrt(s.skl / 2.0) + 1e-15;
    err.push_back(s.coeff_error);
    skl.push_back(s.skl);
    tv.push_back(s.tv);
    success.push_back(ok ? 1.0 : 0.0);
    tight.push_back(s.tight_ok ? 1.0 : 0.0);
    ctx.trials.push_back({{"trial", t},
                          {"coeff_error", s.coeff_error},
                          {"skl", s.skl},
                          {"tv", s.tv},
                          {"pinsker_holds", s.pinsker_ok},
                          {"holder_bound_holds", s.holder_ok},
                          {"unit_bound_holds", s.tight_ok},
                          {"success", ok}});
  }
  // Per-trial values are exact given the sample; the spread across trials is sampling noise.
  ctx.metrics["coeff_error"] = trial_metric(err, n_trials > 1 ? "sampled" : "exact");
  ctx.metrics["skl"] = trial_metric(skl, n_trials > 1 ? "sampled" : "exact");
  ctx.metrics["tv"] = trial_metric(tv, n_trials > 1 ? "sampled" : "exact");
  ctx.metrics["success_rate"] = trial_metric(success, n_trials > 1 ? "sampled" : "exact");
  ctx.metrics["success_count"] = {{"value", std::count(success.begin(), success.end(), 1.0)}, {"method", "count"}};
  ctx.metrics["unit_bound_rate"] = trial_metric(tight, n_trials > 1 ? "sampled" : "exact");
  if (true_pmf.size() <= 4096) {
    std::ofstream csv(ctx.out("pmf_learned.csv"));
    write_pmf_csv(csv, mrf_pmf(learned[0], table_dimension(true_pmf)));
  }
}

// supervised ----------------------------------------------------------------

/// Labeled binarized digits: class[0] -> +1, class[1] -> -1; row r uses image r mod count.
SpinDataset read_idx_source(Context& ctx, ConfigReader r, std::uint64_t seed) {
  const std::string images = ctx.resolve(r.text("images", ""));
  const std::string labels = ctx.resolve(r.text("labels", ""));
  const int samples = r.integer("samples", 2000, 1);
  std::vector<int> classes = {0, 1};
  if (r.has("classes")) {
    const Json& c = r.raw("classes");
    if (!c.is_array() || c.size() != 2 || !c[0].is_number_integer() || !c[1].is_number_integer())
      r.fail("classes", "must be an array of two integer labels");
    else
      classes = {c[0].get<int>(), c[1].get<int>()};
  }
  ctx.echo[Json::json_pointer(r.path_of("classes"))] = classes;
  std::optional<std::pair<int, int>> shape;
  if (r.has("downsample")) {
    const Json& d = r.raw("downsample");
    if (!d.is_array() || d.size() != 2 || !d[0].is_number_integer() || !d[1].is_number_integer() || d[0].get<int>() < 1 ||
        d[1].get<int>() < 1)
      r.fail("downsample", "must be [rows, cols] with positive integers");
    else
      shape = {d[0].get<int>(), d[1].get<int>()};
  }
  if (images.empty()) r.fail("images", "is required");
  if (labels.empty()) r.fail("labels", "is required");
  ctx.check();
  const IdxImages img = read_idx_images(images);
  const std::vector<std::uint8_t> lab = read_idx_labels(labels);
  if (static_cast<int>(lab.size()) != img.count) throw std::runtime_error("IDX image and label counts differ");
  Matrix<double> all = idx_intensities(img);
  if (shape) {
    if (shape->first > img.rows || shape->second > img.cols)
      throw ConfigError(std::vector<ConfigIssue>{{r.path_of("downsample"), "must not exceed the image shape"}});
    all = downsample_images(all, img.rows, img.cols, shape->first, shape->second);
  }
  std::vector<int> keep;
  for (int k = 0; k < img.count; ++k)
    if (lab[k] == classes[0] || lab[k] == classes[1]) keep.push_back(k);
  if (keep.empty()) throw DegenerateData("no IDX images carry the requested classes");
  Matrix<double> rows(samples, all.cols());
  SpinVector y(samples);
  for (int s = 0; s < samples; ++s) {
    const int k = keep[static_cast<std::size_t>(s) % keep.size()];
    rows.row(s) = all.row(k);
    y(s) = lab[k] == classes[0] ? 1 : -1;
  }
  return binarize_images(rows, seed, y);
}

SupervisedConfig read_supervised(ConfigReader r, int threads) {
  SupervisedConfig c;
  c.tau = r.number("tau", 0.0, 0.0);
  c.alpha = r.number("alpha", c.alpha, 0.0, INFINITY, true);
  c.lambda = r.number("lambda", c.lambda, 0.0);
  c.beta_bal = r.number("beta_bal", c.beta_bal, 0.0, 1.0, true);
  c.bias_bound = r.number("bias_bound", c.bias_bound, 0.0, INFINITY, true);
  c.t_star = r.integer("t_star", 0, 0, kMaxGreedySteps);
  c.min_bin = r.number("min_bin", c.min_bin, 0.0);
  c.stop_mode = parse_stop_mode(pick(r, "stop_mode", "threshold", {"threshold", "variance-shrink"}));
  c.shrink_fraction = r.number("shrink_fraction", c.shrink_fraction, 0.0, 1.0, true);
  c.min_class_count = r.integer("min_class_count", c.min_class_count, 1);
  c.threads = threads;
  return c;
}

SpinDataset supervised_data(Context& ctx, ConfigReader& root, const Source& src, std::uint64_t stream) {
  const auto& opt = ctx.options;
  if (root.has("idx")) return read_idx_source(ctx, root.child("idx"), derive_seed(opt.seed, stream));
  if (src.data) {
    if (!src.data->has_labels()) throw DegenerateData("supervised runs need a labeled dataset");
    return *src.data;
  }
  const SamplingPlan plan = read_sampling(root.child("sampling"), 100000, opt.exact);
  ctx.check();
  if (!src.generated) throw ConfigError(std::vector<ConfigIssue>{{"/data", "one of idx, data, generator or model is required"}});
  if (plan.exact) return exact_labeled_sample(exact_joint_pmf(src.generated->model), plan.m, derive_seed(opt.seed, stream));
  return gibbs_sample_supervised(src.generated->model, plan.burn_in, plan.m, plan.chains, derive_seed(opt.seed, stream),
                                 opt.threads);
}

void run_train_supervised(Context& ctx, ConfigReader& root) {
  const auto& opt = ctx.options;
  Source src = read_source(ctx, root, !root.has("idx"));
  const SupervisedConfig cfg = read_supervised(root.child("supervised"), opt.threads);
  const std::optional<NormBounds> bounds = bounds_override(root, src.bounds);
  if (!bounds) root.fail("lambda1", "is required without a generator or model (sets the clip level)");
  ConfigReader bc = root.child("bias");
  BiasFitOptions bias;
  bias.mode = bc.choice("mode", "scalar", {"scalar", "extended"}) == "extended" ? BiasMode::kExtended : BiasMode::kScalar;
  bias.bias_bound = cfg.bias_bound;
  bias.extended.degree = 1;
  bias.extended.radius = bc.number("radius", 50.0, 0.0);
  bias.extended.max_iters = bc.integer("max_iters", 20000, 1);
  bias.extended.tol = bc.number("tol", 1e-6, 0.0, INFINITY, true);
  ctx.check();
  const SpinDataset data = supervised_data(ctx, root, src, 5);
  ctx.check();
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::vector<ConfigIssue>{{"/supervised", e.what()}});
  }

  const PatternTable table = labeled_patterns(data);
  const std::vector<NeighborhoodResult> nbhds = learn_all_nbhds(table, data.n(), cfg);
  std::vector<Subset> sets;
  double mean_size = 0.0;
  int cap_hits = 0, skipped = 0;
  Json nb_doc = Json::array();
  for (const NeighborhoodResult& r : nbhds) {
    sets.push_back(r.nbhd);
    mean_size += static_cast<double>(r.nbhd.size()) / data.n();
    cap_hits += r.cap_hit;
    skipped += r.bins_skipped;
    nb_doc.push_back({{"neighbors", r.nbhd}, {"added", r.added}, {"pruned", r.pruned}, {"cap_hit", r.cap_hit}});
  }
  const ConditionalMrfs mrfs = fit_conditional_mrfs(data, sets, *bounds, cfg);
  const LabelPredictor pred = fit_bias(data, mrfs.f_plus, mrfs.f_minus, bias);
  double label_mean = 0.0;
  for (int r = 0; r < data.m(); ++r) label_mean += data.label(r);
  label_mean /= data.m();

  Json provenance = {{"config", ctx.echo}, {"seed", opt.seed}, {"m", data.m()}, {"label_mean", label_mean}};
  save_json(ctx.out("predictor.json"), label_predictor_to_json(pred, provenance));
  save_json(ctx.out("neighborhoods.json"), nb_doc);

  const LabelMetrics train = evaluate_predictor(pred, data);
  ctx.metrics["tau"] = exact_metric(cfg.effective_tau());
  ctx.metrics["t_star"] = exact_metric(cfg.effective_t_star());
  ctx.metrics["mean_neighborhood_size"] = exact_metric(mean_size);
  ctx.metrics["cap_hits"] = exact_metric(cap_hits);
  ctx.metrics["skipped_bins"] = exact_metric(skipped);
  ctx.metrics["bias"] = exact_metric(pred.bias);
  ctx.metrics["train_loss"] = sampled_metric(train.loss, train.loss_stderr);
  ctx.metrics["train_accuracy"] = sampled_metric(train.accuracy, std::sqrt(train.accuracy * (1 - train.accuracy) / data.m()));
  if (src.generated && src.enumerable && !root.has("idx")) {
    const Vector<double> joint = exact_joint_pmf(src.generated->model);
    const double pop = population_label_loss(pred, joint), bayes = bayes_label_loss(joint);
    ctx.metrics["population_loss"] = exact_metric(pop);
    ctx.metrics["bayes_loss"] = exact_metric(bayes);
    ctx.metrics["excess_loss"] = exact_metric(pop - bayes);
  }
}

void run_eval_supervised(Context& ctx, ConfigReader& root) {
  const auto& opt = ctx.options;
  if (!root.has("predictor")) root.fail("predictor", "is required");
  Source src = read_source(ctx, root, !root.has("idx"));
  ctx.check();
  const Json doc = load_json(ctx.resolve(root.text("predictor", "")));
  const LabelPredictor pred = label_predictor_from_json(doc);
  const SpinDataset data = supervised_data(ctx, root, src, 6);
  if (data.n() != pred.n) throw std::runtime_error("predictor and data dimensions differ");
  const LabelMetrics test = evaluate_predictor(pred, data);
  ctx.metrics["test_loss"] = sampled_metric(test.loss, test.loss_stderr);
  ctx.metrics["test_accuracy"] = sampled_metric(test.accuracy, std::sqrt(test.accuracy * (1 - test.accuracy) / data.m()));
  const double label_mean = doc.contains("provenance") ? doc["provenance"].value("label_mean", 0.0) : 0.0;
  LabelPredictor baseline{pred.n, MrfPotential(pred.n), MrfPotential(pred.n), std::atanh(std::clamp(label_mean, -0.999999, 0.999999)),
                          std::nullopt};
  const LabelMetrics base = evaluate_predictor(baseline, data);
  ctx.metrics["baseline_loss"] = sampled_metric(base.loss, base.loss_stderr);
  ctx.metrics["baseline_accuracy"] = sampled_metric(base.accuracy, std::sqrt(base.accuracy * (1 - base.accuracy) / data.m()));
  // Paired difference, so the shared sampling noise cancels in the stderr.
  double d_sum = 0.0, d_sq = 0.0;
  for (int r = 0; r < data.m(); ++r) {
    const SpinVector x = data.samples().row(r).transpose();
    const double d = logistic_loss(baseline.logit(x), data.label(r)) - logistic_loss(pred.logit(x), data.label(r));
    d_sum += d;
    d_sq += d * d;
  }
  const double m = data.m(), d_mean = d_sum / m;
  ctx.metrics["loss_improvement"] = sampled_metric(d_mean, m > 1 ? std::sqrt(std::max(0.0, d_sq / m - d_mean * d_mean) / (m - 1)) : 0.0);
  ctx.metrics["beats_baseline"] = {{"value", test.loss < base.loss ? 1.0 : 0.0}, {"method", "sampled"}, {"stderr", 0.0}};
  if (src.generated && src.enumerable && !root.has("idx")) {
    const Vector<double> joint = exact_joint_pmf(src.generated->model);
    ctx.metrics["population_loss"] = exact_metric(population_label_loss(pred, joint));
    ctx.metrics["bayes_loss"] = exact_metric(bayes_label_loss(joint));
  }
  (void)opt;
}

// report --------------------------------------------------------------------

void run_report(Context& ctx, ConfigReader& root) {
  std::vector<std::string> inputs;
  if (root.has("inputs")) {
    const Json& arr = root.raw("inputs");
    if (!arr.is_array()) root.fail("inputs", "must be an array of paths");
    else
      for (const Json& p : arr) {
        if (p.is_string()) inputs.push_back(ctx.resolve(p.get<std::string>()));
        else root.fail("inputs", "every entry must be a path string");
      }
  } else {
    ctx.echo["inputs"] = Json::array();
    if (fs::is_directory(ctx.options.out_dir))
      for (const auto& e : fs::recursive_directory_iterator(ctx.options.out_dir))
        if (e.is_regular_file() && e.path().filename() == "report.json" && e.path().parent_path() != fs::path(ctx.options.out_dir))
          inputs.push_back(e.path().string());
    std::sort(inputs.begin(), inputs.end());
  }
  ctx.check();
  std::ofstream csv(ctx.out("summary.csv"));
  csv << "source,kind,metric,value,method,stderr\n";
  csv.precision(12);
  Json summary = Json::array();
  for (const std::string& path : inputs) {
    std::string p = path;
    if (fs::is_directory(p)) p = (fs::path(p) / "report.json").string();
    const Json rep = load_json(p);
    const std::string kind = rep.value("kind", "");
    const Json metrics = rep.value("metrics", Json::object());
    for (const auto& [name, m] : metrics.items()) {
      csv << p << ',' << kind << ',' << name << ',' << m.value("value", 0.0) << ',' << m.value("method", "") << ',';
      if (m.contains("stderr")) csv << m["stderr"].get<double>();
      csv << '\n';
    }
    summary.push_back({{"source", p}, {"kind", kind}, {"status", rep.value("status", "")}, {"metrics", metrics}});
  }
  ctx.metrics["reports"] = {{"value", static_cast<double>(inputs.size())}, {"method", "count"}};
  save_json(ctx.out("summary.json"), summary);
}

}  // namespace

Json run_experiment(ExperimentKind kind, const Json& config, const ExperimentOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(options.out_dir);
  Context ctx{options, {}, Json::object(), Json::object(), Json::array(), Json::array()};
  ConfigReader root(config, ctx.issues, ctx.echo);
  switch (kind) {
    case ExperimentKind::kGenerate: run_generate(ctx, root); break;
    case ExperimentKind::kSample: run_sample(ctx, root); break;
    case ExperimentKind::kStructure: run_structure(ctx, root); break;
    case ExperimentKind::kDistribution: run_distribution(ctx, root); break;
    case ExperimentKind::kTrainSupervised: run_train_supervised(ctx, root); break;
    case ExperimentKind::kEvalSupervised: run_eval_supervised(ctx, root); break;
    case ExperimentKind::kReport: run_report(ctx, root); break;
  }
  ctx.check();
  Json report;
  report["status"] = "ok";
  report["kind"] = experiment_kind_name(kind);
  report["seed"] = options.seed;
  report["exact"] = options.exact;
  report["config"] = ctx.echo;
  report["metrics"] = ctx.metrics;
  report["trials"] = ctx.trials;
  report["artifacts"] = ctx.artifacts;
  report["timings"] = {{"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
  save_json((fs::path(options.out_dir) / "report.json").string(), report);
  return report;
}

}  // namespace rbmlearn
