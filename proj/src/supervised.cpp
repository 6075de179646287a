#include "rbmlearn/supervised.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "rbmlearn/enumerate.hpp"
#include "rbmlearn/parallel.hpp"
#include "rbmlearn/rng.hpp"

namespace rbmlearn {

void SupervisedRbm::validate() const {
  base.validate();
  if (w_label.size() != base.n_hidden()) throw std::invalid_argument("supervised rbm: w_label must have n_hidden entries");
  if (!w_label.allFinite() || !std::isfinite(b_label)) throw std::invalid_argument("supervised rbm: non-finite parameter");
}

Rbm SupervisedRbm::conditional(int y) const {
  if (y != 1 && y != -1) throw std::invalid_argument("conditional: y must be ±1");
  return Rbm(base.weights, base.visible_bias, base.hidden_bias + y * w_label);
}

namespace {

double log2cosh(double z) {
  const double a = std::abs(z);
  return a + std::log1p(std::exp(-2.0 * a));
}

}  // namespace

Vector<double> exact_joint_pmf(const SupervisedRbm& model) {
  model.validate();
  const int n = model.n_visible();
  if (n + 1 > kMaxJointEnumeration) throw CapExceeded("exact_joint_pmf: too many visible units");
  Vector<double> logw(Eigen::Index{1} << (n + 1));
  for (Eigen::Index c = 0; c < logw.size(); ++c) {
    const auto cfg = static_cast<std::uint64_t>(c);
    const SpinVector xs = config_spins(cfg, n);
    const Vector<double> x = xs.cast<double>();
    const int y = spin_at(cfg, n);
    const Vector<double> field = model.base.hidden_bias + y * model.w_label + model.base.weights.transpose() * x;
    double v = model.base.visible_bias.dot(x) + model.b_label * y;
    for (Eigen::Index j = 0; j < field.size(); ++j) v += log2cosh(field(j));
    logw(c) = v;
  }
  return normalize_log_table(logw);
}

SpinDataset exact_labeled_sample(const Vector<double>& joint, int m, std::uint64_t seed) {
  const int n = table_dimension(joint) - 1;
  if (n < 1) throw std::invalid_argument("exact_labeled_sample: joint table needs at least one visible coordinate");
  const SpinDataset full = exact_sample(joint, m, seed);
  SpinMatrix x = full.samples().leftCols(n);
  SpinVector y = full.samples().col(n);
  return SpinDataset(std::move(x), std::move(y));
}

SpinDataset gibbs_sample_supervised(const SupervisedRbm& model, int burn_in, int n_samples, int chains, std::uint64_t seed,
                                    int threads) {
  model.validate();
  if (burn_in < 0 || n_samples < 0 || chains < 1) throw std::invalid_argument("gibbs_sample_supervised: bad counts");
  const int n = model.n_visible(), nh = model.n_hidden();
  SpinMatrix rows(n_samples, n);
  SpinVector labels(n_samples);
  std::vector<int> offset(static_cast<std::size_t>(chains) + 1, 0);
  for (int c = 0; c < chains; ++c) offset[c + 1] = offset[c] + n_samples / chains + (c < n_samples % chains ? 1 : 0);
  parallel_for(chains, threads, [&](int c) {
    Xoshiro256 rng(seed, static_cast<std::uint64_t>(c));
    Vector<double> x(n), h(nh);
    int y = rng.spin(0.0);
    for (int k = 0; k < n; ++k) x(k) = rng.spin(0.0);
    auto sweep = [&] {
      const Vector<double> fh = model.base.hidden_bias + y * model.w_label + model.base.weights.transpose() * x;
      for (int j = 0; j < nh; ++j) h(j) = rng.spin(std::tanh(fh(j)));
      const Vector<double> fx = model.base.visible_bias + model.base.weights * h;
      for (int k = 0; k < n; ++k) x(k) = rng.spin(std::tanh(fx(k)));
      y = rng.spin(std::tanh(model.b_label + model.w_label.dot(h)));
    };
    for (int s = 0; s < burn_in; ++s) sweep();
    for (int r = offset[c]; r < offset[c + 1]; ++r) {
      sweep();
      for (int k = 0; k < n; ++k) rows(r, k) = static_cast<std::int8_t>(x(k));
      labels(r) = static_cast<std::int8_t>(y);
    }
  });
  return SpinDataset(std::move(rows), std::move(labels));
}

PatternTable labeled_patterns(const SpinDataset& data) {
  if (!data.has_labels()) throw DegenerateData("labeled_patterns: dataset has no labels");
  Subset cols(static_cast<std::size_t>(data.n()));
  for (int k = 0; k < data.n(); ++k) cols[k] = k;
  return compress_patterns(data, cols, -1);
}

PatternTable labeled_patterns(const Vector<double>& joint) {
  const int n = table_dimension(joint) - 1;
  Subset cols(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) cols[k] = k;
  return compress_pmf(joint, cols, n);
}

AssumptionReport supervised_assumptions(const SupervisedRbm& model) {
  model.validate();
  const Matrix<double>& w = model.base.weights;
  AssumptionReport out;
  double min_w = INFINITY;
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      if (w(i, j) < 0.0) out.ferromagnetic = false;
      if (w(i, j) != 0.0) min_w = std::min(min_w, std::abs(w(i, j)));
    }
  out.min_weight = std::isfinite(min_w) ? min_w : 0.0;
  double rows = 0.0;
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    rows = std::max(rows, w.row(i).cwiseAbs().sum() + std::abs(model.base.visible_bias(i)));
  double cols = INFINITY;
  for (int y : {1, -1}) {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      worst = std::max(worst, w.col(j).cwiseAbs().sum() + std::abs(model.base.hidden_bias(j) + y * model.w_label(j)));
    cols = std::min(cols, worst);
  }
  out.lambda = std::max(rows, cols);
  const Vector<double> joint = exact_joint_pmf(model);
  const Eigen::Index half = joint.size() / 2;
  const double plus = joint.head(half).sum();
  out.label_balance = std::min(plus, 1.0 - plus);
  return out;
}

StopMode parse_stop_mode(const std::string& name) {
  if (name == "threshold") return StopMode::kThreshold;
  if (name == "variance-shrink") return StopMode::kVarianceShrink;
  throw std::invalid_argument("unknown stop mode '" + name + "' (expected threshold or variance-shrink)");
}

std::string stop_mode_name(StopMode m) { return m == StopMode::kThreshold ? "threshold" : "variance-shrink"; }

void SupervisedConfig::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("supervised.alpha must be > 0");
  if (!(beta_bal > 0.0 && beta_bal <= 1.0)) throw std::invalid_argument("supervised.beta_bal must lie in (0, 1]");
  if (!(lambda >= 0.0)) throw std::invalid_argument("supervised.lambda must be >= 0");
  if (!(bias_bound > 0.0)) throw std::invalid_argument("supervised.bias_bound must be > 0");
  if (t_star < 0) throw std::invalid_argument("supervised.t_star must be >= 0");
  if (min_bin < 0.0) throw std::invalid_argument("supervised.min_bin must be >= 0");
  if (!(shrink_fraction > 0.0 && shrink_fraction < 1.0)) throw std::invalid_argument("supervised.shrink_fraction must lie in (0, 1)");
  if (!(effective_tau() > 0.0)) throw std::invalid_argument("supervised.tau must be > 0");
}

double SupervisedConfig::effective_tau() const {
  return tau > 0.0 ? tau : 0.5 * beta_bal * alpha * alpha * std::exp(-12.0 * lambda);
}

int SupervisedConfig::effective_t_star() const {
  if (t_star > 0) return std::min(t_star, kMaxGreedySteps);
  const double tau_eff = effective_tau();
  return static_cast<int>(std::min<double>(8.0 / (tau_eff * tau_eff), kMaxGreedySteps));
}

CovResult avg_conditional_covariance(const PatternTable& table, int u, int v, const Subset& s, double min_bin) {
  const int n = static_cast<int>(table.patterns.cols());
  if (u < 0 || v < 0 || u >= n || v >= n) throw std::out_of_range("avg_conditional_covariance: index out of range");
  for (int k : s)
    if (k == u || k == v || k < 0 || k >= n) throw std::invalid_argument("avg_conditional_covariance: bad conditioning set");
  if (s.size() > 62) throw CapExceeded("avg_conditional_covariance: conditioning set too large");
  struct Acc {
    double w = 0, xu = 0, xv = 0, xuv = 0;
  };
  std::unordered_map<std::uint64_t, Acc> bins;
  const double total = table.total_weight();
  if (!(total > 0.0)) throw DegenerateData("avg_conditional_covariance: no labeled samples");
  for (int r = 0; r < table.rows(); ++r) {
    std::uint64_t key = 0;
    for (std::size_t b = 0; b < s.size(); ++b)
      if (table.patterns(r, s[b]) < 0) key |= std::uint64_t{1} << b;
    const double xu = table.patterns(r, u), xv = table.patterns(r, v);
    for (int y : {1, -1}) {
      const double w = y > 0 ? table.weight_plus(r) : table.weight_minus(r);
      if (w == 0.0) continue;
      Acc& a = bins[key | (y < 0 ? std::uint64_t{1} << 63 : 0)];
      a.w += w;
      a.xu += w * xu;
      a.xv += w * xv;
      a.xuv += w * xu * xv;
    }
  }
  CovResult out;
  out.min_bin_cov = INFINITY;
  double skipped = 0.0;
  for (const auto& [key, a] : bins) {
    out.min_bin_fraction = std::min(out.min_bin_fraction, a.w / total);
    if (a.w < min_bin) {
      ++out.bins_skipped;
      skipped += a.w;
      continue;
    }
    const double cov = a.xuv / a.w - (a.xu / a.w) * (a.xv / a.w);
    out.value += (a.w / total) * cov;
    out.min_bin_cov = std::min(out.min_bin_cov, cov);
    ++out.bins_used;
  }
  if (out.bins_used == 0) out.min_bin_cov = 0.0;
  out.skipped_fraction = skipped / total;
  return out;
}

CovResult avg_conditional_covariance(const SpinDataset& data, int u, int v, const Subset& s, double min_bin) {
  if (!data.has_labels() || data.m() == 0) throw DegenerateData("avg_conditional_covariance: no labeled samples");
  return avg_conditional_covariance(labeled_patterns(data), u, v, s, min_bin);
}

NeighborhoodResult learn_supervised_nbhd(const PatternTable& table, int u, const SupervisedConfig& cfg) {
  cfg.validate();
  const int n = static_cast<int>(table.patterns.cols());
  if (u < 0 || u >= n) throw std::out_of_range("learn_supervised_nbhd: node out of range");
  const double tau = cfg.effective_tau();
  const int t_star = cfg.effective_t_star();
  NeighborhoodResult out;
  Subset s;
  auto in_set = [&](int v) { return v == u || std::find(s.begin(), s.end(), v) != s.end(); };
  auto sorted = [](Subset x) {
    std::sort(x.begin(), x.end());
    return x;
  };

  double variance = avg_conditional_covariance(table, u, u, {}, cfg.min_bin).value;
  while (static_cast<int>(s.size()) < t_star) {
    int best = -1;
    double best_cov = -INFINITY;
    const Subset cond = sorted(s);
    for (int v = 0; v < n; ++v) {
      if (in_set(v)) continue;
      const CovResult c = avg_conditional_covariance(table, u, v, cond, cfg.min_bin);
      out.bins_skipped += c.bins_skipped;
      if (c.value > best_cov) {
        best_cov = c.value;
        best = v;
      }
    }
    if (best < 0) break;
    if (cfg.stop_mode == StopMode::kThreshold) {
      if (best_cov < tau) break;
    } else {
      Subset next = cond;
      next.push_back(best);
      const double shrunk = avg_conditional_covariance(table, u, u, sorted(next), cfg.min_bin).value;
      if (variance - shrunk < cfg.shrink_fraction * variance) break;
      variance = shrunk;
    }
    s.push_back(best);
    out.added.push_back(best);
  }
  if (static_cast<int>(s.size()) == t_star) {
    // The cap counts as hit when another candidate would still have qualified.
    const Subset cond = sorted(s);
    for (int v = 0; v < n && !out.cap_hit; ++v)
      if (!in_set(v) && avg_conditional_covariance(table, u, v, cond, cfg.min_bin).value >= tau) out.cap_hit = true;
  }

  if (cfg.stop_mode == StopMode::kThreshold) {
    Subset kept;
    for (int v : s) {
      Subset rest;
      for (int w : s)
        if (w != v) rest.push_back(w);
      const CovResult c = avg_conditional_covariance(table, u, v, sorted(rest), cfg.min_bin);
      out.bins_skipped += c.bins_skipped;
      (c.value < tau ? out.pruned : kept).push_back(v);
    }
    s = kept;
  }
  out.nbhd = sorted(s);
  return out;
}

NeighborhoodResult learn_supervised_nbhd(const SpinDataset& data, int u, const SupervisedConfig& cfg) {
  return learn_supervised_nbhd(labeled_patterns(data), u, cfg);
}

std::vector<NeighborhoodResult> learn_all_nbhds(const PatternTable& table, int n, const SupervisedConfig& cfg) {
  std::vector<NeighborhoodResult> out(static_cast<std::size_t>(n));
  parallel_for(n, cfg.threads, [&](int u) { out[u] = learn_supervised_nbhd(table, u, cfg); });
  return out;
}

ConditionalMrfs fit_conditional_mrfs(const SpinDataset& data, const std::vector<Subset>& nbhds, const NormBounds& bounds,
                                     const SupervisedConfig& cfg) {
  if (!data.has_labels()) throw DegenerateData("fit_conditional_mrfs: dataset has no labels");
  const SpinDataset plus = data.with_label(1), minus = data.with_label(-1);
  if (plus.m() < cfg.min_class_count || minus.m() < cfg.min_class_count)
    throw DegenerateData("fit_conditional_mrfs: label classes have " + std::to_string(plus.m()) + " and " +
                         std::to_string(minus.m()) + " samples; need at least " + std::to_string(cfg.min_class_count));
  ConditionalMrfs out;
  out.m_plus = plus.m();
  out.m_minus = minus.m();
  const int inner = std::max(1, cfg.threads / 2);
  parallel_for(2, cfg.threads, [&](int k) {
    if (k == 0) out.f_plus = distribution_from_structure(plus, nbhds, bounds, inner);
    else out.f_minus = distribution_from_structure(minus, nbhds, bounds, inner);
  });
  return out;
}

double LabelPredictor::logit(const SpinVector& x) const {
  if (x.size() != n) throw std::invalid_argument("LabelPredictor: input has wrong length");
  if (extended_coeffs) return bias + extended_coeffs->dot(node_features(x));
  return 0.5 * (f_plus(x) - f_minus(x)) + bias;
}

Vector<double> LabelPredictor::node_features(const SpinVector& x) const {
  Vector<double> out = Vector<double>::Zero(n);
  auto add = [&](const MrfPotential& f, double sign) {
    for (const auto& [s, c] : f.terms()) {
      int prod = 1;
      for (int i : s) prod *= x(i);
      for (int i : s) out(i) += sign * 0.5 * c * prod;
    }
  };
  add(f_plus, 1.0);
  add(f_minus, -1.0);
  return out;
}

double predict_label(const SpinVector& x, const LabelPredictor& pred) { return std::tanh(pred.logit(x)); }

namespace {

/// argmin over |b| <= B of Σ_r wp_r ℓ(g_r + b, +1) + wm_r ℓ(g_r + b, -1).
double solve_bias(const Vector<double>& g, const Vector<double>& wp, const Vector<double>& wm, double bound) {
  auto deriv = [&](double b) {
    double d = 0.0, h = 0.0;
    for (Eigen::Index r = 0; r < g.size(); ++r) {
      const double v = g(r) + b;
      d += wp(r) * logistic_grad(v, 1) + wm(r) * logistic_grad(v, -1);
      h += (wp(r) + wm(r)) * logistic_curvature(v);
    }
    return std::pair{d, h};
  };
  const double total = wp.sum() + wm.sum();
  double lo = -bound, hi = bound;
  if (deriv(lo).first >= 0.0) return lo;
  if (deriv(hi).first <= 0.0) return hi;
  double b = 0.0;
  for (int it = 0; it < 200; ++it) {
    const auto [d, h] = deriv(b);
    if (std::abs(d) / total <= 1e-12) break;
    if (d > 0.0) hi = b;
    else lo = b;
    double next = h > 0.0 ? b - d / h : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    b = next;
  }
  return b;
}

}  // namespace

LabelPredictor fit_bias(const SpinDataset& data, const MrfPotential& f_plus, const MrfPotential& f_minus,
                        const BiasFitOptions& options) {
  if (!data.has_labels() || data.m() == 0) throw DegenerateData("fit_bias: labeled data required");
  LabelPredictor pred{data.n(), f_plus, f_minus, 0.0, std::nullopt};
  int plus = 0;
  for (int r = 0; r < data.m(); ++r) plus += data.label(r) > 0;
  if (plus == 0 || plus == data.m()) {
    const double m = data.m();
    pred.f_plus = MrfPotential(data.n());
    pred.f_minus = MrfPotential(data.n());
    pred.bias = std::copysign(std::min(std::atanh(std::max(0.0, 1.0 - 1.0 / m)), options.bias_bound), plus ? 1.0 : -1.0);
    return pred;
  }
  const PatternTable table = labeled_patterns(data);
  if (options.mode == BiasMode::kScalar) {
    Vector<double> g(table.rows());
    for (int r = 0; r < table.rows(); ++r) g(r) = pred.logit(table.patterns.row(r).transpose());
    pred.bias = solve_bias(g, table.weight_plus, table.weight_minus, options.bias_bound);
    return pred;
  }
  WeightedDesign d{Matrix<double>(table.rows(), data.n() + 1), table.weight_plus, table.weight_minus};
  for (int r = 0; r < table.rows(); ++r) {
    d.features(r, 0) = 1.0;
    d.features.row(r).tail(data.n()) = pred.node_features(table.patterns.row(r).transpose()).transpose();
  }
  // Column scaling keeps every feature inside [-1, 1].
  Vector<double> scale = Vector<double>::Ones(d.cols());
  for (Eigen::Index c = 1; c < d.cols(); ++c) {
    const double sup = d.features.col(c).cwiseAbs().maxCoeff();
    if (sup > 0.0) scale(c) = sup;
    d.features.col(c) /= scale(c);
  }
  const FitResult fit = fit_weighted(d, options.extended);
  pred.bias = fit.coeffs(0);
  pred.extended_coeffs = fit.coeffs.tail(data.n()).cwiseQuotient(scale.tail(data.n()));
  return pred;
}

LabelPredictor fit_bias_exact(const Vector<double>& joint, const MrfPotential& f_plus, const MrfPotential& f_minus,
                              double bias_bound) {
  const int n = table_dimension(joint) - 1;
  LabelPredictor pred{n, f_plus, f_minus, 0.0, std::nullopt};
  const PatternTable table = labeled_patterns(joint);
  Vector<double> g(table.rows());
  for (int r = 0; r < table.rows(); ++r) g(r) = pred.logit(table.patterns.row(r).transpose());
  pred.bias = solve_bias(g, table.weight_plus, table.weight_minus, bias_bound);
  return pred;
}

LabelMetrics evaluate_predictor(const LabelPredictor& pred, const SpinDataset& data) {
  if (!data.has_labels() || data.m() == 0) throw DegenerateData("evaluate_predictor: labeled data required");
  double sum = 0.0, sum_sq = 0.0;
  int correct = 0;
  for (int r = 0; r < data.m(); ++r) {
    const SpinVector x = data.samples().row(r).transpose();
    const double h = pred.logit(x);
    const double l = logistic_loss(h, data.label(r));
    sum += l;
    sum_sq += l * l;
    correct += (h >= 0.0 ? 1 : -1) == data.label(r);
  }
  const double m = data.m();
  LabelMetrics out;
  out.loss = sum / m;
  out.accuracy = correct / m;
  out.loss_stderr = m > 1 ? std::sqrt(std::max(0.0, sum_sq / m - out.loss * out.loss) / (m - 1)) : 0.0;
  return out;
}

double population_label_loss(const LabelPredictor& pred, const Vector<double>& joint) {
  const int n = table_dimension(joint) - 1;
  if (n != pred.n) throw std::invalid_argument("population_label_loss: dimension mismatch");
  double total = 0.0;
  for (std::uint64_t x = 0; x < (std::uint64_t{1} << n); ++x) {
    const double h = pred.logit(config_spins(x, n));
    total += joint(static_cast<Eigen::Index>(x)) * logistic_loss(h, 1);
    total += joint(static_cast<Eigen::Index>(x | (std::uint64_t{1} << n))) * logistic_loss(h, -1);
  }
  return total;
}

double exact_label_mean(const Vector<double>& joint, std::uint64_t x_config) {
  const int n = table_dimension(joint) - 1;
  const double p = joint(static_cast<Eigen::Index>(x_config));
  const double q = joint(static_cast<Eigen::Index>(x_config | (std::uint64_t{1} << n)));
  return (p - q) / (p + q);
}

double bayes_label_loss(const Vector<double>& joint) {
  const int n = table_dimension(joint) - 1;
  double total = 0.0;
  for (std::uint64_t x = 0; x < (std::uint64_t{1} << n); ++x) {
    const double p = joint(static_cast<Eigen::Index>(x));
    const double q = joint(static_cast<Eigen::Index>(x | (std::uint64_t{1} << n)));
    if (p > 0.0) total -= p * std::log(p / (p + q));
    if (q > 0.0) total -= q * std::log(q / (p + q));
  }
  return total;
}

}  // namespace rbmlearn
