#include "rbmlearn/generators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rbmlearn/rng.hpp"

namespace rbmlearn {

Topology parse_topology(const std::string& name) {
  if (name == "chain") return Topology::kChain;
  if (name == "cycle") return Topology::kCycle;
  if (name == "grid") return Topology::kGrid;
  if (name == "random-bipartite") return Topology::kRandomBipartite;
  if (name == "star") return Topology::kStar;
  throw std::invalid_argument("unknown topology '" + name + "'");
}

std::string topology_name(Topology t) {
  switch (t) {
    case Topology::kChain: return "chain";
    case Topology::kCycle: return "cycle";
    case Topology::kGrid: return "grid";
    case Topology::kRandomBipartite: return "random-bipartite";
    case Topology::kStar: return "star";
  }
  return "chain";
}

SignMode parse_sign_mode(const std::string& name) {
  if (name == "ferromagnetic") return SignMode::kFerromagnetic;
  if (name == "mixed") return SignMode::kMixed;
  throw std::invalid_argument("unknown sign mode '" + name + "'");
}

std::string sign_mode_name(SignMode m) { return m == SignMode::kFerromagnetic ? "ferromagnetic" : "mixed"; }

void GeneratorSpec::validate() const {
  if (n_visible < 1) throw std::invalid_argument("generator.n_visible must be >= 1");
  if (topology == Topology::kCycle && n_visible < 3) throw std::invalid_argument("generator.n_visible must be >= 3 for a cycle");
  if (topology == Topology::kGrid) {
    const int cols = grid_cols > 0 ? grid_cols : static_cast<int>(std::lround(std::sqrt(n_visible)));
    if (cols < 1 || n_visible % cols != 0) throw std::invalid_argument("generator.grid_cols must divide n_visible");
  }
  if (topology == Topology::kRandomBipartite && n_hidden < 0) throw std::invalid_argument("generator.n_hidden must be >= 0");
  if (!(weight_scale >= 0.0) || !std::isfinite(weight_scale)) throw std::invalid_argument("generator.weight_scale must be >= 0");
  if (alpha < 0.0) throw std::invalid_argument("generator.alpha must be >= 0");
  if (!(edge_probability >= 0.0 && edge_probability <= 1.0))
    throw std::invalid_argument("generator.edge_probability must lie in [0, 1]");
  if (visible_bias_scale < 0.0 || hidden_bias_scale < 0.0) throw std::invalid_argument("generator bias scales must be >= 0");
}

double ising_edge_weight(double coupling) { return std::atanh(std::sqrt(std::tanh(std::abs(coupling)))); }

std::vector<Subset> two_hop_graph(const Rbm& model) {
  const int n = model.n_visible();
  std::vector<Subset> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      for (int h = 0; h < model.n_hidden(); ++h)
        if (model.weights(i, h) != 0.0 && model.weights(j, h) != 0.0) {
          out[i].push_back(j);
          break;
        }
    }
  return out;
}

Rbm dobrushin_rescale(const Rbm& model) {
  auto scaled = [&](double s) { return Rbm(model.weights * s, model.visible_bias * s, model.hidden_bias); };
  auto ok = [&](double s) {
    const NormBounds b = norm_bounds(scaled(s));
    return b.lambda1 <= 1.0 && b.lambda2 <= 1.0;
  };
  if (ok(1.0)) return model;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return scaled(lo);
}

GeneratedModel generate_model(const GeneratorSpec& spec) {
  spec.validate();
  Xoshiro256 rng(spec.seed, 0x6e);
  const int n = spec.n_visible;
  GeneratedModel out;
  auto random_sign = [&]() { return spec.sign_mode == SignMode::kMixed && rng.uniform() < 0.5 ? -1.0 : 1.0; };

  Matrix<double> w;
  switch (spec.topology) {
    case Topology::kChain:
    case Topology::kCycle:
    case Topology::kGrid: {
      if (spec.topology == Topology::kGrid) {
        const int cols = spec.grid_cols > 0 ? spec.grid_cols : static_cast<int>(std::lround(std::sqrt(n)));
        const int rows = n / cols;
        for (int r = 0; r < rows; ++r)
          for (int c = 0; c < cols; ++c) {
            const int k = r * cols + c;
            if (c + 1 < cols) out.edges.emplace_back(k, k + 1);
            if (r + 1 < rows) out.edges.emplace_back(k, k + cols);
          }
      } else {
        for (int k = 0; k + 1 < n; ++k) out.edges.emplace_back(k, k + 1);
        if (spec.topology == Topology::kCycle) out.edges.emplace_back(0, n - 1);
      }
      w = Matrix<double>::Zero(n, static_cast<Eigen::Index>(out.edges.size()));
      for (std::size_t e = 0; e < out.edges.size(); ++e) {
        const double j = spec.weight_scale * random_sign();
        double a = ising_edge_weight(j);
        if (spec.sign_mode == SignMode::kFerromagnetic) a = std::max(a, spec.alpha);
        w(out.edges[e].first, static_cast<Eigen::Index>(e)) = a;
        w(out.edges[e].second, static_cast<Eigen::Index>(e)) = j < 0 ? -a : a;
        out.couplings.push_back(std::copysign(std::atanh(std::tanh(a) * std::tanh(a)), j));
      }
      break;
    }
    case Topology::kRandomBipartite: {
      w = Matrix<double>::Zero(n, spec.n_hidden);
      for (int i = 0; i < n; ++i)
        for (int h = 0; h < spec.n_hidden; ++h) {
          if (rng.uniform() >= spec.edge_probability) continue;
          if (spec.sign_mode == SignMode::kFerromagnetic) {
            w(i, h) = spec.alpha + (std::max(spec.weight_scale, spec.alpha) - spec.alpha) * rng.uniform();
          } else {
            w(i, h) = spec.weight_scale * rng.uniform(-1.0, 1.0);
          }
        }
      break;
    }
    case Topology::kStar: {
      const int hubs = std::max(1, spec.n_hidden);
      w = Matrix<double>::Zero(n, hubs);
      for (int i = 0; i < n; ++i) {
        const int h = i % hubs;
        double a = spec.weight_scale;
        if (spec.sign_mode == SignMode::kFerromagnetic) a = std::max(a, spec.alpha);
        w(i, h) = a * random_sign();
      }
      break;
    }
  }
  Vector<double> b_vis(n), b_hid(w.cols());
  for (int i = 0; i < n; ++i) b_vis(i) = spec.visible_bias_scale * rng.uniform(-1.0, 1.0);
  for (Eigen::Index h = 0; h < w.cols(); ++h) b_hid(h) = spec.hidden_bias_scale * rng.uniform(-1.0, 1.0);
  Rbm base(std::move(w), std::move(b_vis), std::move(b_hid));
  if (spec.dobrushin_scale) {
    base = dobrushin_rescale(base);
    if (!out.edges.empty()) {
      for (std::size_t e = 0; e < out.edges.size(); ++e) {
        const double a = base.weights(out.edges[e].first, static_cast<Eigen::Index>(e));
        const double b = base.weights(out.edges[e].second, static_cast<Eigen::Index>(e));
        out.couplings[e] = std::atanh(std::tanh(a) * std::tanh(b));
      }
    }
  }
  out.model.w_label = Vector<double>::Zero(base.n_hidden());
  if (spec.label_coupling) {
    out.supervised = true;
    for (int h = 0; h < base.n_hidden(); ++h) out.model.w_label(h) = spec.label_coupling->scale * rng.uniform(-1.0, 1.0);
    out.model.b_label = spec.label_coupling->bias;
  }
  out.model.base = std::move(base);
  out.model.validate();
  return out;
}

}  // namespace rbmlearn
