#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rbmlearn/distribution.hpp"
#include "rbmlearn/rbm.hpp"
#include "rbmlearn/supervised.hpp"

namespace rbmlearn {

enum class Topology { kChain, kCycle, kGrid, kRandomBipartite, kStar };
enum class SignMode { kFerromagnetic, kMixed };

Topology parse_topology(const std::string& name);
std::string topology_name(Topology t);
SignMode parse_sign_mode(const std::string& name);
std::string sign_mode_name(SignMode m);

struct LabelCouplingSpec {
  double scale = 0.5;  // w_label_j ~ U[-scale, scale]
  double bias = 0.0;   // b_label
};

/// For chain, cycle and grid every edge {i, j} gets its own hidden unit of
/// degree 2 realizing the Ising coupling J = weight_scale (random sign in mixed
/// mode): W = atanh(sqrt(tanh |J|)) on both ends. The other topologies draw
/// weights directly.
struct GeneratorSpec {
  Topology topology = Topology::kChain;
  int n_visible = 5;
  int n_hidden = 0;              // random-bipartite and star; edge topologies derive it
  int grid_cols = 0;             // grid only; 0 means square
  double weight_scale = 0.4;
  SignMode sign_mode = SignMode::kFerromagnetic;
  double alpha = 0.0;            // ferromagnetic floor on present weights
  double edge_probability = 0.5; // random-bipartite
  double visible_bias_scale = 0.0;
  double hidden_bias_scale = 0.0;
  bool dobrushin_scale = false;
  std::optional<LabelCouplingSpec> label_coupling;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GeneratedModel {
  SupervisedRbm model;  // w_label is zero and b_label 0 without label coupling
  bool supervised = false;
  std::vector<std::pair<int, int>> edges;  // Ising edges for edge topologies
  std::vector<double> couplings;           // J per edge
};

GeneratedModel generate_model(const GeneratorSpec& spec);

/// RBM weight realizing Ising coupling |J| on a degree-2 hidden unit.
double ising_edge_weight(double coupling);

/// i ~ j iff some hidden unit has nonzero weight to both.
std::vector<Subset> two_hop_graph(const Rbm& model);

/// Scales W and b_vis by the largest s <= 1 with λ1, λ2 <= 1.
Rbm dobrushin_rescale(const Rbm& model);

}  // namespace rbmlearn
