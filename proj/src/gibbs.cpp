#include "rbmlearn/gibbs.hpp"

#include <stdexcept>
#include <vector>

#include "rbmlearn/enumerate.hpp"
#include "rbmlearn/parallel.hpp"
#include "rbmlearn/rng.hpp"

namespace rbmlearn {

namespace {

void sample_layer(const Vector<double>& field, Vector<double>& out, Xoshiro256& rng) {
  for (Eigen::Index k = 0; k < field.size(); ++k) out(k) = rng.spin(std::tanh(field(k)));
}

}  // namespace

SpinDataset gibbs_sample(const Rbm& model, const GibbsOptions& options, std::uint64_t seed) {
  if (options.burn_in < 0 || options.n_samples < 0 || options.thin < 0 || options.chains < 1)
    throw std::invalid_argument("gibbs_sample: counts must be non-negative and chains >= 1");
  const int n = model.n_visible();
  const int thin = std::max(1, options.thin);
  const int chains = options.chains;
  SpinMatrix rows(options.n_samples, n);

  std::vector<int> offset(static_cast<std::size_t>(chains) + 1, 0);
  for (int c = 0; c < chains; ++c)
    offset[c + 1] = offset[c] + options.n_samples / chains + (c < options.n_samples % chains ? 1 : 0);

  parallel_for(chains, options.threads, [&](int c) {
    Xoshiro256 rng(seed, static_cast<std::uint64_t>(c));
    Vector<double> x(n), h(model.n_hidden());
    for (int k = 0; k < n; ++k) x(k) = rng.spin(0.0);
    auto sweep = [&] {
      sample_layer(model.hidden_bias + model.weights.transpose() * x, h, rng);
      sample_layer(model.visible_bias + model.weights * h, x, rng);
    };
    for (int s = 0; s < options.burn_in; ++s) sweep();
    for (int r = offset[c]; r < offset[c + 1]; ++r) {
      for (int s = 0; s < thin; ++s) sweep();
      for (int k = 0; k < n; ++k) rows(r, k) = static_cast<std::int8_t>(x(k));
    }
  });
  return SpinDataset(std::move(rows));
}

double embedding_deviation(const TanhNetwork& net, int replication) {
  const EmbeddedNetwork emb = rbm_from_tanh_network(net, replication);
  const int n = net.inputs();
  if (n > kMaxJointEnumeration) throw CapExceeded("embedding_deviation: too many inputs to enumerate");
  double worst = 0.0;
  for (std::uint64_t cfg = 0; cfg < (std::uint64_t{1} << n); ++cfg) {
    const SpinVector x = config_spins(cfg, n);
    worst = std::max(worst, std::abs(conditional_mean(emb.model, emb.target, x) - net(x.cast<double>())));
  }
  return worst;
}

}  // namespace rbmlearn
