#pragma once

#include <cstdint>

#include "rbmlearn/dataset.hpp"
#include "rbmlearn/rbm.hpp"

namespace rbmlearn {

struct GibbsOptions {
  int burn_in = 1000;   // sweeps discarded per chain
  int n_samples = 0;    // total rows returned
  int thin = 1;         // sweeps between recorded rows
  int chains = 1;       // independent chains; rows are concatenated in chain order
  int threads = 1;
};

/// Block Gibbs sampling: H | X then X | H, each layer coordinate-wise
/// independent with means tanh(b_hid + W^T x) and tanh(b_vis + W h). Chains
/// start from i.i.d. fair spins. Chain c draws from substream (seed, c), so
/// the output depends only on (model, options minus threads, seed).
SpinDataset gibbs_sample(const Rbm& model, const GibbsOptions& options, std::uint64_t seed);

}  // namespace rbmlearn
