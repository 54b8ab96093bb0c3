// Copyright 2026 The EMR4D Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "emr4d/amls.hpp"

#include <algorithm>
#include <string>

#include "emr4d/error.hpp"
#include "emr4d/parallel.hpp"
#include "emr4d/rng.hpp"

namespace emr4d {

RdoConfig RdoConfig::for_channel(Channel ch, double lambda) {
  RdoConfig c;
  c.lambda = lambda;
  c.channel = ch;
  if (ch == Channel::Y) {
    c.kind = KernelKind::Epanechnikov;
    c.max_k = 16;
  } else {
    c.kind = KernelKind::Gaussian;
    c.max_k = 8;
  }
  return c;
}

std::uint64_t candidate_seed(std::uint64_t base, const BlockOrigin& o, Channel ch, int k) {
  return derive_seed(base, {static_cast<std::uint64_t>(o.group), static_cast<std::uint64_t>(o.block_row),
                            static_cast<std::uint64_t>(o.block_col), static_cast<std::uint64_t>(ch),
                            static_cast<std::uint64_t>(k)});
}

RdoResult select_model_count(const PvsBlock& block, const RdoConfig& cfg, std::uint64_t seed, int threads) {
  if (cfg.lambda < 0) throw InvalidArgument("lambda must be non-negative");
  const BitTable table = bit_table(channel_class(cfg.channel), cfg.lambda);
  const int max_k = std::min({cfg.max_k, table.max_models(), static_cast<int>(block.samples.size())});
  if (max_k < 1) throw InvalidArgument("block has no samples");

  std::vector<FitResult> fits(max_k);
  std::vector<double> dist(max_k);
  parallel_for(static_cast<std::size_t>(max_k), threads, [&](std::size_t i) {
    const int k = static_cast<int>(i) + 1;
    FitResult f = fit(block.samples, k, cfg.kind, candidate_seed(seed, block.origin, cfg.channel, k));
    f.model = codable_projection(f.model, cfg.channel);
    dist[i] = regression_sse(block.samples, PreparedModel(f.model, false));
    fits[i] = std::move(f);
  });

  RdoResult r;
  const double lam = cfg.effective_lambda();
  int best = 0;
  for (int i = 0; i < max_k; ++i) {
    const int bits = table.block_bits(i + 1);
    const double j = dist[i] + lam * bits;
    r.bits.push_back(bits);
    r.distortion.push_back(dist[i]);
    r.j_values.push_back(j);
    if (j < r.j_values[best]) best = i;
  }
  r.chosen_k = best + 1;
  r.fit = std::move(fits[best]);
  return r;
}

}  // namespace emr4d
