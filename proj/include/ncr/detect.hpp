#pragma once

#include "ncr/core.hpp"
#include "ncr/synth.hpp"

#include <optional>
#include <span>
#include <vector>

namespace ncr {

/// Random split of the target rows: I is used for the contrasts and the
/// candidate fits, Ic is held out for aggregation.
struct SplitIndex {
  std::vector<Index> I;   // ascending
  std::vector<Index> Ic;  // ascending
  double c0 = 0.5;
};

/// |I| = round(c0 n0), drawn uniformly.
SplitIndex split_target(Index n0, double c0, Rng& rng);

/// (1/n) Z-hat^T y, with A normalized by its own estimated density.
Vector marginal_moment(const DomainData& domain);

/// Same on the subgraph induced by `rows` (density re-estimated there).
Vector marginal_moment(const DomainData& domain, std::span<const Index> rows);

/// Source marginal moment minus the target's on the rows of I.
Vector marginal_contrast(const DomainData& source, const DomainData& target, const SplitIndex& split);

/// Indices of the t_star largest |delta_hat|, ties to the smaller index.
/// Returned in ascending order.
std::vector<Index> sure_screen(const Vector& delta_hat, Index t_star);

struct SourceScore {
  Index k = 0;
  Vector delta_hat;
  std::vector<Index> screened_set;
  double r_hat = 0.0;  // sum of delta_hat_j^2 over the screened set
};

/// ceil(|I| / 3), capped at the contrast length.
Index default_t_star(const SplitIndex& split, Index width);

std::vector<SourceScore> source_scores(std::span<const DomainData> sources, const DomainData& target,
                                       const SplitIndex& split, std::optional<Index> t_star = std::nullopt);

/// Source indices ordered by (r_hat, k).
std::vector<Index> rank_sources(std::span<const SourceScore> scores);

/// G_0 = {}, G_l = the l sources with smallest r_hat, listed in rank order
/// (so every set is a prefix of the next).
std::vector<std::vector<Index>> candidate_sets(std::span<const SourceScore> scores, Index L);

}  // namespace ncr
