#include "ncr/detect.hpp"

#include "ncr/design.hpp"
#include "ncr/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ncr {

SplitIndex split_target(Index n0, double c0, Rng& rng) {
  require(n0 >= 4, "split_target: n0 must be >= 4");
  require(c0 > 0.0 && c0 < 1.0, "split_target: c0 must lie in (0, 1)");
  const Index m = static_cast<Index>(std::llround(c0 * static_cast<double>(n0)));
  require(m >= 1 && m < n0, "split_target: both halves must be nonempty");
  std::vector<Index> perm(static_cast<std::size_t>(n0));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  SplitIndex s;
  s.c0 = c0;
  s.I.assign(perm.begin(), perm.begin() + m);
  s.Ic.assign(perm.begin() + m, perm.end());
  std::sort(s.I.begin(), s.I.end());
  std::sort(s.Ic.begin(), s.Ic.end());
  return s;
}

Vector marginal_moment(const DomainData& domain) {
  if (domain.adjacency.size() != domain.X.rows() || domain.X.rows() != domain.y.size()) {
    throw DimensionMismatch("domain: adjacency, X and y disagree on the node count");
  }
  const DesignMatrix Zd = build_design(normalize(domain.adjacency), domain.X);
  return kernels::parallel::cross_product(Zd.Z(), domain.y) / static_cast<double>(Zd.rows());
}

Vector marginal_moment(const DomainData& domain, std::span<const Index> rows) {
  require(rows.size() >= 2, "marginal_moment: need at least two rows");
  Matrix X(static_cast<Index>(rows.size()), domain.X.cols());
  Vector y(X.rows());
  for (Index r = 0; r < X.rows(); ++r) {
    require(rows[r] >= 0 && rows[r] < domain.X.rows(), "marginal_moment: row out of range");
    X.row(r) = domain.X.row(rows[r]);
    y(r) = domain.y(rows[r]);
  }
  return marginal_moment(DomainData{domain.adjacency.induced(rows), std::move(X), std::move(y), std::nullopt});
}

Vector marginal_contrast(const DomainData& source, const DomainData& target, const SplitIndex& split) {
  if (source.X.cols() != target.X.cols()) throw DimensionMismatch("source feature dimension differs from target");
  return marginal_moment(source) - marginal_moment(target, split.I);
}

std::vector<Index> sure_screen(const Vector& delta_hat, Index t_star) {
  require(t_star >= 1 && t_star <= delta_hat.size(), "sure_screen: t_star must lie in [1, length]");
  std::vector<Index> idx(static_cast<std::size_t>(delta_hat.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::partial_sort(idx.begin(), idx.begin() + t_star, idx.end(), [&](Index a, Index b) {
    const double fa = std::abs(delta_hat(a));
    const double fb = std::abs(delta_hat(b));
    return fa != fb ? fa > fb : a < b;
  });
  idx.resize(static_cast<std::size_t>(t_star));
  std::sort(idx.begin(), idx.end());
  return idx;
}

Index default_t_star(const SplitIndex& split, Index width) {
  const Index m = static_cast<Index>(split.I.size());
  return std::min<Index>(std::max<Index>((m + 2) / 3, 1), width);
}

namespace {

SourceScore score_from(Index k, Vector delta_hat, Index t_star) {
  SourceScore s;
  s.k = k;
  s.screened_set = sure_screen(delta_hat, t_star);
  for (Index j : s.screened_set) s.r_hat += delta_hat(j) * delta_hat(j);
  s.delta_hat = std::move(delta_hat);
  return s;
}

}  // namespace

std::vector<SourceScore> source_scores(std::span<const DomainData> sources, const DomainData& target,
                                       const SplitIndex& split, std::optional<Index> t_star) {
  const Vector base = marginal_moment(target, split.I);
  const Index t = t_star.value_or(default_t_star(split, base.size()));
  std::vector<SourceScore> out;
  out.reserve(sources.size());
  for (std::size_t k = 0; k < sources.size(); ++k) {
    if (sources[k].X.cols() != target.X.cols()) throw DimensionMismatch("source feature dimension differs from target");
    out.push_back(score_from(static_cast<Index>(k), marginal_moment(sources[k]) - base, t));
  }
  return out;
}

std::vector<Index> rank_sources(std::span<const SourceScore> scores) {
  std::vector<Index> order(scores.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    const auto& sa = scores[a];
    const auto& sb = scores[b];
    return sa.r_hat != sb.r_hat ? sa.r_hat < sb.r_hat : sa.k < sb.k;
  });
  for (Index& i : order) i = scores[i].k;
  return order;
}

std::vector<std::vector<Index>> candidate_sets(std::span<const SourceScore> scores, Index L) {
  require(L >= 0, "candidate_sets: L must be >= 0");
  require(L <= static_cast<Index>(scores.size()), "candidate_sets: L exceeds the number of sources");
  const std::vector<Index> order = rank_sources(scores);
  std::vector<std::vector<Index>> sets(static_cast<std::size_t>(L + 1));
  for (Index l = 1; l <= L; ++l) {
    sets[l] = sets[l - 1];
    sets[l].push_back(order[l - 1]);
  }
  return sets;
}

}  // namespace ncr
