#include "fedelim/partition.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "fedelim/errors.hpp"

namespace fedelim {

BoxDomain BoxDomain::cube(std::size_t dim, double lo, double hi) {
  return BoxDomain{std::vector<double>(dim, lo), std::vector<double>(dim, hi)};
}

Point BoxDomain::center() const {
  Point c(dim());
  for (std::size_t j = 0; j < dim(); ++j) c[j] = 0.5 * (lower[j] + upper[j]);
  return c;
}

bool BoxDomain::contains(std::span<const double> x) const {
  if (x.size() != dim()) return false;
  for (std::size_t j = 0; j < dim(); ++j) {
    if (!(x[j] >= lower[j] && x[j] <= upper[j])) return false;
  }
  return true;
}

void BoxDomain::validate() const {
  if (lower.empty() || lower.size() != upper.size()) {
    throw ConfigError("domain needs matching, non-empty lower/upper bounds");
  }
  for (std::size_t j = 0; j < dim(); ++j) {
    if (!(lower[j] < upper[j])) {
      throw ConfigError("domain lower bound must be below upper bound in dimension " +
                        std::to_string(j));
    }
  }
}

std::string to_string(NodeId n) {
  return "(" + std::to_string(n.depth) + "," + std::to_string(n.index) + ")";
}

PartitionSpec::PartitionSpec(int arity) : arity_(arity), max_depth_(0) {
  if (arity < 2) throw ConfigError("partition arity must be at least 2");
  constexpr std::uint64_t limit = std::uint64_t{1} << 63;
  std::uint64_t width = 1;
  const auto k = static_cast<std::uint64_t>(arity);
  while (width <= limit / k) {
    width *= k;
    ++max_depth_;
  }
}

std::vector<NodeId> children(NodeId node, const PartitionSpec& spec) {
  const auto k = static_cast<std::uint64_t>(spec.arity());
  std::vector<NodeId> out;
  out.reserve(k);
  for (std::uint64_t o = 0; o < k; ++o) {
    out.push_back({node.depth + 1, k * (node.index - 1) + o + 1});
  }
  return out;
}

NodeId parent(NodeId node, const PartitionSpec& spec) {
  if (node.depth <= 0) throw std::invalid_argument("the root has no parent");
  const auto k = static_cast<std::uint64_t>(spec.arity());
  return {node.depth - 1, (node.index + k - 1) / k};
}

bool is_valid(NodeId node, const PartitionSpec& spec) {
  if (node.depth < 0 || node.depth > spec.max_depth() || node.index < 1) return false;
  std::uint64_t count = 1;
  for (int h = 0; h < node.depth; ++h) count *= static_cast<std::uint64_t>(spec.arity());
  return node.index <= count;
}

BoxDomain cell(const BoxDomain& domain, NodeId node, const PartitionSpec& spec) {
  if (!is_valid(node, spec)) throw std::invalid_argument("invalid node " + to_string(node));
  const auto k = static_cast<std::uint64_t>(spec.arity());
  // slab ordinal chosen at each depth, root first
  std::vector<std::uint64_t> ordinals(static_cast<std::size_t>(node.depth));
  NodeId cur = node;
  for (int h = node.depth; h > 0; --h) {
    ordinals[static_cast<std::size_t>(h - 1)] = (cur.index - 1) % k;
    cur = parent(cur, spec);
  }
  BoxDomain box = domain;
  const std::size_t d = domain.dim();
  for (int h = 0; h < node.depth; ++h) {
    const std::size_t j = static_cast<std::size_t>(h) % d;
    const std::uint64_t o = ordinals[static_cast<std::size_t>(h)];
    const double lo = box.lower[j];
    const double w = box.upper[j] - lo;
    const double kd = static_cast<double>(k);
    box.lower[j] = lo + w * static_cast<double>(o) / kd;
    if (o + 1 < k) box.upper[j] = lo + w * static_cast<double>(o + 1) / kd;
  }
  return box;
}

Point representative(const BoxDomain& domain, NodeId node, const PartitionSpec& spec) {
  return cell(domain, node, spec).center();
}

NodeId locate(const BoxDomain& domain, std::span<const double> x, int depth,
              const PartitionSpec& spec) {
  if (!domain.contains(x)) throw std::invalid_argument("point outside the domain");
  const auto k = static_cast<std::uint64_t>(spec.arity());
  BoxDomain box = domain;
  NodeId node = kRoot;
  const std::size_t d = domain.dim();
  for (int h = 0; h < depth; ++h) {
    const std::size_t j = static_cast<std::size_t>(h) % d;
    const double lo = box.lower[j];
    const double w = box.upper[j] - lo;
    const double kd = static_cast<double>(k);
    std::uint64_t o = 0;
    // same boundary arithmetic as cell() so the two agree exactly
    while (o + 1 < k && x[j] >= lo + w * static_cast<double>(o + 1) / kd) ++o;
    box.lower[j] = lo + w * static_cast<double>(o) / kd;
    if (o + 1 < k) box.upper[j] = lo + w * static_cast<double>(o + 1) / kd;
    node = {h + 1, k * (node.index - 1) + o + 1};
  }
  return node;
}

}  // namespace fedelim
