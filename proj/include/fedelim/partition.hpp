#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fedelim {

using Point = std::vector<double>;

// Axis-aligned box [lower_j, upper_j] per dimension.
struct BoxDomain {
  std::vector<double> lower;
  std::vector<double> upper;

  static BoxDomain cube(std::size_t dim, double lo, double hi);

  std::size_t dim() const { return lower.size(); }
  double width(std::size_t j) const { return upper[j] - lower[j]; }
  Point center() const;
  bool contains(std::span<const double> x) const;
  // Throws ConfigError unless dim >= 1 and lower < upper everywhere.
  void validate() const;

  bool operator==(const BoxDomain&) const = default;
};

// Address (h, i) of a partition cell; the root is (0, 1) and 1 <= i <= k^h.
struct NodeId {
  int depth = 0;
  std::uint64_t index = 1;

  auto operator<=>(const NodeId&) const = default;
};

inline constexpr NodeId kRoot{0, 1};

std::string to_string(NodeId n);

class PartitionSpec {
 public:
  explicit PartitionSpec(int arity = 2);

  int arity() const { return arity_; }
  // Deepest level whose node indices still fit in 63 bits.
  int max_depth() const { return max_depth_; }

 private:
  int arity_;
  int max_depth_;
};

// The k children (h+1, k*i - j), j = k-1..0, in ascending index order.
std::vector<NodeId> children(NodeId node, const PartitionSpec& spec);

// Throws std::invalid_argument for the root.
NodeId parent(NodeId node, const PartitionSpec& spec);

bool is_valid(NodeId node, const PartitionSpec& spec);

// Depth h splits dimension (h mod d) into k equal slabs; slab o holds child
// with index k*(i-1) + o + 1.
BoxDomain cell(const BoxDomain& domain, NodeId node, const PartitionSpec& spec);

// Cell center.
Point representative(const BoxDomain& domain, NodeId node, const PartitionSpec& spec);

// The depth-h node whose half-open cell contains x (the last slab along each
// dimension is closed at the upper bound).
NodeId locate(const BoxDomain& domain, std::span<const double> x, int depth,
              const PartitionSpec& spec);

}  // namespace fedelim
