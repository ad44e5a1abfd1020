#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sgfem/error.hpp"

namespace sgfem {

/// Which one-sided limit to take at a point where a quantity may jump
/// (an interface, or a node for derivatives).
enum class Side { Left, Right };

struct Interval {
  double left = 0.0;
  double right = 1.0;

  Interval() = default;
  Interval(double l, double r) : left(l), right(r) {
    if (!(l < r)) {
      throw Error(ErrorCode::InvalidArgument, "interval requires left < right");
    }
  }

  [[nodiscard]] double length() const noexcept { return right - left; }
  [[nodiscard]] double midpoint() const noexcept { return 0.5 * (left + right); }
  [[nodiscard]] bool contains_open(double x) const noexcept { return left < x && x < right; }
  [[nodiscard]] bool contains_closed(double x) const noexcept { return left <= x && x <= right; }
};

/// Partition 0 = x_0 < ... < x_N = L of the domain together with the
/// interface points. Interfaces never sit on a node and each element holds at
/// most one of them. Immutable after construction.
class Mesh {
 public:
  /// Relative tolerance (times L) used to detect an interface on a node.
  static constexpr double kCoincidenceTol = 1e-14;

  static Mesh uniform(double length, int num_elements, std::vector<double> interfaces) {
    if (num_elements < 2) {
      throw Error(ErrorCode::InvalidArgument, "uniform mesh requires N >= 2");
    }
    if (!(length > 0.0) || !std::isfinite(length)) {
      throw Error(ErrorCode::InvalidArgument, "domain length must be positive");
    }
    std::vector<double> nodes(static_cast<std::size_t>(num_elements) + 1);
    for (int i = 0; i <= num_elements; ++i) {
      nodes[static_cast<std::size_t>(i)] = length * static_cast<double>(i) / num_elements;
    }
    nodes.back() = length;
    return Mesh(std::move(nodes), std::move(interfaces));
  }

  /// Arbitrary (possibly graded) partition; nodes must start at 0.
  static Mesh from_nodes(std::vector<double> nodes, std::vector<double> interfaces) {
    return Mesh(std::move(nodes), std::move(interfaces));
  }

  [[nodiscard]] double length() const noexcept { return nodes_.back(); }
  [[nodiscard]] int num_elements() const noexcept { return static_cast<int>(nodes_.size()) - 1; }
  [[nodiscard]] const std::vector<double>& nodes() const noexcept { return nodes_; }
  [[nodiscard]] const std::vector<double>& interfaces() const noexcept { return interfaces_; }
  [[nodiscard]] int num_interfaces() const noexcept { return static_cast<int>(interfaces_.size()); }
  [[nodiscard]] int num_subdomains() const noexcept { return num_interfaces() + 1; }

  [[nodiscard]] Interval element(int e) const {
    check_element(e);
    return {nodes_[static_cast<std::size_t>(e)], nodes_[static_cast<std::size_t>(e) + 1]};
  }

  /// Largest element length.
  [[nodiscard]] double h() const noexcept {
    double hmax = 0.0;
    for (std::size_t i = 1; i < nodes_.size(); ++i) hmax = std::max(hmax, nodes_[i] - nodes_[i - 1]);
    return hmax;
  }

  /// Index into interfaces() of the interface inside element e, if any.
  [[nodiscard]] std::optional<int> interface_of_element(int e) const {
    check_element(e);
    const int k = element_interface_[static_cast<std::size_t>(e)];
    if (k < 0) return std::nullopt;
    return k;
  }

  [[nodiscard]] std::optional<double> element_interface(int e) const {
    if (auto k = interface_of_element(e)) return interfaces_[static_cast<std::size_t>(*k)];
    return std::nullopt;
  }

  [[nodiscard]] bool is_enriched(int e) const { return interface_of_element(e).has_value(); }

  /// Elements containing an interface, in increasing order.
  [[nodiscard]] std::vector<int> enriched_elements() const {
    std::vector<int> out;
    for (int e = 0; e < num_elements(); ++e) {
      if (element_interface_[static_cast<std::size_t>(e)] >= 0) out.push_back(e);
    }
    return out;
  }

  /// Subdomain j with x in the closure of Omega_j. A point exactly on an
  /// interface belongs to the subdomain on its left.
  [[nodiscard]] int subdomain_of(double x) const { return subdomain_of(x, Side::Left); }

  /// As above, but a point exactly on an interface resolves to the subdomain
  /// on the requested side.
  [[nodiscard]] int subdomain_of(double x, Side side) const {
    check_in_domain(x);
    int j = 0;
    for (double g : interfaces_) {
      if (x > g || (x == g && side == Side::Right)) {
        ++j;
      } else {
        break;
      }
    }
    return j;
  }

  /// Element containing x; at an interior node the side picks the neighbor.
  [[nodiscard]] int element_of(double x, Side side = Side::Right) const {
    check_in_domain(x);
    const int n = num_elements();
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
    int e = static_cast<int>(it - nodes_.begin()) - 1;  // nodes_[e] <= x < nodes_[e+1]
    if (e >= n) e = n - 1;                              // x == L
    if (side == Side::Left && e > 0 && x == nodes_[static_cast<std::size_t>(e)]) --e;
    return e;
  }

 private:
  Mesh(std::vector<double> nodes, std::vector<double> interfaces)
      : nodes_(std::move(nodes)), interfaces_(std::move(interfaces)) {
    if (nodes_.size() < 2) throw Error(ErrorCode::InvalidArgument, "mesh needs at least one element");
    if (nodes_.front() != 0.0) throw Error(ErrorCode::InvalidArgument, "first node must be 0");
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
      if (!(nodes_[i] > nodes_[i - 1])) {
        throw Error(ErrorCode::InvalidArgument, "nodes must be strictly increasing");
      }
    }
    const double L = nodes_.back();
    for (std::size_t k = 0; k < interfaces_.size(); ++k) {
      const double g = interfaces_[k];
      if (!(g > 0.0 && g < L)) {
        throw Error(ErrorCode::OutOfDomain, "interface " + fmt(g) + " not inside (0, L)");
      }
      if (k > 0 && !(g > interfaces_[k - 1])) {
        throw Error(ErrorCode::InvalidArgument, "interfaces must be strictly increasing");
      }
    }
    const double tol = kCoincidenceTol * L;
    element_interface_.assign(nodes_.size() - 1, -1);
    for (std::size_t k = 0; k < interfaces_.size(); ++k) {
      const double g = interfaces_[k];
      auto it = std::lower_bound(nodes_.begin(), nodes_.end(), g);
      const auto i = static_cast<std::size_t>(it - nodes_.begin());
      const double nearest = std::min(std::abs(nodes_[i] - g), std::abs(nodes_[i - 1] - g));
      if (nearest <= tol) {
        throw Error(ErrorCode::InterfaceOnNode, "interface " + fmt(g) + " coincides with a mesh node");
      }
      int& slot = element_interface_[i - 1];
      if (slot >= 0) {
        throw Error(ErrorCode::TwoInterfacesInElement,
                    "element " + std::to_string(i - 1) + " contains more than one interface");
      }
      slot = static_cast<int>(k);
    }
  }

  static std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  }

  void check_element(int e) const {
    if (e < 0 || e >= num_elements()) {
      throw Error(ErrorCode::IndexOutOfRange, "element index " + std::to_string(e));
    }
  }

  void check_in_domain(double x) const {
    if (!(x >= 0.0 && x <= length())) throw Error(ErrorCode::OutOfDomain, "point " + fmt(x));
  }

  std::vector<double> nodes_;
  std::vector<double> interfaces_;
  std::vector<int> element_interface_;
};

enum class ControlVolumeKind { WholeDomain, PerSubdomain, DualMidpoint };

struct ControlVolumeSet {
  ControlVolumeKind kind = ControlVolumeKind::DualMidpoint;
  std::vector<Interval> volumes;

  [[nodiscard]] std::size_t size() const noexcept { return volumes.size(); }
};

/// Control volumes over which local conservation is measured or enforced.
/// Dual-midpoint volumes join consecutive element midpoints; a midpoint that
/// coincides with an interface is rejected.
inline ControlVolumeSet build_control_volumes(const Mesh& mesh, ControlVolumeKind kind) {
  ControlVolumeSet set;
  set.kind = kind;
  switch (kind) {
    case ControlVolumeKind::WholeDomain:
      set.volumes.emplace_back(0.0, mesh.length());
      break;
    case ControlVolumeKind::PerSubdomain: {
      double left = 0.0;
      for (double g : mesh.interfaces()) {
        set.volumes.emplace_back(left, g);
        left = g;
      }
      set.volumes.emplace_back(left, mesh.length());
      break;
    }
    case ControlVolumeKind::DualMidpoint: {
      const double tol = Mesh::kCoincidenceTol * mesh.length();
      std::vector<double> mids;
      for (int e = 0; e < mesh.num_elements(); ++e) {
        const double t = mesh.element(e).midpoint();
        for (double g : mesh.interfaces()) {
          if (std::abs(t - g) <= tol) {
            throw Error(ErrorCode::EndpointOnInterface,
                        "midpoint of element " + std::to_string(e) + " coincides with an interface");
          }
        }
        mids.push_back(t);
      }
      for (std::size_t j = 0; j + 1 < mids.size(); ++j) set.volumes.emplace_back(mids[j], mids[j + 1]);
      break;
    }
  }
  return set;
}

inline std::string_view to_string(ControlVolumeKind kind) noexcept {
  switch (kind) {
    case ControlVolumeKind::WholeDomain: return "whole-domain";
    case ControlVolumeKind::PerSubdomain: return "per-subdomain";
    case ControlVolumeKind::DualMidpoint: return "dual-midpoint";
  }
  return "unknown";
}

inline ControlVolumeKind parse_control_volume_kind(std::string_view s) {
  if (s == "whole-domain") return ControlVolumeKind::WholeDomain;
  if (s == "per-subdomain") return ControlVolumeKind::PerSubdomain;
  if (s == "dual-midpoint") return ControlVolumeKind::DualMidpoint;
  throw Error(ErrorCode::InvalidArgument, "unknown control-volume kind '" + std::string(s) + "'");
}

}  // namespace sgfem
