#pragma once

// Rigid-body superposition and RMSD. The optimal rotation is found with the
// Kabsch construction: remove centroids, form the 3x3 cross-covariance
// matrix, factor it by SVD, and correct the determinant sign so only proper
// rotations (no reflections) are returned.

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "kbpot/types.hpp"

namespace kbpot::geometry {

/// Euclidean norm of an arbitrary-length vector; empty input gives 0.
inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

struct Mat3 {
  double m[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

  Vec3 apply(const Vec3& v) const {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
  }
};

/// Best-fit rigid motion G(d) = rotation * d + translation taking the mobile
/// points onto the reference, and the RMSD at that optimum.
struct Superposition {
  Mat3 rotation;
  Vec3 translation;
  double rmsd = 0.0;

  Vec3 apply(const Vec3& d) const { return rotation.apply(d) + translation; }
};

inline Superposition superpose_points(std::span<const Vec3> reference, std::span<const Vec3> mobile) {
  if (reference.size() != mobile.size()) {
    throw LengthMismatch("superpose: reference has " + std::to_string(reference.size()) +
                         " points, mobile has " + std::to_string(mobile.size()));
  }
  const std::size_t m = reference.size();
  if (m == 0) throw LengthMismatch("superpose: empty point sets");

  Vec3 cen_ref{}, cen_mob{};
  for (std::size_t k = 0; k < m; ++k) {
    cen_ref += reference[k];
    cen_mob += mobile[k];
  }
  cen_ref *= 1.0 / static_cast<double>(m);
  cen_mob *= 1.0 / static_cast<double>(m);

  // Cross-covariance H = sum_k d_k n_k^T over centered coordinates, so that
  // sum_k n_k . (R d_k) = trace(R H) is maximized by the rotation below.
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t k = 0; k < m; ++k) {
    const Vec3 d = mobile[k] - cen_mob;
    const Vec3 n = reference[k] - cen_ref;
    const double dv[3] = {d.x, d.y, d.z};
    const double nv[3] = {n.x, n.y, n.z};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) h(i, j) += dv[i] * nv[j];
    }
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d v = svd.matrixV();
  const double sign = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  Eigen::Matrix3d dcorr = Eigen::Matrix3d::Identity();
  dcorr(2, 2) = sign;
  const Eigen::Matrix3d r = v * dcorr * u.transpose();

  Superposition result;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) result.rotation.m[i][j] = r(i, j);
  }
  result.translation = cen_ref - result.rotation.apply(cen_mob);

  double sq = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const Vec3 diff = reference[k] - result.apply(mobile[k]);
    sq += dot(diff, diff);
  }
  result.rmsd = std::sqrt(sq / static_cast<double>(m));
  return result;
}

inline std::vector<Vec3> positions_of(const CaTrace& trace) {
  std::vector<Vec3> p;
  p.reserve(trace.size());
  for (const auto& r : trace.residues) p.push_back(r.pos);
  return p;
}

inline Superposition superpose(const CaTrace& reference, const CaTrace& mobile) {
  const auto ref = positions_of(reference);
  const auto mob = positions_of(mobile);
  return superpose_points(ref, mob);
}

inline double rmsd(const CaTrace& reference, const CaTrace& mobile) {
  return superpose(reference, mobile).rmsd;
}

}  // namespace kbpot::geometry
