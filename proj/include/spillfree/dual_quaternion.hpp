#pragma once

#include "spillfree/types.hpp"

#include <Eigen/Geometry>

namespace spillfree {

/// Unit dual quaternion representing a rigid-body pose.
/// real encodes the orientation, dual = 1/2 * t (x) real encodes translation t.
class UnitDualQuaternion {
  public:
    UnitDualQuaternion()
        : real_(Eigen::Quaterniond::Identity()), dual_(0.0, 0.0, 0.0, 0.0) {}

    UnitDualQuaternion(const Eigen::Quaterniond& real, const Eigen::Quaterniond& dual)
        : real_(real), dual_(dual) {}

    static UnitDualQuaternion from_pose(const Eigen::Quaterniond& orientation,
                                        const Vec3& translation);

    static UnitDualQuaternion from_transform(const Eigen::Matrix3d& rotation,
                                             const Vec3& translation);

    const Eigen::Quaterniond& real() const { return real_; }
    const Eigen::Quaterniond& dual() const { return dual_; }

    Eigen::Quaterniond orientation() const { return real_; }
    Vec3 translation() const;
    Eigen::Matrix3d rotation_matrix() const { return real_.toRotationMatrix(); }

    UnitDualQuaternion operator*(const UnitDualQuaternion& rhs) const;
    UnitDualQuaternion conjugate() const;

    /// Renormalize: unit real part and Pluecker-orthogonal dual part.
    UnitDualQuaternion normalized() const;

    double unit_norm_error() const;  // | ||real|| - 1 |
    double plucker_error() const;    // | <real, dual> |

  private:
    Eigen::Quaterniond real_;
    Eigen::Quaterniond dual_;
};

/// Rotation-vector (axis * angle in [-pi, pi]) of a unit quaternion.
Vec3 quaternion_log(const Eigen::Quaterniond& q);

}  // namespace spillfree
