#include "spillfree/dual_quaternion.hpp"

#include <cmath>

namespace spillfree {

namespace {

Eigen::Quaterniond quat_scale(const Eigen::Quaterniond& q, double s) {
    return {q.w() * s, q.x() * s, q.y() * s, q.z() * s};
}

Eigen::Quaterniond quat_add(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
    return {a.w() + b.w(), a.x() + b.x(), a.y() + b.y(), a.z() + b.z()};
}

double quat_dot(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
    return a.w() * b.w() + a.x() * b.x() + a.y() * b.y() + a.z() * b.z();
}

}  // namespace

UnitDualQuaternion UnitDualQuaternion::from_pose(const Eigen::Quaterniond& orientation,
                                                 const Vec3& translation) {
    Eigen::Quaterniond r = orientation.normalized();
    const Eigen::Quaterniond t(0.0, translation.x(), translation.y(), translation.z());
    return {r, quat_scale(t * r, 0.5)};
}

UnitDualQuaternion UnitDualQuaternion::from_transform(const Eigen::Matrix3d& rotation,
                                                      const Vec3& translation) {
    return from_pose(Eigen::Quaterniond(rotation), translation);
}

Vec3 UnitDualQuaternion::translation() const {
    const Eigen::Quaterniond t = quat_scale(dual_ * real_.conjugate(), 2.0);
    return {t.x(), t.y(), t.z()};
}

UnitDualQuaternion UnitDualQuaternion::operator*(const UnitDualQuaternion& rhs) const {
    return {real_ * rhs.real_, quat_add(real_ * rhs.dual_, dual_ * rhs.real_)};
}

UnitDualQuaternion UnitDualQuaternion::conjugate() const {
    return {real_.conjugate(), dual_.conjugate()};
}

UnitDualQuaternion UnitDualQuaternion::normalized() const {
    const double n = real_.norm();
    Eigen::Quaterniond r = quat_scale(real_, 1.0 / n);
    Eigen::Quaterniond d = quat_scale(dual_, 1.0 / n);
    d = quat_add(d, quat_scale(r, -quat_dot(r, d)));
    return {r, d};
}

double UnitDualQuaternion::unit_norm_error() const { return std::abs(real_.norm() - 1.0); }

double UnitDualQuaternion::plucker_error() const { return std::abs(quat_dot(real_, dual_)); }

Vec3 quaternion_log(const Eigen::Quaterniond& q_in) {
    Eigen::Quaterniond q = q_in;
    if (q.w() < 0.0) q = quat_scale(q, -1.0);  // shortest rotation
    const Vec3 v(q.x(), q.y(), q.z());
    const double vn = v.norm();
    if (vn < 1e-12) return 2.0 * v;  // small-angle limit
    const double angle = 2.0 * std::atan2(vn, q.w());
    return (angle / vn) * v;
}

}  // namespace spillfree
