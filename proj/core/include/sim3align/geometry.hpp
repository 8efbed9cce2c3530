#pragma once

#include <array>

#include "sim3align/vec3.hpp"

namespace sim3align {

/// 3x3 matrix, row-major.
struct Mat3 {
    std::array<double, 9> m{};

    double& operator()(int r, int c) { return m[static_cast<std::size_t>(3 * r + c)]; }
    double operator()(int r, int c) const { return m[static_cast<std::size_t>(3 * r + c)]; }

    static Mat3 identity();

    Vec3 operator*(const Vec3& v) const;
    Mat3 operator*(const Mat3& o) const;
    Mat3 transposed() const;
    double determinant() const;
};

/// Unit quaternion in (w, x, y, z) order, Hamilton convention.
///
/// Always normalized and sign-canonical: w >= 0, and if w == 0 the first
/// nonzero of (x, y, z) is positive. Both properties are restored after
/// every operation, so any two quaternions encoding the same rotation
/// compare equal component-wise.
class UnitQuaternion {
public:
    /// Identity rotation (1, 0, 0, 0).
    UnitQuaternion() : w_(1.0), x_(0.0), y_(0.0), z_(0.0) {}

    /// Construct from components that are already unit norm.
    /// Throws ErrorCode::invalid_argument if the norm is off by more than
    /// tol::kQuatInputDrift; otherwise renormalizes and canonicalizes.
    UnitQuaternion(double w, double x, double y, double z);

    /// Normalize arbitrary nonzero components into a unit quaternion.
    static UnitQuaternion from_unnormalized(double w, double x, double y, double z);

    static UnitQuaternion from_axis_angle(const Vec3& axis, double angle_rad);

    double w() const { return w_; }
    double x() const { return x_; }
    double y() const { return y_; }
    double z() const { return z_; }

    double norm() const;

    UnitQuaternion conjugate() const;

    /// Hamilton product.
    UnitQuaternion operator*(const UnitQuaternion& o) const;

    /// Rotate a vector: q [0,v] q*.
    Vec3 rotate(const Vec3& v) const;

    /// Rotation angle in [0, pi].
    double angle() const;

    /// Angle of the relative rotation this->conjugate() * other.
    double angle_to(const UnitQuaternion& other) const;

    bool operator==(const UnitQuaternion& o) const = default;

private:
    struct Raw {};
    UnitQuaternion(Raw, double w, double x, double y, double z)
        : w_(w), x_(x), y_(y), z_(z) {}

    void normalize_and_canonicalize();

    double w_, x_, y_, z_;
};

/// Proper rotation in SO(3), stored as a unit quaternion and convertible
/// to and from 3x3 matrix form.
class Rotation3 {
public:
    Rotation3() = default;
    explicit Rotation3(const UnitQuaternion& q) : q_(q) {}

    static Rotation3 identity() { return {}; }
    static Rotation3 from_axis_angle(const Vec3& axis, double angle_rad) {
        return Rotation3(UnitQuaternion::from_axis_angle(axis, angle_rad));
    }

    /// Requires R orthogonal and det(R) = +1 within tol::kRotationMatrix;
    /// throws ErrorCode::invalid_argument otherwise.
    static Rotation3 from_matrix(const Mat3& m);

    const UnitQuaternion& quaternion() const { return q_; }
    Mat3 matrix() const;

    Vec3 apply(const Vec3& v) const { return q_.rotate(v); }
    Rotation3 operator*(const Rotation3& o) const { return Rotation3(q_ * o.q_); }
    Rotation3 inverse() const { return Rotation3(q_.conjugate()); }

    double angle() const { return q_.angle(); }
    double angle_to(const Rotation3& o) const { return q_.angle_to(o.q_); }

    bool operator==(const Rotation3& o) const = default;

private:
    UnitQuaternion q_;
};

/// Element of Sim(3): uniform positive scale, rotation, translation.
/// Acts on points as p' = s * R * p + t, the action of the homogeneous
/// matrix (sR t; 0 1). Kept in (s, q, t) component form so the scale can
/// never contaminate the rotation's orthogonality.
class Sim3Transform {
public:
    Sim3Transform() : scale_(1.0) {}

    /// Throws ErrorCode::invalid_argument unless scale is finite and > 0.
    Sim3Transform(double scale, const Rotation3& rotation, const Vec3& translation);

    static Sim3Transform identity() { return {}; }

    double scale() const { return scale_; }
    const Rotation3& rotation() const { return rotation_; }
    const Vec3& translation() const { return translation_; }

    Vec3 apply(const Vec3& p) const {
        return rotation_.apply(p) * scale_ + translation_;
    }

    /// Group product: (a * b)(p) = a(b(p)).
    Sim3Transform operator*(const Sim3Transform& o) const;

    Sim3Transform inverse() const;

    bool operator==(const Sim3Transform& o) const = default;

private:
    double scale_;
    Rotation3 rotation_;
    Vec3 translation_;
};

}  // namespace sim3align
