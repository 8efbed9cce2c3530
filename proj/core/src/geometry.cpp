#include "sim3align/geometry.hpp"

#include <cmath>

#include "sim3align/error.hpp"
#include "sim3align/tolerances.hpp"

namespace sim3align {

Mat3 Mat3::identity() {
    Mat3 r;
    r(0, 0) = r(1, 1) = r(2, 2) = 1.0;
    return r;
}

Vec3 Mat3::operator*(const Vec3& v) const {
    return {
        m[0] * v.x + m[1] * v.y + m[2] * v.z,
        m[3] * v.x + m[4] * v.y + m[5] * v.z,
        m[6] * v.x + m[7] * v.y + m[8] * v.z,
    };
}

Mat3 Mat3::operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) r(i, j) += (*this)(i, k) * o(k, j);
    return r;
}

Mat3 Mat3::transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
    return r;
}

double Mat3::determinant() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
}

UnitQuaternion::UnitQuaternion(double w, double x, double y, double z)
    : w_(w), x_(x), y_(y), z_(z) {
    const double n = norm();
    if (!std::isfinite(n) || std::abs(n - 1.0) > tol::kQuatInputDrift) {
        throw Error(ErrorCode::invalid_argument,
                    "quaternion is not unit norm (|q| = " + std::to_string(n) + ")");
    }
    normalize_and_canonicalize();
}

UnitQuaternion UnitQuaternion::from_unnormalized(double w, double x, double y, double z) {
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw Error(ErrorCode::invalid_argument, "cannot normalize zero quaternion");
    }
    UnitQuaternion q(Raw{}, w, x, y, z);
    q.normalize_and_canonicalize();
    return q;
}

UnitQuaternion UnitQuaternion::from_axis_angle(const Vec3& axis, double angle_rad) {
    const double n = axis.norm();
    if (!(n > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "axis must be nonzero");
    }
    const double half = 0.5 * angle_rad;
    const double s = std::sin(half) / n;
    UnitQuaternion q(Raw{}, std::cos(half), s * axis.x, s * axis.y, s * axis.z);
    q.normalize_and_canonicalize();
    return q;
}

double UnitQuaternion::norm() const {
    return std::sqrt(w_ * w_ + x_ * x_ + y_ * y_ + z_ * z_);
}

void UnitQuaternion::normalize_and_canonicalize() {
    // Renormalize only when measurably off unit (1e-15 is a few ulps); the
    // skip keeps components bit-identical through identity compositions.
    for (int pass = 0; pass < 2; ++pass) {
        const double n = norm();
        if (std::abs(n - 1.0) <= 1e-15) break;
        w_ /= n;
        x_ /= n;
        y_ /= n;
        z_ /= n;
    }
    // Canonical sign: w >= 0, tie-broken on the first nonzero of (x, y, z).
    bool flip = w_ < 0.0;
    if (w_ == 0.0) {
        if (x_ != 0.0) {
            flip = x_ < 0.0;
        } else if (y_ != 0.0) {
            flip = y_ < 0.0;
        } else {
            flip = z_ < 0.0;
        }
    }
    if (flip) {
        w_ = -w_;
        x_ = -x_;
        y_ = -y_;
        z_ = -z_;
    }
    if (w_ == 0.0) w_ = 0.0;  // normalize -0.0
}

UnitQuaternion UnitQuaternion::conjugate() const {
    UnitQuaternion q(Raw{}, w_, -x_, -y_, -z_);
    q.normalize_and_canonicalize();
    return q;
}

UnitQuaternion UnitQuaternion::operator*(const UnitQuaternion& o) const {
    UnitQuaternion q(Raw{},
                     w_ * o.w_ - x_ * o.x_ - y_ * o.y_ - z_ * o.z_,
                     w_ * o.x_ + x_ * o.w_ + y_ * o.z_ - z_ * o.y_,
                     w_ * o.y_ - x_ * o.z_ + y_ * o.w_ + z_ * o.x_,
                     w_ * o.z_ + x_ * o.y_ - y_ * o.x_ + z_ * o.w_);
    q.normalize_and_canonicalize();
    return q;
}

Vec3 UnitQuaternion::rotate(const Vec3& v) const {
    // v' = v + 2w(u x v) + 2(u x (u x v)), u = (x, y, z)
    const Vec3 u{x_, y_, z_};
    const Vec3 uv = u.cross(v);
    const Vec3 uuv = u.cross(uv);
    return v + (uv * w_ + uuv) * 2.0;
}

double UnitQuaternion::angle() const {
    const double vec_norm = std::sqrt(x_ * x_ + y_ * y_ + z_ * z_);
    return 2.0 * std::atan2(vec_norm, std::abs(w_));
}

double UnitQuaternion::angle_to(const UnitQuaternion& other) const {
    return (conjugate() * other).angle();
}

Rotation3 Rotation3::from_matrix(const Mat3& m) {
    // Validate orthogonality and orientation.
    const Mat3 gram = m.transposed() * m;
    double max_dev = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double target = i == j ? 1.0 : 0.0;
            max_dev = std::max(max_dev, std::abs(gram(i, j) - target));
        }
    }
    if (max_dev > tol::kRotationMatrix) {
        throw Error(ErrorCode::invalid_argument, "matrix is not orthogonal");
    }
    if (std::abs(m.determinant() - 1.0) > tol::kRotationMatrix) {
        throw Error(ErrorCode::invalid_argument, "matrix determinant is not +1");
    }

    // Shepperd's method: pick the largest of (trace, m00, m11, m22) for
    // the best-conditioned extraction.
    const double t = m(0, 0) + m(1, 1) + m(2, 2);
    double w, x, y, z;
    if (t > m(0, 0) && t > m(1, 1) && t > m(2, 2)) {
        const double r = std::sqrt(1.0 + t);
        const double s = 0.5 / r;
        w = 0.5 * r;
        x = (m(2, 1) - m(1, 2)) * s;
        y = (m(0, 2) - m(2, 0)) * s;
        z = (m(1, 0) - m(0, 1)) * s;
    } else if (m(0, 0) >= m(1, 1) && m(0, 0) >= m(2, 2)) {
        const double r = std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2));
        const double s = 0.5 / r;
        w = (m(2, 1) - m(1, 2)) * s;
        x = 0.5 * r;
        y = (m(0, 1) + m(1, 0)) * s;
        z = (m(0, 2) + m(2, 0)) * s;
    } else if (m(1, 1) >= m(2, 2)) {
        const double r = std::sqrt(1.0 - m(0, 0) + m(1, 1) - m(2, 2));
        const double s = 0.5 / r;
        w = (m(0, 2) - m(2, 0)) * s;
        x = (m(0, 1) + m(1, 0)) * s;
        y = 0.5 * r;
        z = (m(1, 2) + m(2, 1)) * s;
    } else {
        const double r = std::sqrt(1.0 - m(0, 0) - m(1, 1) + m(2, 2));
        const double s = 0.5 / r;
        w = (m(1, 0) - m(0, 1)) * s;
        x = (m(0, 2) + m(2, 0)) * s;
        y = (m(1, 2) + m(2, 1)) * s;
        z = 0.5 * r;
    }
    return Rotation3(UnitQuaternion::from_unnormalized(w, x, y, z));
}

Mat3 Rotation3::matrix() const {
    const double w = q_.w(), x = q_.x(), y = q_.y(), z = q_.z();
    Mat3 m;
    m(0, 0) = 1.0 - 2.0 * (y * y + z * z);
    m(0, 1) = 2.0 * (x * y - w * z);
    m(0, 2) = 2.0 * (x * z + w * y);
    m(1, 0) = 2.0 * (x * y + w * z);
    m(1, 1) = 1.0 - 2.0 * (x * x + z * z);
    m(1, 2) = 2.0 * (y * z - w * x);
    m(2, 0) = 2.0 * (x * z - w * y);
    m(2, 1) = 2.0 * (y * z + w * x);
    m(2, 2) = 1.0 - 2.0 * (x * x + y * y);
    return m;
}

Sim3Transform::Sim3Transform(double scale, const Rotation3& rotation, const Vec3& translation)
    : scale_(scale), rotation_(rotation), translation_(translation) {
    if (!std::isfinite(scale) || scale <= 0.0) {
        throw Error(ErrorCode::invalid_argument,
                    "Sim(3) scale must be finite and positive, got " + std::to_string(scale));
    }
}

Sim3Transform Sim3Transform::operator*(const Sim3Transform& o) const {
    // (s1 R1 | t1)(s2 R2 | t2) = (s1 s2 R1 R2 | s1 R1 t2 + t1)
    return Sim3Transform(scale_ * o.scale_, rotation_ * o.rotation_,
                         rotation_.apply(o.translation_) * scale_ + translation_);
}

Sim3Transform Sim3Transform::inverse() const {
    const Rotation3 rinv = rotation_.inverse();
    const double sinv = 1.0 / scale_;
    return Sim3Transform(sinv, rinv, rinv.apply(translation_) * -sinv);
}

}  // namespace sim3align
