#include "permuton/projective.hpp"

#include <algorithm>

#include "permuton/errors.hpp"

namespace permuton {

ProjectiveValue ProjectiveValue::normalized() const {
  const double s = std::max(std::abs(num), std::abs(den));
  if (!(s > 0.0) || !std::isfinite(s)) throw Error(ErrorKind::InvalidInput, "invalid projective value");
  ProjectiveValue p{num / s, den / s};
  // Canonical sign: den >= 0, and num > 0 at infinity.
  if (p.den < 0.0 || (p.den == 0.0 && p.num < 0.0)) {
    p.num = -p.num;
    p.den = -p.den;
  }
  if (p.num == 0.0) p.num = 0.0;
  if (p.den == 0.0) p.den = 0.0;
  return p;
}

double chordal_distance(const ProjectiveValue& a, const ProjectiveValue& b) {
  return std::abs(det(a, b)) / (std::hypot(a.num, a.den) * std::hypot(b.num, b.den));
}

double cross_ratio(const ProjectiveValue& A, const ProjectiveValue& B, const ProjectiveValue& P,
                   const ProjectiveValue& Q) {
  return det(Q, A) * det(P, B) / (det(P, A) * det(Q, B));
}

namespace {

ProjectiveValue combo(double a, const ProjectiveValue& X, double b, const ProjectiveValue& Y) {
  return ProjectiveValue{a * X.num + b * Y.num, a * X.den + b * Y.den}.normalized();
}

}  // namespace

// Each unknown enters one factor of the numerator and one of the
// denominator linearly, so E * denominator - numerator = det(W, unknown) for
// an explicit W, and the unknown is W itself.
ProjectiveValue solve_for_B(double E, const ProjectiveValue& A, const ProjectiveValue& P, const ProjectiveValue& Q) {
  return combo(E * det(P, A), Q, -det(Q, A), P);
}

ProjectiveValue solve_for_A(double E, const ProjectiveValue& B, const ProjectiveValue& P, const ProjectiveValue& Q) {
  return combo(det(P, B), Q, -E * det(Q, B), P);
}

ProjectiveValue solve_for_Q(double E, const ProjectiveValue& A, const ProjectiveValue& B, const ProjectiveValue& P) {
  return combo(E * det(A, P), B, -det(B, P), A);
}

ProjectiveValue solve_for_P(double E, const ProjectiveValue& A, const ProjectiveValue& B, const ProjectiveValue& Q) {
  return combo(det(A, Q), B, -E * det(B, Q), A);
}

ProjectiveValue Moebius::operator()(const ProjectiveValue& p) const {
  return ProjectiveValue{m[0] * p.num + m[1] * p.den, m[2] * p.num + m[3] * p.den}.normalized();
}

Moebius Moebius::inverse() const { return Moebius{{m[3], -m[1], -m[2], m[0]}}; }

Moebius Moebius::operator*(const Moebius& o) const {
  return Moebius{{m[0] * o.m[0] + m[1] * o.m[2], m[0] * o.m[1] + m[1] * o.m[3], m[2] * o.m[0] + m[3] * o.m[2],
                  m[2] * o.m[1] + m[3] * o.m[3]}};
}

Moebius Moebius::from_standard(const ProjectiveValue& p0, const ProjectiveValue& pinf, const ProjectiveValue& p1) {
  // Columns are multiples of pinf and p0; the multiples put 1 on p1.
  const double d = det(pinf, p0);
  if (d == 0.0) throw Error(ErrorKind::InvalidInput, "Moebius map through coinciding points");
  const double s = det(p1, p0) / d;
  const double t = det(pinf, p1) / d;
  Moebius M{{s * pinf.num, t * p0.num, s * pinf.den, t * p0.den}};
  const double scale = std::max({std::abs(M.m[0]), std::abs(M.m[1]), std::abs(M.m[2]), std::abs(M.m[3])});
  for (double& e : M.m) e /= scale;
  return M;
}

Moebius Moebius::from_triples(const std::array<ProjectiveValue, 3>& src, const std::array<ProjectiveValue, 3>& dst) {
  const Moebius S = from_standard(src[0], src[1], src[2]);
  const Moebius D = from_standard(dst[0], dst[1], dst[2]);
  Moebius M = D * S.inverse();
  const double scale = std::max({std::abs(M.m[0]), std::abs(M.m[1]), std::abs(M.m[2]), std::abs(M.m[3])});
  for (double& e : M.m) e /= scale;
  return M;
}

}  // namespace permuton
