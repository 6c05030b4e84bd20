#pragma once

#include <array>
#include <cmath>

namespace permuton {

// Point [num : den] of the real projective line; infinity is [1 : 0].
struct ProjectiveValue {
  double num = 0.0;
  double den = 1.0;

  static ProjectiveValue finite(double t) { return ProjectiveValue{t, 1.0}.normalized(); }
  static ProjectiveValue infinity() { return {1.0, 0.0}; }

  ProjectiveValue normalized() const;
  bool is_infinite() const { return den == 0.0; }
  double affine() const { return num / den; }  // +-inf at infinity
};

// Determinant num(a) den(b) - den(a) num(b), i.e. (a - b) scaled by both
// denominators.
inline double det(const ProjectiveValue& a, const ProjectiveValue& b) { return a.num * b.den - a.den * b.num; }

// Sine of the angle between the two representing lines; a metric on the
// projective line used for comparisons.
double chordal_distance(const ProjectiveValue& a, const ProjectiveValue& b);

// Cross ratio of one rectangle with corners phi_left = A, phi_right = B,
// psi_bottom = P, psi_top = Q:
//   (Q - A)(P - B) / ((P - A)(Q - B)).
// Its logarithm divided by r is the rectangle mass.
double cross_ratio(const ProjectiveValue& A, const ProjectiveValue& B, const ProjectiveValue& P,
                   const ProjectiveValue& Q);

// Solutions of cross_ratio(A, B, P, Q) = E for one unknown.
ProjectiveValue solve_for_B(double E, const ProjectiveValue& A, const ProjectiveValue& P, const ProjectiveValue& Q);
ProjectiveValue solve_for_A(double E, const ProjectiveValue& B, const ProjectiveValue& P, const ProjectiveValue& Q);
ProjectiveValue solve_for_Q(double E, const ProjectiveValue& A, const ProjectiveValue& B, const ProjectiveValue& P);
ProjectiveValue solve_for_P(double E, const ProjectiveValue& A, const ProjectiveValue& B, const ProjectiveValue& Q);

// 2x2 real matrix acting by t -> (m00 t + m01) / (m10 t + m11).
struct Moebius {
  std::array<double, 4> m{1.0, 0.0, 0.0, 1.0};

  ProjectiveValue operator()(const ProjectiveValue& p) const;
  Moebius inverse() const;
  Moebius operator*(const Moebius& o) const;
  double determinant() const { return m[0] * m[3] - m[1] * m[2]; }

  // The map sending 0, infinity, 1 to p0, pinf, p1.
  static Moebius from_standard(const ProjectiveValue& p0, const ProjectiveValue& pinf, const ProjectiveValue& p1);
  // The map sending (s0, s1, s2) to (d0, d1, d2).
  static Moebius from_triples(const std::array<ProjectiveValue, 3>& src, const std::array<ProjectiveValue, 3>& dst);
};

}  // namespace permuton
