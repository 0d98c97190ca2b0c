#include "navcarve/mvie.hpp"

#include <Eigen/Dense>
#include <array>
#include <cmath>

#include "navcarve/convex_hull.hpp"
#include "navcarve/error.hpp"

namespace navcarve {
namespace {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat9 = Eigen::Matrix<double, 9, 9>;
using Mat36 = Eigen::Matrix<double, 3, 6>;

constexpr int kMaxNewton = 100;

/// Unit-normal constraints expressed in the scaled frame x = origin + scale * y.
struct ScaledProblem {
  std::vector<Vec3> a;
  std::vector<double> b;
  Point3 origin = Point3::Zero();
  double scale = 1.0;
};

ScaledProblem make_scaled(const Polytope& q, const Point3& origin) {
  ScaledProblem sp;
  sp.origin = origin;
  double scale = 0.0;
  for (const Halfspace& raw : q.halfspaces) {
    const Halfspace h = raw.normalized();
    sp.a.push_back(h.a);
    sp.b.push_back(h.b - h.a.dot(origin));
    scale = std::max(scale, std::abs(sp.b.back()));
  }
  sp.scale = scale > 0.0 ? scale : 1.0;
  for (double& b : sp.b) b /= sp.scale;
  return sp;
}

// Phase I: max r s.t. a.y + r <= b, barrier on the slacks.
ChebyshevBall solve_chebyshev(const ScaledProblem& sp) {
  const std::size_t m = sp.a.size();
  double min_b = std::numeric_limits<double>::infinity();
  for (double b : sp.b) min_b = std::min(min_b, b);
  Vec4 z(0.0, 0.0, 0.0, min_b - 1.0);

  auto slacks_ok = [&](const Vec4& v) {
    for (std::size_t j = 0; j < m; ++j) {
      if (!(sp.b[j] - sp.a[j].dot(v.head<3>()) - v[3] > 0.0)) return false;
    }
    return true;
  };
  auto objective = [&](const Vec4& v, double t) {
    double f = -t * v[3];
    for (std::size_t j = 0; j < m; ++j) f -= std::log(sp.b[j] - sp.a[j].dot(v.head<3>()) - v[3]);
    return f;
  };

  for (double t = 1.0; static_cast<double>(m) / t > 1e-11; t *= 10.0) {
    for (int it = 0; it < kMaxNewton; ++it) {
      Vec4 g = Vec4::Zero();
      Mat4 H = Mat4::Zero();
      g[3] = -t;
      for (std::size_t j = 0; j < m; ++j) {
        const double s = sp.b[j] - sp.a[j].dot(z.head<3>()) - z[3];
        Vec4 row;
        row << sp.a[j], 1.0;
        g += row / s;
        H += row * row.transpose() / (s * s);
      }
      const Vec4 step = -H.ldlt().solve(g);
      const double decrement = -g.dot(step);
      if (!std::isfinite(decrement) || decrement < 1e-12) break;
      double alpha = 1.0;
      const double f0 = objective(z, t);
      while (alpha > 1e-14) {
        const Vec4 cand = z + alpha * step;
        if (slacks_ok(cand) && objective(cand, t) <= f0 - 0.25 * alpha * decrement) break;
        alpha *= 0.5;
      }
      if (alpha <= 1e-14) break;
      z += alpha * step;
    }
  }
  return {sp.origin + sp.scale * z.head<3>(), sp.scale * z[3]};
}

Point3 reference_point(const Polytope& q) {
  Point3 ref = Point3::Zero();
  for (const Halfspace& raw : q.halfspaces) {
    const Halfspace h = raw.normalized();
    ref += h.b * h.a;
  }
  return ref / static_cast<double>(std::max<std::size_t>(q.size(), 1));
}

Mat3 sym_from(const Vec9& z) {
  Mat3 C;
  C << z[0], z[3], z[4], z[3], z[1], z[5], z[4], z[5], z[2];
  return C;
}

// Columns E_k a for the symmetric basis E_0..E_5.
Mat36 basis_times(const Vec3& a) {
  Mat36 M = Mat36::Zero();
  M(0, 0) = a[0];
  M(1, 1) = a[1];
  M(2, 2) = a[2];
  M(0, 3) = a[1], M(1, 3) = a[0];
  M(0, 4) = a[2], M(2, 4) = a[0];
  M(1, 5) = a[2], M(2, 5) = a[1];
  return M;
}

Mat3 basis(int k) {
  Mat3 E = Mat3::Zero();
  static constexpr std::array<std::array<int, 2>, 6> idx{{{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}}};
  E(idx[k][0], idx[k][1]) = 1.0;
  E(idx[k][1], idx[k][0]) = 1.0;
  return E;
}

}  // namespace

bool is_bounded(const Polytope& q) {
  if (q.size() < 4) return false;
  std::vector<Point3> normals;
  normals.reserve(q.size());
  for (const Halfspace& h : q.halfspaces) normals.push_back(h.a.normalized());
  TriangleMesh hull;
  try {
    hull = convex_hull_3d(normals);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DegenerateInput) return false;
    throw;
  }
  for (const Halfspace& plane : hull.facet_plane) {
    if (!(plane.b > 1e-9)) return false;
  }
  return true;
}

ChebyshevBall chebyshev_center(const Polytope& q) {
  if (!is_bounded(q)) throw Error(ErrorCode::Unbounded, "polytope is unbounded");
  return solve_chebyshev(make_scaled(q, reference_point(q)));
}

double ellipsoid_max_violation(const Ellipsoid& e, const Polytope& q) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const Halfspace& raw : q.halfspaces) {
    const Halfspace h = raw.normalized();
    worst = std::max(worst, (e.C.transpose() * h.a).norm() + h.a.dot(e.d) - h.b);
  }
  return worst;
}

Ellipsoid inscribed_ellipsoid(const Polytope& q, double log_det_gap) {
  const ChebyshevBall ball = chebyshev_center(q);
  const ScaledProblem first = make_scaled(q, ball.center);
  if (!(ball.radius > 1e-10 * first.scale)) {
    throw Error(ErrorCode::Infeasible, "polytope has no interior point");
  }

  // Rescale so the Chebyshev ball is the unit ball.
  ScaledProblem sp = first;
  for (double& b : sp.b) b *= sp.scale / ball.radius;
  sp.scale = ball.radius;

  const std::size_t m = sp.a.size();
  std::vector<Mat36> M(m);
  for (std::size_t j = 0; j < m; ++j) M[j] = basis_times(sp.a[j]);

  Vec9 z = Vec9::Zero();
  z.head<3>().setConstant(0.5);

  struct Eval {
    bool ok = false;
    double f = 0.0;
  };
  auto evaluate = [&](const Vec9& v, double mu) -> Eval {
    const Mat3 C = sym_from(v);
    Eigen::LLT<Mat3> llt(C);
    if (llt.info() != Eigen::Success) return {};
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    if (!std::isfinite(logdet)) return {};
    double f = -logdet;
    const Vec3 d = v.tail<3>();
    for (std::size_t j = 0; j < m; ++j) {
      const double s = sp.b[j] - sp.a[j].dot(d) - (C * sp.a[j]).norm();
      if (!(s > 0.0)) return {};
      f -= mu * std::log(s);
    }
    return {true, f};
  };

  for (double mu = 1.0; static_cast<double>(m) * mu > log_det_gap; mu /= 8.0) {
    for (int it = 0; it < kMaxNewton; ++it) {
      const Mat3 C = sym_from(z);
      const Mat3 Cinv = C.inverse();
      const Vec3 d = z.tail<3>();
      Vec9 g = Vec9::Zero();
      Mat9 H = Mat9::Zero();

      std::array<Mat3, 6> CinvE;
      for (int k = 0; k < 6; ++k) CinvE[k] = Cinv * basis(k);
      for (int k = 0; k < 6; ++k) {
        g[k] = -CinvE[k].trace();
        for (int l = k; l < 6; ++l) {
          H(k, l) = H(l, k) = (CinvE[k] * CinvE[l]).trace();
        }
      }

      for (std::size_t j = 0; j < m; ++j) {
        const Vec3 u = C * sp.a[j];
        const double nu = u.norm();
        const double s = sp.b[j] - sp.a[j].dot(d) - nu;
        Vec9 dg;
        dg.head<6>() = M[j].transpose() * (u / nu);
        dg.tail<3>() = sp.a[j];
        const Mat3 P = (Mat3::Identity() - u * u.transpose() / (nu * nu)) / nu;
        g += mu * dg / s;
        H += mu * dg * dg.transpose() / (s * s);
        H.topLeftCorner<6, 6>() += mu * M[j].transpose() * P * M[j] / s;
      }

      const Vec9 step = -H.ldlt().solve(g);
      const double decrement = -g.dot(step);
      if (!std::isfinite(decrement) || decrement < 1e-14) break;

      const Eval base = evaluate(z, mu);
      double alpha = 1.0;
      bool moved = false;
      while (alpha > 1e-14) {
        const Eval cand = evaluate(z + alpha * step, mu);
        if (cand.ok && cand.f <= base.f - 0.25 * alpha * decrement) {
          z += alpha * step;
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!moved) break;
      if (decrement < 1e-10) break;
    }
  }

  Ellipsoid e;
  e.C = sp.scale * sym_from(z);
  e.d = sp.origin + sp.scale * z.tail<3>();
  return e;
}

}  // namespace navcarve
