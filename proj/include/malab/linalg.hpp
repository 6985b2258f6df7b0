#pragma once

// Small dense linear algebra for runtime dimension n in {1,2,3}.
// Vectors and matrices carry their dimension; storage is fixed at 3x3.

#include <array>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace malab {

inline constexpr int kMaxDim = 3;

class LabError : public std::runtime_error {
public:
  LabError(std::string kind, const std::string& msg)
      : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

private:
  std::string kind_;
};

struct Vec {
  std::array<double, 3> a{0.0, 0.0, 0.0};
  int n = 0;

  Vec() = default;
  explicit Vec(int dim) : n(dim) {}
  Vec(double x, double y) : a{x, y, 0.0}, n(2) {}
  Vec(double x, double y, double z) : a{x, y, z}, n(3) {}
  static Vec zero(int dim) { return Vec(dim); }
  static Vec of1(double x) {
    Vec v(1);
    v.a[0] = x;
    return v;
  }

  double& operator[](int i) { return a[i]; }
  double operator[](int i) const { return a[i]; }

  Vec operator+(const Vec& o) const {
    Vec r(n);
    for (int i = 0; i < n; ++i) r.a[i] = a[i] + o.a[i];
    return r;
  }
  Vec operator-(const Vec& o) const {
    Vec r(n);
    for (int i = 0; i < n; ++i) r.a[i] = a[i] - o.a[i];
    return r;
  }
  Vec operator*(double s) const {
    Vec r(n);
    for (int i = 0; i < n; ++i) r.a[i] = a[i] * s;
    return r;
  }
  double dot(const Vec& o) const {
    double s = 0;
    for (int i = 0; i < n; ++i) s += a[i] * o.a[i];
    return s;
  }
  double norm2() const { return dot(*this); }
  double norm() const { return std::sqrt(norm2()); }
};

inline Vec operator*(double s, const Vec& v) { return v * s; }

// General (not necessarily symmetric) n x n matrix, row major.
struct Mat {
  std::array<double, 9> m{};
  int n = 0;

  Mat() = default;
  explicit Mat(int dim) : n(dim) { m.fill(0.0); }
  static Mat identity(int dim) {
    Mat r(dim);
    for (int i = 0; i < dim; ++i) r(i, i) = 1.0;
    return r;
  }

  double& operator()(int i, int j) { return m[i * 3 + j]; }
  double operator()(int i, int j) const { return m[i * 3 + j]; }

  Vec apply(const Vec& v) const {
    Vec r(n);
    for (int i = 0; i < n; ++i) {
      double s = 0;
      for (int j = 0; j < n; ++j) s += (*this)(i, j) * v[j];
      r[i] = s;
    }
    return r;
  }

  Mat mul(const Mat& o) const {
    Mat r(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0;
        for (int k = 0; k < n; ++k) s += (*this)(i, k) * o(k, j);
        r(i, j) = s;
      }
    return r;
  }

  Mat transpose() const {
    Mat r(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) r(i, j) = (*this)(j, i);
    return r;
  }

  Mat scaled(double s) const {
    Mat r(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) r(i, j) = (*this)(i, j) * s;
    return r;
  }

  double det() const {
    switch (n) {
      case 1:
        return m[0];
      case 2:
        return (*this)(0, 0) * (*this)(1, 1) - (*this)(0, 1) * (*this)(1, 0);
      case 3: {
        const Mat& A = *this;
        return A(0, 0) * (A(1, 1) * A(2, 2) - A(1, 2) * A(2, 1)) -
               A(0, 1) * (A(1, 0) * A(2, 2) - A(1, 2) * A(2, 0)) +
               A(0, 2) * (A(1, 0) * A(2, 1) - A(1, 1) * A(2, 0));
      }
      default:
        assert(false);
        return 0;
    }
  }

  Mat inverse() const {
    double d = det();
    if (std::abs(d) < 1e-300) throw LabError("SingularMap", "matrix not invertible");
    Mat r(n);
    if (n == 1) {
      r(0, 0) = 1.0 / d;
    } else if (n == 2) {
      const Mat& A = *this;
      r(0, 0) = A(1, 1) / d;
      r(0, 1) = -A(0, 1) / d;
      r(1, 0) = -A(1, 0) / d;
      r(1, 1) = A(0, 0) / d;
    } else {
      const Mat& A = *this;
      // adjugate / det
      r(0, 0) = (A(1, 1) * A(2, 2) - A(1, 2) * A(2, 1)) / d;
      r(0, 1) = (A(0, 2) * A(2, 1) - A(0, 1) * A(2, 2)) / d;
      r(0, 2) = (A(0, 1) * A(1, 2) - A(0, 2) * A(1, 1)) / d;
      r(1, 0) = (A(1, 2) * A(2, 0) - A(1, 0) * A(2, 2)) / d;
      r(1, 1) = (A(0, 0) * A(2, 2) - A(0, 2) * A(2, 0)) / d;
      r(1, 2) = (A(0, 2) * A(1, 0) - A(0, 0) * A(1, 2)) / d;
      r(2, 0) = (A(1, 0) * A(2, 1) - A(1, 1) * A(2, 0)) / d;
      r(2, 1) = (A(0, 1) * A(2, 0) - A(0, 0) * A(2, 1)) / d;
      r(2, 2) = (A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0)) / d;
    }
    return r;
  }
};

// Symmetric n x n matrix. Only the full storage is kept; setters keep symmetry.
struct SymMat {
  std::array<double, 9> m{};
  int n = 0;

  SymMat() = default;
  explicit SymMat(int dim) : n(dim) { m.fill(0.0); }
  static SymMat identity(int dim) {
    SymMat r(dim);
    for (int i = 0; i < dim; ++i) r.set(i, i, 1.0);
    return r;
  }
  static SymMat diag(const Vec& d) {
    SymMat r(d.n);
    for (int i = 0; i < d.n; ++i) r.set(i, i, d[i]);
    return r;
  }

  double operator()(int i, int j) const { return m[i * 3 + j]; }
  void set(int i, int j, double v) {
    m[i * 3 + j] = v;
    m[j * 3 + i] = v;
  }
  void add(int i, int j, double v) { set(i, j, (*this)(i, j) + v); }

  Mat asMat() const {
    Mat r(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) r(i, j) = (*this)(i, j);
    return r;
  }
  static SymMat fromMatSymmetrized(const Mat& a) {
    SymMat r(a.n);
    for (int i = 0; i < a.n; ++i)
      for (int j = i; j < a.n; ++j) r.set(i, j, 0.5 * (a(i, j) + a(j, i)));
    return r;
  }

  SymMat operator+(const SymMat& o) const {
    SymMat r(n);
    for (int i = 0; i < 9; ++i) r.m[i] = m[i] + o.m[i];
    return r;
  }
  SymMat operator-(const SymMat& o) const {
    SymMat r(n);
    for (int i = 0; i < 9; ++i) r.m[i] = m[i] - o.m[i];
    return r;
  }
  SymMat scaled(double s) const {
    SymMat r(n);
    for (int i = 0; i < 9; ++i) r.m[i] = m[i] * s;
    return r;
  }

  Vec apply(const Vec& v) const { return asMat().apply(v); }
  double quadForm(const Vec& v) const { return v.dot(apply(v)); }
  double trace() const {
    double s = 0;
    for (int i = 0; i < n; ++i) s += (*this)(i, i);
    return s;
  }
  double det() const { return asMat().det(); }
  SymMat inverse() const { return fromMatSymmetrized(asMat().inverse()); }

  // Hilbert-Schmidt norm.
  double hsNorm() const {
    double s = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += (*this)(i, j) * (*this)(i, j);
    return std::sqrt(s);
  }
};

// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
// Columns of `vectors` are the eigenvectors.
struct EigenSym {
  Vec values;
  Mat vectors;
};

inline EigenSym eigenSym(const SymMat& A) {
  const int n = A.n;
  Mat a = A.asMat();
  Mat v = Mat::identity(n);
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int k = 0; k < n; ++k) {
          double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  EigenSym r;
  r.values = Vec(n);
  for (int i = 0; i < n; ++i) r.values[i] = a(i, i);
  r.vectors = v;
  return r;
}

inline double minEigenvalue(const SymMat& A) {
  EigenSym e = eigenSym(A);
  double m = e.values[0];
  for (int i = 1; i < A.n; ++i) m = std::min(m, e.values[i]);
  return m;
}

inline double maxEigenvalue(const SymMat& A) {
  EigenSym e = eigenSym(A);
  double m = e.values[0];
  for (int i = 1; i < A.n; ++i) m = std::max(m, e.values[i]);
  return m;
}

inline bool isPsd(const SymMat& A, double tol) { return minEigenvalue(A) >= -tol; }

// Spectral (operator) norm of a general matrix via A^t A.
inline double operatorNorm(const Mat& A) {
  SymMat ata = SymMat::fromMatSymmetrized(A.transpose().mul(A));
  return std::sqrt(std::max(0.0, maxEigenvalue(ata)));
}

// Symmetric square root of an SPD matrix.
inline SymMat sqrtSpd(const SymMat& A) {
  EigenSym e = eigenSym(A);
  SymMat r(A.n);
  for (int i = 0; i < A.n; ++i)
    for (int j = i; j < A.n; ++j) {
      double s = 0;
      for (int k = 0; k < A.n; ++k) {
        double lk = std::sqrt(std::max(0.0, e.values[k]));
        s += e.vectors(i, k) * lk * e.vectors(j, k);
      }
      r.set(i, j, s);
    }
  return r;
}

// Cofactor matrix of an SPD matrix: (det A) A^{-1}.
inline SymMat cofactorOf(const SymMat& A, double detFloor) {
  double d = A.det();
  if (d < detFloor) throw LabError("SingularHessian", "determinant below floor");
  return A.inverse().scaled(d);
}

// trace(AB) for symmetric A, B.
inline double traceProduct(const SymMat& A, const SymMat& B) {
  double s = 0;
  for (int i = 0; i < A.n; ++i)
    for (int j = 0; j < A.n; ++j) s += A(i, j) * B(j, i);
  return s;
}

// Two classical inequalities for symmetric matrices:
//   (a) A,B >= 0  =>  trace(AB) >= n (det A det B)^{1/n}
//   (c) A > 0     =>  a_ij b_i b_j >= |b|^2 / trace(A^{-1})
struct MatrixIneqReport {
  double trace_ab = 0;
  double amgm_bound = 0;  // n (det A det B)^{1/n}
  bool trace_ok = false;
  double quad_form = 0;
  double quad_bound = 0;  // |b|^2 / trace(A^{-1})
  bool quad_ok = false;
};

inline MatrixIneqReport matrixIneqCheck(const SymMat& A, const SymMat& B, const Vec& b,
                                        double tol = 1e-12) {
  const int n = A.n;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (std::abs(A(i, j) - A(j, i)) > 1e-14 || std::abs(B(i, j) - B(j, i)) > 1e-14)
        throw LabError("NotSymmetric", "inputs must be symmetric");
    }
  if (!isPsd(A, 1e-12) || !isPsd(B, 1e-12))
    throw LabError("NotPSD", "inputs must be positive semidefinite");

  MatrixIneqReport r;
  r.trace_ab = traceProduct(A, B);
  double dd = std::max(0.0, A.det()) * std::max(0.0, B.det());
  r.amgm_bound = n * std::pow(dd, 1.0 / n);
  r.trace_ok = r.trace_ab >= r.amgm_bound * (1.0 - tol) - tol;

  r.quad_form = A.quadForm(b);
  double tri = A.inverse().trace();
  r.quad_bound = b.norm2() / tri;
  r.quad_ok = r.quad_form >= r.quad_bound * (1.0 - tol) - tol;
  return r;
}

}  // namespace malab
