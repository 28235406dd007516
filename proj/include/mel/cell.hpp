#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "mel/field.hpp"
#include "mel/material.hpp"

namespace mel {

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CorrectorSolution {
  Field phi;                         // vector3 on the cell grid, zero mean
  double value = 0.0;                // homogenized density at the argument
  double residual = 0.0;             // final relative residual
  int iterations = 0;
  std::vector<double> energy_trace;  // functional value per CG iteration
};

struct CellSolveOptions {
  double tol = 1e-10;  // relative residual
  int max_iter = 0;    // 0 -> 10 * n
};

// Homogenized exchange density: minimizes int_Y a(y) |A + grad phi|^2 over
// zero-mean periodic phi. The three rows decouple into scalar problems solved
// by preconditioned CG with spectral derivatives.
CorrectorSolution solve_exchange_cell(const Field& a_field, const Mat3& A,
                                      const CellSolveOptions& opt = {});

// Homogenized linearized elastic density: minimizes int_Y Q(y, A + grad phi, nu)
// over zero-mean periodic vector fields.
CorrectorSolution solve_elastic_cell(const DensitySpec& spec, int n, const Mat3& A,
                                     const Vec3& nu, const CellSolveOptions& opt = {});

// Quadratic representation of the homogenized exchange density,
// T_hom(A) = sum_i A_i . M . A_i over the rows A_i of A.
class HomogenizedExchange {
 public:
  HomogenizedExchange(Mat3 row_form, int n) : m_(std::move(row_form)), n_(n) {}

  double operator()(const Mat3& A) const {
    double v = 0.0;
    for (int i = 0; i < 3; ++i) {
      const Vec3 r = A.row(i).transpose();
      v += r.dot(m_ * r);
    }
    return v;
  }
  const Mat3& row_form() const { return m_; }
  Mat9 matrix9() const;  // block-diagonal expansion on flattened matrices
  int resolution() const { return n_; }

 private:
  Mat3 m_;
  int n_;
};

// Tabulates T_hom by corrector solves at the three basis directions plus
// polarization pairs.
HomogenizedExchange tabulate_exchange_tensor(const Field& a_field,
                                             const CellSolveOptions& opt = {});

// Assembles the 9x9 matrix of A -> Q_hom(A, nu) via solves at the basis
// matrices E_ij and pairs E_ij + E_kl.
Mat9 tabulate_elastic_tensor(const DensitySpec& spec, int n, const Vec3& nu,
                             const CellSolveOptions& opt = {});

// Per-direction evaluator for Q_hom(A, nu). For y-uniform elastic
// coefficients the corrector vanishes and Q is evaluated directly; otherwise
// tensors are tabulated per direction, memoized on a 162-vertex icosphere
// quantization of nu.
class HomogenizedElastic {
 public:
  HomogenizedElastic(DensitySpec spec, int n, CellSolveOptions opt = {});

  double operator()(const Mat3& A, const Vec3& nu) const;
  Mat9 matrix9(const Vec3& nu) const;

 private:
  const Mat9& tensor_for(const Vec3& nu) const;

  DensitySpec spec_;
  int n_;
  CellSolveOptions opt_;
  mutable std::mutex mu_;
  mutable std::map<int, Mat9> memo_;  // keyed by icosphere vertex id
};

// 162 unit directions (icosahedron subdivided twice); index of the nearest
// one. Exposed for tests.
const std::vector<Vec3>& icosphere162();
int quantize_direction(const Vec3& nu);

}  // namespace mel
