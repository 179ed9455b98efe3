#pragma once

// Conservative finite-volume operators on a uniform cell-centered grid with
// homogeneous Neumann (zero-flux) boundaries, and the tridiagonal solver used
// by the implicit diffusion substeps.

#include "fex/core.hpp"
#include "fex/errors.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>

namespace fex {

/// Discrete Laplacian with mirrored ghost cells. The result is the difference
/// of face fluxes, so dx * sum(result) telescopes to zero.
template <typename Derived>
VectorX<typename Derived::Scalar> laplacian_neumann(const Eigen::MatrixBase<Derived>& field, const Grid& grid) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = field.size();
  const Scalar inv_dx2 = Scalar(1) / (Scalar(grid.dx()) * Scalar(grid.dx()));
  VectorX<Scalar> out(n);
  Scalar left = Scalar(0);  // flux through face i - 1/2
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar right = i + 1 < n ? field[i + 1] - field[i] : Scalar(0);
    out[i] = (right - left) * inv_dx2;
    left = right;
  }
  return out;
}

/// Fluxes at the n + 1 faces; flux[0] and flux[n] are the zero boundary fluxes.
template <typename Scalar>
struct FaceFluxes {
  VectorX<Scalar> flux;
};

template <typename Scalar>
struct TaxisFluxes {
  FaceFluxes<Scalar> faces;
  Scalar max_face_speed = Scalar(0);
  // max over cells of the summed outward face speeds; dt * max_outflow_rate / dx <= 1
  // keeps the explicit donor-cell update nonnegative.
  Scalar max_outflow_rate = Scalar(0);
};

/// Donor-cell fluxes F = V * density_upwind with face velocity
/// V = chi * (potential[i+1] - potential[i]) / dx.
template <typename D1, typename D2>
TaxisFluxes<typename D1::Scalar> taxis_fluxes(const Eigen::MatrixBase<D1>& density, const Eigen::MatrixBase<D2>& potential,
                                              typename D1::Scalar chi, const Grid& grid) {
  using Scalar = typename D1::Scalar;
  const Eigen::Index n = density.size();
  const Scalar dx = Scalar(grid.dx());
  TaxisFluxes<Scalar> out;
  out.faces.flux = VectorX<Scalar>::Zero(n + 1);
  VectorX<Scalar> outflow = VectorX<Scalar>::Zero(n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const Scalar speed = chi * (potential[i + 1] - potential[i]) / dx;
    Scalar upwind;
    if (speed > Scalar(0)) {
      upwind = density[i];
      outflow[i] += speed;
    } else if (speed < Scalar(0)) {
      upwind = density[i + 1];
      outflow[i + 1] -= speed;
    } else {
      upwind = Scalar(0.5) * (density[i] + density[i + 1]);
    }
    out.faces.flux[i + 1] = speed * upwind;
    out.max_face_speed = std::max<Scalar>(out.max_face_speed, std::abs(speed));
  }
  out.max_outflow_rate = n > 0 ? outflow.maxCoeff() : Scalar(0);
  return out;
}

template <typename Scalar>
struct TaxisTendency {
  VectorX<Scalar> tendency;
  Scalar max_face_speed = Scalar(0);
  Scalar max_outflow_rate = Scalar(0);
};

/// Tendency -(F_{i+1/2} - F_{i-1/2}) / dx of the taxis term -(chi * density * potential_x)_x.
template <typename D1, typename D2>
TaxisTendency<typename D1::Scalar> taxis_divergence(const Eigen::MatrixBase<D1>& density,
                                                    const Eigen::MatrixBase<D2>& potential,
                                                    typename D1::Scalar chi, const Grid& grid) {
  using Scalar = typename D1::Scalar;
  const auto fluxes = taxis_fluxes(density, potential, chi, grid);
  const Eigen::Index n = density.size();
  const auto& f = fluxes.faces.flux;
  TaxisTendency<Scalar> out;
  out.tendency = -(f.tail(n) - f.head(n)) / Scalar(grid.dx());
  out.max_face_speed = fluxes.max_face_speed;
  out.max_outflow_rate = fluxes.max_outflow_rate;
  return out;
}

template <typename Scalar>
struct TridiagonalSystem {
  VectorX<Scalar> lower;  // n - 1, row i + 1 couples to column i
  VectorX<Scalar> diag;   // n
  VectorX<Scalar> upper;  // n - 1, row i couples to column i + 1
  VectorX<Scalar> rhs;    // n

  Eigen::Index size() const { return diag.size(); }
};

/// Backward-Euler system (I/dt - diffusivity * L + diag(extra_diag)) x = field_old / dt + extra_rhs
/// with L the Neumann Laplacian. For the nutrient equation extra_diag carries the
/// absorption lambda (u + v) + mu and extra_rhs the supply r.
template <typename D1, typename D2, typename D3>
TridiagonalSystem<typename D1::Scalar> assemble_diffusion_system(const Eigen::MatrixBase<D1>& field_old,
                                                                 typename D1::Scalar diffusivity,
                                                                 typename D1::Scalar dt, const Grid& grid,
                                                                 const Eigen::MatrixBase<D2>& extra_diag,
                                                                 const Eigen::MatrixBase<D3>& extra_rhs) {
  using Scalar = typename D1::Scalar;
  if (!(dt > Scalar(0))) throw ValidationError("diffusion step requires dt > 0");
  if (!(diffusivity >= Scalar(0))) throw ValidationError("diffusivity must be nonnegative");
  const Eigen::Index n = field_old.size();
  if (extra_diag.size() != n || extra_rhs.size() != n) {
    throw ValidationError("diffusion system inputs have mismatched sizes");
  }
  if ((extra_diag.array() < Scalar(0)).any()) throw ValidationError("extra diagonal terms must be nonnegative");

  const Scalar coupling = diffusivity / (Scalar(grid.dx()) * Scalar(grid.dx()));
  const Scalar inv_dt = Scalar(1) / dt;
  TridiagonalSystem<Scalar> sys;
  sys.lower = VectorX<Scalar>::Constant(n - 1, -coupling);
  sys.upper = VectorX<Scalar>::Constant(n - 1, -coupling);
  sys.diag = (inv_dt + extra_diag.array()).matrix();
  for (Eigen::Index i = 0; i < n; ++i) {
    const int neighbours = (i > 0 ? 1 : 0) + (i + 1 < n ? 1 : 0);
    sys.diag[i] += neighbours * coupling;
  }
  sys.rhs = (field_old.array() * inv_dt + extra_rhs.array()).matrix();
  return sys;
}

/// Thomas algorithm (no pivoting). Stable for diagonally dominant systems;
/// throws InvariantViolation on a pivot below 1e-30 in magnitude.
template <typename Scalar>
VectorX<Scalar> thomas_solve(const TridiagonalSystem<Scalar>& sys) {
  const Eigen::Index n = sys.size();
  if (sys.rhs.size() != n || (n > 0 && (sys.lower.size() != n - 1 || sys.upper.size() != n - 1))) {
    throw ValidationError("tridiagonal system has inconsistent band sizes");
  }
  VectorX<Scalar> c(n);
  VectorX<Scalar> x(n);
  Scalar pivot = Scalar(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    pivot = sys.diag[i] - (i > 0 ? sys.lower[i - 1] * c[i - 1] : Scalar(0));
    if (!(std::abs(pivot) >= Scalar(1e-30))) {
      throw InvariantViolation("tridiagonal solve: near-singular pivot at row " + std::to_string(i));
    }
    c[i] = i + 1 < n ? sys.upper[i] / pivot : Scalar(0);
    x[i] = (sys.rhs[i] - (i > 0 ? sys.lower[i - 1] * x[i - 1] : Scalar(0))) / pivot;
  }
  for (Eigen::Index i = n - 2; i >= 0; --i) x[i] -= c[i] * x[i + 1];
  return x;
}

}  // namespace fex
