#pragma once

#include <Eigen/Core>

#include <string>
#include <variant>

namespace fex {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Field = VectorX<double>;

/// Coefficients of the forager-exploiter system
///   u_t = u_xx - chi1 (u w_x)_x
///   v_t = v_xx - chi2 (v u_x)_x
///   w_t = d w_xx - lambda (u + v) w - mu w + r
/// with homogeneous Neumann boundary conditions.
struct ModelParams {
  double chi1 = 1.0;
  double chi2 = 1.0;
  double d = 1.0;
  double lambda = 1.0;
  double mu = 1.0;
  double r = 1.0;

  /// Throws ValidationError unless chi1, chi2, d, lambda, mu > 0 and r >= 0.
  void validate() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Uniform cell-centered mesh on (0, length).
class Grid {
 public:
  Grid(int n, double length);

  int n() const { return n_; }
  double length() const { return length_; }
  double dx() const { return dx_; }
  double center(int i) const { return (i + 0.5) * dx_; }
  Field centers() const;

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int n_;
  double length_;
  double dx_;
};

Grid build_grid(int n, double length);

struct FieldState {
  double t = 0.0;
  Field u;
  Field v;
  Field w;

  /// Throws InvariantViolation naming the field and cell if u < 0, v < 0 or
  /// w <= 0 anywhere, or if sizes disagree with the grid.
  void check_invariants(const Grid& grid, double negative_tolerance = 0.0) const;
};

namespace ic {

struct Constant {
  double value = 1.0;
  friend bool operator==(const Constant&, const Constant&) = default;
};

// base + amplitude * cos(mode * pi * x / L), mean corrected to exactly base.
struct ConstantPlusCosine {
  double base = 1.0;
  double amplitude = 0.0;
  int mode = 1;
  friend bool operator==(const ConstantPlusCosine&, const ConstantPlusCosine&) = default;
};

// baseline + height * exp(-((x - center) / width)^2)
struct GaussianBump {
  double center = 0.5;
  double width = 0.1;
  double height = 1.0;
  double baseline = 0.0;
  friend bool operator==(const GaussianBump&, const GaussianBump&) = default;
};

// One value per line, or a snapshot CSV (x,u,v,w) from which the column of
// the field being initialized is taken.
struct FromFile {
  std::string path;
  friend bool operator==(const FromFile&, const FromFile&) = default;
};

}  // namespace ic

using FieldProfile = std::variant<ic::Constant, ic::ConstantPlusCosine, ic::GaussianBump, ic::FromFile>;

struct InitialCondition {
  FieldProfile u = ic::Constant{1.0};
  FieldProfile v = ic::Constant{1.0};
  FieldProfile w = ic::Constant{1.0};

  friend bool operator==(const InitialCondition&, const InitialCondition&) = default;
};

/// Samples a profile on the grid cell centers. `name` is used in error messages.
Field sample_profile(const FieldProfile& profile, const Grid& grid, const std::string& name);

/// Builds the t = 0 state; rejects negative or massless u0/v0 and non-positive w0.
FieldState init_state(const InitialCondition& ic, const Grid& grid);

struct MassMean {
  double mass;
  double mean;
};

MassMean mass_and_mean(const Field& field, const Grid& grid);

struct EquilibriumInfo {
  double ubar0 = 0.0;
  double vbar0 = 0.0;
  double wstar = 0.0;
};

/// Homogeneous nutrient level r / (lambda (ubar0 + vbar0) + mu).
double equilibrium_w(const ModelParams& params, double ubar0, double vbar0);

EquilibriumInfo equilibrium_of(const FieldState& initial, const ModelParams& params, const Grid& grid);

struct StabilityMargin {
  double margin;
  bool normalized;
};

/// Formal homogenization threshold from linear stability analysis:
///   8 (lambda + mu)^2 (d + 1) / (lambda r chi1 ubar0 vbar0) + 2 (d + 1) / vbar0 - chi2.
/// Positive margin predicts relaxation to the homogeneous state. The formula is
/// only stated for the unit interval with ubar0 + vbar0 = 1; `normalized`
/// reports whether that holds.
StabilityMargin stability_margin(const ModelParams& params, double ubar0, double vbar0, const Grid& grid);

}  // namespace fex
