#include "fex/core.hpp"

#include "fex/errors.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <vector>

namespace fex {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ValidationError(std::string(name) + " must be positive and finite (got " + std::to_string(value) + ")");
  }
}

std::vector<double> read_column(const std::string& path, const std::string& name) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open initial data file '" + path + "'");

  std::vector<double> values;
  std::string line;
  int column = -1;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);

    if (first) {
      first = false;
      // Header row of a snapshot file.
      if (cells.size() > 1 || (!cells.empty() && !cells[0].empty() && std::isalpha(static_cast<unsigned char>(cells[0][0])))) {
        for (std::size_t k = 0; k < cells.size(); ++k) {
          if (cells[k] == name) column = static_cast<int>(k);
        }
        if (column < 0) throw ValidationError("initial data file '" + path + "' has no column '" + name + "'");
        continue;
      }
    }
    const std::size_t k = column < 0 ? 0 : static_cast<std::size_t>(column);
    if (k >= cells.size()) throw ValidationError("initial data file '" + path + "': short row '" + line + "'");
    try {
      values.push_back(std::stod(cells[k]));
    } catch (const std::exception&) {
      throw ValidationError("initial data file '" + path + "': cannot parse '" + cells[k] + "'");
    }
  }
  return values;
}

}  // namespace

void ModelParams::validate() const {
  require_positive(chi1, "params.chi1");
  require_positive(chi2, "params.chi2");
  require_positive(d, "params.d");
  require_positive(lambda, "params.lambda");
  require_positive(mu, "params.mu");
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw ValidationError("params.r must be nonnegative and finite (got " + std::to_string(r) + ")");
  }
}

Grid::Grid(int n, double length) : n_(n), length_(length), dx_(0.0) {
  if (n < 4) throw ValidationError("grid needs at least 4 cells (got " + std::to_string(n) + ")");
  require_positive(length, "domain.length");
  dx_ = length / n;
}

Field Grid::centers() const {
  Field x(n_);
  for (int i = 0; i < n_; ++i) x[i] = center(i);
  return x;
}

Grid build_grid(int n, double length) { return Grid(n, length); }

void FieldState::check_invariants(const Grid& grid, double negative_tolerance) const {
  const auto n = grid.n();
  if (u.size() != n || v.size() != n || w.size() != n) {
    throw InvariantViolation("field sizes do not match the grid cell count " + std::to_string(n));
  }
  for (int i = 0; i < n; ++i) {
    if (!(u[i] >= -negative_tolerance)) {
      throw InvariantViolation("negative forager density u[" + std::to_string(i) + "] = " + std::to_string(u[i]) +
                               " at t = " + std::to_string(t));
    }
    if (!(v[i] >= -negative_tolerance)) {
      throw InvariantViolation("negative exploiter density v[" + std::to_string(i) + "] = " + std::to_string(v[i]) +
                               " at t = " + std::to_string(t));
    }
    if (!(w[i] > 0.0)) {
      throw InvariantViolation("non-positive nutrient w[" + std::to_string(i) + "] = " + std::to_string(w[i]) +
                               " at t = " + std::to_string(t));
    }
  }
}

Field sample_profile(const FieldProfile& profile, const Grid& grid, const std::string& name) {
  const int n = grid.n();
  const Field x = grid.centers();
  struct Sampler {
    const Grid& grid;
    const Field& x;
    const std::string& name;
    int n;

    Field operator()(const ic::Constant& c) const { return Field::Constant(n, c.value); }

    Field operator()(const ic::ConstantPlusCosine& c) const {
      if (c.mode < 0) throw ValidationError("init." + name + ".mode must be nonnegative");
      const double k = c.mode * std::numbers::pi / grid.length();
      Field wave = (k * x.array()).cos().matrix();
      wave.array() -= wave.mean();
      return (c.base + c.amplitude * wave.array()).matrix();
    }

    Field operator()(const ic::GaussianBump& g) const {
      require_positive(g.width, ("init." + name + ".width").c_str());
      return (g.baseline + g.height * (-((x.array() - g.center) / g.width).square()).exp()).matrix();
    }

    Field operator()(const ic::FromFile& f) const {
      const auto values = read_column(f.path, name);
      if (static_cast<int>(values.size()) != n) {
        throw ValidationError("initial data file '" + f.path + "' has " + std::to_string(values.size()) +
                              " values for " + name + ", grid has " + std::to_string(n) + " cells");
      }
      return Eigen::Map<const Field>(values.data(), n);
    }
  };
  return std::visit(Sampler{grid, x, name, n}, profile);
}

FieldState init_state(const InitialCondition& ic, const Grid& grid) {
  FieldState state;
  state.t = 0.0;
  state.u = sample_profile(ic.u, grid, "u");
  state.v = sample_profile(ic.v, grid, "v");
  state.w = sample_profile(ic.w, grid, "w");

  auto check_density = [&](const Field& f, const char* name) {
    if (!f.allFinite()) throw ValidationError(std::string("initial ") + name + " is not finite");
    if (f.minCoeff() < 0.0) throw ValidationError(std::string("initial ") + name + " must be nonnegative");
    if (!(mass_and_mean(f, grid).mass > 0.0)) throw ValidationError(std::string("initial ") + name + " has zero mass");
  };
  check_density(state.u, "u");
  check_density(state.v, "v");
  if (!state.w.allFinite() || !(state.w.minCoeff() > 0.0)) {
    throw ValidationError("initial w must be positive everywhere");
  }
  return state;
}

MassMean mass_and_mean(const Field& field, const Grid& grid) {
  const double mass = grid.dx() * field.sum();
  return {mass, mass / grid.length()};
}

double equilibrium_w(const ModelParams& params, double ubar0, double vbar0) {
  return params.r / (params.lambda * (ubar0 + vbar0) + params.mu);
}

EquilibriumInfo equilibrium_of(const FieldState& initial, const ModelParams& params, const Grid& grid) {
  EquilibriumInfo eq;
  eq.ubar0 = mass_and_mean(initial.u, grid).mean;
  eq.vbar0 = mass_and_mean(initial.v, grid).mean;
  eq.wstar = equilibrium_w(params, eq.ubar0, eq.vbar0);
  return eq;
}

StabilityMargin stability_margin(const ModelParams& params, double ubar0, double vbar0, const Grid& grid) {
  if (!(params.r > 0.0)) {
    throw ValidationError("the homogenization threshold divides by r; it requires r > 0");
  }
  if (!(ubar0 > 0.0) || !(vbar0 > 0.0)) {
    throw ValidationError("the homogenization threshold requires positive means ubar0 and vbar0");
  }
  const double lm = params.lambda + params.mu;
  const double lhs = 8.0 * lm * lm * (params.d + 1.0) / (params.lambda * params.r * params.chi1 * ubar0 * vbar0) +
                     2.0 * (params.d + 1.0) / vbar0;
  const bool normalized = grid.length() == 1.0 && std::abs(ubar0 + vbar0 - 1.0) <= 1e-12;
  return {lhs - params.chi2, normalized};
}

}  // namespace fex
