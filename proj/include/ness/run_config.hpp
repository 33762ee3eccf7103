#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ness/evolve.hpp"
#include "ness/potentials.hpp"

namespace ness {

struct GridSpec {
  double x_min = -20.0;
  double x_max = 20.0;
  std::size_t n_points = 1024;
};

enum class PotentialFamily { hermitian_ho, pt_ho, damped_ho, mapped_functional };

std::string_view to_string(PotentialFamily family);
/// Accepts the config names `hermitian-ho`, `pt-ho`, `damped-ho`, `mapped-functional`.
PotentialFamily potential_family_from_string(std::string_view name);

struct PotentialSpec {
  PotentialFamily family = PotentialFamily::damped_ho;
  double omega0 = 1.0;
  double c0 = 0.0;  // pt-ho
  double a1 = 0.0;  // damped-ho
  double a2 = 0.0;
  // mapped-functional: the amplitude solves the real eigenvalue problem with
  // V = omega0^2 x^2/2, cubic coefficient `mapping_sigma` and the polynomial
  // functional, or is the Gaussian ground state for the derivative functional.
  FunctionalSpec functional = PolynomialFunctional{};
  double mapping_sigma = 0.0;
  double mapping_norm = 1.0;
};

struct InitialSpec {
  double x0 = 0.0;
  bool include_phase = true;
  double norm = 1.0;
};

struct RunConfig {
  GridSpec grid;
  double dt = 1e-3;
  double t_final = 100.0;
  std::size_t sample_every = 100;
  double sigma0 = 0.0;
  std::optional<NMSchedule> nm;
  PotentialSpec potential;
  InitialSpec initial;
  /// Peak-density abort level; 0 selects 100x the linear NESS peak density.
  double collapse_threshold = 0.0;
  std::vector<double> snapshot_times;

  /// Throws ConfigError naming the offending field.
  void validate() const;

  /// sigma(t) schedule implied by sigma0 and the optional management block.
  NMSchedule schedule() const;
};

}  // namespace ness
