#include "ness/run_config.hpp"

#include <cmath>

#include "ness/errors.hpp"

namespace ness {

std::string_view to_string(PotentialFamily family) {
  switch (family) {
    case PotentialFamily::hermitian_ho:
      return "hermitian-ho";
    case PotentialFamily::pt_ho:
      return "pt-ho";
    case PotentialFamily::damped_ho:
      return "damped-ho";
    case PotentialFamily::mapped_functional:
      return "mapped-functional";
  }
  return "unknown";
}

PotentialFamily potential_family_from_string(std::string_view name) {
  for (auto f : {PotentialFamily::hermitian_ho, PotentialFamily::pt_ho, PotentialFamily::damped_ho,
                 PotentialFamily::mapped_functional}) {
    if (to_string(f) == name) return f;
  }
  throw ConfigError("potential.family: unknown family '" + std::string(name) +
                    "' (expected hermitian-ho, pt-ho, damped-ho or mapped-functional)");
}

namespace {
void require(bool ok, const char* what) {
  if (!ok) throw ConfigError(what);
}
}  // namespace

void RunConfig::validate() const {
  require(std::isfinite(dt) && dt > 0.0, "evolve.dt must be > 0");
  require(std::isfinite(t_final) && t_final > 0.0, "evolve.t_final must be > 0");
  require(sample_every >= 1, "evolve.sample_every must be >= 1");
  require(std::isfinite(collapse_threshold) && collapse_threshold >= 0.0,
          "evolve.collapse_threshold must be > 0 (or 0 for the default)");
  require(std::isfinite(sigma0), "evolve.sigma0 must be finite");
  require(std::isfinite(initial.x0), "initial.x0 must be finite");
  require(std::isfinite(initial.norm) && initial.norm > 0.0, "initial.norm must be > 0");
  require(std::isfinite(potential.omega0) && potential.omega0 > 0.0, "potential.omega0 must be > 0");
  for (double t : snapshot_times) require(std::isfinite(t) && t >= 0.0, "output.snapshot_times must be >= 0");
  if (nm) {
    nm->validate();
    require(nm->sigma0 == sigma0, "nm.sigma0 must match evolve.sigma0");
  }
  // Grid invariants are checked by the Grid constructor itself.
  Grid(grid.x_min, grid.x_max, grid.n_points);
  switch (potential.family) {
    case PotentialFamily::damped_ho:
      DampedTrapParams{potential.omega0, potential.a1, potential.a2}.validate();
      break;
    case PotentialFamily::mapped_functional:
      ness::validate(potential.functional);
      require(potential.mapping_norm > 0.0, "potential.mapping_norm must be > 0");
      if (const auto* d = std::get_if<DerivativeFunctional>(&potential.functional)) {
        DampedTrapParams{potential.omega0, d->a1, d->a2}.validate();
      }
      break;
    default:
      break;
  }
}

NMSchedule RunConfig::schedule() const { return nm ? *nm : NMSchedule::constant(sigma0); }

}  // namespace ness
