#pragma once

#include <cstdint>

#include "json.hpp"

#include "dycop/copulas.hpp"
#include "dycop/margins.hpp"
#include "dycop/market_data.hpp"

namespace dycop::sim {

// Data-generating process: two Realized-GARCH margins linked by a constant or
// GAS copula.
struct JointDgp {
  margins::RealGarchParams margin1;
  margins::RealGarchParams margin2;
  cop::Family family = cop::Family::normal;
  cop::Dynamics dynamics = cop::Dynamics::constant;
  double delta = 0.0;   // constant dependence parameter
  double aux = 0.0;     // nu (student_t) or upper tail (sjc)
  cop::GasParams gas;   // used when dynamics == gas
};

struct JointSimulation {
  md::ReturnPanel panel;
  std::vector<double> delta_path;  // true dependence parameter per kept day
  std::vector<double> u1, u2;      // true copula draws per kept day
};

JointSimulation simulate_joint(const JointDgp& dgp, std::size_t T, std::uint64_t seed,
                               std::size_t burnin = 500);

// Example calibration used by `simulate` when no DGP file is given; matches
// the defaults shipped in the README.
JointDgp example_dgp();

nlohmann::json dgp_to_json(const JointDgp& dgp);
JointDgp dgp_from_json(const nlohmann::json& j);

}  // namespace dycop::sim
