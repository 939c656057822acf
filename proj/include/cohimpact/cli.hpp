#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cohimpact/chain.hpp"
#include "cohimpact/config.hpp"
#include "cohimpact/dimer.hpp"

namespace cohimpact::cli {

enum ExitCode { kSuccess = 0, kFailure = 1, kUsage = 2 };

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int main(int argc, char** argv);

// Scenario defaults. Every value can be overridden from a config file.
enum class Regime { fast, intermediate };
Regime parse_regime(const std::string& s);
double regime_tau_c(Regime r);  // ps

struct ImpactScenario {
  dimer::DimerParams params;  // bath set, rates zero
  double t_max = 1.0;
  int points = 201;
  int depth = 5;
  int matsubara = 3;
  dimer::Engine engine = dimer::Engine::heom;
};
ImpactScenario dimer_impact_scenario(const Config& cfg, Regime regime, double ratio, bool deep);

struct ImpactCurve {
  std::vector<double> t, rho_dd, c;
};
ImpactCurve dimer_impact_curve(const ImpactScenario& s);

// Time-to-half-envelope of a curve: first time the suffix maximum drops to
// half the global maximum.
double half_envelope_time(const std::vector<double>& t, const std::vector<double>& c);

struct ChainScenario {
  double coupling = 0.0;      // J, rad/ps
  double energy = 0.0;        // uniform site energy
  double kt = 0.0;
  double recombination = 0.0;
  double trap = 0.0;
  double omega_c = 0.0;       // 1/tau_c
  std::vector<int> sizes;
  std::vector<double> ratios;  // J/E_R
  chain::ChainParams params(int n, double ratio) const;
};
ChainScenario chain_scenario(const Config& cfg, std::vector<int> default_sizes);

// Mean of C over [0, window] on a uniform grid.
double early_mean(const std::vector<double>& t, const std::vector<double>& c, double window);

}  // namespace cohimpact::cli
