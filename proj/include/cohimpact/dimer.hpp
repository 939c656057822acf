#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cohimpact/heom.hpp"
#include "cohimpact/lindblad.hpp"

namespace cohimpact::dimer {

// Basis slots.
inline constexpr Index G = 0, D = 1, A = 2, S = 3;
inline constexpr std::array<Index, 2> kDonor{D, A};

// Internal units throughout (rad/ps, ps^-1); see units.hpp for converters.
struct DimerParams {
  double detuning = 0.0;
  double coupling = 0.0;
  double gamma_d = 0.0;
  double gamma_a = 0.0;
  double kappa_a = 0.0;
  double dephasing = 0.0;                // Lindblad engine, per-site pure dephasing
  std::optional<DrudeLorentzBath> bath;  // HEOM engine, one bath per site

  void validate() const;
};

enum class Engine { lindblad, heom };
using Model = std::variant<LindbladModel, HeomModel>;

SiteBasisLabels labels();
Matrix hamiltonian(double detuning, double coupling);
LindbladModel build_lindblad(const DimerParams& p);
HeomModel build_heom(const DimerParams& p, int depth = 5,
                     Terminator terminator = Terminator::markovian_closure);
Model build_dimer(const DimerParams& p, Engine engine, int depth = 5);

double mixing_angle(double detuning, double coupling);
double exciton_splitting(double detuning, double coupling);  // sqrt(Delta^2 + 4 J^2)

// rho0^(+-) = (|D> +- |A>)/sqrt2 in the 4-level space.
Matrix plus_state();
Matrix minus_state();
Matrix site_state(Index slot);

Matrix trap_effect_rate(const DimerParams& p);  // M~ = kappa_A |A><A|

struct Effects {
  Matrix m_eta;
  Matrix m_tau;
};
Effects effective_operators(const Model& model, const DimerParams& p);

struct Efficiency {
  double eta, eta_free, delta;
};
struct TransferTime {
  double tau, tau_free, delta;
  double n_tau, n_tau_free;
};
Efficiency efficiency(const Effects& e, const Matrix& rho0);
TransferTime transfer_time(const Effects& e, const Matrix& rho0);

struct BoundReport {
  Efficiency eff;
  TransferTime time;
  double c_eta = 0.0;  // C_{M_eta}(id)
  double c_tau = 0.0;  // C_{M_tau}(id)
  double eta_slack = 0.0;  // c_eta - |delta eta|
  bool eta_holds = false;
  double n_slack = 0.0;  // c_tau - |delta N_tau|
  bool n_holds = false;
  bool tau_applicable = false;  // eta_free > c_eta
  double tau_bound = 0.0;
  double tau_slack = 0.0;
  bool tau_holds = false;
};
BoundReport coherence_bounds(const Effects& e, const Matrix& rho0);

// 4 E_R k_B T / omega_c, all in rad/ps.
double gamma_eff(double reorganization, double kt, double omega_c);
// Inverse map at fixed T and omega_c.
double reorganization_for(double gamma, double kt, double omega_c);

// Gate machinery (Lindblad engine only).
enum class Channel { A, D };
struct WeightProfile {
  std::string name;
  std::function<double(double)> w;

  static WeightProfile constant(double value);
  static WeightProfile linear_ramp(double w0, double w1, double length);
  static WeightProfile exponential(double w0, double rate);
};
struct GateSpec {
  Channel channel = Channel::A;
  double start = 0.0;
  double length = 0.0;
  WeightProfile weight = WeightProfile::constant(1.0);
};
Matrix gate_effect(const Model& model, const DimerParams& p, const GateSpec& spec);
Matrix gate_effect(const LindbladModel& model, const DimerParams& p, const GateSpec& spec);

// M^_k = sum_j V_kj M~_j. V must be entrywise nonnegative.
std::vector<Matrix> coarse_grain(const std::vector<Matrix>& effects, const Eigen::MatrixXd& v);

struct DpiRow {
  double t;
  Index outcome;
  double lhs;  // C_{M^_k}(Lambda_t)
  double rhs;  // sum_j V_kj C_{M~_j}(Lambda_t)
};
std::vector<DpiRow> dpi_check(const LindbladModel& model, const std::vector<Matrix>& effects,
                              const Eigen::MatrixXd& v, std::span<const double> times);

struct SweepRow {
  double gamma;
  std::string state;
  BoundReport report;
};
// Effective-rate sweep. The Lindblad engine uses gamma as the dephasing rate;
// the HEOM engine maps it onto E_R at the bath's fixed cutoff and temperature.
std::vector<SweepRow> sweep_enaqt(const DimerParams& base, std::span<const double> gammas,
                                  Engine engine, int depth = 5);

}  // namespace cohimpact::dimer
