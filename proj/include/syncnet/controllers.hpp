#ifndef SYNCNET_CONTROLLERS_HPP
#define SYNCNET_CONTROLLERS_HPP

#include "syncnet/graphnet.hpp"
#include "syncnet/matcore.hpp"
#include "syncnet/plant.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace syncnet {

// Stacked network vectors hold agent k's n-vector at rows [k n, (k+1) n).
// Internally they are viewed as n x N matrices with agent k in column k;
// in that view (L (x) I_n) x is X L^T.

enum class CouplingVariant {
  static_state_inverse_b,            // u_k = B^{-1} sum a_kj (x_j - x_k)
  dynamic_state,                     // internal-model controller with state eta
  dynamic_output_observer,           // same, fed by a local observer xhat
  static_diffusive_output,           // u_k = sum a_kj (y_j - y_k)
  discrete_static_inverse_b,         // u_k = -eps_k B^{-1} A sum l_kj x_j
  discrete_dynamic_output_observer,  // discrete observer-based controller
  periodic_static_inverse_b          // static_state_inverse_b with A(t)
};

std::string to_string(CouplingVariant v);
std::optional<CouplingVariant> parse_variant(std::string_view name);

bool uses_eta(CouplingVariant v);
bool uses_xhat(CouplingVariant v);
bool is_discrete(CouplingVariant v);

struct CouplingLaw {
  CouplingVariant variant = CouplingVariant::dynamic_state;
  std::optional<Matrix> k;
  std::optional<Matrix> h;
  std::optional<Vector> epsilons;
};

/// Validates a law against its plant and graph, synthesizing K and H when
/// they are not supplied (supplied gains always win). Throws
/// std::invalid_argument when a construction-time precondition fails.
CouplingLaw make_coupling_law(CouplingVariant variant, const LinearPlant& plant,
                              const SwitchingGraph& graph,
                              std::optional<Matrix> k = {},
                              std::optional<Matrix> h = {},
                              std::optional<Vector> epsilons = {});

struct NetworkState {
  double t = 0.0;
  Vector x;
  std::optional<Vector> eta;
  std::optional<Vector> xhat;
};

/// Consensus coupling -(L (x) I_n) x, summed agent by agent.
Vector consensus_rhs(const Eigen::Ref<const Matrix>& adjacency, const Vector& x, int n);
Vector consensus_rhs(const SwitchingGraph& g, double t, const Vector& x, int n);
/// Same quantity through the explicit Kronecker product.
Vector consensus_rhs_kron(const Eigen::Ref<const Matrix>& adjacency, const Vector& x,
                          int n);

/// Throws std::invalid_argument unless 0 < eps_k < 1 / d_k^in on every
/// segment (no upper bound where the in-degree is zero).
void check_epsilons(const SwitchingGraph& g, const Vector& eps);
void check_epsilons(const Eigen::Ref<const Matrix>& adjacency, const Vector& eps);

/// I - diag(eps) L.
Matrix discrete_update_matrix(const Eigen::Ref<const Matrix>& adjacency,
                              const Vector& eps);
bool is_row_stochastic(const Eigen::Ref<const Matrix>& m, double tol = 1e-12);

Vector consensus_step_discrete(const SwitchingGraph& g, const Vector& eps,
                               const Vector& x, double t, int n);

// Closed-loop vector fields. `adjacency` is the weight matrix in force at t.

Vector closed_loop_static_state(const LinearPlant& p,
                                const Eigen::Ref<const Matrix>& adjacency, double t,
                                const Vector& x);
/// A x_k + B u_k with u_k = B^{-1} sum a_kj (x_j - x_k) formed explicitly.
Vector closed_loop_static_state_uncancelled(const LinearPlant& p,
                                            const Eigen::Ref<const Matrix>& adjacency,
                                            double t, const Vector& x);

struct DynamicStateRates {
  Vector x;
  Vector eta;
};

DynamicStateRates closed_loop_dynamic_state(const LinearPlant& p,
                                            const Eigen::Ref<const Matrix>& adjacency,
                                            const Matrix& k, const Vector& x,
                                            const Vector& eta);

struct ObserverRates {
  Vector x;
  Vector eta;
  Vector xhat;
};

ObserverRates closed_loop_output_observer(const LinearPlant& p,
                                          const Eigen::Ref<const Matrix>& adjacency,
                                          const Matrix& k, const Matrix& h,
                                          const Vector& x, const Vector& eta,
                                          const Vector& xhat);

Vector closed_loop_static_output(const LinearPlant& p,
                                 const Eigen::Ref<const Matrix>& adjacency,
                                 const Vector& x);

/// x_k+ = A x_k - eps_k A sum_j l_kj x_j.
Vector discrete_static_inverse_b(const LinearPlant& p,
                                 const Eigen::Ref<const Matrix>& adjacency,
                                 const Vector& eps, const Vector& x);
/// Same map through u_k = -eps_k B^{-1} A sum_j l_kj x_j.
Vector discrete_static_inverse_b_uncancelled(const LinearPlant& p,
                                             const Eigen::Ref<const Matrix>& adjacency,
                                             const Vector& eps, const Vector& x);

/// eta+ = (A + B K) eta + eps_k A sum l_kj (xhat_j - eta_j),
/// xhat+ = A xhat + B K eta + H (C xhat - C x), x+ = A x + B K eta.
ObserverRates discrete_output_observer(const LinearPlant& p,
                                       const Eigen::Ref<const Matrix>& adjacency,
                                       const Matrix& k, const Matrix& h,
                                       const Vector& eps, const Vector& x,
                                       const Vector& eta, const Vector& xhat);

/// A law bound to its plant and graph, acting on packed [x; eta; xhat].
class NetworkModel {
 public:
  NetworkModel(CouplingLaw law, LinearPlant plant, SwitchingGraph graph);

  const CouplingLaw& law() const { return law_; }
  const LinearPlant& plant() const { return plant_; }
  const SwitchingGraph& graph() const { return graph_; }
  int agents() const { return agents_; }
  int state_dim() const { return n_; }
  bool discrete() const { return is_discrete(law_.variant); }
  Eigen::Index packed_size() const;

  Vector pack(const NetworkState& s) const;
  NetworkState unpack(double t, const Vector& packed) const;

  /// Continuous variants only.
  Vector derivative(double t, const Vector& packed,
                    const Eigen::Ref<const Matrix>& adjacency) const;
  Vector derivative(double t, const Vector& packed) const;
  /// Discrete variants only.
  Vector advance(double t, const Vector& packed,
                 const Eigen::Ref<const Matrix>& adjacency) const;
  Vector advance(double t, const Vector& packed) const;

  /// Matrix of the (linear) closed loop at t, assembled column by column.
  Matrix system_matrix(double t, const Eigen::Ref<const Matrix>& adjacency) const;

 private:
  CouplingLaw law_;
  LinearPlant plant_;
  SwitchingGraph graph_;
  int agents_;
  int n_;
};

/// Pi = (I_N - 1 1^T / N) (x) I_n.
Matrix disagreement_projector(int agents, int n);
/// ||Pi x||, computed as the deviation from the agent average.
double disagreement(const Vector& x, int n);
/// Average agent state.
Vector agent_mean(const Vector& x, int n);
/// 1/2 (Pi x)^T (I_N (x) P) (Pi x).
double lyapunov_value(const Matrix& p, const Vector& x);

struct PassivityCertificate {
  Matrix p;
  double residual_lyap = 0.0;  // max eigenvalue of P A + A^T P
  double residual_io = 0.0;    // ||B^T P - C||_F
  double min_eig_p = 0.0;
  bool verdict = false;
};

inline constexpr double kPassivityTol = 1e-9;

PassivityCertificate passivity_check(const LinearPlant& plant, const Matrix& p,
                                     double tol = kPassivityTol);
/// P = I, then the solution of (A - d I)^T P + P (A - d I) = -C^T C.
std::vector<Matrix> passivity_candidates(const LinearPlant& plant);
/// First verified candidate, or the last one tried with verdict false.
PassivityCertificate search_passivity_certificate(const LinearPlant& plant,
                                                  double tol = kPassivityTol);

/// Weighted incidence factor D of a symmetric Laplacian, D D^T = L, one
/// column (+sqrt w, -sqrt w) per undirected edge.
Matrix incidence_factor(const Eigen::Ref<const Matrix>& adjacency);

struct GramianResult {
  Matrix gramian;
  double min_eigenvalue = 0.0;
  /// Smallest eigenvalue restricted to the disagreement subspace.
  double min_disagreement_eigenvalue = 0.0;
};

/// Observability Gramian of (I_N (x) A, (D^T (x) I_p)(I_N (x) C)) over
/// [t0, t0 + length], composite Simpson on a grid no coarser than `step`.
/// Throws std::domain_error when a segment in the window is asymmetric.
GramianResult observability_gramian(const LinearPlant& plant, const SwitchingGraph& g,
                                    double t0, double length, double step);

}  // namespace syncnet

#endif  // SYNCNET_CONTROLLERS_HPP
