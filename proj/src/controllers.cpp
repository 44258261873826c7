#include "syncnet/controllers.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <utility>

namespace syncnet {

namespace {

using ConstAgents = Eigen::Map<const Matrix>;

ConstAgents agents_view(const Vector& x, int n) {
  if (n <= 0 || x.size() % n != 0) {
    throw std::invalid_argument("stacked vector length is not a multiple of n");
  }
  return ConstAgents(x.data(), n, x.size() / n);
}

Vector flatten(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

void check_agents(const Eigen::Ref<const Matrix>& adjacency, const Vector& x, int n) {
  if (n <= 0 || x.size() != adjacency.rows() * n) {
    throw std::invalid_argument("stacked state does not match N * n");
  }
}

// Columns are sum_j a_kj (z_j - z_k), i.e. -Z L^T.
Matrix coupling(const Eigen::Ref<const Matrix>& adjacency, const Matrix& z) {
  return -z * laplacian(adjacency).transpose();
}

constexpr std::array<std::pair<CouplingVariant, std::string_view>, 7> kVariantNames{{
    {CouplingVariant::static_state_inverse_b, "static-state-inverseB"},
    {CouplingVariant::dynamic_state, "dynamic-state"},
    {CouplingVariant::dynamic_output_observer, "dynamic-output-observer"},
    {CouplingVariant::static_diffusive_output, "static-diffusive-output"},
    {CouplingVariant::discrete_static_inverse_b, "discrete-static-inverseB"},
    {CouplingVariant::discrete_dynamic_output_observer, "discrete-dynamic-output-observer"},
    {CouplingVariant::periodic_static_inverse_b, "periodic-static-inverseB"},
}};

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void require_invertible_b(const LinearPlant& p, const std::string& who) {
  const Matrix& b = p.b();
  require(b.rows() == b.cols(), who + ": B must be square");
  const double cond = condition_number(b);
  if (!(cond <= kMaxBCondition)) {
    std::ostringstream os;
    os << who << ": B is singular or ill-conditioned (condition " << cond << ")";
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

std::string to_string(CouplingVariant v) {
  for (const auto& [variant, name] : kVariantNames) {
    if (variant == v) return std::string(name);
  }
  return "unknown";
}

std::optional<CouplingVariant> parse_variant(std::string_view name) {
  for (const auto& [variant, n] : kVariantNames) {
    if (n == name) return variant;
  }
  return std::nullopt;
}

bool uses_eta(CouplingVariant v) {
  return v == CouplingVariant::dynamic_state ||
         v == CouplingVariant::dynamic_output_observer ||
         v == CouplingVariant::discrete_dynamic_output_observer;
}

bool uses_xhat(CouplingVariant v) {
  return v == CouplingVariant::dynamic_output_observer ||
         v == CouplingVariant::discrete_dynamic_output_observer;
}

bool is_discrete(CouplingVariant v) {
  return v == CouplingVariant::discrete_static_inverse_b ||
         v == CouplingVariant::discrete_dynamic_output_observer;
}

CouplingLaw make_coupling_law(CouplingVariant variant, const LinearPlant& plant,
                              const SwitchingGraph& graph, std::optional<Matrix> k,
                              std::optional<Matrix> h, std::optional<Vector> epsilons) {
  const std::string who = to_string(variant);
  const int n = plant.state_dim();
  const int m = plant.input_dim();
  CouplingLaw law{variant, std::move(k), std::move(h), std::move(epsilons)};

  const PlantKind expected = is_discrete(variant) ? PlantKind::discrete
                             : variant == CouplingVariant::periodic_static_inverse_b
                                 ? PlantKind::periodic
                                 : PlantKind::continuous;
  require(plant.kind() == expected,
          who + ": requires a " + to_string(expected) + " plant");

  const bool needs_c = variant == CouplingVariant::dynamic_output_observer ||
                       variant == CouplingVariant::static_diffusive_output ||
                       variant == CouplingVariant::discrete_dynamic_output_observer;
  require(!needs_c || plant.c().has_value(), who + ": output matrix C is required");

  switch (variant) {
    case CouplingVariant::static_state_inverse_b:
    case CouplingVariant::periodic_static_inverse_b:
    case CouplingVariant::discrete_static_inverse_b:
      require_invertible_b(plant, who);
      break;
    case CouplingVariant::static_diffusive_output:
      require(plant.output_dim() == m, who + ": needs as many outputs as inputs");
      break;
    default:
      break;
  }

  if (uses_eta(variant)) {
    const bool disc = is_discrete(variant);
    if (!law.k) {
      law.k = disc ? schur_stabilizing_gain(plant.a(), plant.b())
                   : stabilizing_gain(plant.a(), plant.b());
    }
    require(law.k->rows() == m && law.k->cols() == n, who + ": K must be m x n");
    const Matrix closed = plant.a() + plant.b() * *law.k;
    if (disc) {
      require(spectral_radius(closed) < 1.0, who + ": A + B K is not Schur");
    } else {
      require(spectral_abscissa(closed) < 0.0, who + ": A + B K is not Hurwitz");
    }
  } else {
    law.k.reset();
  }

  if (uses_xhat(variant)) {
    const bool disc = is_discrete(variant);
    const Matrix& c = *plant.c();
    if (!law.h) {
      law.h = disc ? schur_detector_gain(plant.a(), c) : detector_gain(plant.a(), c);
    }
    require(law.h->rows() == n && law.h->cols() == c.rows(), who + ": H must be n x p");
    const Matrix closed = plant.a() + *law.h * c;
    if (disc) {
      require(spectral_radius(closed) < 1.0, who + ": A + H C is not Schur");
    } else {
      require(spectral_abscissa(closed) < 0.0, who + ": A + H C is not Hurwitz");
    }
  } else {
    law.h.reset();
  }

  if (is_discrete(variant)) {
    require(law.epsilons.has_value(), who + ": per-agent epsilons are required");
    require(law.epsilons->size() == graph.node_count(),
            who + ": need one epsilon per agent");
    check_epsilons(graph, *law.epsilons);
  } else {
    law.epsilons.reset();
  }
  return law;
}

Vector consensus_rhs(const Eigen::Ref<const Matrix>& adjacency, const Vector& x, int n) {
  check_agents(adjacency, x, n);
  const auto agents = static_cast<int>(adjacency.rows());
  Vector out = Vector::Zero(x.size());
  for (int k = 0; k < agents; ++k) {
    for (int j = 0; j < agents; ++j) {
      const double w = adjacency(k, j);
      if (w == 0.0) continue;
      out.segment(k * n, n) += w * (x.segment(j * n, n) - x.segment(k * n, n));
    }
  }
  return out;
}

Vector consensus_rhs(const SwitchingGraph& g, double t, const Vector& x, int n) {
  return consensus_rhs(g.adjacency(t), x, n);
}

Vector consensus_rhs_kron(const Eigen::Ref<const Matrix>& adjacency, const Vector& x,
                          int n) {
  check_agents(adjacency, x, n);
  return -kron(laplacian(adjacency), Matrix(Matrix::Identity(n, n))) * x;
}

void check_epsilons(const Eigen::Ref<const Matrix>& adjacency, const Vector& eps) {
  require(eps.size() == adjacency.rows(), "epsilons: need one value per agent");
  const Vector in = degrees(adjacency).in;
  for (Eigen::Index k = 0; k < eps.size(); ++k) {
    if (!(eps(k) > 0.0) || !std::isfinite(eps(k))) {
      std::ostringstream os;
      os << "epsilon[" << k << "] = " << eps(k) << " violates the bound eps > 0";
      throw std::invalid_argument(os.str());
    }
    if (in(k) > 0.0 && !(eps(k) < 1.0 / in(k))) {
      std::ostringstream os;
      os << "epsilon[" << k << "] = " << eps(k) << " violates the bound eps < 1/d_in = "
         << 1.0 / in(k);
      throw std::invalid_argument(os.str());
    }
  }
}

void check_epsilons(const SwitchingGraph& g, const Vector& eps) {
  for (const GraphSegment& s : g.schedule()) check_epsilons(s.adjacency, eps);
}

Matrix discrete_update_matrix(const Eigen::Ref<const Matrix>& adjacency,
                              const Vector& eps) {
  const auto agents = adjacency.rows();
  return Matrix::Identity(agents, agents) - eps.asDiagonal() * laplacian(adjacency);
}

bool is_row_stochastic(const Eigen::Ref<const Matrix>& m, double tol) {
  if ((m.array() < -tol).any()) return false;
  return ((m.rowwise().sum().array() - 1.0).abs() <= tol).all();
}

Vector consensus_step_discrete(const SwitchingGraph& g, const Vector& eps,
                               const Vector& x, double t, int n) {
  const Matrix& adjacency = g.adjacency(t);
  check_epsilons(adjacency, eps);
  check_agents(adjacency, x, n);
  const Matrix update = discrete_update_matrix(adjacency, eps);
  if (!is_row_stochastic(update)) {
    throw std::logic_error("consensus_step_discrete: update matrix not row-stochastic");
  }
  const ConstAgents xs = agents_view(x, n);
  return flatten(xs * update.transpose());
}

Vector closed_loop_static_state(const LinearPlant& p,
                                const Eigen::Ref<const Matrix>& adjacency, double t,
                                const Vector& x) {
  check_agents(adjacency, x, p.state_dim());
  const ConstAgents xs = agents_view(x, p.state_dim());
  return flatten(p.a_at(t) * xs + coupling(adjacency, xs));
}

Vector closed_loop_static_state_uncancelled(const LinearPlant& p,
                                            const Eigen::Ref<const Matrix>& adjacency,
                                            double t, const Vector& x) {
  check_agents(adjacency, x, p.state_dim());
  require_invertible_b(p, "closed_loop_static_state_uncancelled");
  const ConstAgents xs = agents_view(x, p.state_dim());
  const Matrix u = p.b().partialPivLu().solve(coupling(adjacency, xs));
  return flatten(p.a_at(t) * xs + p.b() * u);
}

DynamicStateRates closed_loop_dynamic_state(const LinearPlant& p,
                                            const Eigen::Ref<const Matrix>& adjacency,
                                            const Matrix& k, const Vector& x,
                                            const Vector& eta) {
  const int n = p.state_dim();
  check_agents(adjacency, x, n);
  check_agents(adjacency, eta, n);
  const ConstAgents xs = agents_view(x, n);
  const ConstAgents es = agents_view(eta, n);
  const Matrix& a = p.a();
  const Matrix bk = p.b() * k;
  return {flatten(a * xs + bk * es),
          flatten((a + bk) * es + coupling(adjacency, es - xs))};
}

ObserverRates closed_loop_output_observer(const LinearPlant& p,
                                          const Eigen::Ref<const Matrix>& adjacency,
                                          const Matrix& k, const Matrix& h,
                                          const Vector& x, const Vector& eta,
                                          const Vector& xhat) {
  const int n = p.state_dim();
  check_agents(adjacency, x, n);
  check_agents(adjacency, eta, n);
  check_agents(adjacency, xhat, n);
  const ConstAgents xs = agents_view(x, n);
  const ConstAgents es = agents_view(eta, n);
  const ConstAgents hs = agents_view(xhat, n);
  require(p.c().has_value(), "observer law: output matrix C is required");
  const Matrix& a = p.a();
  const Matrix& c = *p.c();
  const Matrix bk = p.b() * k;
  return {flatten(a * xs + bk * es),
          flatten((a + bk) * es + coupling(adjacency, es - hs)),
          flatten(a * hs + bk * es + h * (c * hs - c * xs))};
}

Vector closed_loop_static_output(const LinearPlant& p,
                                 const Eigen::Ref<const Matrix>& adjacency,
                                 const Vector& x) {
  const int n = p.state_dim();
  check_agents(adjacency, x, n);
  const ConstAgents xs = agents_view(x, n);
  const Matrix y = p.output_matrix() * xs;
  return flatten(p.a() * xs + p.b() * coupling(adjacency, y));
}

Vector discrete_static_inverse_b(const LinearPlant& p,
                                 const Eigen::Ref<const Matrix>& adjacency,
                                 const Vector& eps, const Vector& x) {
  const int n = p.state_dim();
  check_agents(adjacency, x, n);
  const ConstAgents xs = agents_view(x, n);
  const Matrix lx = xs * laplacian(adjacency).transpose();
  return flatten(p.a() * (xs - lx * eps.asDiagonal()));
}

Vector discrete_static_inverse_b_uncancelled(const LinearPlant& p,
                                             const Eigen::Ref<const Matrix>& adjacency,
                                             const Vector& eps, const Vector& x) {
  const int n = p.state_dim();
  check_agents(adjacency, x, n);
  require_invertible_b(p, "discrete_static_inverse_b_uncancelled");
  const ConstAgents xs = agents_view(x, n);
  const Matrix lx = xs * laplacian(adjacency).transpose();
  const Matrix u = -p.b().partialPivLu().solve(p.a() * lx * eps.asDiagonal());
  return flatten(p.a() * xs + p.b() * u);
}

ObserverRates discrete_output_observer(const LinearPlant& p,
                                       const Eigen::Ref<const Matrix>& adjacency,
                                       const Matrix& k, const Matrix& h,
                                       const Vector& eps, const Vector& x,
                                       const Vector& eta, const Vector& xhat) {
  const int n = p.state_dim();
  check_agents(adjacency, x, n);
  check_agents(adjacency, eta, n);
  check_agents(adjacency, xhat, n);
  const ConstAgents xs = agents_view(x, n);
  const ConstAgents es = agents_view(eta, n);
  const ConstAgents hs = agents_view(xhat, n);
  require(p.c().has_value(), "observer law: output matrix C is required");
  const Matrix& a = p.a();
  const Matrix& c = *p.c();
  const Matrix bk = p.b() * k;
  const Matrix lsd = (hs - es) * laplacian(adjacency).transpose() * eps.asDiagonal();
  return {flatten(a * xs + bk * es), flatten((a + bk) * es + a * lsd),
          flatten(a * hs + bk * es + h * (c * hs - c * xs))};
}

NetworkModel::NetworkModel(CouplingLaw law, LinearPlant plant, SwitchingGraph graph)
    : law_(std::move(law)),
      plant_(std::move(plant)),
      graph_(std::move(graph)),
      agents_(graph_.node_count()),
      n_(plant_.state_dim()) {
  if (uses_eta(law_.variant) && !law_.k) {
    throw std::invalid_argument("NetworkModel: law is missing K");
  }
  if (uses_xhat(law_.variant) && !law_.h) {
    throw std::invalid_argument("NetworkModel: law is missing H");
  }
  if (is_discrete(law_.variant) && !law_.epsilons) {
    throw std::invalid_argument("NetworkModel: law is missing epsilons");
  }
}

Eigen::Index NetworkModel::packed_size() const {
  const Eigen::Index block = static_cast<Eigen::Index>(agents_) * n_;
  return block * (1 + (uses_eta(law_.variant) ? 1 : 0) + (uses_xhat(law_.variant) ? 1 : 0));
}

Vector NetworkModel::pack(const NetworkState& s) const {
  const Eigen::Index block = static_cast<Eigen::Index>(agents_) * n_;
  auto need = [&](const std::optional<Vector>& v, bool used, const char* name) {
    if (used != v.has_value() || (v && v->size() != block)) {
      throw std::invalid_argument(std::string("NetworkState: ") + name +
                                  " presence or size does not match the law");
    }
  };
  if (s.x.size() != block) throw std::invalid_argument("NetworkState: x has wrong size");
  need(s.eta, uses_eta(law_.variant), "eta");
  need(s.xhat, uses_xhat(law_.variant), "xhat");
  Vector out(packed_size());
  Eigen::Index at = 0;
  out.segment(at, block) = s.x;
  at += block;
  if (s.eta) {
    out.segment(at, block) = *s.eta;
    at += block;
  }
  if (s.xhat) out.segment(at, block) = *s.xhat;
  return out;
}

NetworkState NetworkModel::unpack(double t, const Vector& packed) const {
  const Eigen::Index block = static_cast<Eigen::Index>(agents_) * n_;
  NetworkState s;
  s.t = t;
  Eigen::Index at = 0;
  s.x = packed.segment(at, block);
  at += block;
  if (uses_eta(law_.variant)) {
    s.eta = packed.segment(at, block);
    at += block;
  }
  if (uses_xhat(law_.variant)) s.xhat = packed.segment(at, block);
  return s;
}

Vector NetworkModel::derivative(double t, const Vector& packed,
                                const Eigen::Ref<const Matrix>& adjacency) const {
  if (discrete()) throw std::logic_error("NetworkModel: derivative of a discrete law");
  const NetworkState s = unpack(t, packed);
  switch (law_.variant) {
    case CouplingVariant::static_state_inverse_b:
    case CouplingVariant::periodic_static_inverse_b:
      return closed_loop_static_state(plant_, adjacency, t, s.x);
    case CouplingVariant::static_diffusive_output:
      return closed_loop_static_output(plant_, adjacency, s.x);
    case CouplingVariant::dynamic_state: {
      const auto r = closed_loop_dynamic_state(plant_, adjacency, *law_.k, s.x, *s.eta);
      return pack({t, r.x, r.eta, std::nullopt});
    }
    case CouplingVariant::dynamic_output_observer: {
      const auto r = closed_loop_output_observer(plant_, adjacency, *law_.k, *law_.h,
                                                 s.x, *s.eta, *s.xhat);
      return pack({t, r.x, r.eta, r.xhat});
    }
    default:
      break;
  }
  throw std::logic_error("NetworkModel: unhandled continuous variant");
}

Vector NetworkModel::derivative(double t, const Vector& packed) const {
  return derivative(t, packed, graph_.adjacency(t));
}

Vector NetworkModel::advance(double t, const Vector& packed,
                             const Eigen::Ref<const Matrix>& adjacency) const {
  if (!discrete()) throw std::logic_error("NetworkModel: advance of a continuous law");
  const NetworkState s = unpack(t, packed);
  if (law_.variant == CouplingVariant::discrete_static_inverse_b) {
    return discrete_static_inverse_b(plant_, adjacency, *law_.epsilons, s.x);
  }
  const auto r = discrete_output_observer(plant_, adjacency, *law_.k, *law_.h,
                                          *law_.epsilons, s.x, *s.eta, *s.xhat);
  return pack({t, r.x, r.eta, r.xhat});
}

Vector NetworkModel::advance(double t, const Vector& packed) const {
  return advance(t, packed, graph_.adjacency(t));
}

Matrix NetworkModel::system_matrix(double t,
                                   const Eigen::Ref<const Matrix>& adjacency) const {
  const Eigen::Index size = packed_size();
  Matrix out(size, size);
  Vector unit = Vector::Zero(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    unit(i) = 1.0;
    out.col(i) = discrete() ? advance(t, unit, adjacency) : derivative(t, unit, adjacency);
    unit(i) = 0.0;
  }
  return out;
}

Matrix disagreement_projector(int agents, int n) {
  const Matrix centering = Matrix::Identity(agents, agents) -
                           Matrix::Constant(agents, agents, 1.0 / agents);
  return kron(centering, Matrix(Matrix::Identity(n, n)));
}

Vector agent_mean(const Vector& x, int n) {
  return agents_view(x, n).rowwise().mean();
}

double disagreement(const Vector& x, int n) {
  const ConstAgents xs = agents_view(x, n);
  return (xs.colwise() - xs.rowwise().mean()).norm();
}

double lyapunov_value(const Matrix& p, const Vector& x) {
  const auto n = static_cast<int>(p.rows());
  const ConstAgents xs = agents_view(x, n);
  const Matrix centered = xs.colwise() - xs.rowwise().mean();
  return 0.5 * (centered.transpose() * p * centered).trace();
}

PassivityCertificate passivity_check(const LinearPlant& plant, const Matrix& p,
                                     double tol) {
  const int n = plant.state_dim();
  require(p.rows() == n && p.cols() == n, "passivity_check: P must be n x n");
  require((p - p.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + p.norm()),
          "passivity_check: P must be symmetric");
  require(plant.kind() != PlantKind::periodic, "passivity_check: needs constant A");
  PassivityCertificate cert;
  cert.p = p;
  const Matrix& a = plant.a();
  const Matrix lyap = p * a + a.transpose() * p;
  Eigen::SelfAdjointEigenSolver<Matrix> lyap_eigs(0.5 * (lyap + lyap.transpose()),
                                                  Eigen::EigenvaluesOnly);
  cert.residual_lyap = lyap_eigs.eigenvalues().maxCoeff();
  cert.residual_io = (plant.b().transpose() * p - plant.output_matrix()).norm();
  Eigen::SelfAdjointEigenSolver<Matrix> p_eigs(p, Eigen::EigenvaluesOnly);
  cert.min_eig_p = p_eigs.eigenvalues().minCoeff();
  cert.verdict = cert.residual_lyap <= tol && cert.residual_io <= tol && cert.min_eig_p > tol;
  return cert;
}

std::vector<Matrix> passivity_candidates(const LinearPlant& plant) {
  const int n = plant.state_dim();
  std::vector<Matrix> out{Matrix::Identity(n, n)};
  const Matrix c = plant.output_matrix();
  constexpr double shift = 1e-6;
  try {
    const Matrix shifted = plant.a() - shift * Matrix::Identity(n, n);
    out.push_back(solve_lyapunov(shifted, c.transpose() * c));
  } catch (const NumericalError&) {
    // No regularized candidate when the shifted operator is resonant.
  }
  return out;
}

PassivityCertificate search_passivity_certificate(const LinearPlant& plant, double tol) {
  PassivityCertificate last;
  for (const Matrix& candidate : passivity_candidates(plant)) {
    last = passivity_check(plant, candidate, tol);
    if (last.verdict) return last;
  }
  return last;
}

Matrix incidence_factor(const Eigen::Ref<const Matrix>& adjacency) {
  require(is_symmetric(adjacency), "incidence_factor: adjacency must be symmetric");
  const auto agents = static_cast<int>(adjacency.rows());
  std::vector<std::array<double, 3>> edges;
  for (int i = 0; i < agents; ++i) {
    for (int j = i + 1; j < agents; ++j) {
      if (adjacency(i, j) > 0.0) edges.push_back({double(i), double(j), adjacency(i, j)});
    }
  }
  Matrix d = Matrix::Zero(agents, static_cast<Eigen::Index>(edges.size()));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const double r = std::sqrt(edges[e][2]);
    d(static_cast<int>(edges[e][0]), static_cast<Eigen::Index>(e)) = r;
    d(static_cast<int>(edges[e][1]), static_cast<Eigen::Index>(e)) = -r;
  }
  return d;
}

GramianResult observability_gramian(const LinearPlant& plant, const SwitchingGraph& g,
                                    double t0, double length, double step) {
  require(plant.kind() == PlantKind::continuous,
          "observability_gramian: needs a continuous LTI plant");
  require(length >= 0.0 && step > 0.0, "observability_gramian: bad window or step");
  const int agents = g.node_count();
  const int n = plant.state_dim();
  const Matrix c = plant.output_matrix();
  const Eigen::Index size = static_cast<Eigen::Index>(agents) * n;
  GramianResult out;
  out.gramian = Matrix::Zero(size, size);

  const double t1 = t0 + length;
  std::vector<double> cuts{t0};
  for (double s : g.switching_times(t0, t1)) cuts.push_back(s);
  cuts.push_back(t1);

  for (std::size_t piece = 0; piece + 1 < cuts.size(); ++piece) {
    const double a = cuts[piece];
    const double b = cuts[piece + 1];
    if (!(b > a)) continue;
    const Matrix& adjacency = g.adjacency(0.5 * (a + b));
    if (!is_symmetric(adjacency)) {
      throw std::domain_error(
          "observability_gramian: asymmetric Laplacian, the factorization L = D D^T "
          "does not exist");
    }
    const Matrix d = incidence_factor(adjacency);
    const Matrix output = kron(Matrix(d.transpose()), c);  // (D^T (x) I_p)(I_N (x) C)
    const Matrix weight = output.transpose() * output;
    auto integrand = [&](double t) -> Matrix {
      const Matrix phi = kron(Matrix(Matrix::Identity(agents, agents)),
                              expm(plant.a(), t - t0));
      return phi.transpose() * weight * phi;
    };
    auto m = static_cast<long long>(std::ceil((b - a) / step - 1e-9));
    m = std::max(2LL, m + (m % 2));
    const double h = (b - a) / static_cast<double>(m);
    Matrix acc = integrand(a) + integrand(b);
    for (long long i = 1; i < m; ++i) {
      acc += (i % 2 == 1 ? 4.0 : 2.0) * integrand(a + static_cast<double>(i) * h);
    }
    out.gramian += (h / 3.0) * acc;
  }
  out.gramian = 0.5 * (out.gramian + out.gramian.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Matrix> full(out.gramian, Eigen::EigenvaluesOnly);
  out.min_eigenvalue = full.eigenvalues().minCoeff();

  // Orthonormal basis of 1^perp, lifted to the stacked space.
  Eigen::SelfAdjointEigenSolver<Matrix> centering(
      Matrix(Matrix::Identity(agents, agents) -
             Matrix::Constant(agents, agents, 1.0 / agents)));
  const Matrix perp = centering.eigenvectors().rightCols(agents - 1);
  const Matrix basis = kron(perp, Matrix(Matrix::Identity(n, n)));
  if (basis.cols() > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> restricted(
        basis.transpose() * out.gramian * basis, Eigen::EigenvaluesOnly);
    out.min_disagreement_eigenvalue = restricted.eigenvalues().minCoeff();
  }
  return out;
}

}  // namespace syncnet
