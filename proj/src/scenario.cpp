#include "syncnet/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <sstream>

namespace syncnet {

using json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------- reading

std::string at(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string at(const std::string& path, std::size_t index) {
  return path + "[" + std::to_string(index) + "]";
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ScenarioError(path.empty() ? "$" : path, "expected an object");
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) throw ScenarioError(at(path, item.key()), "unknown field");
  }
}

const json* optional_field(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& required_field(const json& obj, const std::string& path, const char* key) {
  const json* j = optional_field(obj, key);
  if (!j) throw ScenarioError(at(path, key), "missing required field");
  return *j;
}

double read_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ScenarioError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ScenarioError(path, "expected a finite number");
  return v;
}

double read_positive(const json& j, const std::string& path) {
  const double v = read_number(j, path);
  if (!(v > 0.0)) throw ScenarioError(path, "must be positive");
  return v;
}

std::int64_t read_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ScenarioError(path, "expected an integer");
  return j.get<std::int64_t>();
}

std::string read_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ScenarioError(path, "expected a string");
  return j.get<std::string>();
}

bool read_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ScenarioError(path, "expected true or false");
  return j.get<bool>();
}

Vector read_vector(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ScenarioError(path, "expected a nonempty list of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = read_number(j[i], at(path, i));
  }
  return v;
}

Matrix read_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ScenarioError(path, "expected a nonempty list of rows");
  std::size_t cols = 0;
  for (std::size_t r = 0; r < j.size(); ++r) {
    const std::string row = at(path, r);
    if (!j[r].is_array() || j[r].empty()) throw ScenarioError(row, "malformed matrix row");
    if (r == 0) cols = j[r].size();
    if (j[r].size() != cols) {
      throw ScenarioError(row, "malformed matrix row: expected " + std::to_string(cols) +
                                   " entries, found " + std::to_string(j[r].size()));
    }
  }
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          read_number(j[r][c], at(at(path, r), c));
    }
  }
  return m;
}

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols,
                   const std::string& path) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ScenarioError(path, "expected a " + std::to_string(rows) + " x " +
                                  std::to_string(cols) + " matrix, found " +
                                  std::to_string(m.rows()) + " x " + std::to_string(m.cols()));
  }
}

PlantSpec read_plant(const json& j, const std::string& path) {
  check_keys(j, path, {"kind", "A", "B", "C", "period", "samples", "rotating_frame"});
  PlantSpec p;
  const std::string kind = read_string(required_field(j, path, "kind"), at(path, "kind"));
  if (kind == "continuous") {
    p.kind = PlantKind::continuous;
  } else if (kind == "discrete") {
    p.kind = PlantKind::discrete;
  } else if (kind == "periodic") {
    p.kind = PlantKind::periodic;
  } else {
    throw ScenarioError(at(path, "kind"), "expected continuous, discrete or periodic");
  }

  Eigen::Index n = 0;
  if (p.kind == PlantKind::periodic) {
    if (optional_field(j, "A")) {
      throw ScenarioError(at(path, "A"), "not allowed for periodic plants");
    }
    const json* frame = optional_field(j, "rotating_frame");
    const json* samples = optional_field(j, "samples");
    if ((frame != nullptr) == (samples != nullptr)) {
      throw ScenarioError(path, "periodic plants need exactly one of samples, rotating_frame");
    }
    if (frame) {
      const std::string fp = at(path, "rotating_frame");
      check_keys(*frame, fp, {"omega", "rate"});
      if (optional_field(j, "period")) {
        throw ScenarioError(at(path, "period"), "implied by rotating_frame.rate");
      }
      p.omega = read_matrix(required_field(*frame, fp, "omega"), at(fp, "omega"));
      require_shape(*p.omega, 2, 2, at(fp, "omega"));
      p.rate = read_positive(required_field(*frame, fp, "rate"), at(fp, "rate"));
      n = 2;
    } else {
      p.period = read_positive(required_field(j, path, "period"), at(path, "period"));
      const std::string sp = at(path, "samples");
      if (!samples->is_array() || samples->empty()) {
        throw ScenarioError(sp, "expected a nonempty list of matrices");
      }
      for (std::size_t i = 0; i < samples->size(); ++i) {
        Matrix s = read_matrix((*samples)[i], at(sp, i));
        if (i == 0) n = s.rows();
        require_shape(s, n, n, at(sp, i));
        p.samples.push_back(std::move(s));
      }
    }
  } else {
    for (const char* k : {"period", "samples", "rotating_frame"}) {
      if (optional_field(j, k)) {
        throw ScenarioError(at(path, k), "only allowed for periodic plants");
      }
    }
    p.a = read_matrix(required_field(j, path, "A"), at(path, "A"));
    n = p.a.rows();
    require_shape(p.a, n, n, at(path, "A"));
  }

  p.b = read_matrix(required_field(j, path, "B"), at(path, "B"));
  if (p.b.rows() != n) {
    throw ScenarioError(at(path, "B"), "expected " + std::to_string(n) + " rows");
  }
  if (const json* c = optional_field(j, "C")) {
    p.c = read_matrix(*c, at(path, "C"));
    if (p.c->cols() != n) {
      throw ScenarioError(at(path, "C"), "expected " + std::to_string(n) + " columns");
    }
  }
  return p;
}

GraphSpec read_graph(const json& j, const std::string& path) {
  check_keys(j, path, {"nodes", "eta", "gamma", "periodic", "horizon", "segments"});
  GraphSpec g;
  const auto nodes = read_integer(required_field(j, path, "nodes"), at(path, "nodes"));
  if (nodes < 1) throw ScenarioError(at(path, "nodes"), "must be at least 1");
  g.nodes = static_cast<int>(nodes);
  g.eta = read_positive(required_field(j, path, "eta"), at(path, "eta"));
  g.gamma = read_number(required_field(j, path, "gamma"), at(path, "gamma"));
  if (g.gamma < g.eta) throw ScenarioError(at(path, "gamma"), "must be >= eta");
  if (const json* p = optional_field(j, "periodic")) {
    g.periodic = read_bool(*p, at(path, "periodic"));
  }
  if (const json* h = optional_field(j, "horizon")) {
    g.horizon = read_positive(*h, at(path, "horizon"));
  }

  const std::string sp = at(path, "segments");
  const json& segs = required_field(j, path, "segments");
  if (!segs.is_array() || segs.empty()) throw ScenarioError(sp, "expected a nonempty list");
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const std::string ip = at(sp, i);
    check_keys(segs[i], ip, {"duration", "weights"});
    g.durations.push_back(read_positive(required_field(segs[i], ip, "duration"),
                                        at(ip, "duration")));
    const std::string wp = at(ip, "weights");
    Matrix w = read_matrix(required_field(segs[i], ip, "weights"), wp);
    require_shape(w, g.nodes, g.nodes, wp);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        const double v = w(r, c);
        const std::string ep = at(at(wp, static_cast<std::size_t>(r)), static_cast<std::size_t>(c));
        if (r == c && v != 0.0) throw ScenarioError(ep, "self-loops are not allowed");
        if (v != 0.0 && (v < g.eta || v > g.gamma)) {
          std::ostringstream os;
          os << "weight " << v << " outside [eta, gamma] = [" << g.eta << ", " << g.gamma << "]";
          throw ScenarioError(ep, os.str());
        }
      }
    }
    g.weights.push_back(std::move(w));
  }
  return g;
}

CouplingSpec read_coupling(const json& j, const std::string& path) {
  check_keys(j, path, {"variant", "K", "H", "epsilons"});
  CouplingSpec c;
  const std::string name = read_string(required_field(j, path, "variant"), at(path, "variant"));
  auto v = parse_variant(name);
  if (!v) throw ScenarioError(at(path, "variant"), "unknown coupling variant '" + name + "'");
  c.variant = *v;
  if (const json* k = optional_field(j, "K")) c.k = read_matrix(*k, at(path, "K"));
  if (const json* h = optional_field(j, "H")) c.h = read_matrix(*h, at(path, "H"));
  if (const json* e = optional_field(j, "epsilons")) {
    c.epsilons = read_vector(*e, at(path, "epsilons"));
  }
  return c;
}

void read_simulation(const json& j, const std::string& path, Scenario& s) {
  check_keys(j, path,
             {"t0", "t_end", "step", "record_every", "seed", "sample_period", "initial"});
  SimulationConfig& cfg = s.simulation;
  if (const json* v = optional_field(j, "t0")) cfg.t0 = read_number(*v, at(path, "t0"));
  cfg.t_end = read_number(required_field(j, path, "t_end"), at(path, "t_end"));
  if (!(cfg.t_end > cfg.t0)) throw ScenarioError(at(path, "t_end"), "must exceed t0");
  cfg.step = default_step(cfg.t0, cfg.t_end);
  if (const json* v = optional_field(j, "step")) cfg.step = read_positive(*v, at(path, "step"));
  if (const json* v = optional_field(j, "record_every")) {
    const auto r = read_integer(*v, at(path, "record_every"));
    if (r < 1) throw ScenarioError(at(path, "record_every"), "must be at least 1");
    cfg.record_every = static_cast<int>(r);
  }
  if (const json* v = optional_field(j, "seed")) {
    const auto seed = read_integer(*v, at(path, "seed"));
    if (seed < 0) throw ScenarioError(at(path, "seed"), "must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(seed);
  }
  if (const json* v = optional_field(j, "sample_period")) {
    cfg.sample_period = read_positive(*v, at(path, "sample_period"));
  }
  if (const json* v = optional_field(j, "initial")) {
    const std::string ip = at(path, "initial");
    check_keys(*v, ip, {"x", "eta", "xhat"});
    InitialSpec init;
    init.x = read_vector(required_field(*v, ip, "x"), at(ip, "x"));
    if (const json* e = optional_field(*v, "eta")) init.eta = read_vector(*e, at(ip, "eta"));
    if (const json* e = optional_field(*v, "xhat")) init.xhat = read_vector(*e, at(ip, "xhat"));
    s.initial = std::move(init);
  }
}

Expectations read_expect(const json& j, const std::string& path) {
  check_keys(j, path, {"synchronized", "thresholds", "max_openloop_residual", "hypotheses",
                       "passivity_P"});
  Expectations e;
  e.synchronized = read_bool(required_field(j, path, "synchronized"), at(path, "synchronized"));
  if (const json* t = optional_field(j, "thresholds")) {
    const std::string tp = at(path, "thresholds");
    check_keys(*t, tp, {"sync_ratio", "fail_ratio", "fail_rate"});
    if (const json* v = optional_field(*t, "sync_ratio")) {
      e.thresholds.sync_ratio = read_positive(*v, at(tp, "sync_ratio"));
    }
    if (const json* v = optional_field(*t, "fail_ratio")) {
      e.thresholds.fail_ratio = read_positive(*v, at(tp, "fail_ratio"));
    }
    if (const json* v = optional_field(*t, "fail_rate")) {
      e.thresholds.fail_rate = read_number(*v, at(tp, "fail_rate"));
    }
    if (e.thresholds.fail_ratio < e.thresholds.sync_ratio) {
      throw ScenarioError(at(tp, "fail_ratio"), "must be >= sync_ratio");
    }
  }
  if (const json* v = optional_field(j, "max_openloop_residual")) {
    e.max_openloop_residual = read_positive(*v, at(path, "max_openloop_residual"));
  }
  if (const json* v = optional_field(j, "hypotheses")) {
    const std::string hp = at(path, "hypotheses");
    if (!v->is_array()) throw ScenarioError(hp, "expected a list of names");
    for (std::size_t i = 0; i < v->size(); ++i) {
      const std::string name = read_string((*v)[i], at(hp, i));
      auto h = parse_hypothesis(name);
      if (!h) throw ScenarioError(at(hp, i), "unknown hypothesis '" + name + "'");
      e.hypotheses.push_back(*h);
    }
  }
  if (const json* v = optional_field(j, "passivity_P")) {
    e.passivity_p = read_matrix(*v, at(path, "passivity_P"));
  }
  return e;
}

void cross_check(const Scenario& s) {
  const Eigen::Index n = s.plant.kind == PlantKind::periodic
                             ? (s.plant.omega ? 2 : s.plant.samples.front().rows())
                             : s.plant.a.rows();
  const Eigen::Index m = s.plant.b.cols();
  if (s.coupling.k) require_shape(*s.coupling.k, m, n, "coupling.K");
  if (s.coupling.h) {
    if (!s.plant.c) throw ScenarioError("coupling.H", "given but plant.C is absent");
    require_shape(*s.coupling.h, n, s.plant.c->rows(), "coupling.H");
  }
  if (s.coupling.epsilons && s.coupling.epsilons->size() != s.graph.nodes) {
    throw ScenarioError("coupling.epsilons",
                        "expected " + std::to_string(s.graph.nodes) + " entries");
  }
  if (is_discrete(s.coupling.variant) && !s.coupling.epsilons) {
    throw ScenarioError("coupling.epsilons", "required by " + to_string(s.coupling.variant));
  }
  if (s.expect.passivity_p) require_shape(*s.expect.passivity_p, n, n, "expect.passivity_P");
  if (s.initial) {
    const Eigen::Index size = n * s.graph.nodes;
    auto check = [&](const std::optional<Vector>& v, bool wanted, const char* p) {
      if (v.has_value() != wanted) {
        throw ScenarioError(p, wanted ? "required by the coupling variant"
                                      : "not used by the coupling variant");
      }
      if (v && v->size() != size) {
        throw ScenarioError(p, "expected " + std::to_string(size) + " entries");
      }
    };
    check(s.initial->x, true, "simulation.initial.x");
    check(s.initial->eta, uses_eta(s.coupling.variant), "simulation.initial.eta");
    check(s.initial->xhat, uses_xhat(s.coupling.variant), "simulation.initial.xhat");
  }
}

// ---------------------------------------------------------------- writing

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["provenance"] = s.provenance;

  json p;
  p["kind"] = to_string(s.plant.kind);
  if (s.plant.kind == PlantKind::periodic) {
    if (s.plant.omega) {
      p["rotating_frame"] = {{"omega", matrix_json(*s.plant.omega)}, {"rate", *s.plant.rate}};
    } else {
      p["period"] = *s.plant.period;
      json samples = json::array();
      for (const Matrix& m : s.plant.samples) samples.push_back(matrix_json(m));
      p["samples"] = std::move(samples);
    }
  } else {
    p["A"] = matrix_json(s.plant.a);
  }
  p["B"] = matrix_json(s.plant.b);
  if (s.plant.c) p["C"] = matrix_json(*s.plant.c);
  j["plant"] = std::move(p);

  json g;
  g["nodes"] = s.graph.nodes;
  g["eta"] = s.graph.eta;
  g["gamma"] = s.graph.gamma;
  g["periodic"] = s.graph.periodic;
  if (s.graph.horizon) g["horizon"] = *s.graph.horizon;
  json segs = json::array();
  for (std::size_t i = 0; i < s.graph.durations.size(); ++i) {
    segs.push_back({{"duration", s.graph.durations[i]},
                    {"weights", matrix_json(s.graph.weights[i])}});
  }
  g["segments"] = std::move(segs);
  j["graph"] = std::move(g);

  json c;
  c["variant"] = to_string(s.coupling.variant);
  if (s.coupling.k) c["K"] = matrix_json(*s.coupling.k);
  if (s.coupling.h) c["H"] = matrix_json(*s.coupling.h);
  if (s.coupling.epsilons) c["epsilons"] = vector_json(*s.coupling.epsilons);
  j["coupling"] = std::move(c);

  const SimulationConfig& cfg = s.simulation;
  json sim;
  sim["t0"] = cfg.t0;
  sim["t_end"] = cfg.t_end;
  sim["step"] = cfg.step;
  sim["record_every"] = cfg.record_every;
  sim["seed"] = cfg.seed;
  sim["sample_period"] = cfg.sample_period;
  if (s.initial) {
    json init;
    init["x"] = vector_json(s.initial->x);
    if (s.initial->eta) init["eta"] = vector_json(*s.initial->eta);
    if (s.initial->xhat) init["xhat"] = vector_json(*s.initial->xhat);
    sim["initial"] = std::move(init);
  }
  j["simulation"] = std::move(sim);

  json e;
  e["synchronized"] = s.expect.synchronized;
  e["thresholds"] = {{"sync_ratio", s.expect.thresholds.sync_ratio},
                     {"fail_ratio", s.expect.thresholds.fail_ratio},
                     {"fail_rate", s.expect.thresholds.fail_rate}};
  if (s.expect.max_openloop_residual) {
    e["max_openloop_residual"] = *s.expect.max_openloop_residual;
  }
  json hyps = json::array();
  for (Hypothesis h : s.expect.hypotheses) hyps.push_back(to_string(h));
  e["hypotheses"] = std::move(hyps);
  if (s.expect.passivity_p) e["passivity_P"] = matrix_json(*s.expect.passivity_p);
  j["expect"] = std::move(e);
  return j;
}

bool is_flat(const json& j) {
  return j.is_array() && std::all_of(j.begin(), j.end(), [](const json& e) {
           return e.is_primitive();
         });
}

// Like json::dump(2), except lists of scalars stay on one line so that
// matrices read as rows.
void emit(std::ostream& os, const json& j, int indent) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  const std::string close(static_cast<std::size_t>(indent), ' ');
  if (is_flat(j)) {
    os << '[';
    for (std::size_t i = 0; i < j.size(); ++i) os << (i ? ", " : "") << j[i].dump();
    os << ']';
  } else if (j.is_array()) {
    os << "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      os << pad;
      emit(os, j[i], indent + 2);
      os << (i + 1 < j.size() ? ",\n" : "\n");
    }
    os << close << ']';
  } else if (j.is_object()) {
    if (j.empty()) {
      os << "{}";
      return;
    }
    os << "{\n";
    std::size_t i = 0;
    for (const auto& item : j.items()) {
      os << pad << json(item.key()).dump() << ": ";
      emit(os, item.value(), indent + 2);
      os << (++i < j.size() ? ",\n" : "\n");
    }
    os << close << '}';
  } else {
    os << j.dump();
  }
}

std::string pretty(const json& j) {
  std::ostringstream os;
  emit(os, j, 0);
  os << '\n';
  return os.str();
}

bool same(const std::optional<Matrix>& a, const std::optional<Matrix>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || (a->rows() == b->rows() && a->cols() == b->cols() && *a == *b);
}

bool same(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

bool same(const std::optional<Vector>& a, const std::optional<Vector>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || (a->size() == b->size() && *a == *b);
}

// ---------------------------------------------------------------- built-ins

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

PlantSpec lti(PlantKind kind, Matrix a, Matrix b, std::optional<Matrix> c = std::nullopt) {
  PlantSpec p;
  p.kind = kind;
  p.a = std::move(a);
  p.b = std::move(b);
  p.c = std::move(c);
  return p;
}

CouplingSpec law(CouplingVariant variant, std::optional<Matrix> k = std::nullopt,
                 std::optional<Vector> epsilons = std::nullopt) {
  CouplingSpec c;
  c.variant = variant;
  c.k = std::move(k);
  c.epsilons = std::move(epsilons);
  return c;
}

Scenario base(std::string name, std::string provenance, PlantSpec plant, GraphSpec graph,
              CouplingSpec coupling, double t_end, double step, int record_every) {
  Scenario s;
  s.name = std::move(name);
  s.provenance = std::move(provenance);
  s.plant = std::move(plant);
  s.graph = std::move(graph);
  s.coupling = std::move(coupling);
  s.simulation.t0 = 0.0;
  s.simulation.t_end = t_end;
  s.simulation.step = step;
  s.simulation.record_every = record_every;
  s.simulation.seed = 1;
  s.simulation.sample_period = 1.0;
  return s;
}

std::vector<Scenario> make_builtins() {
  using H = Hypothesis;
  const Matrix oscillator = mat({{0, 1}, {-1, 0}});
  const Matrix integrator = mat({{0, 1}, {0, 0}});
  const Matrix b_col = mat({{0}, {1}});
  const Matrix identity = Matrix::Identity(2, 2);
  const GraphSpec ring7 = rotating_edge_schedule(7.0, RingOrientation::forward);
  const GraphSpec ring7_reverse = rotating_edge_schedule(7.0, RingOrientation::reverse);
  const GraphSpec ring2 = rotating_edge_schedule(2.0, RingOrientation::forward);

  std::vector<Scenario> out;

  {
    Scenario s = base("example1-dynamic",
                      "harmonic oscillators, dynamic coupling K = (0 -1), rotating edge, period 7",
                      lti(PlantKind::continuous, oscillator, b_col), ring7,
                      law(CouplingVariant::dynamic_state, mat({{0, -1}})), 60.0, 1e-3, 10);
    s.expect.max_openloop_residual = 1e-3;
    s.expect.hypotheses = {H::uniformly_connected, H::no_unstable_mode, H::stabilizable};
    out.push_back(std::move(s));
  }
  {
    Scenario s = base("example1-static",
                      "harmonic oscillators, static velocity coupling, reversed rotating edge, "
                      "period 7 (expected failure)",
                      lti(PlantKind::continuous, oscillator, b_col, mat({{0, 1}})), ring7_reverse,
                      law(CouplingVariant::static_diffusive_output), 60.0, 1e-3, 10);
    s.expect.synchronized = false;
    s.expect.hypotheses = {H::uniformly_connected, H::no_unstable_mode};
    out.push_back(std::move(s));
  }
  {
    Scenario s = base("example1-observer",
                      "harmonic oscillators, observer-based coupling from y = x2, period 7",
                      lti(PlantKind::continuous, oscillator, b_col, mat({{0, 1}})), ring7,
                      law(CouplingVariant::dynamic_output_observer, mat({{0, -1}})), 60.0, 1e-3,
                      10);
    s.expect.max_openloop_residual = 1e-3;
    s.expect.hypotheses = {H::uniformly_connected, H::no_unstable_mode, H::stabilizable,
                           H::detectable};
    out.push_back(std::move(s));
  }
  {
    Scenario s = base("lemma-inverse-b",
                      "harmonic oscillators, full-state coupling through B = I, period 7",
                      lti(PlantKind::continuous, oscillator, identity), ring7,
                      law(CouplingVariant::static_state_inverse_b), 60.0, 1e-3, 10);
    s.expect.max_openloop_residual = 1e-3;
    s.expect.hypotheses = {H::uniformly_connected, H::no_unstable_mode, H::b_invertible};
    out.push_back(std::move(s));
  }
  {
    Scenario s = base("example2-dynamic",
                      "double integrators, dynamic coupling K = (-1 -1), rotating edge, period 2",
                      lti(PlantKind::continuous, integrator, b_col), ring2,
                      law(CouplingVariant::dynamic_state, mat({{-1, -1}})), 60.0, 1e-3, 10);
    s.expect.hypotheses = {H::uniformly_connected, H::no_unstable_mode, H::stabilizable};
    out.push_back(std::move(s));
  }
  {
    Scenario s = base("example2-static",
                      "double integrators, static coupling of y = x1 + x2, rotating edge, "
                      "period 2 (expected failure)",
                      lti(PlantKind::continuous, integrator, b_col, mat({{1, 1}})), ring2,
                      law(CouplingVariant::static_diffusive_output), 60.0, 1e-3, 10);
    s.expect.synchronized = false;
    s.expect.hypotheses = {H::uniformly_connected, H::no_unstable_mode};
    out.push_back(std::move(s));
  }
  {
    GraphSpec ring;
    ring.nodes = 4;
    ring.periodic = false;
    ring.durations = {1.0};
    Matrix w = Matrix::Zero(4, 4);
    for (int k = 0; k < 4; ++k) w((k + 1) % 4, k) = 1.0;
    ring.weights = {w};
    Scenario s = base("a1-passive-balanced",
                      "harmonic oscillators with y = x2 (passive, P = I), static directed ring",
                      lti(PlantKind::continuous, oscillator, b_col, mat({{0, 1}})), ring,
                      law(CouplingVariant::static_diffusive_output), 60.0, 1e-3, 10);
    s.expect.passivity_p = identity;
    s.expect.hypotheses = {H::connected_balanced, H::no_unstable_mode, H::passive};
    out.push_back(std::move(s));
  }
  {
    const double c = std::cos(0.3), sn = std::sin(0.3);
    Scenario s = base("discrete-rotation",
                      "discrete agents rotating by 0.3 rad, B = I, rotating edge every step",
                      lti(PlantKind::discrete, mat({{c, -sn}, {sn, c}}), identity),
                      rotating_edge_schedule(4.0, RingOrientation::forward),
                      law(CouplingVariant::discrete_static_inverse_b, std::nullopt,
                          Vector::Constant(4, 0.5)),
                      500.0, 1e-2, 1);
    s.expect.hypotheses = {H::uniformly_connected, H::no_unstable_mode, H::b_invertible,
                           H::epsilons_valid};
    out.push_back(std::move(s));
  }
  {
    const double c = std::cos(0.3), sn = std::sin(0.3);
    Scenario s = base("discrete-observer",
                      "discrete agents rotating by 0.3 rad, observer-based coupling from y = x1",
                      lti(PlantKind::discrete, mat({{c, -sn}, {sn, c}}), b_col, mat({{1, 0}})),
                      rotating_edge_schedule(4.0, RingOrientation::forward),
                      law(CouplingVariant::discrete_dynamic_output_observer, std::nullopt,
                          Vector::Constant(4, 0.5)),
                      500.0, 1e-2, 1);
    s.expect.hypotheses = {H::uniformly_connected, H::no_unstable_mode, H::stabilizable,
                           H::detectable, H::epsilons_valid};
    out.push_back(std::move(s));
  }
  {
    PlantSpec p;
    p.kind = PlantKind::periodic;
    p.omega = mat({{0, 0.5}, {-0.5, 0}});
    p.rate = 2.0;
    p.b = identity;
    Scenario s = base("periodic-floquet",
                      "rotating-frame periodic plant with purely imaginary exponents, B = I",
                      p, rotating_edge_schedule(4.0, RingOrientation::forward),
                      law(CouplingVariant::periodic_static_inverse_b), 60.0, 1e-3, 10);
    s.expect.max_openloop_residual = 1e-3;
    s.expect.hypotheses = {H::uniformly_connected, H::no_unstable_mode, H::b_invertible,
                           H::floquet_exponents};
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------- running

std::string format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string describe(const std::optional<Complex>& z) {
  if (!z) return "";
  std::ostringstream os;
  os << " at eigenvalue " << z->real() << (z->imag() < 0 ? " - " : " + ")
     << std::abs(z->imag()) << "i";
  return os.str();
}

AssertionResult check(Hypothesis h, const Scenario& s, const LinearPlant& plant,
                      const SwitchingGraph& graph, const HypothesisReport& report) {
  AssertionResult a;
  a.name = "hypothesis." + to_string(h);
  auto pbh = [&](const std::optional<PbhResult>& r) {
    if (!r) {
      a.detail = "not assessed";
      return;
    }
    a.passed = r->passed;
    a.detail = r->passed ? "PBH rank test passed"
                         : "rank defect " + std::to_string(r->rank_defect) +
                               describe(r->offending_eigenvalue);
  };
  switch (h) {
    case Hypothesis::uniformly_connected: {
      double horizon = 0.0;
      for (double d : s.graph.durations) horizon += d;
      if (s.graph.horizon) horizon = *s.graph.horizon;
      const ConnectivityReport r = uniformly_connected(graph, horizon);
      a.passed = r.uniform;
      a.detail = "horizon " + format("%g", horizon) +
                 (r.root ? ", root " + std::to_string(*r.root) : ", no common root");
      break;
    }
    case Hypothesis::connected_balanced: {
      double horizon = 0.0;
      for (double d : s.graph.durations) horizon += d;
      const ConnectivityReport r = uniformly_connected(graph, horizon);
      const bool each = std::all_of(r.connected_now.begin(), r.connected_now.end(),
                                    [](bool b) { return b; }) &&
                        std::all_of(r.balanced.begin(), r.balanced.end(),
                                    [](bool b) { return b; });
      a.passed = each && r.lambda2_min > 0.0;
      a.detail = "lambda2_min " + format("%.6g", r.lambda2_min);
      break;
    }
    case Hypothesis::no_unstable_mode:
      a.passed = report.no_unstable_mode();
      a.detail = to_string(report.spectrum.classification);
      break;
    case Hypothesis::stabilizable:
      pbh(report.stabilizable);
      break;
    case Hypothesis::detectable:
      pbh(report.detectable);
      break;
    case Hypothesis::b_invertible:
      a.passed = report.b_invertible;
      a.detail = "cond(B) " + format("%.6g", report.b_condition);
      break;
    case Hypothesis::passive: {
      const PassivityCertificate c = s.expect.passivity_p
                                         ? passivity_check(plant, *s.expect.passivity_p)
                                         : search_passivity_certificate(plant);
      a.passed = c.verdict;
      a.detail = "lyapunov residual " + format("%.3g", c.residual_lyap) + ", io residual " +
                 format("%.3g", c.residual_io) + ", min eig P " + format("%.6g", c.min_eig_p);
      break;
    }
    case Hypothesis::epsilons_valid:
      if (!s.coupling.epsilons) {
        a.detail = "no epsilons given";
        break;
      }
      try {
        check_epsilons(graph, *s.coupling.epsilons);
        a.passed = true;
        a.detail = "0 < eps_k < 1 / d_k on every segment";
      } catch (const std::invalid_argument& e) {
        a.detail = e.what();
      }
      break;
    case Hypothesis::floquet_exponents: {
      if (!report.floquet || !s.plant.omega) {
        a.detail = "needs a rotating-frame periodic plant";
        break;
      }
      auto by_imag = [](const Complex& x, const Complex& y) {
        return x.imag() < y.imag() || (x.imag() == y.imag() && x.real() < y.real());
      };
      std::vector<Complex> want = eigenvalues(*s.plant.omega);
      std::vector<Complex> got = report.floquet->exponents;
      std::sort(want.begin(), want.end(), by_imag);
      std::sort(got.begin(), got.end(), by_imag);
      double err = want.size() == got.size() ? 0.0 : INFINITY;
      for (std::size_t i = 0; i < std::min(want.size(), got.size()); ++i) {
        err = std::max(err, std::abs(want[i] - got[i]));
      }
      a.passed = err <= 1e-6;
      a.detail = "max exponent error " + format("%.3g", err);
      break;
    }
  }
  return a;
}

NetworkState initial_state(const Scenario& s, const NetworkModel& model,
                           std::uint64_t seed) {
  if (!s.initial) return random_initial_state(model, seed, s.simulation.t0);
  NetworkState init;
  init.t = s.simulation.t0;
  init.x = s.initial->x;
  init.eta = s.initial->eta;
  init.xhat = s.initial->xhat;
  return init;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string to_string(Hypothesis h) {
  switch (h) {
    case Hypothesis::uniformly_connected:
      return "uniformly-connected";
    case Hypothesis::connected_balanced:
      return "connected-balanced";
    case Hypothesis::no_unstable_mode:
      return "no-unstable-mode";
    case Hypothesis::stabilizable:
      return "stabilizable";
    case Hypothesis::detectable:
      return "detectable";
    case Hypothesis::b_invertible:
      return "b-invertible";
    case Hypothesis::passive:
      return "passive";
    case Hypothesis::epsilons_valid:
      return "epsilons-valid";
    case Hypothesis::floquet_exponents:
      return "floquet-exponents";
  }
  return "unknown";
}

std::optional<Hypothesis> parse_hypothesis(std::string_view name) {
  for (Hypothesis h :
       {Hypothesis::uniformly_connected, Hypothesis::connected_balanced,
        Hypothesis::no_unstable_mode, Hypothesis::stabilizable, Hypothesis::detectable,
        Hypothesis::b_invertible, Hypothesis::passive, Hypothesis::epsilons_valid,
        Hypothesis::floquet_exponents}) {
    if (to_string(h) == name) return h;
  }
  return std::nullopt;
}

bool operator==(const Scenario& a, const Scenario& b) {
  const PlantSpec& p = a.plant;
  const PlantSpec& q = b.plant;
  if (a.name != b.name || a.provenance != b.provenance) return false;
  if (p.kind != q.kind || !same(p.a, q.a) || !same(p.b, q.b) || !same(p.c, q.c) ||
      p.period != q.period || !same(p.omega, q.omega) || p.rate != q.rate ||
      p.samples.size() != q.samples.size()) {
    return false;
  }
  for (std::size_t i = 0; i < p.samples.size(); ++i) {
    if (!same(p.samples[i], q.samples[i])) return false;
  }
  const GraphSpec& g = a.graph;
  const GraphSpec& h = b.graph;
  if (g.nodes != h.nodes || g.eta != h.eta || g.gamma != h.gamma || g.periodic != h.periodic ||
      g.horizon != h.horizon || g.durations != h.durations ||
      g.weights.size() != h.weights.size()) {
    return false;
  }
  for (std::size_t i = 0; i < g.weights.size(); ++i) {
    if (!same(g.weights[i], h.weights[i])) return false;
  }
  if (a.coupling.variant != b.coupling.variant || !same(a.coupling.k, b.coupling.k) ||
      !same(a.coupling.h, b.coupling.h) || !same(a.coupling.epsilons, b.coupling.epsilons)) {
    return false;
  }
  const SimulationConfig& c = a.simulation;
  const SimulationConfig& d = b.simulation;
  if (c.t0 != d.t0 || c.t_end != d.t_end || c.step != d.step ||
      c.record_every != d.record_every || c.seed != d.seed ||
      c.sample_period != d.sample_period) {
    return false;
  }
  if (a.initial.has_value() != b.initial.has_value()) return false;
  if (a.initial && (!same(std::optional<Vector>(a.initial->x), b.initial->x) ||
                    !same(a.initial->eta, b.initial->eta) ||
                    !same(a.initial->xhat, b.initial->xhat))) {
    return false;
  }
  const Expectations& e = a.expect;
  const Expectations& f = b.expect;
  return e.synchronized == f.synchronized && e.thresholds.sync_ratio == f.thresholds.sync_ratio &&
         e.thresholds.fail_ratio == f.thresholds.fail_ratio &&
         e.thresholds.fail_rate == f.thresholds.fail_rate &&
         e.max_openloop_residual == f.max_openloop_residual && e.hypotheses == f.hypotheses &&
         same(e.passivity_p, f.passivity_p);
}

Scenario parse_scenario(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ScenarioError("$", std::string("not valid JSON: ") + e.what());
  }
  check_keys(j, "", {"name", "provenance", "plant", "graph", "coupling", "simulation", "expect"});
  Scenario s;
  s.name = read_string(required_field(j, "", "name"), "name");
  if (s.name.empty() || s.name.find_first_of("/\\ ") != std::string::npos) {
    throw ScenarioError("name", "must be a nonempty file-name-safe identifier");
  }
  if (const json* p = optional_field(j, "provenance")) s.provenance = read_string(*p, "provenance");
  s.plant = read_plant(required_field(j, "", "plant"), "plant");
  s.graph = read_graph(required_field(j, "", "graph"), "graph");
  s.coupling = read_coupling(required_field(j, "", "coupling"), "coupling");
  read_simulation(required_field(j, "", "simulation"), "simulation", s);
  s.expect = read_expect(required_field(j, "", "expect"), "expect");
  cross_check(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ScenarioError("$", "cannot read " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string serialize(const Scenario& s) { return pretty(to_json(s)); }

std::string scenario_digest(const Scenario& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize(s)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

LinearPlant build_plant(const PlantSpec& spec) {
  switch (spec.kind) {
    case PlantKind::continuous:
      return LinearPlant::continuous(spec.a, spec.b, spec.c);
    case PlantKind::discrete:
      return LinearPlant::discrete(spec.a, spec.b, spec.c);
    case PlantKind::periodic: {
      PeriodicMatrix a = spec.omega ? PeriodicMatrix::rotating_frame(*spec.omega, *spec.rate)
                                    : PeriodicMatrix::from_samples(*spec.period, spec.samples);
      return LinearPlant::periodic(std::move(a), spec.b, spec.c);
    }
  }
  throw std::invalid_argument("build_plant: unknown plant kind");
}

SwitchingGraph build_graph(const GraphSpec& spec) {
  return SwitchingGraph::from_durations(spec.durations, spec.weights, spec.eta, spec.gamma,
                                        spec.periodic);
}

GraphSpec rotating_edge_schedule(double period, RingOrientation orientation) {
  GraphSpec g;
  g.nodes = 4;
  g.periodic = true;
  for (int k = 0; k < 4; ++k) {
    Matrix w = Matrix::Zero(4, 4);
    const int next = (k + 1) % 4;
    if (orientation == RingOrientation::forward) {
      w(next, k) = 1.0;
    } else {
      w(k, next) = 1.0;
    }
    g.durations.push_back(period / 4.0);
    g.weights.push_back(std::move(w));
  }
  return g;
}

const std::vector<Scenario>& builtin_scenarios() {
  static const std::vector<Scenario> all = make_builtins();
  return all;
}

const Scenario& find_builtin(std::string_view name) {
  for (const Scenario& s : builtin_scenarios()) {
    if (s.name == name) return s;
  }
  throw std::out_of_range("unknown scenario '" + std::string(name) + "'");
}

RunResult run_scenario(const Scenario& s, const RunOptions& options) {
  RunResult r;
  r.scenario = s;
  if (options.step) r.scenario.simulation.step = *options.step;
  if (options.seed) r.scenario.simulation.seed = *options.seed;
  r.digest = scenario_digest(r.scenario);
  const Scenario& sc = r.scenario;

  const LinearPlant plant = build_plant(sc.plant);
  const SwitchingGraph graph = build_graph(sc.graph);
  const HypothesisReport report = check_hypotheses(plant);

  bool hypotheses_hold = true;
  for (Hypothesis h : sc.expect.hypotheses) {
    r.assertions.push_back(check(h, sc, plant, graph, report));
    hypotheses_hold = hypotheses_hold && r.assertions.back().passed;
  }
  if (!hypotheses_hold) {
    r.exit_code = 1;
    return r;
  }

  r.law = make_coupling_law(sc.coupling.variant, plant, graph, sc.coupling.k, sc.coupling.h,
                            sc.coupling.epsilons);
  const NetworkModel model(*r.law, plant, graph);
  const NetworkState init = initial_state(sc, model, sc.simulation.seed);
  r.trace = simulate(model, init, sc.simulation);
  r.trace.digest = r.digest;

  if (r.trace.diverged) {
    r.verdict = assess(r.trace, plant, sc.expect.thresholds, sc.simulation.sample_period);
    r.assertions.push_back({"simulation.bounded", false, r.trace.divergence_message});
    r.exit_code = 1;
    return r;
  }
  r.verdict = assess(r.trace, plant, sc.expect.thresholds, sc.simulation.sample_period);

  AssertionResult sync;
  sync.name = sc.expect.synchronized ? "verdict.synchronized" : "verdict.not-synchronized";
  sync.passed = sc.expect.synchronized ? r.verdict.outcome == SyncOutcome::synchronized
                                       : r.verdict.outcome == SyncOutcome::not_synchronized;
  sync.detail = to_string(r.verdict.outcome) + ", final ratio " +
                format("%.6g", r.verdict.final_ratio) + ", fitted rate " +
                format("%.6g", r.verdict.fitted_rate);
  r.assertions.push_back(sync);

  if (sc.expect.max_openloop_residual) {
    AssertionResult res;
    res.name = "verdict.openloop-residual";
    res.passed = r.verdict.openloop_residual <= *sc.expect.max_openloop_residual;
    res.detail = format("%.6g", r.verdict.openloop_residual) + " (limit " +
                 format("%g", *sc.expect.max_openloop_residual) + ")";
    r.assertions.push_back(res);
  }

  const bool ok = std::all_of(r.assertions.begin(), r.assertions.end(),
                              [](const AssertionResult& a) { return a.passed; });
  r.exit_code = ok ? 0 : 1;
  return r;
}

std::string summary_json(const RunResult& r) {
  const Scenario& s = r.scenario;
  json j;
  j["scenario"] = s.name;
  j["provenance"] = s.provenance;
  j["digest"] = r.digest;
  j["variant"] = to_string(s.coupling.variant);
  j["exit_code"] = r.exit_code;
  j["expected_synchronized"] = s.expect.synchronized;
  j["simulated"] = r.law.has_value();
  if (r.law) {
    j["verdict"] = {{"outcome", to_string(r.verdict.outcome)},
                    {"synchronized", r.verdict.synchronized},
                    {"fitted_rate", number_or_null(r.verdict.fitted_rate)},
                    {"final_ratio", number_or_null(r.verdict.final_ratio)},
                    {"openloop_residual", number_or_null(r.verdict.openloop_residual)}};
    j["diverged"] = r.trace.diverged;
    if (r.trace.diverged) j["divergence"] = r.trace.divergence_message;
    j["samples"] = r.trace.times.size();
    json gains = json::object();
    if (r.law->k) gains["K"] = matrix_json(*r.law->k);
    if (r.law->h) gains["H"] = matrix_json(*r.law->h);
    if (r.law->epsilons) gains["epsilons"] = vector_json(*r.law->epsilons);
    j["gains"] = std::move(gains);
  }
  json assertions = json::array();
  for (const AssertionResult& a : r.assertions) {
    assertions.push_back({{"name", a.name}, {"passed", a.passed}, {"detail", a.detail}});
  }
  j["assertions"] = std::move(assertions);
  return pretty(j);
}

void write_artifacts(const RunResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string& name = r.scenario.name;
  {
    std::ofstream csv(dir / (name + ".trace.csv"), std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write " + (dir / (name + ".trace.csv")).string());
    write_trace_csv(csv, r.trace);
  }
  std::ofstream summary(dir / (name + ".summary.json"), std::ios::binary);
  if (!summary) {
    throw std::runtime_error("cannot write " + (dir / (name + ".summary.json")).string());
  }
  summary << summary_json(r);
}

}  // namespace syncnet
