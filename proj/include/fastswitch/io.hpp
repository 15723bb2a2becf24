#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fastswitch/diagnostics.hpp"
#include "fastswitch/equilibria.hpp"
#include "fastswitch/error.hpp"
#include "fastswitch/ode_sim.hpp"
#include "fastswitch/pde_sim.hpp"
#include "fastswitch/stability.hpp"

namespace fastswitch {

using nlohmann::json;

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw IoError("write failed for " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }
  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format_double(values[i]);
    out_ << '\n';
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

inline std::string ode_csv(const OdeTrajectory& tr) {
  std::vector<std::string> header{"t"};
  header.insert(header.end(), tr.columns.begin(), tr.columns.end());
  CsvWriter w(header);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    std::vector<double> r{tr.times[k]};
    r.insert(r.end(), tr.states[k].begin(), tr.states[k].end());
    w.row(r);
  }
  return w.str();
}

/// Column x, then one column per field per snapshot named <field>@<snapshot index>.
inline std::string pde_csv(const PdeTrajectory& tr) {
  std::vector<std::string> header{"x"};
  for (std::size_t s = 0; s < tr.size(); ++s)
    for (const auto& c : tr.columns) header.push_back(c + "@" + std::to_string(s));
  CsvWriter w(header);
  const int n = tr.grid.n_cells;
  for (int i = 0; i < n; ++i) {
    std::vector<double> r{tr.grid.x(i)};
    for (std::size_t s = 0; s < tr.size(); ++s)
      for (std::size_t c = 0; c < tr.columns.size(); ++c) r.push_back(tr.fields[s][c][static_cast<std::size_t>(i)]);
    w.row(r);
  }
  return w.str();
}

inline std::string budget_csv(const EnergyBudget& b) {
  CsvWriter w({"t", "entropy", "grad_ua_sq", "grad_ub_sq", "q_l2_sq", "budget", "mass_u", "mass_v", "v_sup",
               "positivity_violation"});
  for (const auto& r : b.records)
    w.row({r.t, r.entropy, r.grad_ua_sq, r.grad_ub_sq, r.q_l2_sq, r.budget(), r.mass_u, r.mass_v, r.v_sup,
           r.positivity_violation});
  return w.str();
}

inline std::string q_series_csv(const QNormSeries& s) {
  CsvWriter w({"t", "q_l2", "q_accumulated"});
  for (std::size_t i = 0; i < s.times.size(); ++i) w.row({s.times[i], s.q_l2[i], s.accumulated[i]});
  return w.str();
}

// JSON numbers cannot hold nan/inf; those become strings.
inline json num(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

inline json to_json(const cplx& z) { return json::array({num(z.real()), num(z.imag())}); }

template <int N>
json matrix_json(const Eigen::Matrix<double, N, N>& A) {
  json rows = json::array();
  for (int i = 0; i < N; ++i) {
    json r = json::array();
    for (int j = 0; j < N; ++j) r.push_back(num(A(i, j)));
    rows.push_back(r);
  }
  return rows;
}

inline json to_json(const Equilibrium& e) {
  return {{"kind", to_string(e.kind)}, {"u", num(e.u_bar)},         {"v", num(e.v_bar)},
          {"lambda", num(e.lambda)},   {"sigma", num(e.sigma)},     {"delta", num(e.delta)},
          {"on_discontinuity", e.on_discontinuity}, {"residual", num(e.residual)}};
}

inline json to_json(const EquilibriumSet& s) {
  json items = json::array();
  for (const auto& e : s.items) items.push_back(to_json(e));
  return {{"alpha", num(s.alpha)}, {"equilibria", items}};
}

inline json to_json(const UniquenessReport& r) {
  json j = {{"alpha", num(r.alpha)},
            {"alpha_boundary", r.alpha_boundary},
            {"half_point_value", num(r.half_point_value)},
            {"affine_uniqueness_applies", r.affine_uniqueness_applies},
            {"omega1", num(r.omega1)},
            {"omega2", num(r.omega2)}};
  j["half_point_condition_holds"] = r.half_point_condition_holds ? json(*r.half_point_condition_holds) : json();
  return j;
}

inline json to_json(const RouthHurwitz& rh) {
  return {{"trace", num(rh.trace)},
          {"minors_sum", num(rh.minors_sum)},
          {"det", num(rh.det)},
          {"conditions", rh.conditions},
          {"first_column", {num(rh.first_column[0]), num(rh.first_column[1]), num(rh.first_column[2]),
                            num(rh.first_column[3])}},
          {"stable", rh.stable}};
}

inline json to_json(const AsymptoticsResult& a) {
  json gaps = json::array();
  for (const auto& g : a.slow_gaps) gaps.push_back({num(g[0]), num(g[1])});
  json fs = json::array();
  for (double x : a.fast_scaled) fs.push_back(num(x));
  return {{"eps", a.eps},          {"slow_gaps", gaps},           {"fast_scaled", fs},
          {"slopes", {num(a.slopes[0]), num(a.slopes[1])}},       {"r", num(a.r)},
          {"r_estimate", num(a.r_estimate)}, {"pass", a.pass}};
}

inline json to_json(const StabilityEntry& e) {
  json j;
  j["equilibrium"] = to_json(e.equilibrium);
  j["theory"] = to_string(e.theory);
  j["overall"] = to_string(e.overall);
  j["consistent"] = e.consistent;
  j["F_prime"] = e.F_prime_value ? num(*e.F_prime_value) : json();
  j["M"] = e.M ? matrix_json<2>(*e.M) : json();
  j["J"] = e.J ? matrix_json<2>(*e.J) : json();
  json modes = json::array();
  for (const auto& m : e.modes) {
    modes.push_back({{"n", m.n},
                     {"lambda_n", num(m.lambda_n)},
                     {"trace", num(m.N.trace())},
                     {"det", num(m.N.determinant())},
                     {"eigenvalues", {to_json(m.eigenvalues[0]), to_json(m.eigenvalues[1])}},
                     {"verdict", to_string(m.verdict)}});
  }
  j["modes"] = modes;
  json meso = json::array();
  for (const auto& b : e.meso) {
    json bm = json::array();
    for (const auto& m : b.modes) {
      bm.push_back({{"n", m.n},
                    {"lambda_n", num(m.lambda_n)},
                    {"routh_hurwitz", to_json(m.routh)},
                    {"eigenvalues", {to_json(m.eigenvalues[0]), to_json(m.eigenvalues[1]), to_json(m.eigenvalues[2])}},
                    {"verdict", to_string(m.verdict)}});
    }
    meso.push_back({{"epsilon", num(b.epsilon)}, {"M_eps", matrix_json<3>(b.M_eps)}, {"modes", bm}});
  }
  j["meso"] = meso;
  j["asymptotics"] = e.asymptotics ? to_json(*e.asymptotics) : json();
  j["errors"] = e.errors;
  return j;
}

inline json to_json(const StabilityReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries) entries.push_back(to_json(e));
  return {{"alpha", num(r.alpha)}, {"length", num(r.length)}, {"n_max", r.n_max},
          {"eps_list", r.eps_list}, {"entries", entries}};
}

inline json to_json(const OdeStats& s) {
  return {{"steps_accepted", s.steps_accepted}, {"steps_rejected", s.steps_rejected},
          {"newton_iters", s.newton_iters},     {"rhs_evals", s.rhs_evals},
          {"jac_evals", s.jac_evals},           {"clipped_count", s.clipped_count},
          {"clipped_mass", num(s.clipped_mass)}};
}

inline json to_json(const PdeStats& s) {
  return {{"steps", s.steps},
          {"fast_substeps", s.fast_substeps},
          {"closure_solves", s.closure_solves},
          {"clipped_count", s.clipped_count},
          {"clipped_mass", num(s.clipped_mass)},
          {"dt", num(s.dt)},
          {"v_min", num(s.v_min)},
          {"v_max", num(s.v_max)}};
}

}  // namespace fastswitch
