#include "comono/policy.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "comono/errors.hpp"

namespace comono {

PolicySpec PolicySpec::constant(double p) {
  if (!(p >= 0.0 && p <= 1.0)) fail(errc::invalid_argument, "policy probability must be in [0,1]");
  return {[p](const Eigen::VectorXd&, int) { return p; }, "p=" + std::to_string(p)};
}

PolicySpec PolicySpec::linear_threshold(Eigen::VectorXd coefs, double cutoff) {
  return {[c = std::move(coefs), cutoff](const Eigen::VectorXd& x, int) {
            return c.dot(x) <= cutoff ? 1.0 : 0.0;
          },
          "linear threshold"};
}

PolicySpec PolicySpec::axis_threshold(int axis, double cutoff, bool treat_below) {
  return {[axis, cutoff, treat_below](const Eigen::VectorXd& x, int) {
            return (treat_below ? x[axis] <= cutoff : x[axis] >= cutoff) ? 1.0 : 0.0;
          },
          "axis threshold"};
}

PolicySpec PolicySpec::factual(const Dataset& ds) {
  return {[d = ds.d](const Eigen::VectorXd&, int row) {
            return row >= 0 ? static_cast<double>(d[row]) : 0.0;
          },
          "factual"};
}

PolicySpec PolicySpec::expand_axis_threshold(const Dataset& ds, int axis, double cutoff,
                                             bool treat_below) {
  return {[d = ds.d, axis, cutoff, treat_below](const Eigen::VectorXd& x, int row) {
            if (row >= 0 && d[row] == 1) return 1.0;
            return (treat_below ? x[axis] <= cutoff : x[axis] >= cutoff) ? 1.0 : 0.0;
          },
          "expanded axis threshold"};
}

namespace {

std::string strip_spaces(const std::string& s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out += c;
  return out;
}

int find_covariate(const std::string& name, const Dataset& ds) {
  for (int j = 0; j < ds.k(); ++j)
    if (ds.names[j] == name) return j;
  fail(errc::invalid_argument, "unknown covariate '" + name + "' in rule");
}

double parse_number(const std::string& s) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v))
    fail(errc::invalid_argument, "cannot parse number '" + s + "' in rule");
  return v;
}

}  // namespace

PolicySpec parse_rule(const std::string& text, const Dataset& ds) {
  std::string s = strip_spaces(text);
  if (s.empty()) fail(errc::invalid_argument, "empty rule");
  if (s == "factual") return PolicySpec::factual(ds);
  if (s.rfind("p=", 0) == 0) return PolicySpec::constant(parse_number(s.substr(2)));

  // Find the comparator.
  std::size_t pos = std::string::npos;
  int cmp_len = 0;
  bool treat_leq = true;
  for (const char* op : {"<=", ">=", "<", ">"}) {
    pos = s.find(op);
    if (pos != std::string::npos) {
      cmp_len = static_cast<int>(std::string(op).size());
      treat_leq = op[0] == '<';
      break;
    }
  }
  if (pos == std::string::npos)
    fail(errc::invalid_argument, "rule '" + text + "' has no comparator");
  std::string lhs = s.substr(0, pos);
  double cutoff = parse_number(s.substr(pos + cmp_len));

  // lhs is a sum of [coef*]name terms.
  Eigen::VectorXd coefs = Eigen::VectorXd::Zero(ds.k());
  std::size_t i = 0;
  while (i < lhs.size()) {
    double sign = 1.0;
    if (lhs[i] == '+') {
      ++i;
    } else if (lhs[i] == '-') {
      sign = -1.0;
      ++i;
    }
    std::size_t term_end = i;
    while (term_end < lhs.size() && lhs[term_end] != '+' && lhs[term_end] != '-') ++term_end;
    std::string term = lhs.substr(i, term_end - i);
    if (term.empty()) fail(errc::invalid_argument, "malformed rule '" + text + "'");
    double coef = sign;
    std::string name = term;
    auto star = term.find('*');
    if (star != std::string::npos) {
      coef = sign * parse_number(term.substr(0, star));
      name = term.substr(star + 1);
    }
    coefs[find_covariate(name, ds)] += coef;
    i = term_end;
  }
  if (!treat_leq) {
    coefs = -coefs;
    cutoff = -cutoff;
  }
  PolicySpec spec = PolicySpec::linear_threshold(std::move(coefs), cutoff);
  spec.description = text;
  return spec;
}

std::vector<std::uint8_t> s_indicator(const Workspace& ws, const QCurvePair& curves,
                                      const Eigen::VectorXd& own_fit) {
  const int n = ws.n();
  std::vector<std::uint8_t> s(n, 0);
  for (int i = 0; i < n; ++i) {
    double g = own_fit[i];
    if (!std::isfinite(g)) continue;
    const QCurve& opposing = curves.for_target(1 - ws.ds.d[i]);
    s[i] = opposing.in_domain(g) ? 1 : 0;
  }
  return s;
}

PolicyEffect policy_effect(const Workspace& ws, const PolicySpec& spec, const QCurvePair& curves,
                           const Eigen::VectorXd& own_fit, const std::vector<std::uint8_t>& s) {
  const int n = ws.n();
  PolicyEffect eff;
  double sum_impact = 0.0;
  double sum_affected = 0.0;
  double sum_net = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!s[i]) continue;
    ++eff.n_identified;
    double p = spec.prob(ws.ds.x.row(i).transpose(), i);
    if (!(p >= 0.0 && p <= 1.0))
      fail(errc::invalid_argument, "policy probability outside [0,1] at row " + std::to_string(i));
    const QCurve& opposing = curves.for_target(1 - ws.ds.d[i]);
    double transferred = opposing.interpolate(own_fit[i]);
    if (ws.ds.d[i] == 0) {
      sum_impact += p * (transferred - ws.ds.y[i]);
      sum_affected += p;
      sum_net += p;
    } else {
      sum_impact += (1.0 - p) * (transferred - ws.ds.y[i]);
      sum_affected += 1.0 - p;
      sum_net -= 1.0 - p;
    }
  }
  if (eff.n_identified == 0)
    fail(errc::no_identified_units, "no unit has both potential outcomes identified");
  eff.theta = sum_impact / static_cast<double>(eff.n_identified);
  eff.n_affected = sum_affected;
  eff.net_change_count = sum_net;
  eff.net_change_avg = sum_net / static_cast<double>(eff.n_identified);
  return eff;
}

std::vector<SweepRow> threshold_sweep(const Workspace& ws, int axis,
                                      const std::vector<double>& cutoffs, bool treat_below,
                                      const QCurvePair& curves, const Eigen::VectorXd& own_fit,
                                      const std::vector<std::uint8_t>& s) {
  if (axis < 0 || axis >= ws.k()) fail(errc::invalid_argument, "sweep axis out of range");
  if (!std::is_sorted(cutoffs.begin(), cutoffs.end()))
    fail(errc::invalid_argument, "cutoffs must be sorted");
  std::vector<SweepRow> rows;
  rows.reserve(cutoffs.size());
  for (double c : cutoffs) {
    SweepRow row;
    row.cutoff = c;
    try {
      PolicySpec spec = PolicySpec::expand_axis_threshold(ws.ds, axis, c, treat_below);
      row.effect = policy_effect(ws, spec, curves, own_fit, s);
      row.ok = true;
    } catch (const Error& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace comono
