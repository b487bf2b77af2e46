#include "tvopt/harness/report.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>

namespace tvopt::harness {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  if (text == "nan") return std::nan("");
  if (text == "inf") return INFINITY;
  if (text == "-inf") return -INFINITY;
  double value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error(ErrorCode::ConfigError, "not a number: '" + text + "'");
  }
  return value;
}

std::string format_vector(const Vector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) out += ',';
    out += format_double(v(i));
  }
  return out;
}

void KeyValueRecord::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

void KeyValueRecord::set(const std::string& key, double value) { set(key, format_double(value)); }
void KeyValueRecord::set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }
void KeyValueRecord::set(const std::string& key, const Vector& value) { set(key, format_vector(value)); }

bool KeyValueRecord::has(const std::string& key) const {
  for (const auto& e : entries_) {
    if (e.first == key) return true;
  }
  return false;
}

const std::string& KeyValueRecord::get(const std::string& key) const {
  for (const auto& e : entries_) {
    if (e.first == key) return e.second;
  }
  throw Error(ErrorCode::ConfigError, "record has no key '" + key + "'");
}

double KeyValueRecord::get_double(const std::string& key) const { return parse_double(get(key)); }

std::string KeyValueRecord::serialize() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
  return out;
}

KeyValueRecord KeyValueRecord::parse(const std::string& text) {
  KeyValueRecord rec;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, "record line without '=': " + line);
    rec.entries_.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  return rec;
}

namespace {

bool parse_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw Error(ErrorCode::ConfigError, "not a boolean: '" + s + "'");
}

constexpr const char* kConstPrefix = "constant.";

}  // namespace

KeyValueRecord RunReport::to_record() const {
  KeyValueRecord rec;
  rec.set("scenario", scenario);
  rec.set("constants_mode", constants_mode);
  rec.set("bound", bound);
  rec.set("limsup_estimate", limsup_estimate);
  rec.set("window_start", window_start);
  rec.set("invariance_ok", invariance_ok);
  rec.set("feasible_window_end", feasible_window_end);
  rec.set("terminated_early", terminated_early);
  rec.set("max_feasibility_violation", max_feasibility_violation);
  rec.set("max_monotonicity_positive", max_monotonicity_positive);
  rec.set("certificate", std::string(passed ? "pass" : "fail"));
  for (const auto& [k, v] : constants) rec.set(kConstPrefix + k, v);
  return rec;
}

RunReport RunReport::from_record(const KeyValueRecord& rec) {
  RunReport r;
  r.scenario = rec.get("scenario");
  r.constants_mode = rec.get("constants_mode");
  r.bound = rec.get_double("bound");
  r.limsup_estimate = rec.get_double("limsup_estimate");
  r.window_start = rec.get_double("window_start");
  r.invariance_ok = parse_bool(rec.get("invariance_ok"));
  r.feasible_window_end = rec.get_double("feasible_window_end");
  r.terminated_early = parse_bool(rec.get("terminated_early"));
  r.max_feasibility_violation = rec.get_double("max_feasibility_violation");
  r.max_monotonicity_positive = rec.get_double("max_monotonicity_positive");
  r.passed = rec.get("certificate") == "pass";
  const std::string prefix = kConstPrefix;
  for (const auto& [k, v] : rec.entries()) {
    if (k.rfind(prefix, 0) == 0) r.constants[k.substr(prefix.size())] = parse_double(v);
  }
  return r;
}

RunReport make_run_report(const std::string& scenario, const std::string& mode, const TrackingCertificate& cert,
                          const std::map<std::string, double>& constants) {
  RunReport r;
  r.scenario = scenario;
  r.constants_mode = mode;
  r.bound = cert.bound;
  r.limsup_estimate = cert.limsup_estimate;
  r.window_start = cert.window_start;
  r.invariance_ok = cert.invariance_ok;
  r.feasible_window_end = cert.feasible_window_end;
  r.terminated_early = cert.terminated_early;
  r.max_feasibility_violation = cert.max_feasibility_violation;
  r.max_monotonicity_positive = cert.max_monotonicity_positive;
  r.passed = cert.passed;
  r.constants = constants;
  r.constants["a"] = cert.a_used;
  return r;
}

KeyValueRecord bound_record(const LipschitzBoundReport& rep) {
  KeyValueRecord rec;
  rec.set("mode", rep.mode);
  rec.set("ell_x", rep.ell_x);
  rec.set("ell_lm", rep.ell_lm);
  for (const auto& [k, v] : rep.constants_used) rec.set(kConstPrefix + k, v);
  if (!rep.label.empty()) rec.set("label", rep.label);
  return rec;
}

void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& tr) {
  const auto n = tr.x_alg.empty() ? 0 : tr.x_alg.front().size();
  out << "t";
  for (Eigen::Index i = 1; i <= n; ++i) out << ",x_" << i;
  for (Eigen::Index i = 1; i <= n; ++i) out << ",xstar_" << i;
  out << ",err,feas_viol,monot_lhs\n";
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    std::string line = format_double(tr.times[k]);
    for (Eigen::Index i = 0; i < n; ++i) line += "," + format_double(tr.x_alg[k](i));
    for (Eigen::Index i = 0; i < n; ++i) line += "," + format_double(tr.x_opt[k](i));
    line += "," + format_double(tr.err[k]);
    line += "," + format_double(tr.feasibility_violation[k]);
    line += "," + format_double(tr.monotonicity_lhs[k]);
    out << line << '\n';
  }
}

}  // namespace tvopt::harness
