#pragma once

// Flat key=value records and the trajectory CSV. Reals are written as the
// shortest decimal that round-trips to the same double.

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "tvopt/flows.hpp"
#include "tvopt/sensitivity.hpp"

namespace tvopt::harness {

std::string format_double(double value);
double parse_double(const std::string& text);  // ConfigError on failure
std::string format_vector(const Vector& v);    // comma separated

/// Ordered key=value lines.
class KeyValueRecord {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, bool value);
  void set(const std::string& key, const Vector& value);

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;  // ConfigError when absent
  double get_double(const std::string& key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  std::string serialize() const;
  static KeyValueRecord parse(const std::string& text);

  friend bool operator==(const KeyValueRecord& a, const KeyValueRecord& b) { return a.entries_ == b.entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

struct RunReport {
  std::string scenario;
  std::string constants_mode;
  double bound = 0;
  double limsup_estimate = 0;
  bool invariance_ok = false;
  double feasible_window_end = 0;
  bool terminated_early = false;
  double window_start = 0;
  double max_feasibility_violation = 0;
  double max_monotonicity_positive = 0;
  bool passed = false;
  std::map<std::string, double> constants;

  KeyValueRecord to_record() const;
  static RunReport from_record(const KeyValueRecord& rec);

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

RunReport make_run_report(const std::string& scenario, const std::string& mode, const TrackingCertificate& cert,
                          const std::map<std::string, double>& constants);

KeyValueRecord bound_record(const LipschitzBoundReport& rep);

/// Columns t, x_1..x_n, xstar_1..xstar_n, err, feas_viol, monot_lhs.
void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& tr);

}  // namespace tvopt::harness
