#include "estkit/cli/report_io.hpp"

#include <cstdio>

namespace estkit::cli {
namespace {

void numbered(std::ostream& out, const char* prefix, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i) out << ',' << prefix << i;
}

void values(std::ostream& out, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ',' << format_double(v[i]);
}

void blanks(std::ostream& out, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i) out << ',';
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& t) {
  const Eigen::Index n = t.truth_states.front().size();
  const Eigen::Index m = t.controls.empty() ? 0 : t.controls.front().size();
  const Eigen::Index k = t.measurements.empty() ? 0 : t.measurements.front().size();
  out << "step";
  numbered(out, "x_", n);
  numbered(out, "u_", m);
  numbered(out, "z_", k);
  out << '\n';
  for (std::size_t step = 0; step < t.truth_states.size(); ++step) {
    out << step;
    values(out, t.truth_states[step]);
    if (step == 0) {
      blanks(out, m + k);
    } else {
      values(out, t.controls[step - 1]);
      values(out, t.measurements[step - 1]);
    }
    out << '\n';
  }
}

void write_run_csv(std::ostream& out, std::span<const RunReport> reports) {
  if (reports.empty()) return;
  const Eigen::Index n = reports.front().beliefs.front().x_hat.size();
  out << "step,filter";
  numbered(out, "x_hat_", n);
  numbered(out, "P_diag_", n);
  out << ",nees,iterations,innovation_norm\n";
  for (const RunReport& r : reports) {
    for (std::size_t i = 0; i < r.beliefs.size(); ++i) {
      out << (i + 1) << ',' << to_string(r.filter);
      values(out, r.beliefs[i].x_hat);
      values(out, r.beliefs[i].P.diagonal());
      out << ',' << format_double(r.nees[i]) << ',' << r.iterations[i] << ','
          << format_double(r.innovation_norm[i]) << '\n';
    }
  }
  out << "# summary\nfilter";
  numbered(out, "rmse_", n);
  out << ",mean_nees,mean_iterations\n";
  for (const RunReport& r : reports) {
    out << to_string(r.filter);
    values(out, r.rmse);
    out << ',' << format_double(r.mean_nees) << ',' << format_double(r.mean_iterations) << '\n';
  }
}

}  // namespace estkit::cli
