#include "coagdiff/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace coagdiff {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_number: conversion failed");
  return std::string(buf, ptr);
}

std::string frames_csv(const SpaceTimeSeries& s) {
  std::ostringstream out;
  out << "t,x,value\n";
  const auto xs = s.grid().nodes();
  for (std::size_t m = 0; m < s.frames(); ++m) {
    const auto f = s.frame(m);
    for (std::size_t j = 0; j < xs.size(); ++j) {
      out << format_number(s.times()[m]) << ',' << format_number(xs[j]) << ',' << format_number(f[j]) << '\n';
    }
  }
  return out.str();
}

std::string table_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::ostringstream out;
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw std::invalid_argument("table_csv: row width differs from header");
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << format_number(row[k]);
    out << '\n';
  }
  return out.str();
}

std::string trajectory_csv(const TrajectoryRecord& rec) {
  std::vector<std::string> header{"t", "mass", "tail_mass"};
  for (const auto& [k, series] : rec.moment_integrals) header.push_back("rho_" + format_number(k));
  std::vector<std::vector<double>> rows;
  for (std::size_t s = 0; s < rec.times.size(); ++s) {
    std::vector<double> row{rec.times[s], rec.mass[s], rec.tail_mass[s]};
    for (const auto& [k, series] : rec.moment_integrals) row.push_back(series[s]);
    rows.push_back(std::move(row));
  }
  return table_csv(header, rows);
}

nlohmann::json trajectory_json(const TrajectoryRecord& rec) {
  nlohmann::json j;
  j["n"] = rec.n;
  j["cells"] = rec.cells;
  j["tail_index"] = rec.tail_index;
  j["steps"] = rec.times.empty() ? 0 : rec.times.size() - 1;
  j["t_final"] = rec.times.empty() ? 0.0 : rec.times.back();
  j["mass_initial"] = rec.mass.empty() ? 0.0 : rec.mass.front();
  j["mass_final"] = rec.mass.empty() ? 0.0 : rec.mass.back();
  j["mass_drift_rel"] = rec.mass_drift_relative();
  j["mass"] = rec.mass;
  j["tail_mass"] = rec.tail_mass;
  nlohmann::json norms = nlohmann::json::array();
  for (const auto& [kp, value] : rec.moment_norms) {
    norms.push_back({{"k", kp.first}, {"p", std::isinf(kp.second) ? nlohmann::json("inf") : nlohmann::json(kp.second)},
                     {"value", value}});
  }
  j["moment_norms"] = norms;
  j["species_sup"] = rec.species_sup;
  j["rejected_steps"] = rec.rejected_steps;
  j["reaction_substeps"] = rec.reaction_substeps;
  j["wall_seconds"] = rec.wall_seconds;
  return j;
}

nlohmann::json k_estimate_json(const KEstimate& est) {
  nlohmann::json j{{"m", est.m},
                   {"q", est.q},
                   {"nx", est.cells},
                   {"nt", est.steps},
                   {"T", est.T},
                   {"samples", est.sample_count},
                   {"k_estimate", est.estimate},
                   {"witness_ratio", est.witness_ratio},
                   {"lower_bound", true},
                   {"ratios", est.ratios}};
  j["power_iteration_ratio"] = est.power_iteration_ratio ? nlohmann::json(*est.power_iteration_ratio) : nlohmann::json();
  return j;
}

nlohmann::json closeness_json(const ClosenessReport& r) {
  return {{"a", r.a},           {"b", r.b},
          {"p", r.p},           {"p_conjugate", r.p_conjugate},
          {"m", r.m},           {"k_hat", r.k_hat},
          {"k_estimate", r.k_estimate}, {"lhs", r.lhs},
          {"satisfied", r.satisfied},   {"heuristic", r.heuristic}};
}

nlohmann::json contraction_json(const ContractionResult& r) {
  return {{"iterations", r.iterations},
          {"update_norms", r.update_norms},
          {"observed_ratio", r.observed_ratio},
          {"contraction_bound", r.contraction_bound},
          {"residual", r.residual},
          {"residual_relative", r.residual_relative},
          {"closeness_heuristic", r.closeness_heuristic}};
}

nlohmann::json config_json(const Config& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : cfg.entries()) j[k] = v;
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

}  // namespace coagdiff
