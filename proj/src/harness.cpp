#include "panshuffle/harness.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace panshuffle {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::string v = trim(item);
    if (!v.empty()) out.push_back(v);
  }
  // An explicitly empty value list stays empty (e.g. "select =").
  return out;
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return std::string(buf);
}

}  // namespace

std::vector<GridPoint> ExperimentConfig::expand_grid() const {
  std::vector<GridPoint> points;
  points.emplace_back();
  for (const auto& [key, values] : grid) {
    if (values.empty()) {
      for (auto& p : points) p[key] = "";
      continue;
    }
    std::vector<GridPoint> next;
    next.reserve(points.size() * values.size());
    for (const auto& p : points) {
      for (const auto& v : values) {
        GridPoint q = p;
        q[key] = v;
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }
  return points;
}

void load_config_file(const std::string& path, ExperimentConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::string line;
  std::string section;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    if (section != cfg.experiment) continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line without '=': " + t);
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    cfg.grid.emplace_back(key, split_csv(value));
  }
}

std::string to_csv(const std::vector<ResultRow>& rows, bool include_timing) {
  std::string out = "# schema_version=1\n";
  out += "experiment,params,metric,value,ci_half_width,trials";
  if (include_timing) out += ",wall_time_s";
  out += ",status\n";
  for (const auto& r : rows) {
    out += r.experiment;
    out += ',';
    out += r.params;
    out += ',';
    out += r.metric;
    out += ',';
    out += format_value(r.value);
    out += ',';
    out += format_value(r.ci_half_width);
    out += ',';
    out += std::to_string(r.trials);
    if (include_timing) {
      out += ',';
      out += format_value(r.wall_time_s);
    }
    out += ',';
    out += r.ok ? "ok" : ("error:" + r.note);
    out += '\n';
  }
  return out;
}

void write_csv(const std::string& path, const std::vector<ResultRow>& rows,
               bool include_timing) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << to_csv(rows, include_timing);
}

}  // namespace panshuffle
