#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "placemap/evaluator.hpp"

namespace placemap {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// RFC 4180 quoting for fields that need it.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string report_csv(const EvalReport& report, bool deterministic) {
  std::ostringstream os;
  os << "strategy,method,rank,dim,subset,K,recall,queries,map_build_s,match_ms_per_query,"
        "map_mem_bytes\n";
  for (const RecallRow& row : report.rows) {
    for (std::size_t i = 0; i < row.ks.size(); ++i) {
      os << csv_field(row.strategy) << ',' << csv_field(row.method) << ',' << csv_field(row.rank)
         << ',' << row.dim << ',' << csv_field(row.subset) << ',' << row.ks[i] << ',';
      if (row.error) {
        os << "error:" << *row.error;
      } else {
        os << fixed(row.recall[i], 6);
      }
      os << ',' << row.queries << ',';
      if (!deterministic && !row.error) os << fixed(row.map_build_s, 6);
      os << ',';
      if (!deterministic && !row.error) os << fixed(row.match_ms_per_query, 4);
      os << ',' << (row.error ? 0 : row.map_mem_bytes) << '\n';
    }
  }
  return os.str();
}

std::string report_json(const EvalReport& report, bool deterministic) {
  using nlohmann::json;
  json j;
  j["tool"] = "placemap";
  j["version"] = PLACEMAP_VERSION;
  j["config"] = report.config_json.empty() ? json::object() : json::parse(report.config_json);
  j["ground_truth"] = report.ground_truth;
  j["deterministic"] = deterministic;
  json rows = json::array();
  for (const RecallRow& row : report.rows) {
    json r;
    r["strategy"] = row.strategy;
    r["method"] = row.method;
    r["rank"] = row.rank;
    r["dim"] = row.dim;
    r["subset"] = row.subset;
    r["queries"] = row.queries;
    json recall = json::object();
    for (std::size_t i = 0; i < row.ks.size(); ++i) {
      recall[std::to_string(row.ks[i])] = row.error ? json(nullptr) : json(row.recall[i]);
    }
    r["recall"] = recall;
    r["map_build_s"] = deterministic || row.error ? json(nullptr) : json(row.map_build_s);
    r["match_ms_per_query"] = deterministic || row.error ? json(nullptr) : json(row.match_ms_per_query);
    r["map_mem_bytes"] = row.map_mem_bytes;
    r["error"] = row.error ? json(*row.error) : json(nullptr);
    r["notes"] = row.notes;
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

}  // namespace placemap
