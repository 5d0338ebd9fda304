/* Copyright 2026 The tsadv Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "tsadv/harness/harness.hpp"

namespace tsadv::harness {

using nlohmann::json;

namespace {

constexpr std::string_view kPlusMinus = " ± ";

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::size_t column_count(const metrics::MetricsReport& r) { return 2 + 2 * (r.wql.size() + 3); }

}  // namespace

std::string format_cell(const metrics::Summary& s) {
  return fmt(s.mean) + std::string(kPlusMinus) + fmt(s.std);
}

metrics::Summary parse_cell(const std::string& text) {
  const std::size_t pos = text.find(kPlusMinus);
  if (pos == std::string::npos) throw std::invalid_argument("cell is not 'mean ± std': " + text);
  return {parse_double(std::string_view(text).substr(0, pos)),
          parse_double(std::string_view(text).substr(pos + kPlusMinus.size()))};
}

json to_json(const ResultTable& t) {
  json cells = json::array();
  for (const Cell& c : t.cells) {
    json reports = json::object();
    for (const auto& [scope, r] : c.reports) reports[scope] = metrics::to_json(r);
    cells.push_back(json{{"row", c.row},
                         {"k", c.k ? json(*c.k) : json(nullptr)},
                         {"defense", c.defense},
                         {"ok", c.ok},
                         {"diagnostic", c.diagnostic},
                         {"reports", reports},
                         {"window_avg_wql", c.window_avg_wql},
                         {"diagnostics",
                          {{"mean_sparsity", c.diagnostics.mean_sparsity},
                           {"mean_max_norm", c.diagnostics.mean_max_norm},
                           {"attacks", c.diagnostics.attacks}}}});
  }
  return json{{"schema", kConfigSchema}, {"config", t.config}, {"rows", t.rows},
              {"defenses", t.defenses},  {"scopes", t.scopes}, {"cells", cells}};
}

ResultTable table_from_json(const json& doc) {
  ResultTable t;
  try {
    if (doc.value("schema", 0) != kConfigSchema) {
      throw std::invalid_argument("result table: unsupported schema");
    }
    t.config = doc.at("config");
    t.rows = doc.at("rows").get<std::vector<std::string>>();
    t.defenses = doc.at("defenses").get<std::vector<std::string>>();
    t.scopes = doc.at("scopes").get<std::vector<std::string>>();
    for (const json& j : doc.at("cells")) {
      Cell c;
      c.row = j.at("row").get<std::string>();
      if (!j.at("k").is_null()) c.k = j.at("k").get<std::size_t>();
      c.defense = j.at("defense").get<std::string>();
      c.ok = j.at("ok").get<bool>();
      c.diagnostic = j.at("diagnostic").get<std::string>();
      for (const auto& [scope, r] : j.at("reports").items()) {
        c.reports[scope] = metrics::metrics_report_from_json(r);
      }
      c.window_avg_wql =
          j.at("window_avg_wql").get<std::map<std::string, std::vector<double>>>();
      const json& d = j.at("diagnostics");
      c.diagnostics.mean_sparsity = d.at("mean_sparsity").get<double>();
      c.diagnostics.mean_max_norm = d.at("mean_max_norm").get<double>();
      c.diagnostics.attacks = d.at("attacks").get<std::size_t>();
      t.cells.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed result table: ") + e.what());
  }
  return t;
}

std::string to_csv(const ResultTable& t) {
  const metrics::MetricsReport* like = nullptr;
  for (const Cell& c : t.cells) {
    if (!c.reports.empty()) {
      like = &c.reports.begin()->second;
      break;
    }
  }
  metrics::MetricsReport blank;
  blank.alphas = metrics::default_alpha_grid();
  blank.wql.resize(blank.alphas.size());
  if (like == nullptr) like = &blank;
  std::string out = "row,k,defense,status," + metrics::csv_header(*like) + "\n";
  for (const Cell& c : t.cells) {
    const std::string head =
        c.row + "," + (c.k ? std::to_string(*c.k) : std::string()) + "," + c.defense + ",";
    if (!c.ok) {
      out += head + "failed" + std::string(column_count(*like) - 1, ',') + "\n";
      continue;
    }
    for (const std::string& scope : t.scopes) {
      out += head + "ok," + metrics::csv_row(c.reports.at(scope)) + "\n";
    }
  }
  return out;
}

ResultTable table_from_csv(const std::string& csv, const ResultTable& like) {
  ResultTable t = like;
  for (Cell& c : t.cells) c.reports.clear();
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("results csv: empty");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() < 6) throw std::invalid_argument("results csv: short line " + std::to_string(lineno));
    if (f[3] != "ok") continue;
    Cell* cell = nullptr;
    for (Cell& c : t.cells) {
      if (c.row == f[0] && c.defense == f[2]) cell = &c;
    }
    if (cell == nullptr) {
      throw std::invalid_argument("results csv: unknown cell on line " + std::to_string(lineno));
    }
    const metrics::MetricsReport& ref = like.at(f[0], f[2]).reports.at(f[4]);
    metrics::MetricsReport r;
    r.scope_name = f[4];
    r.windows = static_cast<std::size_t>(parse_double(f[5]));
    r.alphas = ref.alphas;
    if (f.size() != 4 + column_count(ref)) {
      throw std::invalid_argument("results csv: wrong field count on line " +
                                  std::to_string(lineno));
    }
    std::size_t i = 6;
    auto next = [&]() {
      metrics::Summary s{parse_double(f[i]), parse_double(f[i + 1])};
      i += 2;
      return s;
    };
    r.avg_wql = next();
    for (std::size_t a = 0; a < r.alphas.size(); ++a) r.wql.push_back(next());
    r.wape = next();
    r.wse = next();
    cell->reports[r.scope_name] = r;
  }
  return t;
}

std::string to_table_csv(const ResultTable& t, const std::string& scope) {
  std::string out = "row";
  for (const auto& d : t.defenses) out += "," + d;
  out += "\n";
  for (const auto& row : t.rows) {
    out += row;
    for (const auto& d : t.defenses) {
      const Cell& c = t.at(row, d);
      out += "," + (c.ok ? format_cell(c.reports.at(scope).avg_wql) : std::string("failed"));
    }
    out += "\n";
  }
  return out;
}

std::string to_tsv(const ResultTable& t, const std::string& scope) {
  std::string out = "k";
  for (const auto& d : t.defenses) out += "\t" + d;
  out += "\n";
  for (const auto& row : t.rows) {
    const Cell& first = t.at(row, t.defenses.front());
    out += first.k ? std::to_string(*first.k) : "0";
    for (const auto& d : t.defenses) {
      const Cell& c = t.at(row, d);
      out += "\t" + (c.ok ? fmt(c.reports.at(scope).avg_wql.mean) : std::string("nan"));
    }
    out += "\n";
  }
  return out;
}

std::vector<std::filesystem::path> write_report(const ResultTable& table,
                                                const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& name, const std::string& body) {
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary);
    out << body;
    if (!out) throw std::runtime_error("cannot write " + path.string());
    written.push_back(path);
  };
  put("results.json", to_json(table).dump(2) + "\n");
  put("results.csv", to_csv(table));
  for (const auto& scope : table.scopes) {
    put("table_" + scope + ".csv", to_table_csv(table, scope));
    put("sweep_" + scope + ".tsv", to_tsv(table, scope));
  }
  return written;
}

}  // namespace tsadv::harness
